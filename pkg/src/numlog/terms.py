"""Core term, literal, clause and program representations.

Terms use lightweight native encodings for speed:

* variables      -> ``int`` ids (clause-local, dense after canonicalization)
* symbolic consts-> ``str``
* numbers        -> ``fractions.Fraction`` (exact rationals, never floats)
* lists          -> ``Cons`` cells terminated by the ``NIL`` sentinel

The only discipline this imposes is that numbers must always be wrapped in
``Fraction`` (a bare Python int in an argument position is a variable).
"""

from __future__ import annotations

from fractions import Fraction
from itertools import permutations
from typing import Iterator, NamedTuple


class Cons:
    """Immutable list cell. Proper lists end in NIL; hash precomputed."""

    __slots__ = ("head", "tail", "_hash")

    def __init__(self, head, tail):
        self.head = head
        self.tail = tail
        self._hash = hash((0x9E3779B9, head, tail))

    def __eq__(self, other):
        return (
            type(other) is Cons
            and self._hash == other._hash
            and self.head == other.head
            and self.tail == other.tail
        )

    def __hash__(self):
        return self._hash

    def __repr__(self):
        return f"Cons({self.head!r}, {self.tail!r})"


class _Nil:
    __slots__ = ()

    def __repr__(self):
        return "NIL"

    def __reduce__(self):
        return (_nil_instance, ())


NIL = _Nil()


def _nil_instance():
    return NIL


def mklist(items) -> Cons | _Nil:
    """Build a proper list term from a Python iterable."""
    out = NIL
    for item in reversed(list(items)):
        out = Cons(item, out)
    return out


def list_items(term):
    """Inverse of mklist for proper lists; raises on improper tails."""
    items = []
    while type(term) is Cons:
        items.append(term.head)
        term = term.tail
    if term is not NIL:
        raise ValueError("improper list term")
    return items


# Built-in numerical predicate menu: name -> (arity, placeholder position).
# The placeholder position is the argument that stands for a constant to be
# learned; `add` relates three data variables and has no placeholder.
NUMERIC_PREDS = {
    "geq": (2, 1),
    "leq": (2, 1),
    "add": (3, None),
    "mult": (3, 1),
}


def is_numeric_pred(pred: str, arity: int) -> bool:
    info = NUMERIC_PREDS.get(pred)
    return info is not None and info[0] == arity


class Literal(NamedTuple):
    pred: str
    args: tuple

    @property
    def numerical(self) -> bool:
        return is_numeric_pred(self.pred, len(self.args))


class Clause(NamedTuple):
    head: Literal
    body: tuple  # tuple[Literal, ...]

    @property
    def size(self) -> int:
        return 1 + len(self.body)


# A program is a tuple of clauses; canonical programs are sorted.
Program = tuple


def clause_vars(clause: Clause) -> list[int]:
    """Variables of a clause in first-occurrence order (head first)."""
    seen: list[int] = []
    seen_set: set[int] = set()
    for lit in (clause.head, *clause.body):
        for arg in lit.args:
            for v in term_vars(arg):
                if v not in seen_set:
                    seen_set.add(v)
                    seen.append(v)
    return seen


def term_vars(term) -> Iterator[int]:
    if type(term) is int:
        yield term
    elif type(term) is Cons:
        stack = [term]
        while stack:
            t = stack.pop()
            if type(t) is int:
                yield t
            elif type(t) is Cons:
                stack.append(t.tail)
                stack.append(t.head)


def placeholder_vars(clause: Clause) -> set[int]:
    """Variables sitting in placeholder positions of numerical literals."""
    out = set()
    for lit in clause.body:
        info = NUMERIC_PREDS.get(lit.pred)
        if info and info[0] == len(lit.args) and info[1] is not None:
            arg = lit.args[info[1]]
            if type(arg) is int:
                out.add(arg)
    return out


def num_literal_count(clause: Clause) -> int:
    return sum(1 for lit in clause.body if lit.numerical)


def clause_is_recursive(clause: Clause) -> bool:
    hp = clause.head.pred
    ha = len(clause.head.args)
    return any(l.pred == hp and len(l.args) == ha for l in clause.body)


def program_is_recursive(prog: Program) -> bool:
    return any(clause_is_recursive(c) for c in prog)


def program_size(prog: Program) -> int:
    return sum(c.size for c in prog)


def program_num_literals(prog: Program) -> int:
    return sum(num_literal_count(c) for c in prog)


# ---------------------------------------------------------------------------
# canonical forms


def _term_key(term):
    t = type(term)
    if t is int:
        return (0, term)
    if t is Fraction:
        return (1, term)
    if t is str:
        return (2, term)
    if term is NIL:
        return (3,)
    return (4, _term_key(term.head), _term_key(term.tail))


def _abstract_term_key(term):
    # variables collapse to a wildcard so the key is renaming-insensitive
    t = type(term)
    if t is int:
        return (0,)
    if t is Fraction:
        return (1, term)
    if t is str:
        return (2, term)
    if term is NIL:
        return (3,)
    return (4, _abstract_term_key(term.head), _abstract_term_key(term.tail))


def _literal_abstract_key(lit: Literal):
    return (
        lit.pred,
        len(lit.args),
        lit.numerical,
        tuple(_abstract_term_key(a) for a in lit.args),
    )


def _rename_term(term, mapping):
    t = type(term)
    if t is int:
        return mapping[term]
    if t is Cons:
        return Cons(_rename_term(term.head, mapping), _rename_term(term.tail, mapping))
    return term


def rename_clause(clause: Clause, mapping: dict) -> Clause:
    lits = []
    for lit in (clause.head, *clause.body):
        lits.append(Literal(lit.pred, tuple(_rename_term(a, mapping) for a in lit.args)))
    return Clause(lits[0], tuple(lits[1:]))


def _renumber(head: Literal, body: tuple) -> Clause:
    mapping: dict[int, int] = {}
    lits = []
    for lit in (head, *body):
        args = []
        for arg in lit.args:
            args.append(_renumber_term(arg, mapping))
        lits.append(Literal(lit.pred, tuple(args)))
    return Clause(lits[0], tuple(lits[1:]))


def _renumber_term(term, mapping):
    t = type(term)
    if t is int:
        nid = mapping.get(term)
        if nid is None:
            nid = len(mapping)
            mapping[term] = nid
        return nid
    if t is Cons:
        return Cons(_renumber_term(term.head, mapping), _renumber_term(term.tail, mapping))
    return term


def clause_key(clause: Clause):
    return tuple(
        (l.pred, len(l.args), tuple(_term_key(a) for a in l.args))
        for l in (clause.head, *clause.body)
    )


_PERM_CAP = 5040  # tie groups beyond this fall back to a deterministic order


def canonicalize_clause(clause: Clause) -> Clause:
    """Sort body literals and renumber variables by first occurrence.

    Literals are ordered by (pred, arity, kind, argument shape); groups with
    identical abstract keys are permuted to find the least renumbered form,
    so the result is invariant under variable renaming and body reordering.
    """
    keyed = sorted(
        ((_literal_abstract_key(l), l) for l in set(clause.body)), key=lambda kl: kl[0]
    )
    groups: list[list[Literal]] = []
    prev_key = None
    for key, lit in keyed:
        if key != prev_key:
            groups.append([])
            prev_key = key
        groups[-1].append(lit)

    if all(len(g) == 1 for g in groups):  # no reordering freedom
        return _renumber(clause.head, tuple(l for _, l in keyed))

    total = 1
    for g in groups:
        for i in range(2, len(g) + 1):
            total *= i
    if total > _PERM_CAP:
        body = tuple(l for _, l in keyed)
        return _renumber(clause.head, body)

    best = None
    best_key = None
    for perm_body in _group_orders(groups):
        cand = _renumber(clause.head, perm_body)
        key = clause_key(cand)
        if best_key is None or key < best_key:
            best_key = key
            best = cand
    return best


def _group_orders(groups):
    if not groups:
        yield ()
        return
    first, rest = groups[0], groups[1:]
    perms = [tuple(first)] if len(first) == 1 else list(permutations(first))
    for head in perms:
        for tail in _group_orders(rest):
            yield head + tail


def canonicalize(prog: Program) -> Program:
    """Canonical form of a program: canonical clauses, sorted, deduplicated."""
    clauses = sorted({canonicalize_clause(c) for c in prog}, key=clause_key)
    return tuple(clauses)


# ---------------------------------------------------------------------------
# theta-subsumption


def _match_term(pat, target, theta):
    """One-sided match: variables of `pat` bind to subterms of `target`."""
    tp = type(pat)
    if tp is int:
        bound = theta.get(pat, theta)
        if bound is theta:
            theta[pat] = target
            return True
        return bound == target
    if tp is Cons:
        return (
            type(target) is Cons
            and _match_term(pat.head, target.head, theta)
            and _match_term(pat.tail, target.tail, theta)
        )
    return pat == target


def _match_literal(pat: Literal, target: Literal, theta):
    if pat.pred != target.pred or len(pat.args) != len(target.args):
        return False
    trail = dict(theta)
    for p, t in zip(pat.args, target.args):
        if not _match_term(p, t, theta):
            theta.clear()
            theta.update(trail)
            return False
    return True


def theta_subsumes(general: Clause, specific: Clause) -> bool:
    """True iff some substitution maps `general` into `specific`.

    The head maps to the head and every body literal of `general` to some
    body literal of `specific`; variables of `specific` act as constants.
    Variables on the specific side are shifted out of the general side's id
    range first so they cannot collide.
    """
    offset = max((v for v in clause_vars(general)), default=-1) + 1
    if offset:
        svars = clause_vars(specific)
        if svars:
            mapping = {v: v + offset for v in svars}
            specific = rename_clause(specific, mapping)

    theta: dict = {}
    if not _match_literal(general.head, specific.head, theta):
        return False

    # order general literals by how few target literals they could match
    by_pred: dict[tuple, list[Literal]] = {}
    for lit in specific.body:
        by_pred.setdefault((lit.pred, len(lit.args)), []).append(lit)
    goals = sorted(
        general.body,
        key=lambda l: (len(by_pred.get((l.pred, len(l.args)), ())), _literal_abstract_key(l)),
    )

    def search(i: int, theta: dict) -> bool:
        if i == len(goals):
            return True
        g = goals[i]
        for cand in by_pred.get((g.pred, len(g.args)), ()):
            local = dict(theta)
            if _match_literal(g, cand, local) and search(i + 1, local):
                return True
        return False

    return search(0, theta)


def program_subsumes(general: Program, specific: Program) -> bool:
    """Every clause of `specific` is theta-subsumed by some clause of `general`."""
    return all(any(theta_subsumes(g, s) for g in general) for s in specific)
