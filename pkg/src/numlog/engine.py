"""Top-down evaluation of hypotheses over ground background facts.

The engine is SLD resolution with leftmost selection over a compiled body
order, a per-example step budget, and memoization of ground calls to the
hypothesis predicate.  Built-ins cover list access (head/tail/empty) and
ground rational arithmetic (geq/leq/add/mult).

It serves two callers: ``covers`` decides entailment of one example by a
fully ground program, and ``collect_substitutions`` runs a hypothesis with
its numerical literals stripped to harvest the data values its numeric
stage will constrain.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass
from fractions import Fraction

from .bias import NUMERIC_MODES
from .terms import (
    NIL,
    NUMERIC_PREDS,
    Clause,
    Cons,
    Literal,
    Program,
    clause_is_recursive,
    clause_key,
    clause_vars,
    term_vars,
)

DEFAULT_STEP_BUDGET = 100_000
DEFAULT_MAX_SUBS = 1000

# resolution nests one generator frame per step; deep recursive proofs need
# stack room beyond the interpreter default (RecursionError is caught and
# reported as budget exhaustion)
if sys.getrecursionlimit() < 20_000:
    sys.setrecursionlimit(20_000)

LIST_BUILTINS = {("head", 2), ("tail", 2), ("empty", 1)}
NUMERIC_BUILTINS = {(p, a) for p, (a, _) in NUMERIC_PREDS.items()}


class BudgetExceeded(Exception):
    pass


class IllFormedChain(ValueError):
    """A numerical literal consumes a variable that nothing binds."""


class BackgroundDB:
    """Ground facts indexed by predicate and first argument."""

    def __init__(self, facts=()):
        self.facts: dict[tuple, list[tuple]] = {}
        self.index: dict[tuple, dict] = {}
        for fact in facts:
            self.add(fact)

    def add(self, fact: Literal):
        key = (fact.pred, len(fact.args))
        self.facts.setdefault(key, []).append(fact.args)
        if fact.args:
            self.index.setdefault(key, {}).setdefault(fact.args[0], []).append(fact.args)

    @classmethod
    def from_text(cls, text: str) -> "BackgroundDB":
        from .syntax import parse_facts

        return cls(parse_facts(text))


# ---------------------------------------------------------------------------
# unification


def _deref(t, bind):
    while type(t) is int:
        nxt = bind.get(t)
        if nxt is None:
            return t
        t = nxt
    return t


def _unify(a, b, bind, trail) -> bool:
    a = _deref(a, bind)
    b = _deref(b, bind)
    ta = type(a)
    tb = type(b)
    if ta is int:
        if tb is int and a == b:
            return True
        bind[a] = b
        trail.append(a)
        return True
    if tb is int:
        bind[b] = a
        trail.append(b)
        return True
    if ta is Cons:
        return (
            tb is Cons
            and _unify(a.head, b.head, bind, trail)
            and _unify(a.tail, b.tail, bind, trail)
        )
    return a == b


def _undo(trail, mark, bind):
    while len(trail) > mark:
        del bind[trail.pop()]


def _resolve_term(t, bind):
    t = _deref(t, bind)
    if type(t) is Cons:
        return Cons(_resolve_term(t.head, bind), _resolve_term(t.tail, bind))
    return t


def _shift(t, off):
    ty = type(t)
    if ty is int:
        return t + off
    if ty is Cons:
        return Cons(_shift(t.head, off), _shift(t.tail, off))
    return t


def _is_ground(t, bind):
    t = _deref(t, bind)
    ty = type(t)
    if ty is int:
        return False
    if ty is Cons:
        return _is_ground(t.head, bind) and _is_ground(t.tail, bind)
    return True


# ---------------------------------------------------------------------------
# program compilation: order bodies so data flows left to right


def _builtin_ready(lit: Literal, bound: set) -> bool:
    def known(a):
        return type(a) is not int or a in bound

    key = (lit.pred, len(lit.args))
    if key == ("add", 3):
        return sum(1 for a in lit.args if known(a)) >= 2
    if key == ("mult", 3):
        hits = sum(1 for a in lit.args if known(a))
        return hits >= 2 or (known(lit.args[0]) and known(lit.args[1]))
    if key in (("geq", 2), ("leq", 2)):
        return known(lit.args[0]) and known(lit.args[1])
    # head/tail/empty need their list argument
    return known(lit.args[0])


def _order_body(body, head_vars=()) -> tuple:
    """Greedy safe order: relational literals keep their relative order but
    prefer indexed access; arithmetic runs once its inputs are bound."""
    remaining = list(body)
    bound: set[int] = set(head_vars)
    ordered: list[Literal] = []

    while remaining:
        pick = None
        for lit in remaining:  # a builtin whose inputs are ready
            if (lit.pred, len(lit.args)) in _ALL_BUILTINS and _builtin_ready(lit, bound):
                pick = lit
                break
        if pick is None:  # a relational literal with a bound first argument
            for lit in remaining:
                if (lit.pred, len(lit.args)) in _ALL_BUILTINS:
                    continue
                if not lit.args or type(lit.args[0]) is not int or lit.args[0] in bound:
                    pick = lit
                    break
        if pick is None:  # any relational literal (falls back to a scan)
            for lit in remaining:
                if (lit.pred, len(lit.args)) not in _ALL_BUILTINS:
                    pick = lit
                    break
        if pick is None:  # blocked builtins go last and fail at runtime
            pick = remaining[0]
        remaining.remove(pick)
        ordered.append(pick)
        for arg in pick.args:
            bound.update(term_vars(arg))
    return tuple(ordered)


_ALL_BUILTINS = LIST_BUILTINS | NUMERIC_BUILTINS


class CompiledProgram:
    def __init__(self, prog: Program):
        self.clauses: dict[tuple, list] = {}
        for clause in prog:
            key = (clause.head.pred, len(clause.head.args))
            nvars = max(clause_vars(clause), default=-1) + 1
            head_vars = set()
            for a in clause.head.args:
                head_vars.update(term_vars(a))
            self.clauses.setdefault(key, []).append(
                (clause.head.args, _order_body(clause.body, head_vars), nvars)
            )


# ---------------------------------------------------------------------------
# SLD search


class _Engine:
    def __init__(self, db: BackgroundDB, prog: CompiledProgram, budget: int, table: bool = True):
        self.db = db
        self.prog = prog
        self.steps = budget
        self.next_var = 1_000_000
        self.table = table
        self.memo: dict = {}
        self.in_progress: set = set()

    def spend(self):
        self.steps -= 1
        if self.steps < 0:
            raise BudgetExceeded

    def solve(self, goals, idx, bind, trail):
        if idx == len(goals):
            yield True
            return
        lit = goals[idx]
        key = (lit.pred, len(lit.args))

        if key in self.prog.clauses:
            yield from self._solve_clause(lit, key, goals, idx, bind, trail)
            return
        if key in _ALL_BUILTINS:
            yield from self._solve_builtin(lit, key, goals, idx, bind, trail)
            return

        facts = self.db.facts.get(key)
        if not facts:
            return
        if lit.args:
            first = _deref(lit.args[0], bind)
            if type(first) is not int and _is_ground(first, bind):
                facts = self.db.index.get(key, {}).get(first, ())
        args = lit.args
        for fact_args in facts:
            self.spend()
            mark = len(trail)
            ok = True
            for a, f in zip(args, fact_args):
                if not _unify(a, f, bind, trail):
                    ok = False
                    break
            if ok:
                yield from self.solve(goals, idx + 1, bind, trail)
            _undo(trail, mark, bind)

    def _solve_clause(self, lit, key, goals, idx, bind, trail):
        # memoize fully ground calls to hypothesis predicates
        ground_key = None
        if self.table and all(_is_ground(a, bind) for a in lit.args):
            ground_key = (key, tuple(_resolve_term(a, bind) for a in lit.args))
            cached = self.memo.get(ground_key)
            if cached is False:
                return
            if cached is True:
                yield from self.solve(goals, idx + 1, bind, trail)
                return
            if ground_key in self.in_progress:
                return
            self.in_progress.add(ground_key)

        proved = False
        try:
            for head_args, body, nvars in self.prog.clauses[key]:
                self.spend()
                off = self.next_var
                self.next_var += nvars
                mark = len(trail)
                ok = True
                for a, h in zip(lit.args, head_args):
                    if not _unify(a, _shift(h, off), bind, trail):
                        ok = False
                        break
                if ok:
                    new_goals = tuple(
                        Literal(b.pred, tuple(_shift(t, off) for t in b.args)) for b in body
                    ) + tuple(goals[idx + 1 :])
                    for _ in self.solve(new_goals, 0, bind, trail):
                        proved = True
                        yield True
                        if ground_key is not None:
                            break
                _undo(trail, mark, bind)
                if proved and ground_key is not None:
                    break
        finally:
            if ground_key is not None:
                self.in_progress.discard(ground_key)
                self.memo[ground_key] = proved

    def _solve_builtin(self, lit, key, goals, idx, bind, trail):
        self.spend()
        args = [_deref(a, bind) for a in lit.args]
        mark = len(trail)
        ok = False
        if key == ("head", 2):
            ok = type(args[0]) is Cons and _unify(args[0].head, args[1], bind, trail)
        elif key == ("tail", 2):
            ok = type(args[0]) is Cons and _unify(args[0].tail, args[1], bind, trail)
        elif key == ("empty", 1):
            ok = args[0] is NIL
        elif key in (("geq", 2), ("leq", 2)):
            a, b = args
            if type(a) is Fraction and type(b) is Fraction:
                ok = a >= b if lit.pred == "geq" else a <= b
        elif key == ("add", 3):
            a, b, c = args
            ga, gb, gc = (type(x) is Fraction for x in args)
            if ga and gb:
                ok = a + b == c if gc else _unify(a + b, c, bind, trail)
            elif ga and gc:
                ok = _unify(c - a, b, bind, trail)
            elif gb and gc:
                ok = _unify(c - b, a, bind, trail)
        elif key == ("mult", 3):
            a, b, c = args
            ga, gb, gc = (type(x) is Fraction for x in args)
            if ga and gb:
                ok = a * b == c if gc else _unify(a * b, c, bind, trail)
            elif ga and gc:
                ok = a != 0 and _unify(c / a, b, bind, trail)
            elif gb and gc:
                ok = b != 0 and _unify(c / b, a, bind, trail)
        if ok:
            yield from self.solve(goals, idx + 1, bind, trail)
        _undo(trail, mark, bind)


def query_all(
    db: BackgroundDB,
    compiled: CompiledProgram,
    goal: Literal,
    capture: tuple,
    budget: int = DEFAULT_STEP_BUDGET,
    max_solutions: int | None = None,
):
    """All distinct bindings of `capture` variables proving `goal`.

    Returns (tuples, budget_exceeded, cap_hit); tuple order is first-proof
    order, deduplicated.
    """
    eng = _Engine(db, compiled, budget, table=not capture)
    bind: dict = {}
    trail: list = []
    seen: dict = {}
    exceeded = False
    cap_hit = False
    try:
        for _ in eng.solve((goal,), 0, bind, trail):
            values = tuple(_resolve_term(v, bind) for v in capture)
            if any(not _is_ground(v, {}) for v in values):
                continue  # unbound capture: clause does not constrain this value
            if values not in seen:
                seen[values] = True
                if max_solutions is not None and len(seen) >= max_solutions:
                    cap_hit = True
                    break
            if not capture:
                break
    except (BudgetExceeded, RecursionError):
        exceeded = True
    return list(seen), exceeded, cap_hit


# ---------------------------------------------------------------------------
# stripping numerical literals and lifting related variables


@dataclass(frozen=True)
class ClauseNumerics:
    """Numeric structure of one clause after stripping.

    related: related variable ids in first-occurrence order
    templates: numerical literals in data-flow order
    placeholders: placeholder variable ids in template order
    intermediates: numeric-only variables defined by add/mult outputs
    """

    clause: Clause
    related: tuple
    templates: tuple
    placeholders: tuple
    intermediates: frozenset


@dataclass(frozen=True)
class LiftedClause:
    numerics: ClauseNumerics
    program: Program  # lifted clause plus threaded recursive clauses
    head_pred: str
    orig_arity: int
    lifted_arity: int
    related_positions: tuple  # lifted-head argument position per related var
    cache_key: tuple


@dataclass
class SubstitutionTable:
    """Per-clause, per-example ground value tuples for related variables."""

    tuples: list  # [clause][example] -> list of value tuples
    budget_exceeded: list  # [example] -> bool
    cap_hit: list  # [example] -> bool


def clause_numerics(clause: Clause) -> ClauseNumerics:
    numlits = [l for l in clause.body if l.numerical]
    regulars = tuple(l for l in clause.body if not l.numerical)
    regular_vars: set[int] = set()
    for lit in (clause.head, *regulars):
        for a in lit.args:
            regular_vars.update(term_vars(a))

    placeholders: list[int] = []
    defined: set[int] = set(regular_vars)
    ordered: list[Literal] = []
    pending = list(numlits)
    while pending:
        progress = False
        for lit in list(pending):
            modes = NUMERIC_MODES[lit.pred]
            if any(
                mode == "in" and type(arg) is int and arg not in defined
                for arg, mode in zip(lit.args, modes)
            ):
                continue
            for arg, mode in zip(lit.args, modes):
                if type(arg) is not int:
                    continue
                if mode == "ph":
                    if arg in defined or arg in placeholders:
                        raise IllFormedChain(
                            f"placeholder variable of {lit.pred} is bound elsewhere"
                        )
                    placeholders.append(arg)
                elif mode == "out":
                    defined.add(arg)
            ordered.append(lit)
            pending.remove(lit)
            progress = True
        if not progress:
            raise IllFormedChain("numerical literal consumes an unbound variable")

    numeric_vars: set[int] = set()
    for lit in ordered:
        for arg, mode in zip(lit.args, NUMERIC_MODES[lit.pred]):
            if type(arg) is int and mode != "ph":
                numeric_vars.add(arg)
    related: list[int] = []
    for lit in (clause.head, *regulars):
        for a in lit.args:
            for v in term_vars(a):
                if v in numeric_vars and v not in related:
                    related.append(v)
    intermediates = frozenset(numeric_vars - set(related) - set(placeholders))

    return ClauseNumerics(
        clause=clause,
        related=tuple(related),
        templates=tuple(ordered),
        placeholders=tuple(placeholders),
        intermediates=intermediates,
    )


def strip_and_lift(prog: Program) -> list[LiftedClause]:
    """Remove numerical literals and append related variables to heads.

    Returns one evaluation unit per non-recursive clause; recursive clauses
    (which may not carry numerical literals) are threaded through each unit
    so recursive derivations bottom out in the stripped base clause.
    """
    recursive = [c for c in prog if clause_is_recursive(c)]
    base = [c for c in prog if not clause_is_recursive(c)]
    for c in recursive:
        if any(l.numerical for l in c.body):
            raise IllFormedChain("numerical literals in recursive clauses are not supported")

    units = []
    for clause in base:
        nums = clause_numerics(clause)
        head = clause.head
        direct_args = {a for a in head.args if type(a) is int}
        extra = tuple(v for v in nums.related if v not in direct_args)
        lifted_head = Literal(head.pred, head.args + extra)
        lifted = Clause(lifted_head, tuple(l for l in clause.body if not l.numerical))
        r = len(extra)
        positions = tuple(
            next(i for i, a in enumerate(lifted_head.args) if a == v)
            for v in nums.related
        )

        threaded = []
        for rc in recursive:
            top = max(clause_vars(rc), default=-1) + 1
            fresh = tuple(range(top, top + r))
            new_head = Literal(rc.head.pred, rc.head.args + fresh)
            new_body = tuple(
                Literal(l.pred, l.args + fresh)
                if l.pred == head.pred and len(l.args) == len(head.args)
                else l
                for l in rc.body
            )
            threaded.append(Clause(new_head, new_body))

        unit_prog = (lifted, *threaded)
        cache_key = tuple(clause_key(c) for c in unit_prog) + (positions,)
        units.append(
            LiftedClause(
                numerics=nums,
                program=unit_prog,
                head_pred=head.pred,
                orig_arity=len(head.args),
                lifted_arity=len(lifted_head.args),
                related_positions=positions,
                cache_key=cache_key,
            )
        )
    return units


def term_vars_of_literal(lit: Literal):
    for a in lit.args:
        yield from term_vars(a)


def collect_substitutions(
    units: list[LiftedClause],
    db: BackgroundDB,
    examples: list[Literal],
    step_budget: int = DEFAULT_STEP_BUDGET,
    max_subs: int = DEFAULT_MAX_SUBS,
    cache: dict | None = None,
) -> SubstitutionTable:
    """Run each stripped clause over the examples and harvest value tuples."""
    tuples: list[list] = [[] for _ in units]
    exceeded = [False] * len(examples)
    caps = [False] * len(examples)

    for ui, unit in enumerate(units):
        cached = cache.get(unit.cache_key) if cache is not None else None
        if cached is not None and len(cached[0]) == len(examples):
            rows, ex_flags, cap_flags = cached
        else:
            compiled = CompiledProgram(unit.program)
            base = max((v + 1 for c in unit.program for v in clause_vars(c)), default=0)
            n_extra = unit.lifted_arity - unit.orig_arity
            query_vars = tuple(range(base, base + n_extra))
            rows = []
            ex_flags = [False] * len(examples)
            cap_flags = [False] * len(examples)
            for i, example in enumerate(examples):
                if example.pred != unit.head_pred or len(example.args) != unit.orig_arity:
                    rows.append([])
                    continue
                goal_args = example.args + query_vars
                # related values come from the example's own arguments when
                # the variable already sat in the head, else from query vars
                capture = tuple(goal_args[p] for p in unit.related_positions)
                goal = Literal(example.pred, goal_args)
                found, ex_flag, cap_flag = query_all(
                    db, compiled, goal, capture, budget=step_budget, max_solutions=max_subs
                )
                rows.append(found)
                ex_flags[i] = ex_flag
                cap_flags[i] = cap_flag
            if cache is not None:
                cache[unit.cache_key] = (rows, ex_flags, cap_flags)
        tuples[ui] = rows
        for i in range(len(examples)):
            exceeded[i] = exceeded[i] or ex_flags[i]
            caps[i] = caps[i] or cap_flags[i]

    return SubstitutionTable(tuples=tuples, budget_exceeded=exceeded, cap_hit=caps)


def covers(
    prog: Program,
    db: BackgroundDB,
    example: Literal,
    step_budget: int = DEFAULT_STEP_BUDGET,
    compiled: CompiledProgram | None = None,
):
    """True iff the ground program derives the example; 'unknown' on budget."""
    if compiled is None:
        compiled = CompiledProgram(prog)
    eng = _Engine(db, compiled, step_budget)
    try:
        for _ in eng.solve((example,), 0, {}, []):
            return True
        return False
    except (BudgetExceeded, RecursionError):
        return "unknown"


def coverage_bits(prog, db, examples, step_budget=DEFAULT_STEP_BUDGET):
    """Coverage over a list of examples; 'unknown' counts as not covered."""
    compiled = CompiledProgram(prog)
    return [covers(prog, db, ex, step_budget, compiled=compiled) is True for ex in examples]
