"""Candidate enumeration in nondecreasing size order under pruning constraints.

Candidates are single clauses or base+recursive clause pairs (separable
multi-clause programs are assembled later by the combiner, not generated).
Enumeration applies the usual symmetry breaking: fresh variables appear
left to right, bodies are built in nondecreasing literal order, duplicate
literals are dropped, and emitted programs are deduplicated by canonical
form.  Every clause must admit a safe evaluation order (each `in` argument
bound by the head or an earlier literal's output); placeholder and
arithmetic-output positions always introduce fresh variables.

The constraint store accumulates pruning programs from failed candidates:

* specialisation bans prune any program containing, for each banned
  clause, a clause it theta-subsumes;
* generalisation bans prune programs whose clauses theta-subsume every
  banned clause (optionally restricted to non-recursive programs);
* numeric specialisation bans work like specialisation bans but spare
  clauses that carry additional numerical literals.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .bias import BiasSpec, Schema, head_schema, literal_schemas
from .terms import (
    Clause,
    Literal,
    Program,
    canonicalize,
    clause_is_recursive,
    num_literal_count,
    program_is_recursive,
    program_size,
    theta_subsumes,
)


@dataclass(frozen=True)
class _BanEntry:
    program: Program
    kind: str  # spec | gen | gen_nonrec | numeric_spec
    clause_info: tuple  # per banned clause: (pred frozenset, size, numlits)


def _clause_info(clause: Clause):
    preds = frozenset((l.pred, len(l.args)) for l in (clause.head, *clause.body))
    return (preds, clause.size, num_literal_count(clause))


class ConstraintStore:
    """Accumulated prune predicates; grows monotonically within one run."""

    def __init__(self):
        self.entries: list[_BanEntry] = []
        self._seen: set = set()

    def add(self, kind: str, prog: Program):
        if kind in ("numeric_spec", "numeric_spec_nonnum"):
            kind = "numeric_spec"
        elif kind not in ("spec", "gen", "gen_nonrec"):
            raise ValueError(f"unknown constraint kind {kind!r}")
        prog = canonicalize(prog)
        key = (kind, prog)
        if key in self._seen:
            return
        self._seen.add(key)
        self.entries.append(
            _BanEntry(prog, kind, tuple(_clause_info(c) for c in prog))
        )

    def __len__(self):
        return len(self.entries)

    def prunes(self, prog: Program, info=None) -> bool:
        if not self.entries:
            return False
        if info is None:
            info = tuple(_clause_info(c) for c in prog)
        recursive = program_is_recursive(prog)
        for entry in self.entries:
            if entry.kind in ("spec", "numeric_spec"):
                if recursive:
                    # recursion reaches subterms a standalone clause never
                    # evaluated, so only whole-program specialisations of the
                    # ban are provably as bad
                    if self._whole_spec_applies(entry, prog, info):
                        return True
                elif self._spec_applies(entry, prog, info):
                    return True
            else:
                if entry.kind == "gen_nonrec" and recursive:
                    continue
                if self._gen_applies(entry, prog, info):
                    return True
        return False

    @staticmethod
    def _spec_applies(entry: _BanEntry, prog: Program, info) -> bool:
        # every banned clause theta-subsumes some candidate clause of at
        # least its size (numeric bans also forbid extra numerical literals)
        numeric = entry.kind == "numeric_spec"
        for b, (bpreds, bsize, bnum) in zip(entry.program, entry.clause_info):
            hit = False
            for q, (qpreds, qsize, qnum) in zip(prog, info):
                if bsize > qsize or not bpreds <= qpreds:
                    continue
                if numeric and qnum > bnum:
                    continue
                if theta_subsumes(b, q):
                    hit = True
                    break
            if not hit:
                return False
        return True

    @staticmethod
    def _whole_spec_applies(entry: _BanEntry, prog: Program, info) -> bool:
        # every candidate clause is theta-subsumed by some banned clause
        numeric = entry.kind == "numeric_spec"
        for q, (qpreds, qsize, qnum) in zip(prog, info):
            hit = False
            for b, (bpreds, bsize, bnum) in zip(entry.program, entry.clause_info):
                if bsize > qsize or not bpreds <= qpreds:
                    continue
                if numeric and qnum > bnum:
                    continue
                if theta_subsumes(b, q):
                    hit = True
                    break
            if not hit:
                return False
        return True

    @staticmethod
    def _gen_applies(entry: _BanEntry, prog: Program, info) -> bool:
        # every banned clause is theta-subsumed by some candidate clause
        for b, (bpreds, bsize, bnum) in zip(entry.program, entry.clause_info):
            hit = False
            for q, (qpreds, qsize, qnum) in zip(prog, info):
                if not qpreds <= bpreds:
                    continue
                if theta_subsumes(q, b):
                    hit = True
                    break
            if not hit:
                return False
        return True


def add_constraint(store: ConstraintStore, kind: str, prog: Program):
    store.add(kind, prog)


class SpaceLimitExceeded(Exception):
    pass


@dataclass
class GenState:
    current_size: int = 2
    cursor: int = 0
    emitted: set = field(default_factory=set)
    exhausted: bool = False


class Generator:
    """Size-ordered candidate stream for one learning run."""

    def __init__(self, spec: BiasSpec, store: ConstraintStore | None = None):
        self.spec = spec
        self.store = store if store is not None else ConstraintStore()
        self.head = head_schema(spec)
        self.schemas = literal_schemas(spec)
        self.state = GenState()
        self.max_single = 1 + spec.max_body
        self.global_bound = spec.max_clauses * (1 + spec.max_body)
        self.max_size = self.global_bound

        self._schema_by_pred = {(s.pred, s.arity): s for s in self.schemas}
        self._pattern_cache: dict = {}
        self._decomposers = self._find_decomposers()
        self._recursion_enabled = spec.max_clauses >= 2 and any(
            t in self._decomposers for t, d in zip(self.head.argtypes, self.head.modes) if d == "in"
        )
        self._clause_cache: dict[tuple, list] = {}
        self._size_iter = None
        self._emitted_total = 0

    def _find_decomposers(self):
        decomposers: dict[str, list] = {}
        for s in self.schemas:
            if (
                s.kind == "regular"
                and s.arity == 2
                and s.argtypes[0] == s.argtypes[1]
                and s.modes == ("in", "out")
            ):
                decomposers.setdefault(s.argtypes[0], []).append(s)
        return decomposers

    # -- public API ---------------------------------------------------------

    def set_max_size(self, n: int):
        if n < self.max_size:
            self.max_size = n

    def next_candidate(self) -> Program | None:
        state = self.state
        while True:
            if state.exhausted:
                return None
            if self._size_iter is None:
                if state.current_size > min(self.max_size, self.global_bound):
                    state.exhausted = True
                    return None
                self._size_iter = self._programs_of_size(state.current_size)
                state.cursor = 0
            prog = next(self._size_iter, None)
            if prog is None:
                self._size_iter = None
                state.current_size += 1
                continue
            state.cursor += 1
            if state.current_size > self.max_size:
                continue
            if prog in state.emitted:
                continue
            state.emitted.add(prog)
            if self.store.prunes(prog):
                continue
            self._emitted_total += 1
            return prog

    # -- enumeration --------------------------------------------------------

    def _programs_of_size(self, n: int):
        for clause in self._clauses(n - 1, recursive=False):
            yield canonicalize((clause,))
        if self._recursion_enabled:
            # base + recursive pairs, base listed first by size
            for base_size in range(2, n - 2):
                rec_size = n - base_size
                if base_size > self.max_single or rec_size > self.max_single:
                    continue
                for base in self._clauses_cached(base_size - 1, recursive=False):
                    for rec in self._clauses_cached(rec_size - 1, recursive=True):
                        yield canonicalize((base, rec))

    def _clauses_cached(self, body_size: int, recursive: bool):
        key = (body_size, recursive)
        if key not in self._clause_cache:
            self._clause_cache[key] = list(self._clauses(body_size, recursive))
        return self._clause_cache[key]

    def _clauses(self, body_size: int, recursive: bool):
        if body_size < 1 or body_size > self.spec.max_body:
            return
        head_args = tuple(range(self.head.arity))
        head = Literal(self.head.pred, head_args)
        var_types = {i: t for i, t in enumerate(self.head.argtypes)}
        schemas = list(self.schemas)
        if recursive:
            rec_schema = Schema(
                pred=self.head.pred,
                arity=self.head.arity,
                argtypes=self.head.argtypes,
                modes=tuple("in" for _ in range(self.head.arity)),
                kind="recursive",
                placeholder_pos=None,
                bounds=None,
            )
            schemas = schemas + [rec_schema]

        seen = set()
        for body in self._bodies(body_size, var_types, schemas, recursive):
            raw = Clause(head, tuple(body))
            if not self._safe(raw):  # safety is renaming-invariant
                continue
            if recursive and not self._recursion_ok(raw):
                continue
            clause = canonicalize_clause_cached(raw)
            if clause in seen:
                continue
            seen.add(clause)
            if not _is_reduced(clause):
                continue
            yield clause

    def _bodies(self, size, var_types, schemas, recursive):
        spec = self.spec
        body: list[Literal] = []
        used_rec = [0]
        num_count = [0]

        def rec(remaining, var_types, last_key):
            if remaining == 0:
                yield list(body)
                return
            for si, schema in enumerate(schemas):
                if schema.kind == "numerical":
                    if num_count[0] >= spec.max_num_lits:
                        continue
                    if recursive:
                        continue  # numerical literals stay out of recursive clauses
                if schema.kind == "recursive" and used_rec[0] >= 1:
                    continue
                for args, new_types in self._arg_patterns(schema, var_types):
                    lit = Literal(schema.pred, args)
                    key = (schema.pred, len(args), args)
                    if key <= last_key:
                        continue
                    nrel = len(new_types)
                    relational_vars = sum(
                        1 for t in {**var_types, **new_types}.values() if t != "__ph__"
                    )
                    if relational_vars > spec.max_vars:
                        continue
                    body.append(lit)
                    if schema.kind == "numerical":
                        num_count[0] += 1
                    if schema.kind == "recursive":
                        used_rec[0] += 1
                    yield from rec(remaining - 1, {**var_types, **new_types}, key)
                    body.pop()
                    if schema.kind == "numerical":
                        num_count[0] -= 1
                    if schema.kind == "recursive":
                        used_rec[0] -= 1

        lowest = ("", 0, ())
        yield from rec(size, var_types, lowest)

    def _arg_patterns(self, schema: Schema, var_types):
        """All argument tuples for one literal: existing vars by type, fresh
        vars introduced in increasing id order.

        Placeholder positions and arithmetic outputs always take a fresh
        variable; any other position may reuse a type-compatible variable or
        introduce a fresh one (safety is checked on the finished clause,
        since the sorted body order differs from the execution order).
        """
        memo_key = (schema.pred, schema.arity, tuple(sorted(var_types.items())))
        cached = self._pattern_cache.get(memo_key)
        if cached is not None:
            return cached
        next_id = max(var_types, default=-1) + 1
        results = []

        def rec(pos, args, new_types, next_fresh):
            if pos == schema.arity:
                results.append((tuple(args), dict(new_types)))
                return
            t = schema.argtypes[pos]
            mode = schema.modes[pos] if pos < len(schema.modes) else "out"
            if mode == "ph":
                rec(pos + 1, args + [next_fresh], {**new_types, next_fresh: "__ph__"}, next_fresh + 1)
                return
            if schema.kind == "numerical" and mode == "out":
                rec(pos + 1, args + [next_fresh], {**new_types, next_fresh: t}, next_fresh + 1)
                return
            for v in (v for v, vt in var_types.items() if vt == t):
                rec(pos + 1, args + [v], new_types, next_fresh)
            for v in (v for v, vt in new_types.items() if vt == t):
                rec(pos + 1, args + [v], new_types, next_fresh)
            rec(pos + 1, args + [next_fresh], {**new_types, next_fresh: t}, next_fresh + 1)

        rec(0, [], {}, next_id)
        self._pattern_cache[memo_key] = results
        return results

    def _safe(self, clause: Clause) -> bool:
        """Every `in` argument is bound by head inputs or an earlier output."""
        bound = set()
        for i, mode in enumerate(self.head.modes):
            if mode == "in":
                bound.add(clause.head.args[i])
        remaining = list(clause.body)
        while remaining:
            progress = False
            for lit in list(remaining):
                schema = self._schema_for(lit)
                if schema is None:
                    return False
                ok = True
                for arg, mode in zip(lit.args, schema.modes):
                    if mode == "in" and type(arg) is int and arg not in bound:
                        ok = False
                        break
                if ok:
                    for arg in lit.args:
                        if type(arg) is int:
                            bound.add(arg)
                    remaining.remove(lit)
                    progress = True
            if not progress:
                return False
        for i, mode in enumerate(self.head.modes):
            if mode == "out" and type(clause.head.args[i]) is int and clause.head.args[i] not in bound:
                return False
        return True

    def _schema_for(self, lit: Literal):
        if lit.pred == self.head.pred and len(lit.args) == self.head.arity:
            return Schema(
                pred=self.head.pred,
                arity=self.head.arity,
                argtypes=self.head.argtypes,
                modes=tuple("in" for _ in range(self.head.arity)),
                kind="recursive",
                placeholder_pos=None,
                bounds=None,
            )
        return self._schema_by_pred.get((lit.pred, len(lit.args)))

    def _recursion_ok(self, clause: Clause) -> bool:
        """The recursive call must consume a strictly decomposed argument."""
        rec_lits = [
            l
            for l in clause.body
            if l.pred == self.head.pred and len(l.args) == self.head.arity
        ]
        if len(rec_lits) != 1:
            return False
        decomp_preds = {
            (s.pred, s.arity) for group in self._decomposers.values() for s in group
        }
        smaller = set()
        changed = True
        sources = {
            clause.head.args[i]
            for i, m in enumerate(self.head.modes)
            if m == "in"
        }
        while changed:
            changed = False
            for lit in clause.body:
                if (lit.pred, len(lit.args)) in decomp_preds:
                    src, dst = lit.args[0], lit.args[1]
                    if dst == src:
                        continue  # a decomposition step must shrink its input
                    if (src in sources or src in smaller) and dst not in smaller:
                        smaller.add(dst)
                        changed = True
        rec = rec_lits[0]
        for i, mode in enumerate(self.head.modes):
            if mode == "in" and type(rec.args[i]) is int:
                if rec.args[i] not in smaller:
                    return False
        return True


def _is_reduced(clause: Clause) -> bool:
    """False when dropping some body literal leaves a theta-equivalent clause.

    The shorter clause always subsumes the longer one, so equivalence holds
    exactly when the original maps onto the reduced clause; such clauses
    restate a smaller candidate and are skipped.
    """
    if len(clause.body) < 2:
        return True
    for i in range(len(clause.body)):
        reduced = Clause(clause.head, clause.body[:i] + clause.body[i + 1 :])
        if theta_subsumes(clause, reduced):
            return False
    return True


_canon_cache: dict = {}


def canonicalize_clause_cached(clause: Clause) -> Clause:
    got = _canon_cache.get(clause)
    if got is None:
        from .terms import canonicalize_clause

        got = canonicalize_clause(clause)
        if len(_canon_cache) > 200_000:
            _canon_cache.clear()
        _canon_cache[clause] = got
    return got


def count_space(spec: BiasSpec, max_size: int, node_limit: int = 2_000_000) -> int:
    """Number of canonical candidates up to max_size with an empty store."""
    gen = Generator(spec)
    gen.set_max_size(max_size)
    count = 0
    while True:
        prog = gen.next_candidate()
        if prog is None:
            return count
        if program_size(prog) > max_size:
            continue
        count += 1
        if count > node_limit:
            raise SpaceLimitExceeded(f"more than {node_limit} candidates")
