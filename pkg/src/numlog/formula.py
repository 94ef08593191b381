"""Coverage-maximizing numeric search over substitution tables.

For a partial hypothesis with placeholder variables, each positive example
contributes a guard that is a disjunction over its substitution tuples (a
conjunction of linear atoms per tuple), each negative example a blocked
disjunction, plus a floor requiring at least one covered positive.  The
solver maximizes the number of satisfied guards exactly, by branch and
bound over per-example tuple choices with interval propagation, and picks
concrete placeholder values deterministically (midpoints with symbolic
strictness; no epsilon constants).

Chained numerical literals are flattened first: add/mult outputs define
intermediate values per tuple, so every retained atom is linear in the
placeholders.  A product of two unknowns is rejected as non-linear.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from math import gcd

from .bias import NUMERIC_MODES, BiasSpec
from .engine import LiftedClause, SubstitutionTable
from .lra import (
    FULL,
    DEFAULT_NODE_LIMIT,
    Interval,
    LinAtom,
    SearchLimitExceeded,
    ZERO,
    _tighten,
    check_feasible,
    evaluate_atom,
    interval_add_bound,
    negate,
    pick_value,
    project_interval,
)
from .terms import Program, program_size

__all__ = [
    "NonLinearError",
    "NumericFormula",
    "NumericSolution",
    "SearchLimitExceeded",
    "build_formula",
    "solve_max_coverage",
    "enumerate_solutions",
    "emit_smtlib",
]


class NonLinearError(ValueError):
    """The hypothesis needs a product of two unknowns."""


@dataclass(frozen=True)
class Placeholder:
    var: int
    kind: str  # real | int
    bounds: tuple | None  # (Fraction, Fraction) | None


@dataclass
class NumericFormula:
    placeholders: list
    pos_guards: list  # [pos example] -> list of conjuncts; conjunct = tuple[LinAtom]
    neg_blocks: list  # [neg example] -> list of conjuncts to falsify
    bound_atoms: list
    atom_count: int
    stats: tuple  # (n_e, s, n_v)
    data_points: dict = field(default_factory=dict)  # var -> sorted values

    @property
    def n_pos(self) -> int:
        return len(self.pos_guards)


@dataclass(frozen=True)
class NumericSolution:
    assignment: dict  # placeholder var -> Fraction
    covered: frozenset  # positive example indices
    objective_value: int


class _Expr:
    """Linear expression over placeholders: coeffs dict + rational constant."""

    __slots__ = ("coeffs", "const")

    def __init__(self, coeffs=None, const=ZERO):
        self.coeffs = coeffs or {}
        self.const = const

    @classmethod
    def constant(cls, value):
        return cls({}, Fraction(value))

    @classmethod
    def variable(cls, var):
        return cls({var: Fraction(1)}, ZERO)

    def add(self, other):
        coeffs = dict(self.coeffs)
        for v, c in other.coeffs.items():
            coeffs[v] = coeffs.get(v, ZERO) + c
        return _Expr(coeffs, self.const + other.const)

    def sub(self, other):
        coeffs = dict(self.coeffs)
        for v, c in other.coeffs.items():
            coeffs[v] = coeffs.get(v, ZERO) - c
        return _Expr(coeffs, self.const - other.const)

    def mul(self, other):
        if self.coeffs and other.coeffs:
            raise NonLinearError("product of two unknowns")
        if self.coeffs:
            scalar, linear = other.const, self
        else:
            scalar, linear = self.const, other
        return _Expr({v: c * scalar for v, c in linear.coeffs.items()}, linear.const * scalar)

    def as_atom(self, op: str) -> LinAtom | bool:
        items = tuple(sorted((v, c) for v, c in self.coeffs.items() if c != 0))
        if not items:  # constant atom folds to a truth value
            if op == "le":
                return self.const <= 0
            if op == "lt":
                return self.const < 0
            return self.const == 0
        return LinAtom(items, self.const, op)


def _tuple_atoms(unit: LiftedClause, values: tuple):
    """Linear atoms for one substitution tuple, aux variables eliminated."""
    nums = unit.numerics
    env: dict[int, _Expr] = {}
    for var, val in zip(nums.related, values):
        if type(val) is not Fraction:
            return None  # non-numeric related value can never satisfy arithmetic
        env[var] = _Expr.constant(val)
    for ph in nums.placeholders:
        env[ph] = _Expr.variable(ph)

    def expr_of(arg):
        if type(arg) is Fraction:
            return _Expr.constant(arg)
        e = env.get(arg)
        if e is None:
            raise NonLinearError("unbound numeric argument")
        return e

    atoms = []

    def emit(e: _Expr, op: str) -> bool:
        a = e.as_atom(op)
        if a is True:
            return True
        if a is False:
            return False
        atoms.append(a)
        return True

    for lit in nums.templates:
        modes = NUMERIC_MODES[lit.pred]
        if lit.pred == "geq":  # x >= y  <=>  y - x <= 0
            ok = emit(expr_of(lit.args[1]).sub(expr_of(lit.args[0])), "le")
        elif lit.pred == "leq":
            ok = emit(expr_of(lit.args[0]).sub(expr_of(lit.args[1])), "le")
        else:
            a, b, c = lit.args
            lhs = expr_of(a).add(expr_of(b)) if lit.pred == "add" else expr_of(a).mul(expr_of(b))
            if type(c) is int and c not in env:
                env[c] = lhs  # defines an intermediate: no atom emitted
                ok = True
            else:
                ok = emit(expr_of(c).sub(lhs), "eq")
        if not ok:
            return None  # a constant atom is false: tuple can never satisfy
    return tuple(atoms)


def build_formula(
    table: SubstitutionTable,
    n_pos: int,
    units: list,
    spec: BiasSpec | None = None,
    hypothesis: Program | None = None,
) -> NumericFormula:
    """Assemble guards and blocks from per-clause substitution tables.

    Examples are indexed positives first; `n_pos` splits the table rows.
    Placeholder kinds and bounds come from the bias declarations.
    """
    ph_kind: dict[str, str] = {}
    ph_bounds: dict[str, tuple] = {}
    if spec is not None:
        for decl in spec.numerical_preds:
            modes = NUMERIC_MODES[decl.name]
            if "ph" in modes:
                pos = modes.index("ph")
                ph_kind[decl.name] = spec.numkind(decl.argtypes[pos])
                if (decl.name, pos) in spec.bounds:
                    ph_bounds[decl.name] = spec.bounds[(decl.name, pos)]

    placeholders = []
    seen_ph = set()
    for unit in units:
        nums = unit.numerics
        for lit in nums.templates:
            modes = NUMERIC_MODES[lit.pred]
            pos = modes.index("ph") if "ph" in modes else None
            if pos is None or type(lit.args[pos]) is not int:
                continue
            var = lit.args[pos]
            if var in seen_ph:
                continue
            seen_ph.add(var)
            placeholders.append(
                Placeholder(
                    var=var,
                    kind=ph_kind.get(lit.pred, "real"),
                    bounds=ph_bounds.get(lit.pred),
                )
            )

    n_examples = len(table.tuples[0]) if table.tuples else 0
    guards = []
    atom_count = 0
    max_subs = 0
    for i in range(n_examples):
        disjuncts = []
        seen = set()
        subs_here = 0
        for ui, unit in enumerate(units):
            rows = table.tuples[ui][i] if table.tuples else []
            subs_here += len(rows)
            for values in rows:
                atoms = _tuple_atoms(unit, values)
                if atoms is None:
                    continue
                if atoms in seen:
                    continue
                seen.add(atoms)
                atom_count += len(atoms)
                disjuncts.append(atoms)
        guards.append(disjuncts)
        max_subs = max(max_subs, subs_here)

    bound_atoms = []
    for ph in placeholders:
        if ph.bounds is not None:
            lo, hi = ph.bounds
            bound_atoms.append(LinAtom(((ph.var, Fraction(-1)),), lo, "le"))  # var >= lo
            bound_atoms.append(LinAtom(((ph.var, Fraction(1)),), -hi, "le"))  # var <= hi

    from .terms import clause_vars

    if hypothesis is None:
        hypothesis = tuple(u.numerics.clause for u in units)
    n_v = sum(len(clause_vars(c)) for c in hypothesis)
    stats = (n_examples, max_subs, n_v)
    bound = stats[0] * stats[1] * stats[2]
    if atom_count > max(bound, 0):
        raise AssertionError(
            f"formula has {atom_count} atoms, exceeding the n_e*s*n_v bound {bound}"
        )

    data_points: dict[int, list] = {}
    for disjuncts in guards:
        for conj in disjuncts:
            _collect_data_points(conj, data_points)
    formula = NumericFormula(
        placeholders=placeholders,
        pos_guards=guards[:n_pos],
        neg_blocks=guards[n_pos:],
        bound_atoms=bound_atoms,
        atom_count=atom_count,
        stats=stats,
        data_points={v: sorted(set(vals)) for v, vals in data_points.items()},
    )
    return formula


def _collect_data_points(conj, out: dict):
    for a in conj:
        if len(a.coeffs) == 1:
            v, c = a.coeffs[0]
            out.setdefault(v, []).append(-a.const / c)


# ---------------------------------------------------------------------------
# solving


class _Store:
    """Conjunction under construction: per-var intervals plus general atoms."""

    def __init__(self, formula: NumericFormula):
        self.int_vars = frozenset(p.var for p in formula.placeholders if p.kind == "int")
        self.intervals: dict[int, Interval] = {}
        self.multi: list[LinAtom] = []
        self.trail: list = []
        self.ok = True

    def mark(self):
        return (len(self.trail), len(self.multi), self.ok)

    def undo(self, mark):
        n_trail, n_multi, ok = mark
        while len(self.trail) > n_trail:
            var, old = self.trail.pop()
            if old is None:
                del self.intervals[var]
            else:
                self.intervals[var] = old
        del self.multi[n_multi:]
        self.ok = ok

    def add(self, a: LinAtom) -> bool:
        """Add one atom; returns False when the store is now infeasible
        (single-variable exact, multi-variable deferred to full checks)."""
        if not self.ok:
            return False
        if not a.coeffs:
            if a.op == "eq":
                ok = a.const == 0
            elif a.op == "lt":
                ok = a.const < 0
            else:
                ok = a.const <= 0
            if not ok:
                self.ok = False
            return self.ok
        if len(a.coeffs) == 1 and a.op != "eq":
            if a.coeffs[0][0] in self.int_vars:
                a = _tighten(a, self.int_vars)
            v, c = a.coeffs[0]
            old = self.intervals.get(v)
            iv = old if old is not None else FULL
            iv2 = interval_add_bound(iv, c, a.const, a.op == "lt")
            if iv2 is not iv:
                self.trail.append((v, old))
                self.intervals[v] = iv2
            if iv2.empty():
                self.ok = False
            return self.ok
        if len(a.coeffs) == 1 and a.op == "eq":
            v, c = a.coeffs[0]
            val = -a.const / c
            return self.add(LinAtom(((v, Fraction(1)),), -val, "le")) and self.add(
                LinAtom(((v, Fraction(-1)),), val, "le")
            )
        self.multi.append(a)
        return True

    def add_all(self, atoms) -> bool:
        for a in atoms:
            if not self.add(a):
                return False
        return True

    def atom_status(self, a: LinAtom) -> str:
        """'entailed' | 'contradicted' | 'open' against the interval store
        (exact for single-variable atoms, 'open' otherwise)."""
        if len(a.coeffs) != 1 or a.op == "eq":
            return "open"
        v, c = a.coeffs[0]
        iv = self.intervals.get(v, FULL)
        bound = -a.const / c
        strict = a.op == "lt"
        if c > 0:  # v <= bound (or <)
            if iv.hi is not None and (iv.hi < bound or (iv.hi == bound and (strict <= iv.hi_strict))):
                return "entailed"
            if iv.lo is not None and (iv.lo > bound or (iv.lo == bound and (strict or iv.lo_strict))):
                return "contradicted"
            return "open"
        if iv.lo is not None and (iv.lo > bound or (iv.lo == bound and (strict <= iv.lo_strict))):
            return "entailed"
        if iv.hi is not None and (iv.hi < bound or (iv.hi == bound and (strict or iv.hi_strict))):
            return "contradicted"
        return "open"

    def full_atoms(self):
        atoms = list(self.multi)
        for v, iv in self.intervals.items():
            if iv.lo is not None:
                atoms.append(LinAtom(((v, Fraction(-1)),), iv.lo, "lt" if iv.lo_strict else "le"))
            if iv.hi is not None:
                atoms.append(LinAtom(((v, Fraction(1)),), -iv.hi, "lt" if iv.hi_strict else "le"))
        return atoms

    def feasible_exact(self, node_budget) -> bool:
        if not self.ok:
            return False
        if not self.multi and not self.int_vars:
            return True
        if not self.multi:
            # intervals already integer-tightened; nonempty means feasible
            return True
        try:
            model = check_feasible(self.full_atoms(), self.int_vars, node_limit=node_budget[0])
        except SearchLimitExceeded:
            raise
        return model is not None


class _CoverageSearch:
    def __init__(self, formula: NumericFormula, required_sets, node_limit):
        self.f = formula
        self.required = [frozenset(r) for r in required_sets]
        self.nodes = node_limit
        self.best_count = 0
        self.best_atoms = None
        self.best_covered = None
        # negatives: each tuple-conjunct must be falsified; a conjunct with an
        # empty atom list is unconditionally satisfied, so the block fails
        self.neg_clauses = []
        self.impossible = False
        for disjuncts in formula.neg_blocks:
            for conj in disjuncts:
                if not conj:
                    self.impossible = True
                    return
                options = []
                seen = set()
                for a in conj:
                    try:
                        na = negate(a)
                    except ValueError:  # equality: split into two options
                        less = LinAtom(a.coeffs, a.const, "lt")
                        more = negate(LinAtom(a.coeffs, a.const, "le"))
                        for cand in (less, more):
                            if cand not in seen:
                                seen.add(cand)
                                options.append(cand)
                        continue
                    if na not in seen:
                        seen.add(na)
                        options.append(na)
                self.neg_clauses.append(tuple(options))
        self.neg_clauses = sorted(set(self.neg_clauses))
        self.order = sorted(
            range(len(formula.pos_guards)), key=lambda i: (len(formula.pos_guards[i]), i)
        )

    def spend(self):
        self.nodes -= 1
        if self.nodes < 0:
            raise SearchLimitExceeded

    def run(self):
        if self.impossible:
            return None
        store = _Store(self.f)
        if not store.add_all(self.f.bound_atoms):
            return None
        states = [False] * len(self.neg_clauses)  # True once satisfied
        if not self.propagate(store, states):
            return None
        self.search(0, store, states, set())
        if self.best_atoms is None or self.best_count < 1:
            return None
        return self.finish()

    def propagate(self, store: _Store, states) -> bool:
        """Unit-propagate negative clauses against the interval store."""
        changed = True
        while changed:
            changed = False
            for ci, options in enumerate(self.neg_clauses):
                if states[ci]:
                    continue
                open_opts = []
                satisfied = False
                for opt in options:
                    status = store.atom_status(opt)
                    if status == "entailed":
                        satisfied = True
                        break
                    if status == "open":
                        open_opts.append(opt)
                if satisfied:
                    states[ci] = True
                    continue
                if not open_opts:
                    return False
                if len(open_opts) == 1:
                    if not store.add(open_opts[0]):
                        return False
                    states[ci] = True
                    changed = True
        return True

    def search(self, pos_idx, store: _Store, states, covered):
        self.spend()
        remaining = len(self.order) - pos_idx
        if len(covered) + remaining <= self.best_count:
            return
        for req in self.required:
            if not (req & covered) and not any(
                i in req for i in self.order[pos_idx:]
            ):
                return
        if pos_idx == len(self.order):
            self.at_leaf(store, states, covered)
            return
        ex = self.order[pos_idx]
        disjuncts = self.f.pos_guards[ex]
        for conj in disjuncts:
            mark = store.mark()
            saved = list(states)
            if (
                store.add_all(conj)
                and self.propagate(store, states)
                and self._multi_ok(store)
            ):
                covered.add(ex)
                self.search(pos_idx + 1, store, states, covered)
                covered.discard(ex)
            store.undo(mark)
            states[:] = saved
        # leave this example uncovered
        self.search(pos_idx + 1, store, states, covered)

    def _multi_ok(self, store: _Store) -> bool:
        """Exact feasibility whenever multi-variable atoms are in play;
        intervals alone are exact otherwise."""
        if not store.multi:
            return True
        budget = [self.nodes]
        try:
            return store.feasible_exact(budget)
        finally:
            self.nodes = budget[0]

    def at_leaf(self, store: _Store, states, covered):
        if len(covered) <= self.best_count or len(covered) < 1:
            return
        for req in self.required:
            if not (req & covered):
                return
        self.resolve_negs(0, store, states, covered)

    def resolve_negs(self, start, store: _Store, states, covered):
        self.spend()
        ci = next((i for i in range(start, len(states)) if not states[i]), None)
        if ci is None:
            budget = [self.nodes]
            try:
                ok = store.feasible_exact(budget)
            finally:
                self.nodes = budget[0]
            if ok:
                self.best_count = len(covered)
                self.best_atoms = store.full_atoms()
                self.best_covered = frozenset(covered)
            return
        for opt in self.neg_clauses[ci]:
            if store.atom_status(opt) == "contradicted":
                continue
            mark = store.mark()
            saved = list(states)
            states[ci] = True
            if store.add(opt) and self.propagate(store, states) and self._multi_ok(store):
                self.resolve_negs(ci + 1, store, states, covered)
            store.undo(mark)
            states[:] = saved
            if self.best_count >= len(covered):
                return  # this leaf cannot beat itself twice

    def finish(self) -> NumericSolution:
        atoms = self.best_atoms
        order = [p.var for p in self.f.placeholders]
        kinds = {p.var: p.kind for p in self.f.placeholders}
        assignment: dict[int, Fraction] = {}
        budget = [max(self.nodes, 10_000)]
        for j, var in enumerate(order):
            later = order[j + 1 :]
            subst = []
            for a in atoms:
                coeffs = []
                const = a.const
                for v, c in a.coeffs:
                    if v in assignment:
                        const += c * assignment[v]
                    else:
                        coeffs.append((v, c))
                if not coeffs:
                    continue
                subst.append(LinAtom(tuple(coeffs), const, a.op))
            iv = project_interval(subst, var, others_order=later, node_budget=budget)
            if iv is None:
                iv = FULL  # placeholder unconstrained at this point
            value = pick_value(
                iv, self.f.data_points.get(var, ()), integer=kinds[var] == "int"
            )
            if value is None:
                value = ZERO
            assignment[var] = value

        covered = frozenset(
            i
            for i, disjuncts in enumerate(self.f.pos_guards)
            if any(all(evaluate_atom(a, assignment) for a in conj) for conj in disjuncts)
        )
        return NumericSolution(
            assignment=assignment, covered=covered, objective_value=len(covered)
        )


def solve_max_coverage(
    formula: NumericFormula,
    required_sets=(),
    node_limit: int = DEFAULT_NODE_LIMIT,
):
    """Maximal-coverage solution or None when no positive can be covered.

    Raises SearchLimitExceeded past the node budget.
    """
    search = _CoverageSearch(formula, required_sets, node_limit)
    return search.run()


def enumerate_solutions(formula: NumericFormula, node_limit: int = DEFAULT_NODE_LIMIT):
    """Greedy covering set of solutions, each adding an uncovered positive."""
    solutions = []
    covered_union: set = set()
    required: list = []
    all_pos = set(range(formula.n_pos))
    while True:
        sol = solve_max_coverage(formula, required_sets=required, node_limit=node_limit)
        if sol is None:
            break
        solutions.append(sol)
        covered_union |= sol.covered
        uncovered = all_pos - covered_union
        if not uncovered:
            break
        required.append(frozenset(uncovered))
    return solutions


# ---------------------------------------------------------------------------
# SMT-LIB emission


def _smt_int(n: int) -> str:
    return str(n) if n >= 0 else f"(- {-n})"


def _smt_sum(coeffs, const, scale) -> str:
    parts = []
    for v, c in coeffs:
        ci = int(c * scale)
        parts.append(f"(* {_smt_int(ci)} v{v})")
    ki = int(const * scale)
    if ki != 0 or not parts:
        parts.append(_smt_int(ki))
    if len(parts) == 1:
        return parts[0]
    return f"(+ {' '.join(parts)})"


def _smt_atom(a: LinAtom) -> str:
    denom = a.const.denominator
    for _, c in a.coeffs:
        denom = denom * c.denominator // gcd(denom, c.denominator)
    scale = Fraction(denom)
    op = {"le": "<=", "lt": "<", "eq": "="}[a.op]
    return f"({op} {_smt_sum(a.coeffs, a.const, scale)} 0)"


def _smt_conj(conj) -> str:
    if not conj:
        return "true"
    if len(conj) == 1:
        return _smt_atom(conj[0])
    return f"(and {' '.join(_smt_atom(a) for a in conj)})"


def _smt_disj(disjuncts) -> str:
    if not disjuncts:
        return "false"
    if len(disjuncts) == 1:
        return _smt_conj(disjuncts[0])
    return f"(or {' '.join(_smt_conj(c) for c in disjuncts)})"


def emit_smtlib(formula: NumericFormula) -> str:
    """Deterministic SMT-LIB2 script with an integer coverage objective."""
    lines = ["(set-option :produce-models true)"]
    for p in formula.placeholders:
        sort = "Int" if p.kind == "int" else "Real"
        lines.append(f"(declare-const v{p.var} {sort})")
    for i in range(len(formula.pos_guards)):
        lines.append(f"(declare-const b{i} Bool)")
    for a in formula.bound_atoms:
        lines.append(f"(assert {_smt_atom(a)})")
    for i, disjuncts in enumerate(formula.pos_guards):
        lines.append(f"(assert (= b{i} {_smt_disj(disjuncts)}))")
    for disjuncts in formula.neg_blocks:
        lines.append(f"(assert (not {_smt_disj(disjuncts)}))")
    if formula.pos_guards:
        total = " ".join(f"(ite b{i} 1 0)" for i in range(len(formula.pos_guards)))
        summed = f"(+ {total})" if len(formula.pos_guards) > 1 else total
    else:
        summed = "0"
    lines.append(f"(assert (>= {summed} 1))")
    lines.append(f"(maximize {summed})")
    lines.append("(check-sat)")
    lines.append("(get-model)")
    return "\n".join(lines) + "\n"
