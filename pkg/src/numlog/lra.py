"""Exact feasibility of linear constraints over rationals and integers.

Atoms are ``sum(coef*var) + const (<=|<|=) 0`` with Fraction coefficients.
Rational feasibility is decided by Fourier-Motzkin elimination with strict
bounds tracked symbolically (no epsilon constants); integer unknowns are
decided by branch and bound with bound tightening (a strict bound x > c on
an integer tightens to x >= floor(c)+1).
"""

from __future__ import annotations

from fractions import Fraction
from math import ceil, floor
from typing import NamedTuple

ZERO = Fraction(0)
HALF = Fraction(1, 2)

DEFAULT_NODE_LIMIT = 1_000_000


class SearchLimitExceeded(Exception):
    """Branch node limit exceeded; never a wrong answer."""


class LinAtom(NamedTuple):
    coeffs: tuple  # sorted ((var, Fraction), ...), no zero coefficients
    const: Fraction
    op: str  # 'le', 'lt', 'eq'


def atom(coeffs: dict, const, op: str = "le") -> LinAtom:
    items = tuple(sorted((v, Fraction(c)) for v, c in coeffs.items() if c != 0))
    return LinAtom(items, Fraction(const), op)


def negate(a: LinAtom) -> LinAtom:
    """Negation of a non-strict bound is the reversed strict bound."""
    if a.op == "eq":
        raise ValueError("cannot negate an equality into a single atom")
    neg = tuple((v, -c) for v, c in a.coeffs)
    return LinAtom(neg, -a.const, "lt" if a.op == "le" else "le")


def _split_eq(atoms):
    out = []
    for a in atoms:
        if a.op == "eq":
            out.append(LinAtom(a.coeffs, a.const, "le"))
            out.append(LinAtom(tuple((v, -c) for v, c in a.coeffs), -a.const, "le"))
        else:
            out.append(a)
    return out


def _tighten(a: LinAtom, int_vars) -> LinAtom:
    """Integer bound tightening for single-variable atoms."""
    if len(a.coeffs) != 1 or a.op == "eq":
        return a
    v, c = a.coeffs[0]
    if v not in int_vars:
        return a
    # c*v + const <= 0  ->  v <= -const/c (c>0) or v >= -const/c (c<0)
    bound = -a.const / c
    if c > 0:  # upper bound: x < 3 -> x <= 2,  x < 2.5 -> x <= 2
        if a.op == "lt":
            b = bound - 1 if bound.denominator == 1 else floor(bound)
        else:
            b = floor(bound)
        return LinAtom(((v, Fraction(1)),), Fraction(-b), "le")
    # lower bound: x > 3 -> x >= 4,  x > 2.5 -> x >= 3
    if a.op == "lt":
        b = bound + 1 if bound.denominator == 1 else ceil(bound)
    else:
        b = ceil(bound)
    return LinAtom(((v, Fraction(-1)),), Fraction(b), "le")


class Interval(NamedTuple):
    lo: Fraction | None
    lo_strict: bool
    hi: Fraction | None
    hi_strict: bool

    def empty(self) -> bool:
        if self.lo is None or self.hi is None:
            return False
        if self.lo > self.hi:
            return True
        return self.lo == self.hi and (self.lo_strict or self.hi_strict)


FULL = Interval(None, False, None, False)


def interval_add_bound(iv: Interval, coef: Fraction, const: Fraction, strict: bool) -> Interval:
    """Intersect interval with coef*x + const (<=|<) 0."""
    bound = -const / coef
    if coef > 0:  # upper bound
        if iv.hi is None or bound < iv.hi or (bound == iv.hi and strict and not iv.hi_strict):
            return Interval(iv.lo, iv.lo_strict, bound, strict)
        return iv
    if iv.lo is None or bound > iv.lo or (bound == iv.lo and strict and not iv.lo_strict):
        return Interval(bound, strict, iv.hi, iv.hi_strict)
    return iv


def pick_value(iv: Interval, data_points=(), integer: bool = False):
    """Deterministic value inside a nonempty interval.

    Bounded intervals take the midpoint.  A finite open endpoint on a
    half-bounded interval is nudged inward by half the gap to the nearest
    data point past it (one half unit when no data point exists); closed
    endpoints are used directly.  Integer intervals round toward the center.
    """
    if integer:
        lo = hi = None
        if iv.lo is not None:
            lo = floor(iv.lo) + 1 if (iv.lo_strict and iv.lo.denominator == 1) else ceil(iv.lo)
        if iv.hi is not None:
            hi = ceil(iv.hi) - 1 if (iv.hi_strict and iv.hi.denominator == 1) else floor(iv.hi)
        if lo is not None and hi is not None:
            if lo > hi:
                return None
            return Fraction((lo + hi) // 2 if (lo + hi) % 2 == 0 else (lo + hi + 1) // 2)
        if lo is not None:
            return Fraction(lo)
        if hi is not None:
            return Fraction(hi)
        return ZERO

    lo, hi = iv.lo, iv.hi
    if lo is not None and hi is not None:
        return (lo + hi) / 2
    if lo is not None:
        if not iv.lo_strict:
            return lo
        above = [d for d in data_points if d > lo]
        gap = (min(above) - lo) if above else Fraction(1)
        return lo + gap / 2
    if hi is not None:
        if not iv.hi_strict:
            return hi
        below = [d for d in data_points if d < hi]
        gap = (hi - max(below)) if below else Fraction(1)
        return hi - gap / 2
    return ZERO


# ---------------------------------------------------------------------------
# Fourier-Motzkin


def _subst_partial(a: LinAtom, values: dict):
    coeffs = []
    const = a.const
    for v, c in a.coeffs:
        if v in values:
            const += c * values[v]
        else:
            coeffs.append((v, c))
    return tuple(coeffs), const


def fm_feasible(atoms, node_budget=None):
    """Rational feasibility; returns (True, model) or (False, None)."""
    work = []
    for a in _split_eq(atoms):
        if not a.coeffs:
            if a.const > 0 or (a.const == 0 and a.op == "lt"):
                return False, None
            continue
        work.append(a)

    elim_stack = []
    while work:
        vars_here: dict[int, int] = {}
        for a in work:
            for v, _ in a.coeffs:
                vars_here[v] = vars_here.get(v, 0) + 1
        target = min(vars_here, key=lambda v: (vars_here[v], v))

        with_v, without = [], []
        lowers = []  # coef < 0: v >= ...
        uppers = []  # coef > 0: v <= ...
        for a in work:
            coef = next((c for v, c in a.coeffs if v == target), None)
            if coef is None:
                without.append(a)
            else:
                with_v.append(a)
                (lowers if coef < 0 else uppers).append((a, coef))

        elim_stack.append((target, with_v))
        new_atoms = []
        if node_budget is not None:
            node_budget[0] -= len(lowers) * len(uppers)
            if node_budget[0] < 0:
                raise SearchLimitExceeded
        for la, lc in lowers:
            for ua, uc in uppers:
                # (1/uc)*ua + (1/-lc)*la eliminates target
                scale_u = Fraction(1) / uc
                scale_l = Fraction(1) / -lc
                coeffs: dict[int, Fraction] = {}
                for v, c in ua.coeffs:
                    coeffs[v] = coeffs.get(v, ZERO) + c * scale_u
                for v, c in la.coeffs:
                    coeffs[v] = coeffs.get(v, ZERO) + c * scale_l
                coeffs.pop(target, None)
                const = ua.const * scale_u + la.const * scale_l
                op = "lt" if (ua.op == "lt" or la.op == "lt") else "le"
                items = tuple(sorted((v, c) for v, c in coeffs.items() if c != 0))
                if not items:
                    if const > 0 or (const == 0 and op == "lt"):
                        return False, None
                    continue
                new_atoms.append(LinAtom(items, const, op))
        work = without + new_atoms

    # back-substitute in reverse elimination order
    model: dict[int, Fraction] = {}
    for target, with_v in reversed(elim_stack):
        iv = FULL
        for a in with_v:
            coeffs, const = _subst_partial(a, model)
            assert len(coeffs) == 1 and coeffs[0][0] == target
            iv = interval_add_bound(iv, coeffs[0][1], const, a.op == "lt")
        if iv.empty():  # cannot happen if elimination was exhaustive
            return False, None
        model[target] = pick_value(iv)
    return True, model


def check_feasible(atoms, int_vars=frozenset(), node_limit=DEFAULT_NODE_LIMIT):
    """Exact sat check over mixed rational/integer unknowns.

    Returns a model dict or None; raises SearchLimitExceeded past the
    branch budget.
    """
    int_vars = frozenset(int_vars)
    budget = [node_limit]
    atoms = [_tighten(a, int_vars) for a in atoms]

    def branch(atoms):
        budget[0] -= 1
        if budget[0] < 0:
            raise SearchLimitExceeded
        ok, model = fm_feasible(atoms, node_budget=budget)
        if not ok:
            return None
        frac = None
        for v in sorted(int_vars):
            val = model.get(v)
            if val is not None and val.denominator != 1:
                frac = (v, val)
                break
        if frac is None:
            # integer vars absent from the model are unconstrained: use 0
            return model
        v, val = frac
        lo_branch = atoms + [LinAtom(((v, Fraction(1)),), Fraction(-floor(val)), "le")]
        got = branch(lo_branch)
        if got is not None:
            return got
        hi_branch = atoms + [LinAtom(((v, Fraction(-1)),), Fraction(floor(val) + 1), "le")]
        return branch(hi_branch)

    return branch(list(atoms))


def project_interval(atoms, target, others_order=(), node_budget=None) -> Interval | None:
    """Feasible interval of `target` after eliminating `others_order`.

    Returns None when the system is infeasible.  All atoms must be over
    {target} | others; equalities are split first.
    """
    work = _split_eq(atoms)
    for v in others_order:
        lowers, uppers, rest = [], [], []
        for a in work:
            coef = dict(a.coeffs).get(v)
            if coef is None:
                rest.append(a)
            elif coef < 0:
                lowers.append((a, coef))
            else:
                uppers.append((a, coef))
        if node_budget is not None:
            node_budget[0] -= len(lowers) * len(uppers)
            if node_budget[0] < 0:
                raise SearchLimitExceeded
        for la, lc in lowers:
            for ua, uc in uppers:
                coeffs: dict[int, Fraction] = {}
                for vv, c in ua.coeffs:
                    coeffs[vv] = coeffs.get(vv, ZERO) + c / uc
                for vv, c in la.coeffs:
                    coeffs[vv] = coeffs.get(vv, ZERO) + c / -lc
                coeffs.pop(v, None)
                const = ua.const / uc + la.const / -lc
                op = "lt" if (ua.op == "lt" or la.op == "lt") else "le"
                items = tuple(sorted((vv, c) for vv, c in coeffs.items() if c != 0))
                if not items:
                    if const > 0 or (const == 0 and op == "lt"):
                        return None
                    continue
                rest.append(LinAtom(items, const, op))
        work = rest

    iv = FULL
    for a in work:
        if not a.coeffs:
            if a.const > 0 or (a.const == 0 and a.op == "lt"):
                return None
            continue
        assert len(a.coeffs) == 1 and a.coeffs[0][0] == target, "projection left foreign vars"
        iv = interval_add_bound(iv, a.coeffs[0][1], a.const, a.op == "lt")
        if iv.empty():
            return None
    return iv


def evaluate_atom(a: LinAtom, values: dict) -> bool:
    total = a.const
    for v, c in a.coeffs:
        total += c * values.get(v, ZERO)
    if a.op == "le":
        return total <= 0
    if a.op == "lt":
        return total < 0
    return total == 0
