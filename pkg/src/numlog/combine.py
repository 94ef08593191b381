"""Pool of consistent partial programs and minimal-size exact set cover.

Grounded candidates that cover at least one positive example and no
negatives enter the pool (dominated entries are dropped).  ``combine``
searches for the cheapest subset whose union covers every positive, by
branch and bound over the positive example with the fewest covering
entries; the union is re-verified end to end before being returned, since
clause interaction (especially under recursion) can create derivations the
per-entry coverage never saw.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .engine import BackgroundDB, coverage_bits
from .syntax import format_program
from .terms import Program, canonicalize, program_size


@dataclass(frozen=True)
class PoolEntry:
    prog: Program  # canonical
    covered: frozenset  # positive example indices
    size: int
    text: str


@dataclass
class CandidatePool:
    n_pos: int
    n_neg: int
    entries: list = field(default_factory=list)
    union_covered: set = field(default_factory=set)
    changed: bool = False

    def admit(self, prog: Program, db: BackgroundDB, pos, neg, step_budget=None) -> tuple:
        """Re-verify coverage and admit iff >=1 positive and 0 negatives.

        Returns ('admitted', entry) or ('rejected', reason).
        """
        prog = canonicalize(prog)
        kwargs = {} if step_budget is None else {"step_budget": step_budget}
        neg_cov = coverage_bits(prog, db, neg, **kwargs)
        if any(neg_cov):
            return ("rejected", "inconsistent")
        pos_cov = coverage_bits(prog, db, pos, **kwargs)
        covered = frozenset(i for i, c in enumerate(pos_cov) if c)
        if not covered:
            return ("rejected", "covers_none")
        size = program_size(prog)
        for entry in self.entries:
            if covered <= entry.covered and entry.size <= size:
                return ("rejected", "dominated")
        entry = PoolEntry(prog, covered, size, format_program(prog))
        self.entries = [
            e for e in self.entries if not (e.covered <= covered and size <= e.size)
        ] + [entry]
        self.union_covered |= covered
        self.changed = True
        return ("admitted", entry)

    def complete(self) -> bool:
        return len(self.union_covered) == self.n_pos


def _union_program(entries) -> Program:
    clauses = []
    seen = set()
    for e in entries:
        for c in e.prog:
            if c not in seen:
                seen.add(c)
                clauses.append(c)
    return canonicalize(tuple(clauses))


def combine(
    pool: CandidatePool,
    db: BackgroundDB,
    pos,
    neg,
    max_clauses: int | None = None,
    node_limit: int = 200_000,
    step_budget=None,
):
    """Minimal-total-size union covering all positives, or None.

    Returns (program, suboptimal_flag).  Ties break on the canonical
    program text.  Covers failing end-to-end re-verification are skipped.
    """
    universe = frozenset(range(pool.n_pos))
    if pool.union_covered != set(universe):
        return None
    entries = sorted(pool.entries, key=lambda e: (e.size, e.text))

    coverers: dict[int, list] = {i: [] for i in universe}
    for e in entries:
        for i in e.covered:
            coverers[i].append(e)

    best: list | None = None
    best_key = None
    nodes = [node_limit]
    suboptimal = [False]
    banned: set = set()

    def search(chosen, covered, cost):
        nodes[0] -= 1
        if nodes[0] < 0:
            suboptimal[0] = True
            return
        if best_key is not None and cost > best_key[0]:  # ties kept for text order
            return
        if covered == universe:
            consider(list(chosen))
            return
        pivot = min(universe - covered, key=lambda i: (len(coverers[i]), i))
        for e in coverers[pivot]:
            if e in chosen:
                continue
            new_clauses = [c for c in e.prog if not any(c in x.prog for x in chosen)]
            new_cost = cost + sum(c.size for c in new_clauses)
            if best_key is not None and new_cost > best_key[0]:
                continue
            if max_clauses is not None:
                n_clauses = len({c for x in chosen for c in x.prog} | set(e.prog))
                if n_clauses > max_clauses:
                    continue
            chosen.append(e)
            search(chosen, covered | e.covered, new_cost)
            chosen.pop()

    def consider(chosen):
        nonlocal best, best_key
        prog = _union_program(chosen)
        if prog in banned:
            return
        key = (program_size(prog), format_program(prog))
        if best_key is not None and key >= best_key:
            return
        kwargs = {} if step_budget is None else {"step_budget": step_budget}
        if any(coverage_bits(prog, db, neg, **kwargs)):
            banned.add(prog)  # cross-clause interaction broke consistency
            return
        if not all(coverage_bits(prog, db, pos, **kwargs)):
            banned.add(prog)
            return
        best = prog
        best_key = key

    search([], frozenset(), 0)
    if best is None:
        return None
    return best, suboptimal[0]
