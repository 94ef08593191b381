"""The learning driver: generate, test, constrain, pool, combine.

Candidates stream from the generator in nondecreasing size order.  Pure
relational candidates are tested by direct coverage; candidates carrying
numerical literals run the two-stage test (strip/lift, substitution
tables, coverage-maximizing numeric search) and each grounded solution is
re-verified before entering the pool.  Failures feed the constraint store:

* zero relational coverage        -> specialisation ban
* consistent but incomplete       -> pool admission + specialisation ban
* inconsistent                    -> generalisation ban
* numeric search infeasible       -> numeric specialisation ban
* all numeric solutions partial   -> numeric specialisation ban
* all numeric solutions unsound   -> generalisation ban on non-recursive
  on re-verification                 candidates

Bans from candidates whose positive-example tables were truncated are
suppressed: truncated coverage is only a lower bound, so pruning from it
could discard solutions.  The run stops at the first size-bound proof of
optimality: once a complete consistent program of size k exists, no
candidate of size >= k (nor any union involving one) can improve on it.
"""

from __future__ import annotations

import os
import time
from dataclasses import dataclass, field
from fractions import Fraction

from .bias import BiasSpec
from .combine import CandidatePool, combine
from .engine import (
    DEFAULT_MAX_SUBS,
    DEFAULT_STEP_BUDGET,
    BackgroundDB,
    IllFormedChain,
    coverage_bits,
    collect_substitutions,
    strip_and_lift,
)
from .formula import (
    NonLinearError,
    SearchLimitExceeded,
    build_formula,
    emit_smtlib,
    enumerate_solutions,
)
from .generate import ConstraintStore, Generator
from .lra import DEFAULT_NODE_LIMIT
from .syntax import format_program
from .terms import (
    Clause,
    Literal,
    Cons,
    Program,
    canonicalize,
    program_is_recursive,
    program_num_literals,
    program_size,
)


@dataclass
class LearnSettings:
    timeout: float = 600.0
    max_num_lits: int | None = None  # overrides the bias default
    max_subs: int = DEFAULT_MAX_SUBS
    step_budget: int = DEFAULT_STEP_BUDGET
    node_limit: int = DEFAULT_NODE_LIMIT
    dump_smt: str | None = None
    debug: bool = False


@dataclass
class LearnResult:
    status: str  # solution | no_solution | timeout
    program: Program | None
    size: int | None
    train_pos_covered: int
    train_neg_covered: int
    n_pos: int
    n_neg: int
    stage_seconds: dict
    candidates_tested: int
    candidates_pruned: int
    constraints_added: int
    solver_calls: int
    suboptimal: bool = False

    @property
    def program_text(self) -> str | None:
        return format_program(self.program) if self.program is not None else None

    def to_dict(self) -> dict:
        return {
            "status": self.status,
            "program": self.program_text,
            "size": self.size,
            "train_pos_covered": self.train_pos_covered,
            "train_neg_covered": self.train_neg_covered,
            "n_pos": self.n_pos,
            "n_neg": self.n_neg,
            "stage_seconds": {k: round(v, 6) for k, v in self.stage_seconds.items()},
            "candidates_tested": self.candidates_tested,
            "candidates_pruned": self.candidates_pruned,
            "constraints_added": self.constraints_added,
            "solver_calls": self.solver_calls,
            "suboptimal": self.suboptimal,
        }


class _Stages:
    def __init__(self):
        self.seconds = {
            "generate": 0.0,
            "evaluate": 0.0,
            "solve": 0.0,
            "constrain": 0.0,
            "combine": 0.0,
        }

    class _Timer:
        def __init__(self, stages, name):
            self.stages = stages
            self.name = name

        def __enter__(self):
            self.t0 = time.perf_counter()

        def __exit__(self, *exc):
            self.stages.seconds[self.name] += time.perf_counter() - self.t0

    def __call__(self, name):
        return self._Timer(self, name)


def _ground(prog: Program, assignment: dict) -> Program:
    def sub(term):
        if type(term) is int:
            return assignment.get(term, term)
        if type(term) is Cons:
            return Cons(sub(term.head), sub(term.tail))
        return term

    clauses = []
    for c in prog:
        head = Literal(c.head.pred, tuple(sub(a) for a in c.head.args))
        body = tuple(Literal(l.pred, tuple(sub(a) for a in l.args)) for l in c.body)
        clauses.append(Clause(head, body))
    return canonicalize(tuple(clauses))


def learn(
    spec: BiasSpec,
    db: BackgroundDB,
    pos: list,
    neg: list,
    settings: LearnSettings | None = None,
) -> LearnResult:
    settings = settings or LearnSettings()
    if settings.max_num_lits is not None:
        spec.max_num_lits = min(settings.max_num_lits, spec.max_body)

    stages = _Stages()
    deadline = time.monotonic() + settings.timeout
    store = ConstraintStore()
    gen = Generator(spec, store)
    pool = CandidatePool(n_pos=len(pos), n_neg=len(neg))
    examples = list(pos) + list(neg)
    n_pos = len(pos)
    table_cache: dict = {}

    best_prog: Program | None = None
    best_size: int | None = None
    suboptimal = False
    tested = 0
    solver_calls = 0
    dumped = 0
    timed_out = False

    def consider_solution(prog: Program):
        nonlocal best_prog, best_size
        size = program_size(prog)
        if best_size is None or size < best_size or (
            size == best_size and format_program(prog) < format_program(best_prog)
        ):
            best_prog, best_size = prog, size
            gen.set_max_size(size - 1)

    def constrain(kind: str, prog: Program):
        with stages("constrain"):
            store.add(kind, prog)

    def admit(prog: Program) -> str:
        verdict, payload = pool.admit(
            prog, db, pos, neg, step_budget=settings.step_budget
        )
        if verdict == "admitted" and len(payload.covered) == n_pos:
            consider_solution(payload.prog)
        return verdict

    while True:
        if time.monotonic() > deadline:
            timed_out = True
            break
        with stages("generate"):
            prog = gen.next_candidate()
        if prog is None:
            break
        if best_size is not None and program_size(prog) >= best_size:
            break
        tested += 1

        if program_num_literals(prog) == 0:
            with stages("evaluate"):
                neg_cov = coverage_bits(prog, db, neg, settings.step_budget)
                pos_cov = coverage_bits(prog, db, pos, settings.step_budget)
            tp = sum(pos_cov)
            inconsistent = any(neg_cov)
            if not inconsistent and tp == n_pos:
                consider_solution(prog)
                continue
            if tp == 0:
                constrain("spec", prog)
            if inconsistent:
                constrain("gen", prog)
            else:
                constrain("spec", prog)
                if tp > 0:
                    admit(prog)
                    if attempt_combine(
                        pool, db, pos, neg, spec, stages, settings, consider_solution
                    ):
                        suboptimal = True
            continue

        # numeric candidate
        try:
            with stages("evaluate"):
                units = strip_and_lift(prog)
                table = collect_substitutions(
                    units,
                    db,
                    examples,
                    step_budget=settings.step_budget,
                    max_subs=settings.max_subs,
                    cache=table_cache,
                )
        except IllFormedChain:
            continue

        pos_truncated = any(
            table.budget_exceeded[i] or table.cap_hit[i] for i in range(n_pos)
        )
        try:
            with stages("solve"):
                formula = build_formula(table, n_pos, units, spec, prog)
                if settings.dump_smt:
                    os.makedirs(settings.dump_smt, exist_ok=True)
                    path = os.path.join(settings.dump_smt, f"candidate_{dumped:06d}.smt2")
                    header = "".join(
                        f"; {line}\n" for line in format_program(prog).splitlines()
                    )
                    with open(path, "w", encoding="utf-8") as fh:
                        fh.write(header)
                        fh.write(emit_smtlib(formula))
                    dumped += 1
                solutions = enumerate_solutions(formula, node_limit=settings.node_limit)
                solver_calls += 1
        except NonLinearError:
            continue
        except SearchLimitExceeded:
            continue  # resource exhaustion is candidate failure, no constraint

        if not solutions:
            relational_dead = all(
                not table.tuples[ui][i] for ui in range(len(units)) for i in range(n_pos)
            )
            if relational_dead:
                constrain("spec", prog)
            elif not pos_truncated:
                constrain("numeric_spec", prog)
            continue

        any_complete = False
        any_partial = False
        any_unsound = False
        for sol in solutions:
            grounded = _ground(prog, sol.assignment)
            verdict = admit(grounded)
            if verdict == "inconsistent":
                any_unsound = True
            else:
                any_partial = True
                if len(sol.covered) == n_pos:
                    any_complete = True
        if any_partial:
            if attempt_combine(pool, db, pos, neg, spec, stages, settings, consider_solution):
                suboptimal = True
        if not any_complete and not pos_truncated:
            if any_partial and not any_unsound:
                constrain("numeric_spec", prog)  # every value choice stays incomplete
            elif any_unsound and not any_partial:
                constrain("gen_nonrec", prog)
            # mixed outcomes prune nothing

    stage_seconds = stages.seconds
    if best_prog is not None:
        pos_cov = coverage_bits(best_prog, db, pos, settings.step_budget)
        neg_cov = coverage_bits(best_prog, db, neg, settings.step_budget)
        return LearnResult(
            status="solution",
            program=best_prog,
            size=best_size,
            train_pos_covered=sum(pos_cov),
            train_neg_covered=sum(neg_cov),
            n_pos=n_pos,
            n_neg=len(neg),
            stage_seconds=stage_seconds,
            candidates_tested=tested,
            candidates_pruned=len(gen.state.emitted) - gen._emitted_total,
            constraints_added=len(store),
            solver_calls=solver_calls,
            suboptimal=suboptimal or timed_out,
        )
    return LearnResult(
        status="timeout" if timed_out else "no_solution",
        program=None,
        size=None,
        train_pos_covered=0,
        train_neg_covered=0,
        n_pos=n_pos,
        n_neg=len(neg),
        stage_seconds=stage_seconds,
        candidates_tested=tested,
        candidates_pruned=len(gen.state.emitted) - gen._emitted_total,
        constraints_added=len(store),
        solver_calls=solver_calls,
    )


def attempt_combine(pool, db, pos, neg, spec, stages, settings, consider_solution):
    if not pool.changed or not pool.complete():
        return False
    pool.changed = False
    with stages("combine"):
        got = combine(
            pool,
            db,
            pos,
            neg,
            max_clauses=spec.max_clauses,
            step_budget=settings.step_budget,
        )
    if got is None:
        return False
    prog, sub = got
    consider_solution(prog)
    return sub
