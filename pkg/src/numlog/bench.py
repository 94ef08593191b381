"""Randomized benchmark task generation and trial running.

Each family draws a hidden target program with fresh numeric constants,
samples disjoint balanced train/test example sets labeled by executing the
target through the evaluator, and writes the task as bias/facts/examples
files.  A trial learns from the files and reports train/test accuracy plus
stage timings as JSON; a suite aggregates mean and standard error per
family.
"""

from __future__ import annotations

import hashlib
import itertools
import json
import math
import os
import time
from dataclasses import dataclass, field
from fractions import Fraction
from random import Random

from .bias import parse_bias
from .engine import BackgroundDB, CompiledProgram, covers
from .learn import LearnSettings, LearnResult, learn
from .syntax import format_literal, format_number, format_program, parse_examples, parse_program
from .terms import Literal, Program, mklist, program_size

FAMILIES = [
    "interval",
    "halfplane",
    "zendo1",
    "zendo2",
    "zendo3",
    "zendo4",
    "pharma1",
    "pharma2",
    "pharma3",
    "pharma4",
    "member_between",
    "last_leq",
    "next_geq",
]

_SYNTH = ("member_between", "last_leq", "next_geq")


@dataclass
class TaskSpec:
    family: str
    seed: int
    n_pos_train: int | None = None
    n_neg_train: int | None = None
    n_test: int = 1000

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown task family {self.family!r}")
        default = 10 if self.family in _SYNTH else 30
        if self.n_pos_train is None:
            self.n_pos_train = default
        if self.n_neg_train is None:
            self.n_neg_train = default
        if self.n_pos_train < 1:
            raise ValueError("at least one positive training example is required")

    def digest(self) -> dict:
        return {
            "family": self.family,
            "seed": self.seed,
            "n_pos_train": self.n_pos_train,
            "n_neg_train": self.n_neg_train,
            "n_test": self.n_test,
        }


@dataclass
class GeneratedTask:
    spec: TaskSpec
    bias_text: str
    facts_text: str
    train_text: str
    test_text: str
    target: Program
    max_num_lits: int = 2


def _rnd2(rng: Random, lo, hi) -> Fraction:
    return Fraction(round(rng.uniform(float(lo), float(hi)), 2)).limit_denominator(100)


def _fmt(x: Fraction) -> str:
    return format_number(x)


# ---------------------------------------------------------------------------
# family generators: each returns (bias, target_text, structure sampler)


_NUMERIC_DECLS = """numerical_pred(geq,2).
numerical_pred(leq,2).
numerical_pred(add,3).
numerical_pred(mult,3).
type(geq,({t},{t})).
type(leq,({t},{t})).
type(add,({t},{t},{t})).
type(mult,({t},{t},{t})).
direction(geq,(in,out)).
direction(leq,(in,out)).
direction(add,(in,in,out)).
direction(mult,(in,out,in)).
"""


def _gen_interval(spec: TaskSpec, rng: Random) -> GeneratedTask:
    lo = _rnd2(rng, 1000, 6000)
    hi = lo + _rnd2(rng, 800, 3000)
    target = parse_program(f"interval(A) :- geq(A,{_fmt(lo)}),leq(A,{_fmt(hi)}).")
    bias = (
        "max_vars(3).\nmax_body(3).\nmax_clauses(1).\n\n"
        "head_pred(interval,1).\ntype(interval,(real,)).\ndirection(interval,(in,)).\n\n"
        + _NUMERIC_DECLS.format(t="real")
        + "bounds(geq,1,(0,10000)).\nbounds(leq,1,(0,10000)).\n"
        "bounds(mult,1,(0,10000)).\n"
    )

    def sample(want_pos: bool):
        if want_pos:
            x = _rnd2(rng, lo, hi)
        else:
            x = _rnd2(rng, 0, 10000)
        atom = Literal("interval", (Fraction(x),))
        return atom, []

    return _finish(spec, bias, target, sample, rng)


def _gen_halfplane(spec: TaskSpec, rng: Random) -> GeneratedTask:
    slope = _rnd2(rng, -4, 4)
    if abs(slope) < Fraction(1, 2):
        slope += Fraction(1)
    offset = _rnd2(rng, -6, 6)
    target = parse_program(
        f"halfplane(A,B) :- mult(A,{_fmt(slope)},C),add(B,C,D),leq(D,{_fmt(offset)})."
    )
    bias = (
        "max_vars(4).\nmax_body(3).\nmax_clauses(1).\n\n"
        "head_pred(halfplane,2).\ntype(halfplane,(real,real)).\ndirection(halfplane,(in,in)).\n\n"
        + _NUMERIC_DECLS.format(t="real")
        + "bounds(geq,1,(-10,10)).\nbounds(leq,1,(-10,10)).\nbounds(mult,1,(-10,10)).\n"
    )

    def sample(want_pos: bool):
        x = _rnd2(rng, -10, 10)
        y = _rnd2(rng, -10, 10)
        atom = Literal("halfplane", (Fraction(x), Fraction(y)))
        return atom, []

    task = _finish(spec, bias, target, sample, rng)
    task.max_num_lits = 3
    return task


_ZENDO_BIAS = (
    "max_vars(6).\nmax_body(5).\nmax_clauses({mc}).\n\n"
    "head_pred(zendo,1).\n"
    "body_pred(piece,2).\nbody_pred(color,2).\nbody_pred(size,2).\n"
    "body_pred(position,3).\nbody_pred(rotation,2).\nbody_pred(orientation,2).\n"
    "body_pred(contact,2).\n\n"
    "type(zendo,(state,)).\ntype(piece,(state,piece)).\ntype(color,(piece,color)).\n"
    "type(size,(piece,real)).\ntype(position,(piece,real,real)).\ntype(rotation,(piece,real)).\n"
    "type(orientation,(piece,orientation)).\ntype(contact,(piece,piece)).\n\n"
    "direction(zendo,(in,)).\ndirection(piece,(in,out)).\ndirection(color,(in,out)).\n"
    "direction(size,(in,out)).\ndirection(position,(in,out,out)).\ndirection(rotation,(in,out)).\n"
    "direction(orientation,(in,out)).\ndirection(contact,(in,out)).\n\n"
    "magic_value_type(color).\nmagic_value_type(orientation).\n\n"
    + _NUMERIC_DECLS.format(t="real")
    + "bounds(geq,1,(-10,10)).\nbounds(leq,1,(-10,10)).\nbounds(mult,1,(-10,10)).\nbounds(add,1,(-10,10)).\n"
)

_COLORS = ("red", "blue", "green")
_ORIENTATIONS = ("upright", "lhs", "rhs", "strange")


def _zendo_structure(rng: Random, sid: str):
    n = rng.randint(1, 5)
    pieces = [f"{sid}p{j}" for j in range(1, n + 1)]
    facts = []
    for p in pieces:
        facts.append(Literal("piece", (sid, p)))
        facts.append(Literal("color", (p, rng.choice(_COLORS))))
        facts.append(Literal("size", (p, _rnd2(rng, 0, 10))))
        facts.append(
            Literal("position", (p, _rnd2(rng, 0, 10), _rnd2(rng, 0, 10)))
        )
        facts.append(Literal("rotation", (p, _rnd2(rng, 0, 7))))
        facts.append(Literal("orientation", (p, rng.choice(_ORIENTATIONS))))
    for i in range(len(pieces)):
        for j in range(i + 1, len(pieces)):
            if rng.random() < 0.4:
                facts.append(Literal("contact", (pieces[i], pieces[j])))
                facts.append(Literal("contact", (pieces[j], pieces[i])))
    return facts


def _gen_zendo(spec: TaskSpec, rng: Random) -> GeneratedTask:
    variant = spec.family
    if variant == "zendo1":
        c = _rnd2(rng, 4, 8)
        target_text = f"zendo(A) :- piece(A,B),contact(B,C),size(C,D),geq(D,{_fmt(c)})."
        mc = 1
    elif variant == "zendo2":
        c1 = _rnd2(rng, 4, 9)
        c2 = _rnd2(rng, 1, 4)
        c3 = c2 + _rnd2(rng, Fraction(1, 2), 2)
        target_text = (
            f"zendo(A) :- piece(A,B),position(B,C,D),add(C,D,E),leq(E,{_fmt(c1)}).\n"
            f"zendo(A) :- piece(A,B),rotation(B,C),leq(C,{_fmt(c3)}),geq(C,{_fmt(c2)})."
        )
        mc = 2
    elif variant == "zendo3":
        c1 = _rnd2(rng, 2, 5)
        c2 = _rnd2(rng, 2, 5)
        c3 = _rnd2(rng, 2, 5)
        c4 = c3 + _rnd2(rng, 1, 4)
        target_text = (
            f"zendo(A) :- piece(A,B),position(B,C,D),leq(C,{_fmt(c1)}),leq(D,{_fmt(c2)}).\n"
            f"zendo(A) :- piece(A,B),color(B,blue),size(B,C),leq(C,{_fmt(c4)}),geq(C,{_fmt(c3)})."
        )
        mc = 2
    else:  # zendo4
        c1 = _rnd2(rng, 1, 3)
        c2 = c1 + _rnd2(rng, 2, 4)
        c3 = _rnd2(rng, 2, 5)
        c4 = _rnd2(rng, 4, 8)
        c5 = _rnd2(rng, 1, 3)
        target_text = (
            f"zendo(A) :- piece(A,B),size(B,C),geq(C,{_fmt(c1)}),leq(C,{_fmt(c2)}).\n"
            f"zendo(A) :- piece(A,B),position(B,C,D),leq(C,{_fmt(c3)}),leq(D,{_fmt(c4)}).\n"
            f"zendo(A) :- piece(A,B),contact(B,C),rotation(C,D),leq(D,{_fmt(c5)})."
        )
        mc = 3
    target = parse_program(target_text)
    bias = _ZENDO_BIAS.format(mc=mc)

    counter = [0]

    def sample(want_pos: bool):
        counter[0] += 1
        sid = f"s{counter[0]}"
        return Literal("zendo", (sid,)), _zendo_structure(rng, sid)

    return _finish(spec, bias, target, sample, rng)


_PHARMA_BIAS = (
    "max_vars(5).\nmax_body(4).\nmax_clauses({mc}).\n\n"
    "head_pred(pharma,1).\n"
    "body_pred(zincsite,2).\nbody_pred(hacc,2).\nbody_pred(hdonor,2).\n"
    "body_pred(dist,4).\nbody_pred(bond,3).\n\n"
    "type(pharma,(mol,)).\ntype(zincsite,(mol,site)).\ntype(hacc,(mol,site)).\n"
    "type(hdonor,(mol,site)).\ntype(dist,(mol,site,site,real)).\ntype(bond,(site,site,bondtype)).\n\n"
    "direction(pharma,(in,)).\ndirection(zincsite,(in,out)).\ndirection(hacc,(in,out)).\n"
    "direction(hdonor,(in,out)).\ndirection(dist,(in,in,in,out)).\ndirection(bond,(in,out,out)).\n\n"
    "magic_value_type(bondtype).\n\n"
    + _NUMERIC_DECLS.format(t="real")
    + "bounds(geq,1,(0,10)).\nbounds(leq,1,(0,10)).\n"
)


def _pharma_structure(rng: Random, mid: str):
    facts = []
    sites = []
    for kind, count in (("zincsite", rng.randint(1, 2)), ("hacc", rng.randint(1, 3)), ("hdonor", rng.randint(0, 2))):
        for j in range(count):
            site = f"{mid}{kind[0]}{j}"
            pos = (rng.uniform(0, 6), rng.uniform(0, 6), rng.uniform(0, 6))
            facts.append(Literal(kind, (mid, site)))
            sites.append((site, pos))
    for (s1, p1), (s2, p2) in itertools.combinations(sites, 2):
        d = math.dist(p1, p2)
        d = Fraction(round(d, 2)).limit_denominator(100)
        facts.append(Literal("dist", (mid, s1, s2, d)))
        facts.append(Literal("dist", (mid, s2, s1, d)))
        if rng.random() < 0.25:
            facts.append(Literal("bond", (s1, s2, rng.choice(("du", "sg", "db")))))
    return facts


def _gen_pharma(spec: TaskSpec, rng: Random) -> GeneratedTask:
    variant = spec.family
    if variant == "pharma1":
        c = _rnd2(rng, 3, 6)
        target_text = f"pharma(A) :- zincsite(A,B),hacc(A,C),dist(A,B,C,D),leq(D,{_fmt(c)})."
        mc = 1
    elif variant == "pharma2":
        c1 = _rnd2(rng, 2, 5)
        c2 = _rnd2(rng, 4, 7)
        target_text = (
            f"pharma(A) :- zincsite(A,B),hacc(A,C),dist(A,B,C,D),leq(D,{_fmt(c1)}).\n"
            f"pharma(A) :- hacc(A,B),hacc(A,C),dist(A,B,C,D),geq(D,{_fmt(c2)})."
        )
        mc = 2
    elif variant == "pharma3":
        c1 = _rnd2(rng, 3, 6)
        c2 = _rnd2(rng, 1, 2)
        c3 = _rnd2(rng, 2, 4)
        target_text = (
            f"pharma(A) :- zincsite(A,B),hacc(A,C),dist(A,B,C,D),leq(D,{_fmt(c1)}),geq(D,{_fmt(c2)}).\n"
            f"pharma(A) :- hacc(A,B),hacc(A,C),bond(B,C,du),dist(A,B,C,D),leq(D,{_fmt(c3)})."
        )
        mc = 2
    else:  # pharma4
        c1 = _rnd2(rng, 3, 6)
        c2 = _rnd2(rng, 1, 2)
        c3 = _rnd2(rng, 4, 7)
        c4 = _rnd2(rng, 2, 4)
        target_text = (
            f"pharma(A) :- zincsite(A,B),hacc(A,C),dist(A,B,C,D),leq(D,{_fmt(c1)}),geq(D,{_fmt(c2)}).\n"
            f"pharma(A) :- hacc(A,B),hacc(A,C),dist(A,B,C,D),geq(D,{_fmt(c3)}).\n"
            f"pharma(A) :- zincsite(A,B),zincsite(A,C),bond(B,C,du),dist(A,B,C,D),leq(D,{_fmt(c4)})."
        )
        mc = 3
    target = parse_program(target_text)
    bias = _PHARMA_BIAS.format(mc=mc)

    counter = [0]

    def sample(want_pos: bool):
        counter[0] += 1
        mid = f"m{counter[0]}"
        return Literal("pharma", (mid,)), _pharma_structure(rng, mid)

    return _finish(spec, bias, target, sample, rng)


_SYNTH_BIAS = (
    "max_vars(4).\nmax_body(4).\nmax_clauses(2).\n\n"
    "head_pred(f,1).\n"
    "body_pred(head,2).\nbody_pred(tail,2).\nbody_pred(empty,1).\n\n"
    "type(f,(list,)).\ntype(head,(list,int)).\ntype(tail,(list,list)).\ntype(empty,(list,)).\n\n"
    "direction(f,(in,)).\ndirection(head,(in,out)).\ndirection(tail,(in,out)).\ndirection(empty,(in,)).\n\n"
    + _NUMERIC_DECLS.format(t="int")
    + "bounds(geq,1,(0,100)).\nbounds(leq,1,(0,100)).\n"
)


def _gen_synthesis(spec: TaskSpec, rng: Random) -> GeneratedTask:
    variant = spec.family
    if variant == "member_between":
        lo = rng.randint(20, 60)
        hi = lo + rng.randint(5, 20)
        target_text = (
            f"f(A) :- head(A,B),leq(B,{hi}),geq(B,{lo}).\n"
            "f(A) :- tail(A,B),f(B)."
        )
    elif variant == "last_leq":
        c = rng.randint(15, 80)
        target_text = (
            f"f(A) :- tail(A,B),empty(B),head(A,C),leq(C,{c}).\n"
            "f(A) :- tail(A,B),f(B)."
        )
    else:  # next_geq
        k = rng.randint(10, 40)
        c = rng.randint(20, 70)
        target_text = (
            f"f(A) :- head(A,{k}),tail(A,B),head(B,C),geq(C,{c}).\n"
            "f(A) :- tail(A,B),f(B)."
        )
    target = parse_program(target_text)

    def sample(want_pos: bool):
        n = rng.randint(1, 8)
        xs = [Fraction(rng.randint(0, 100)) for _ in range(n)]
        if variant == "next_geq" and want_pos and rng.random() < 0.8:
            # plant the trigger pair, otherwise positives are vanishingly rare
            i = rng.randrange(max(1, n - 1))
            xs[i] = Fraction(k)
            if i + 1 < n:
                xs[i + 1] = Fraction(rng.randint(c, 100))
        return Literal("f", (mklist(xs),)), []

    k = c = 0
    if variant == "next_geq":
        k = int(target[0].body[0].args[1])
        c = int(target[0].body[3].args[1])
    return _finish(spec, _SYNTH_BIAS, target, sample, rng)


def _finish(spec: TaskSpec, bias_text: str, target: Program, sample, rng: Random) -> GeneratedTask:
    """Rejection-sample balanced, disjoint train and test sets labeled by
    executing the hidden target."""
    compiled = CompiledProgram(target)
    db = BackgroundDB()
    pos_train: list = []
    neg_train: list = []
    pos_test: list = []
    neg_test: list = []
    seen_atoms: set = set()
    all_facts: list = []

    n_pos_test = spec.n_test // 2
    n_neg_test = spec.n_test - n_pos_test
    quotas = [
        (pos_train, neg_train, spec.n_pos_train, spec.n_neg_train),
        (pos_test, neg_test, n_pos_test, n_neg_test),
    ]
    attempts = 0
    for pos_list, neg_list, need_pos, need_neg in quotas:
        while len(pos_list) < need_pos or len(neg_list) < need_neg:
            attempts += 1
            if attempts > 400 * (spec.n_test + spec.n_pos_train + spec.n_neg_train):
                raise RuntimeError(
                    f"sampling failure for {spec.family} seed {spec.seed}: "
                    "degenerate target constants"
                )
            want_pos = len(pos_list) < need_pos
            atom, facts = sample(want_pos)
            if atom in seen_atoms:
                continue
            trial_db = BackgroundDB(facts) if facts else db
            label = covers(target, trial_db, atom, compiled=compiled) is True
            if label and len(pos_list) < need_pos:
                pos_list.append(atom)
            elif not label and len(neg_list) < need_neg:
                neg_list.append(atom)
            else:
                continue
            seen_atoms.add(atom)
            all_facts.extend(facts)

    facts_text = "".join(format_literal(f) + ".\n" for f in all_facts)
    train_text = "".join(f"pos({format_literal(a)}).\n" for a in pos_train) + "".join(
        f"neg({format_literal(a)}).\n" for a in neg_train
    )
    test_text = "".join(f"pos({format_literal(a)}).\n" for a in pos_test) + "".join(
        f"neg({format_literal(a)}).\n" for a in neg_test
    )
    return GeneratedTask(
        spec=spec,
        bias_text=bias_text,
        facts_text=facts_text,
        train_text=train_text,
        test_text=test_text,
        target=target,
    )


_GENERATORS = {
    "interval": _gen_interval,
    "halfplane": _gen_halfplane,
    "zendo1": _gen_zendo,
    "zendo2": _gen_zendo,
    "zendo3": _gen_zendo,
    "zendo4": _gen_zendo,
    "pharma1": _gen_pharma,
    "pharma2": _gen_pharma,
    "pharma3": _gen_pharma,
    "pharma4": _gen_pharma,
    "member_between": _gen_synthesis,
    "last_leq": _gen_synthesis,
    "next_geq": _gen_synthesis,
}


def generate_task(spec: TaskSpec) -> GeneratedTask:
    """Deterministic task instance: same spec, byte-identical files."""
    for reseed in range(5):
        # process-independent seed derivation (hash() is salted per run)
        digest = hashlib.sha256(
            f"{spec.family}:{spec.seed}:{reseed}".encode()
        ).digest()
        rng = Random(int.from_bytes(digest[:8], "big"))
        try:
            return _GENERATORS[spec.family](spec, rng)
        except RuntimeError:
            continue
    raise RuntimeError(f"could not generate {spec.family} task for seed {spec.seed}")


def write_task(task: GeneratedTask, out_dir: str) -> dict:
    path = os.path.join(out_dir, task.spec.family, str(task.spec.seed))
    os.makedirs(path, exist_ok=True)
    files = {
        "bias.pl": task.bias_text,
        "bk.pl": task.facts_text,
        "exs.pl": task.train_text,
        "exs_test.pl": task.test_text,
        "target.pl": format_program(task.target) + "\n",
    }
    for name, text in files.items():
        with open(os.path.join(path, name), "w", encoding="utf-8") as fh:
            fh.write(text)
    return {"dir": path, "files": sorted(files)}


@dataclass
class RunReport:
    task: dict
    status: str
    program: str | None
    size: int | None
    train_accuracy: float
    test_accuracy: float
    seconds: float
    stage_seconds: dict
    candidates_tested: int
    constraints_added: int
    solver_calls: int
    metadata: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "task": self.task,
            "status": self.status,
            "program": self.program,
            "size": self.size,
            "train_accuracy": self.train_accuracy,
            "test_accuracy": self.test_accuracy,
            "seconds": round(self.seconds, 3),
            "stage_seconds": {k: round(v, 3) for k, v in self.stage_seconds.items()},
            "candidates_tested": self.candidates_tested,
            "constraints_added": self.constraints_added,
            "solver_calls": self.solver_calls,
            "metadata": self.metadata,
        }


def accuracy(prog: Program | None, db: BackgroundDB, pos, neg) -> float:
    """(true positives + true negatives) / all; no program predicts nothing."""
    if not pos and not neg:
        return 1.0
    if prog is None:
        return len(neg) / (len(pos) + len(neg))
    compiled = CompiledProgram(prog)
    correct = sum(1 for e in pos if covers(prog, db, e, compiled=compiled) is True)
    correct += sum(1 for e in neg if covers(prog, db, e, compiled=compiled) is not True)
    return correct / (len(pos) + len(neg))


def run_trial(spec: TaskSpec, settings: LearnSettings | None = None, out_dir: str | None = None) -> RunReport:
    task = generate_task(spec)
    if out_dir:
        write_task(task, out_dir)
    settings = settings or LearnSettings()
    if settings.max_num_lits is None and task.max_num_lits != 2:
        settings.max_num_lits = task.max_num_lits

    bias = parse_bias(task.bias_text)
    db = BackgroundDB.from_text(task.facts_text)
    pos, neg = parse_examples(task.train_text)
    pos_t, neg_t = parse_examples(task.test_text)

    t0 = time.perf_counter()
    result = learn(bias, db, pos, neg, settings)
    seconds = time.perf_counter() - t0

    train_acc = accuracy(result.program, db, pos, neg)
    test_acc = accuracy(result.program, db, pos_t, neg_t)
    report = RunReport(
        task=spec.digest(),
        status=result.status,
        program=result.program_text,
        size=result.size,
        train_accuracy=train_acc,
        test_accuracy=test_acc,
        seconds=seconds,
        stage_seconds=result.stage_seconds,
        candidates_tested=result.candidates_tested,
        constraints_added=result.constraints_added,
        solver_calls=result.solver_calls,
        metadata={
            "target": format_program(task.target),
            "target_size": program_size(task.target),
            "max_num_lits": settings.max_num_lits or 2,
            "timeout": settings.timeout,
        },
    )
    if out_dir:
        path = os.path.join(out_dir, spec.family, str(spec.seed), "report.json")
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(report.to_dict(), fh, indent=2)
            fh.write("\n")
    return report


def run_suite(
    specs: list,
    trials: int,
    settings: LearnSettings | None = None,
    out_dir: str | None = None,
    progress=None,
) -> dict:
    """Per-family mean and standard error of accuracy and learning time."""
    by_family: dict[str, list] = {}
    reports = []
    for spec in specs:
        for t in range(trials):
            trial_spec = TaskSpec(
                family=spec.family,
                seed=spec.seed + t,
                n_pos_train=spec.n_pos_train,
                n_neg_train=spec.n_neg_train,
                n_test=spec.n_test,
            )
            trial_settings = LearnSettings(**vars(settings)) if settings else LearnSettings()
            report = run_trial(trial_spec, trial_settings, out_dir)
            reports.append(report)
            by_family.setdefault(spec.family, []).append(report)
            if progress:
                progress(report)

    rows = []
    for family in sorted(by_family, key=FAMILIES.index):
        rs = by_family[family]
        accs = [r.test_accuracy for r in rs]
        times = [r.seconds for r in rs]
        rows.append(
            {
                "family": family,
                "trials": len(rs),
                "accuracy_mean": _mean(accs),
                "accuracy_se": _stderr(accs),
                "time_mean": _mean(times),
                "time_se": _stderr(times),
                "solved": sum(1 for r in rs if r.status == "solution"),
            }
        )
    suite = {"rows": rows, "reports": [r.to_dict() for r in reports]}
    if out_dir:
        os.makedirs(out_dir, exist_ok=True)
        with open(os.path.join(out_dir, "suite.json"), "w", encoding="utf-8") as fh:
            json.dump(suite, fh, indent=2)
            fh.write("\n")
        with open(os.path.join(out_dir, "suite.csv"), "w", encoding="utf-8") as fh:
            fh.write("family,trials,accuracy_mean,accuracy_se,time_mean,time_se,solved\n")
            for row in rows:
                fh.write(
                    f"{row['family']},{row['trials']},{row['accuracy_mean']:.4f},"
                    f"{row['accuracy_se']:.4f},{row['time_mean']:.3f},{row['time_se']:.3f},"
                    f"{row['solved']}\n"
                )
    return suite


def _mean(xs):
    return sum(xs) / len(xs) if xs else 0.0


def _stderr(xs):
    if len(xs) < 2:
        return 0.0
    m = _mean(xs)
    var = sum((x - m) ** 2 for x in xs) / (len(xs) - 1)
    return math.sqrt(var / len(xs))
