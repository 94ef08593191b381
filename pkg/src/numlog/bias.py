"""Hypothesis-space declarations: parsing, validation and literal schemas.

A bias file is a sequence of declarations::

    max_vars(6).        max_body(5).        max_clauses(2).
    head_pred(zendo,1).
    body_pred(piece,2).
    type(piece,(state,piece)).
    direction(piece,(in,out)).
    numerical_pred(geq,2).
    type(geq,(real,real)).
    bounds(geq,1,(-10,10)).

Unknown declaration names are rejected.  ``magic_value_type`` lines are
parsed and ignored with a warning (they configure a feature this learner
does not provide).  Argument types default to ``real``; type names ``int``
and ``integer`` select integer-valued numeric variables.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .syntax import ParseError, _Tokens
from .terms import NUMERIC_PREDS

DEFAULT_MAX_CLAUSES = 3
DEFAULT_MAX_NUM_LITS = 2

# operational argument modes of the built-in numerical predicates:
# 'in' must be bound by data, 'ph' is the learnable constant, 'out' is defined
NUMERIC_MODES = {
    "geq": ("in", "ph"),
    "leq": ("in", "ph"),
    "add": ("in", "in", "out"),
    "mult": ("in", "ph", "out"),
}


class BiasError(ValueError):
    """Semantic error in a bias file."""


@dataclass(frozen=True)
class PredDecl:
    name: str
    arity: int
    role: str  # head | body | numerical
    argtypes: tuple
    directions: tuple

    @property
    def key(self):
        return (self.name, self.arity)


@dataclass(frozen=True)
class Schema:
    """One instantiable literal shape for the generator."""

    pred: str
    arity: int
    argtypes: tuple
    modes: tuple  # per-argument: in | out | ph
    kind: str  # regular | numerical
    placeholder_pos: int | None
    bounds: tuple | None  # (Fraction, Fraction) on the placeholder, if any


@dataclass
class BiasSpec:
    head: PredDecl
    body_preds: tuple
    numerical_preds: tuple
    max_vars: int
    max_body: int
    max_clauses: int = DEFAULT_MAX_CLAUSES
    max_num_lits: int = DEFAULT_MAX_NUM_LITS
    bounds: dict = field(default_factory=dict)  # (pred, pos) -> (lo, hi)
    numkinds: dict = field(default_factory=dict)  # type name -> real | int
    warnings: list = field(default_factory=list)

    def __post_init__(self):
        if self.max_num_lits > self.max_body:
            self.max_num_lits = self.max_body

    def numkind(self, type_name: str) -> str:
        return self.numkinds.get(type_name, "real")

    def is_numeric_type(self, type_name: str) -> bool:
        return type_name in ("real", "int", "integer") or type_name in self.numkinds


def _parse_decl_args(toks: _Tokens):
    """Arguments of a declaration: names, numbers or tuples thereof."""
    args = []
    toks.expect("(")
    while True:
        kind, val, line, col = toks.peek()
        if val == "(":
            toks.next()
            items = []
            while toks.peek()[1] != ")":
                k2, v2, l2, c2 = toks.next()
                if k2 == "num":
                    items.append(Fraction(v2))
                elif k2 == "name":
                    items.append(v2)
                else:
                    raise ParseError(f"unexpected token {v2!r} in tuple", l2, c2)
                if toks.peek()[1] == ",":
                    toks.next()
            toks.expect(")")
            args.append(tuple(items))
        elif kind == "num":
            toks.next()
            args.append(Fraction(val))
        elif kind == "name":
            toks.next()
            args.append(val)
        else:
            raise ParseError(f"unexpected token {val!r} in declaration", line, col)
        if toks.peek()[1] == ",":
            toks.next()
            continue
        break
    toks.expect(")")
    toks.expect(".")
    return args


_KNOWN_DECLS = {
    "max_vars",
    "max_body",
    "max_clauses",
    "head_pred",
    "body_pred",
    "numerical_pred",
    "type",
    "direction",
    "bounds",
    "magic_value_type",
}


def parse_bias(text: str) -> BiasSpec:
    toks = _Tokens(text)
    limits: dict[str, int] = {}
    heads: list[tuple[str, int]] = []
    bodies: list[tuple[str, int]] = []
    numericals: list[tuple[str, int]] = []
    types: dict[str, tuple] = {}
    directions: dict[str, tuple] = {}
    bounds: dict[tuple, tuple] = {}
    warnings: list[str] = []

    while toks.peek()[0] != "eof":
        kind, name, line, col = toks.next()
        if kind != "name":
            raise ParseError(f"expected a declaration, found {name!r}", name and line or line, col)
        if name not in _KNOWN_DECLS:
            raise ParseError(f"unknown declaration {name!r}", line, col)
        args = _parse_decl_args(toks)

        def bad(msg: str):
            raise ParseError(f"{name}: {msg}", line, col)

        if name in ("max_vars", "max_body", "max_clauses"):
            if len(args) != 1 or not isinstance(args[0], Fraction) or args[0].denominator != 1:
                bad("expects one integer argument")
            val = int(args[0])
            if val <= 0:
                bad("must be positive")
            limits[name] = val
        elif name in ("head_pred", "body_pred", "numerical_pred"):
            if (
                len(args) != 2
                or not isinstance(args[0], str)
                or not isinstance(args[1], Fraction)
                or args[1].denominator != 1
            ):
                bad("expects (name, arity)")
            entry = (args[0], int(args[1]))
            if name == "head_pred":
                heads.append(entry)
            elif name == "body_pred":
                bodies.append(entry)
            else:
                if NUMERIC_PREDS.get(entry[0], (None,))[0] != entry[1]:
                    menu = ", ".join(f"{p}/{a}" for p, (a, _) in sorted(NUMERIC_PREDS.items()))
                    bad(f"{entry[0]}/{entry[1]} is not a built-in numerical predicate ({menu})")
                numericals.append(entry)
        elif name == "type":
            if len(args) != 2 or not isinstance(args[0], str) or not isinstance(args[1], tuple):
                bad("expects (pred, (t1,...,tn))")
            types[args[0]] = args[1]
        elif name == "direction":
            if len(args) != 2 or not isinstance(args[0], str) or not isinstance(args[1], tuple):
                bad("expects (pred, (d1,...,dn))")
            if any(d not in ("in", "out") for d in args[1]):
                bad("directions must be in/out")
            directions[args[0]] = args[1]
        elif name == "bounds":
            if (
                len(args) != 3
                or not isinstance(args[0], str)
                or not isinstance(args[1], Fraction)
                or not isinstance(args[2], tuple)
                or len(args[2]) != 2
            ):
                bad("expects (pred, position, (low, high))")
            lo, hi = args[2]
            if not isinstance(lo, Fraction) or not isinstance(hi, Fraction) or lo > hi:
                bad("bounds must be a nonempty numeric interval")
            bounds[(args[0], int(args[1]))] = (lo, hi)
        elif name == "magic_value_type":
            warnings.append(f"magic_value_type({args[0]}) ignored: constant-symbol search is not supported")

    if len(heads) != 1:
        raise BiasError(f"expected exactly one head_pred declaration, found {len(heads)}")
    if "max_vars" not in limits or "max_body" not in limits:
        raise BiasError("max_vars and max_body declarations are required")

    declared = {}

    def make_decl(pname: str, arity: int, role: str) -> PredDecl:
        if (pname, arity) in declared:
            raise BiasError(f"duplicate declaration for {pname}/{arity}")
        if pname in types:
            argtypes = types[pname]
            if len(argtypes) != arity:
                raise BiasError(f"type arity mismatch for {pname}/{arity}")
        else:
            argtypes = ("real",) * arity if role == "numerical" else ("thing",) * arity
        if pname in directions:
            dirs = directions[pname]
            if len(dirs) != arity:
                raise BiasError(f"direction arity mismatch for {pname}/{arity}")
        elif role == "head":
            dirs = ("in",) * arity
        else:
            dirs = ("in",) + ("out",) * (arity - 1) if arity else ()
        if role == "numerical":
            for t in argtypes:
                if t not in ("real", "int", "integer"):
                    raise BiasError(f"numerical predicate {pname} requires numeric argument types, got {t!r}")
        decl = PredDecl(pname, arity, role, tuple(argtypes), tuple(dirs))
        declared[(pname, arity)] = decl
        return decl

    head = make_decl(heads[0][0], heads[0][1], "head")
    body_decls = tuple(make_decl(p, a, "body") for p, a in bodies)
    num_decls = tuple(make_decl(p, a, "numerical") for p, a in numericals)

    known_preds = {p for p, _ in heads + bodies + numericals}
    for pname in list(types) + list(directions):
        if pname not in known_preds:
            raise BiasError(f"type/direction declaration for undeclared predicate {pname!r}")
    for (pname, pos), _ in bounds.items():
        info = NUMERIC_PREDS.get(pname)
        if pname not in {p for p, _ in numericals} or info is None:
            raise BiasError(f"bounds declared for non-numerical predicate {pname!r}")
        if not 0 <= pos < info[0]:
            raise BiasError(f"bounds position {pos} out of range for {pname}/{info[0]}")

    numkinds = {"int": "int", "integer": "int", "real": "real"}
    for decl in (head, *body_decls, *num_decls):
        for t in decl.argtypes:
            numkinds.setdefault(t, "int" if t in ("int", "integer") else "real")
    # non-numeric type names carry no numkind
    numkinds = {t: k for t, k in numkinds.items() if t in ("int", "integer", "real")}

    for pname, dirs in directions.items():
        modes = NUMERIC_MODES.get(pname)
        if modes and pname in {p for p, _ in numericals}:
            expected = tuple("out" if m == "ph" else m for m in modes)
            if dirs != expected and dirs != modes:
                warnings.append(
                    f"direction({pname},...) ignored: built-in mode is ({','.join(modes)})"
                )

    return BiasSpec(
        head=head,
        body_preds=body_decls,
        numerical_preds=num_decls,
        max_vars=limits["max_vars"],
        max_body=limits["max_body"],
        max_clauses=limits.get("max_clauses", DEFAULT_MAX_CLAUSES),
        bounds=bounds,
        numkinds=numkinds,
        warnings=warnings,
    )


def literal_schemas(spec: BiasSpec) -> list[Schema]:
    """Body-literal shapes the generator may instantiate, in declaration order."""
    schemas = []
    for decl in spec.body_preds:
        schemas.append(
            Schema(
                pred=decl.name,
                arity=decl.arity,
                argtypes=decl.argtypes,
                modes=decl.directions,
                kind="regular",
                placeholder_pos=None,
                bounds=None,
            )
        )
    for decl in spec.numerical_preds:
        modes = NUMERIC_MODES[decl.name]
        pos = modes.index("ph") if "ph" in modes else None
        schemas.append(
            Schema(
                pred=decl.name,
                arity=decl.arity,
                argtypes=decl.argtypes,
                modes=modes,
                kind="numerical",
                placeholder_pos=pos,
                bounds=spec.bounds.get((decl.name, pos)) if pos is not None else None,
            )
        )
    return schemas


def head_schema(spec: BiasSpec) -> Schema:
    decl = spec.head
    return Schema(
        pred=decl.name,
        arity=decl.arity,
        argtypes=decl.argtypes,
        modes=decl.directions,
        kind="regular",
        placeholder_pos=None,
        bounds=None,
    )


def render_bias(spec: BiasSpec) -> str:
    """Bias text that parses back to an equivalent BiasSpec."""
    lines = [
        f"max_vars({spec.max_vars}).",
        f"max_body({spec.max_body}).",
        f"max_clauses({spec.max_clauses}).",
        "",
        f"head_pred({spec.head.name},{spec.head.arity}).",
    ]
    for decl in spec.body_preds:
        lines.append(f"body_pred({decl.name},{decl.arity}).")
    for decl in spec.numerical_preds:
        lines.append(f"numerical_pred({decl.name},{decl.arity}).")
    lines.append("")
    for decl in (spec.head, *spec.body_preds, *spec.numerical_preds):
        types = ",".join(decl.argtypes)
        if decl.arity == 1:
            types += ","
        lines.append(f"type({decl.name},({types})).")
    for decl in (spec.head, *spec.body_preds, *spec.numerical_preds):
        dirs = ",".join(decl.directions)
        if decl.arity == 1:
            dirs += ","
        lines.append(f"direction({decl.name},({dirs})).")
    for (pred, pos), (lo, hi) in sorted(spec.bounds.items()):
        lines.append(f"bounds({pred},{pos},({lo},{hi})).")
    return "\n".join(lines) + "\n"
