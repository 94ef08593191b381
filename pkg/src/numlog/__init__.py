"""Learning definite logic programs with numerical thresholds from examples."""

from .terms import (
    NIL,
    Clause,
    Cons,
    Literal,
    Program,
    canonicalize,
    mklist,
    program_size,
    theta_subsumes,
)
from .syntax import (
    ParseError,
    format_clause,
    format_program,
    parse_atom,
    parse_clause,
    parse_examples,
    parse_program,
)
from .bias import BiasSpec, BiasError, literal_schemas, parse_bias
from .engine import BackgroundDB, collect_substitutions, covers, strip_and_lift
from .formula import (
    NumericFormula,
    NumericSolution,
    build_formula,
    emit_smtlib,
    enumerate_solutions,
    solve_max_coverage,
)
from .lra import check_feasible

__version__ = "0.1.0"
