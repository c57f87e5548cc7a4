"""Signal temporal logic: parsing, robustness, boolean satisfaction and cost."""

from .formula import (
    Always,
    And,
    BinOp,
    Call,
    Const,
    Eventually,
    Neg,
    Not,
    Or,
    Predicate,
    Signal,
    StlError,
    StlEvaluationError,
    Trace,
    TrueF,
    Until,
    signal_names,
)
from .parser import StlSyntaxError, parse_formula
from .robustness import (
    cost,
    cost_from_robustness,
    eval_boolean,
    eval_robustness,
    robustness_signal,
    window_offsets,
)

__all__ = [
    "Always",
    "And",
    "BinOp",
    "Call",
    "Const",
    "Eventually",
    "Neg",
    "Not",
    "Or",
    "Predicate",
    "Signal",
    "StlError",
    "StlEvaluationError",
    "StlSyntaxError",
    "Trace",
    "TrueF",
    "Until",
    "cost",
    "cost_from_robustness",
    "eval_boolean",
    "eval_robustness",
    "parse_formula",
    "robustness_signal",
    "signal_names",
    "window_offsets",
]
