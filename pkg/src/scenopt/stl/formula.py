"""Signal traces and the STL abstract syntax tree.

Formulas are immutable trees of frozen dataclasses. Predicates wrap an
arithmetic expression ``expr`` and mean ``expr > 0`` (or ``expr >= 0``, which
has the same robustness). Timed operators carry an interval ``[a, b]`` in
seconds relative to the evaluation time; ``b = inf`` marks an untimed
operator whose window runs to the end of the trace.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Union

import numpy as np


class StlError(Exception):
    """Base class for STL parsing and evaluation errors."""


class StlEvaluationError(StlError):
    pass


@dataclass(frozen=True, eq=False)
class Trace:
    """Uniformly sampled record of named real-valued signals."""

    dt: float
    start_time: float
    signals: Mapping[str, np.ndarray]

    def __post_init__(self):
        if not (self.dt > 0 and math.isfinite(self.dt)):
            raise ValueError(f"dt must be positive and finite, got {self.dt}")
        if not math.isfinite(self.start_time):
            raise ValueError("start_time must be finite")
        if not self.signals:
            raise ValueError("trace needs at least one signal")
        arrays = {}
        length = None
        for name, values in self.signals.items():
            arr = np.array(values, dtype=float)
            if arr.ndim != 1 or arr.size == 0:
                raise ValueError(f"signal {name!r} must be a non-empty 1-D sequence")
            if length is None:
                length = arr.size
            elif arr.size != length:
                raise ValueError("all signals must have the same length")
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"signal {name!r} contains non-finite values")
            arr.setflags(write=False)
            arrays[name] = arr
        object.__setattr__(self, "signals", arrays)

    def __len__(self) -> int:
        return next(iter(self.signals.values())).size

    @property
    def end_time(self) -> float:
        return self.start_time + (len(self) - 1) * self.dt

    @property
    def times(self) -> np.ndarray:
        return self.start_time + self.dt * np.arange(len(self))

    def __eq__(self, other):
        if not isinstance(other, Trace):
            return NotImplemented
        return (
            self.dt == other.dt
            and self.start_time == other.start_time
            and self.signals.keys() == other.signals.keys()
            and all(np.array_equal(v, other.signals[k]) for k, v in self.signals.items())
        )

    __hash__ = None


# --- arithmetic expressions -------------------------------------------------

FUNCTIONS = {"min": (2, None), "max": (2, None), "abs": (1, 1)}


@dataclass(frozen=True)
class Const:
    value: float

    def evaluate(self, signals):
        return np.float64(self.value)

    def signal_names(self):
        return set()

    def to_text(self):
        return _fmt_number(self.value)


@dataclass(frozen=True)
class Signal:
    name: str

    def evaluate(self, signals):
        try:
            return signals[self.name]
        except KeyError:
            raise StlEvaluationError(f"signal {self.name!r} is not in the trace") from None

    def signal_names(self):
        return {self.name}

    def to_text(self):
        return self.name


@dataclass(frozen=True)
class Neg:
    arg: "Expr"

    def evaluate(self, signals):
        return -self.arg.evaluate(signals)

    def signal_names(self):
        return self.arg.signal_names()

    def to_text(self):
        return f"(-{self.arg.to_text()})"


_BINOPS = {
    "+": np.add,
    "-": np.subtract,
    "*": np.multiply,
    "/": np.divide,
}


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Expr"
    right: "Expr"

    def evaluate(self, signals):
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            return _BINOPS[self.op](self.left.evaluate(signals), self.right.evaluate(signals))

    def signal_names(self):
        return self.left.signal_names() | self.right.signal_names()

    def to_text(self):
        return f"({self.left.to_text()} {self.op} {self.right.to_text()})"


@dataclass(frozen=True)
class Call:
    fn: str
    args: tuple

    def evaluate(self, signals):
        vals = [a.evaluate(signals) for a in self.args]
        if self.fn == "abs":
            return np.abs(vals[0])
        reduce = np.minimum if self.fn == "min" else np.maximum
        out = vals[0]
        for v in vals[1:]:
            out = reduce(out, v)
        return out

    def signal_names(self):
        names = set()
        for a in self.args:
            names |= a.signal_names()
        return names

    def to_text(self):
        return f"{self.fn}({', '.join(a.to_text() for a in self.args)})"


Expr = Union[Const, Signal, Neg, BinOp, Call]


# --- formulas ---------------------------------------------------------------


@dataclass(frozen=True)
class TrueF:
    def to_text(self):
        return "true"


@dataclass(frozen=True)
class Predicate:
    expr: Expr
    strict: bool = True

    def to_text(self):
        return f"({self.expr.to_text()} {'>' if self.strict else '>='} 0)"


@dataclass(frozen=True)
class Not:
    arg: "Formula"

    def to_text(self):
        return f"not {_wrap(self.arg)}"


@dataclass(frozen=True)
class And:
    left: "Formula"
    right: "Formula"

    def to_text(self):
        return f"({self.left.to_text()} and {self.right.to_text()})"


@dataclass(frozen=True)
class Or:
    left: "Formula"
    right: "Formula"

    def to_text(self):
        return f"({self.left.to_text()} or {self.right.to_text()})"


def _check_interval(a, b):
    if not (0 <= a <= b) or math.isnan(a) or math.isnan(b) or math.isinf(a):
        raise ValueError(f"malformed interval [{a}, {b}]")


@dataclass(frozen=True)
class Until:
    left: "Formula"
    right: "Formula"
    a: float = 0.0
    b: float = math.inf

    def __post_init__(self):
        _check_interval(self.a, self.b)

    def to_text(self):
        return f"({self.left.to_text()} U{_fmt_interval(self.a, self.b)} {self.right.to_text()})"


@dataclass(frozen=True)
class Eventually:
    arg: "Formula"
    a: float = 0.0
    b: float = math.inf

    def __post_init__(self):
        _check_interval(self.a, self.b)

    def to_text(self):
        return f"F{_fmt_interval(self.a, self.b)} {_wrap(self.arg)}"


@dataclass(frozen=True)
class Always:
    arg: "Formula"
    a: float = 0.0
    b: float = math.inf

    def __post_init__(self):
        _check_interval(self.a, self.b)

    def to_text(self):
        return f"G{_fmt_interval(self.a, self.b)} {_wrap(self.arg)}"


Formula = Union[TrueF, Predicate, Not, And, Or, Until, Eventually, Always]


def signal_names(phi) -> set:
    """All signal names referenced by the predicates of ``phi``."""
    if isinstance(phi, Predicate):
        return phi.expr.signal_names()
    names = set()
    for child in children(phi):
        names |= signal_names(child)
    return names


def children(phi) -> tuple:
    if isinstance(phi, (Not, Eventually, Always)):
        return (phi.arg,)
    if isinstance(phi, (And, Or, Until)):
        return (phi.left, phi.right)
    return ()


def _wrap(phi):
    text = phi.to_text()
    return text if text.startswith("(") else f"({text})"


def _fmt_interval(a, b):
    if a == 0 and math.isinf(b):
        return ""
    return f"[{_fmt_number(a)},{_fmt_number(b)}]"


def _fmt_number(x):
    return repr(float(x))
