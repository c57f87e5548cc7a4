"""Quantitative and boolean semantics of STL over uniformly sampled traces.

Time windows ``[t+a, t+b]`` are mapped to sample indices
``ceil((t+a-start)/dt) .. floor((t+b-start)/dt)`` and truncated at the last
sample. The robustness evaluator is vectorised over all sample indices;
the boolean evaluator is a separate pointwise recursion so that each can
serve as a check on the other.
"""

from __future__ import annotations

import math

import numpy as np

from .formula import (
    Always,
    And,
    Eventually,
    Not,
    Or,
    Predicate,
    StlEvaluationError,
    Trace,
    TrueF,
    Until,
    signal_names,
)

# absorbs representation error in (t + a) / dt before rounding to an index
_INDEX_EPS = 1e-9


def window_offsets(a: float, b: float, dt: float) -> tuple:
    """Index offsets ``(lo, hi)`` of the window ``[a, b]`` relative to the evaluation index."""
    lo = math.ceil(a / dt - _INDEX_EPS)
    hi = math.inf if math.isinf(b) else math.floor(b / dt + _INDEX_EPS)
    return lo, hi


def time_index(trace: Trace, t: float) -> int:
    """Sample index of time ``t``; ``t`` must fall on (or within rounding of) a sample."""
    pos = (t - trace.start_time) / trace.dt
    idx = round(pos)
    if abs(pos - idx) > 1e-6 or idx < 0 or idx >= len(trace):
        raise StlEvaluationError(
            f"time {t} is not a sample time of the trace [{trace.start_time}, {trace.end_time}]"
        )
    return idx


def _check_signals(phi, trace):
    missing = signal_names(phi) - trace.signals.keys()
    if missing:
        raise StlEvaluationError(f"signals missing from trace: {sorted(missing)}")


def _check_root_window(phi, trace, idx):
    if isinstance(phi, (Eventually, Always, Until)):
        lo, hi = window_offsets(phi.a, phi.b, trace.dt)
        if idx + lo > len(trace) - 1:
            raise StlEvaluationError(
                f"empty evaluation window: t+{phi.a} lies beyond the trace end {trace.end_time}"
            )
        if lo > hi:
            raise StlEvaluationError(f"empty evaluation window: no sample in [t+{phi.a}, t+{phi.b}]")


# --- robustness -------------------------------------------------------------


def robustness_signal(phi, trace: Trace) -> np.ndarray:
    """Robustness of ``phi`` at every sample index of ``trace``.

    Nested operators whose window falls entirely past the trace end take the
    identity of their aggregation (``-inf`` for F/U, ``+inf`` for G).
    """
    _check_signals(phi, trace)
    return _rob(phi, trace.signals, len(trace), trace.dt)


def _rob(phi, signals, n, dt):
    if isinstance(phi, TrueF):
        return np.full(n, np.inf)
    if isinstance(phi, Predicate):
        values = np.broadcast_to(np.asarray(phi.expr.evaluate(signals), dtype=float), (n,))
        if not np.all(np.isfinite(values)):
            raise StlEvaluationError(f"predicate {phi.to_text()} is not finite on this trace")
        return np.array(values)
    if isinstance(phi, Not):
        return -_rob(phi.arg, signals, n, dt)
    if isinstance(phi, And):
        return np.minimum(_rob(phi.left, signals, n, dt), _rob(phi.right, signals, n, dt))
    if isinstance(phi, Or):
        return np.maximum(_rob(phi.left, signals, n, dt), _rob(phi.right, signals, n, dt))
    if isinstance(phi, (Eventually, Always)):
        inner = _rob(phi.arg, signals, n, dt)
        lo, hi = window_offsets(phi.a, phi.b, dt)
        maximum = isinstance(phi, Eventually)
        out = np.full(n, -np.inf if maximum else np.inf)
        for i in range(n):
            start = i + lo
            if start >= n:
                break
            stop = n if math.isinf(hi) else min(n, i + hi + 1)
            if stop <= start:
                continue
            window = inner[start:stop]
            out[i] = window.max() if maximum else window.min()
        return out
    if isinstance(phi, Until):
        left = _rob(phi.left, signals, n, dt)
        right = _rob(phi.right, signals, n, dt)
        lo, hi = window_offsets(phi.a, phi.b, dt)
        out = np.full(n, -np.inf)
        for i in range(n):
            start = i + lo
            if start >= n:
                break
            stop = n if math.isinf(hi) else min(n, i + hi + 1)
            if stop <= start:
                continue
            # running min of the left operand over [t, tau] for every tau in the window
            running = np.minimum.accumulate(left[i:stop])[lo:]
            out[i] = np.minimum(right[start:stop], running).max()
        return out
    raise TypeError(f"not an STL formula: {phi!r}")


def eval_robustness(phi, trace: Trace, t: float | None = None) -> float:
    """Robustness of ``phi`` on ``trace`` at time ``t`` (default: trace start)."""
    t = trace.start_time if t is None else t
    idx = time_index(trace, t)
    _check_signals(phi, trace)
    _check_root_window(phi, trace, idx)
    return float(_rob(phi, trace.signals, len(trace), trace.dt)[idx])


# --- boolean ----------------------------------------------------------------


def eval_boolean(phi, trace: Trace, t: float | None = None) -> bool:
    """Boolean satisfaction of ``phi`` on ``trace`` at time ``t`` (default: trace start)."""
    t = trace.start_time if t is None else t
    idx = time_index(trace, t)
    _check_signals(phi, trace)
    _check_root_window(phi, trace, idx)
    n = len(trace)
    cache = {}

    def atom_values(pred):
        key = id(pred)
        if key not in cache:
            values = np.broadcast_to(np.asarray(pred.expr.evaluate(trace.signals), dtype=float), (n,))
            if not np.all(np.isfinite(values)):
                raise StlEvaluationError(f"predicate {pred.to_text()} is not finite on this trace")
            cache[key] = values
        return cache[key]

    def window(node, i):
        lo, hi = window_offsets(node.a, node.b, trace.dt)
        last = n - 1 if math.isinf(hi) else min(n - 1, i + hi)
        return range(i + lo, last + 1)

    memo = {}

    def sat(node, i):
        key = (id(node), i)
        if key not in memo:
            memo[key] = _sat(node, i)
        return memo[key]

    def _sat(node, i):
        if isinstance(node, TrueF):
            return True
        if isinstance(node, Predicate):
            v = atom_values(node)[i]
            return bool(v > 0) if node.strict else bool(v >= 0)
        if isinstance(node, Not):
            return not sat(node.arg, i)
        if isinstance(node, And):
            return sat(node.left, i) and sat(node.right, i)
        if isinstance(node, Or):
            return sat(node.left, i) or sat(node.right, i)
        if isinstance(node, Eventually):
            return any(sat(node.arg, j) for j in window(node, i))
        if isinstance(node, Always):
            return all(sat(node.arg, j) for j in window(node, i))
        if isinstance(node, Until):
            for tau in window(node, i):
                if sat(node.right, tau) and all(sat(node.left, s) for s in range(i, tau + 1)):
                    return True
            return False
        raise TypeError(f"not an STL formula: {node!r}")

    return sat(phi, idx)


def cost(phi, trace: Trace) -> float:
    """Non-negative cost: ``-rho`` when the specification is violated, else 0."""
    return cost_from_robustness(eval_robustness(phi, trace))


def cost_from_robustness(rho: float) -> float:
    return -rho if rho < 0 else 0.0
