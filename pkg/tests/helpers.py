"""Shared random generators for the test-suite."""

import numpy as np

from scenopt import gp, stl
from scenopt.gp import KernelHyper

SIGNALS = ("x", "y", "z")


def random_trace(rng, max_len=50, dt=None):
    n = int(rng.integers(1, max_len + 1))
    dt = dt if dt is not None else float(rng.choice([0.05, 0.1, 0.25, 1.0]))
    signals = {name: rng.normal(size=n).round(3) for name in SIGNALS}
    return stl.Trace(dt=dt, start_time=float(rng.choice([0.0, 1.5])), signals=signals)


def random_expr(rng, depth=0):
    r = rng.random()
    if depth >= 2 or r < 0.4:
        if rng.random() < 0.7:
            return stl.Signal(str(rng.choice(SIGNALS)))
        return stl.Const(round(float(rng.normal()), 2))
    if r < 0.8:
        return stl.BinOp(str(rng.choice(["+", "-", "*"])), random_expr(rng, depth + 1), random_expr(rng, depth + 1))
    if r < 0.9:
        return stl.Call(str(rng.choice(["min", "max"])), (random_expr(rng, depth + 1), random_expr(rng, depth + 1)))
    return stl.Call("abs", (random_expr(rng, depth + 1),))


def random_interval(rng, horizon):
    a = float(rng.choice([0.0, rng.uniform(0, horizon / 2)]))
    if rng.random() < 0.2:
        return a, float("inf")
    return a, a + float(rng.uniform(0, horizon))


def random_formula(rng, depth=4, horizon=5.0):
    """Random formula of nesting depth at most ``depth``."""
    if depth <= 1 or rng.random() < 0.2:
        if rng.random() < 0.1:
            return stl.TrueF()
        return stl.Predicate(random_expr(rng), strict=bool(rng.random() < 0.8))
    kind = rng.integers(0, 7)
    sub = lambda: random_formula(rng, depth - 1, horizon)  # noqa: E731
    if kind == 0:
        return stl.Not(sub())
    if kind == 1:
        return stl.And(sub(), sub())
    if kind == 2:
        return stl.Or(sub(), sub())
    a, b = random_interval(rng, horizon)
    if kind == 3:
        return stl.Eventually(sub(), a, b)
    if kind == 4:
        return stl.Always(sub(), a, b)
    return stl.Until(sub(), sub(), a, b)


def root_window_nonempty(phi, trace):
    if isinstance(phi, (stl.Eventually, stl.Always, stl.Until)):
        lo, hi = stl.window_offsets(phi.a, phi.b, trace.dt)
        return lo <= min(len(trace) - 1, hi)
    return True


def dense_posterior(X, y, hyper, Xs, jitter):
    """Posterior by plain dense solves, independent of the stored factor."""
    offset = y.mean()
    K = gp.kernel_matrix(X, X, hyper) + jitter * np.eye(len(X))
    Ks = gp.kernel_matrix(X, Xs, hyper)
    mean = Ks.T @ np.linalg.solve(K, y - offset) + offset
    cov = gp.kernel_matrix(Xs, Xs, hyper) - Ks.T @ np.linalg.solve(K, Ks)
    return mean, cov


def random_problem(rng, n_max=20, d_max=3):
    """Noise-free training set: a random smooth function sampled in the unit cube."""
    n = int(rng.integers(1, n_max + 1))
    d = int(rng.integers(1, d_max + 1))
    X = rng.uniform(size=(n, d))
    freqs = 3.0 * rng.normal(size=(4, d))
    y = np.sin(X @ freqs.T + rng.uniform(0, 2 * np.pi, 4)) @ rng.normal(size=4)
    hyper = KernelHyper(rng.uniform(0.5, 2.0), rng.uniform(0.1, 0.5, size=d))
    return X, y, hyper


# --- kernel -----------------------------------------------------------------
