"""Batch Thompson-sampling Bayesian optimisation of a scenario cost.

The surrogate sees parameters scaled to the unit cube; everything crossing the
public interface (history points, selected candidates) is in the original
parameter units.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .gp import GpModel, fit_posterior, optimize_hyperparams, sample_function

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class ParameterSpace:
    """Ordered box of named parameters: ``[(name, lower, upper), ...]``."""

    params: tuple

    def __init__(self, params):
        params = tuple((str(n), float(lo), float(hi)) for n, lo, hi in params)
        if not params:
            raise ValueError("parameter space needs at least one parameter")
        names = [p[0] for p in params]
        if len(set(names)) != len(names):
            raise ValueError(f"duplicate parameter names in {names}")
        for n, lo, hi in params:
            if not (math.isfinite(lo) and math.isfinite(hi) and lo < hi):
                raise ValueError(f"parameter {n!r}: need finite lower < upper, got [{lo}, {hi}]")
        object.__setattr__(self, "params", params)

    @property
    def names(self) -> list:
        return [p[0] for p in self.params]

    @property
    def lower(self) -> np.ndarray:
        return np.array([p[1] for p in self.params])

    @property
    def upper(self) -> np.ndarray:
        return np.array([p[2] for p in self.params])

    @property
    def dim(self) -> int:
        return len(self.params)

    def normalize(self, X) -> np.ndarray:
        return (np.asarray(X, dtype=float) - self.lower) / (self.upper - self.lower)

    def denormalize(self, U) -> np.ndarray:
        lo, hi = self.lower, self.upper
        # clip guards against the last-ulp overshoot of lo + u*(hi - lo)
        return np.clip(lo + np.asarray(U, dtype=float) * (hi - lo), lo, hi)

    def contains(self, x) -> bool:
        x = np.asarray(x, dtype=float)
        return bool(np.all(x >= self.lower) and np.all(x <= self.upper))

    def as_dict(self, x) -> dict:
        x = np.asarray(x, dtype=float).ravel()
        if x.size != self.dim:
            raise ValueError(f"point has {x.size} values, space has {self.dim} parameters")
        return {n: float(v) for n, v in zip(self.names, x)}

    def sample_uniform(self, n: int, rng: np.random.Generator) -> np.ndarray:
        return self.denormalize(rng.random((n, self.dim)))


@dataclass(frozen=True)
class BoConfig:
    init_mode: str = "raster"
    init_count: int = 64
    batch_size: int = 10
    max_iterations: int = 6
    candidate_pool: int = 1000
    convergence_tol: float = 1e-3
    convergence_window: int = 2
    seed: int = 0

    def __post_init__(self):
        if self.init_mode not in ("raster", "random"):
            raise ValueError(f"init_mode must be 'raster' or 'random', got {self.init_mode!r}")
        if self.init_count < 2:
            raise ValueError("init_count must be >= 2")
        for name in ("batch_size", "max_iterations", "candidate_pool", "convergence_window"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if not self.convergence_tol > 0:
            raise ValueError("convergence_tol must be > 0")


@dataclass(frozen=True)
class Evaluation:
    point: tuple
    cost: float
    iteration: int  # 0 for the initial design


@dataclass(frozen=True)
class BoRun:
    history: list
    final_model: GpModel
    converged: bool
    space: ParameterSpace

    @property
    def best(self) -> Evaluation:
        return min(self.history, key=lambda e: e.cost)

    @property
    def iterations(self) -> int:
        return max(e.iteration for e in self.history)

    def points(self) -> np.ndarray:
        return np.array([e.point for e in self.history])

    def costs(self) -> np.ndarray:
        return np.array([e.cost for e in self.history])


class BoEvaluationError(RuntimeError):
    """An evaluation failed; ``history`` holds everything evaluated before it."""

    def __init__(self, message, history):
        super().__init__(message)
        self.history = history


def raster_grid(space: ParameterSpace, count: int, mode: str = "raster", rng=None) -> np.ndarray:
    """Initial design: a full ``k^d`` grid with ``k = floor(count^(1/d))``, or ``count`` random points."""
    if mode == "random":
        if rng is None:
            raise ValueError("random init needs an rng")
        return space.sample_uniform(count, rng)
    if mode != "raster":
        raise ValueError(f"unknown init mode {mode!r}")
    d = space.dim
    k = int(math.floor(count ** (1.0 / d) + 1e-9))
    if k < 2:
        raise ValueError(f"raster init needs count >= 2^{d} = {2**d} in {d} dimensions, got {count}")
    axes = [np.linspace(lo, hi, k) for _, lo, hi in space.params]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)


def _draw_one(model, dim, pool, rng):
    candidates = rng.random((pool, dim))
    f = sample_function(model, candidates, rng)
    return candidates[int(np.argmin(f))]


def thompson_select(model: GpModel, space: ParameterSpace, batch: int, pool: int, rng) -> np.ndarray:
    """``batch`` independent Thompson draws, each the argmin of one posterior sample on a fresh pool.

    ``model`` must be fitted on unit-cube inputs. A draw that lands on an
    earlier pick or a training input is redrawn once and then accepted.
    """
    if batch < 1 or pool < 1:
        raise ValueError("batch and pool must be >= 1")
    picks = []
    for _ in range(batch):
        u = _draw_one(model, space.dim, pool, rng)
        taken = np.vstack([model.train_inputs] + picks) if picks else model.train_inputs
        if np.min(np.linalg.norm(taken - u, axis=1)) < 1e-10:
            u = _draw_one(model, space.dim, pool, rng)
        picks.append(u[None, :])
    return space.denormalize(np.vstack(picks))


def _fit(space, X, y):
    U = space.normalize(X)
    return fit_posterior(U, y, optimize_hyperparams(U, y))


def run_bo(
    evaluator: Callable,
    space: ParameterSpace,
    config: BoConfig,
    evaluate_batch: Optional[Callable] = None,
) -> BoRun:
    """Initial design, then batches of Thompson picks until the best cost stagnates.

    ``evaluator`` maps a point (array in parameter units) to a cost.
    ``evaluate_batch``, if given, maps a list of points to a list of costs in
    the same order and is used instead, e.g. to run simulations in parallel.
    """
    if evaluate_batch is None:
        evaluate_batch = lambda pts: [evaluator(p) for p in pts]  # noqa: E731
    init_ss, select_ss = np.random.SeedSequence(config.seed).spawn(2)
    select_rng = np.random.default_rng(select_ss)
    history = []

    def evaluate(points, iteration):
        try:
            costs = [float(c) for c in evaluate_batch(list(points))]
        except Exception as exc:
            raise BoEvaluationError(f"evaluation failed in iteration {iteration}: {exc}", list(history)) from exc
        if len(costs) != len(points):
            raise BoEvaluationError(f"expected {len(points)} costs, got {len(costs)}", list(history))
        for p, c in zip(points, costs):
            if not (math.isfinite(c) and c >= 0):
                raise BoEvaluationError(f"invalid cost {c} at {list(p)}", list(history))
            history.append(Evaluation(tuple(float(v) for v in p), c, iteration))

    init = raster_grid(space, config.init_count, config.init_mode, np.random.default_rng(init_ss))
    evaluate(init, 0)
    best = min(e.cost for e in history)
    stagnant, converged = 0, False
    for it in range(1, config.max_iterations + 1):
        X = np.array([e.point for e in history])
        y = np.array([e.cost for e in history])
        model = _fit(space, X, y)
        batch = thompson_select(model, space, config.batch_size, config.candidate_pool, select_rng)
        evaluate(batch, it)
        new_best = min(best, min(e.cost for e in history[-len(batch):]))
        log.info("iteration %d: best cost %.6g", it, new_best)
        stagnant = stagnant + 1 if best - new_best < config.convergence_tol else 0
        best = new_best
        if stagnant >= config.convergence_window:
            converged = True
            break
    X = np.array([e.point for e in history])
    y = np.array([e.cost for e in history])
    return BoRun(history, _fit(space, X, y), converged, space)


def surrogate_mean(run: BoRun, X) -> np.ndarray:
    """Posterior mean of the final surrogate at points given in parameter units."""
    from .gp import predict_mean

    return predict_mean(run.final_model, run.space.normalize(np.atleast_2d(X)))
