"""Noise-free Gaussian-process regression with a Matern 5/2 kernel.

The model is fitted on centred targets: the mean of the training targets is
stored as ``target_offset`` and added back to every prediction. Inputs are
used as given; the optimisation loop feeds points already scaled to the unit
cube.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import LinAlgError, cho_solve, cholesky, solve_triangular
from scipy.spatial.distance import cdist

SQRT5 = math.sqrt(5.0)

# multipliers of the signal variance added to the diagonal, tried in order
JITTER_SCHEDULE = (1e-10, 1e-9, 1e-8, 1e-7, 1e-6)

LENGTHSCALE_BOUNDS = (0.01, 10.0)
N_STARTS = 8


class GpFitError(RuntimeError):
    pass


@dataclass(frozen=True)
class KernelHyper:
    signal_variance: float
    lengthscales: tuple

    def __post_init__(self):
        ls = tuple(float(v) for v in np.atleast_1d(self.lengthscales))
        object.__setattr__(self, "lengthscales", ls)
        object.__setattr__(self, "signal_variance", float(self.signal_variance))
        values = (self.signal_variance,) + ls
        if not ls or not all(math.isfinite(v) and v > 0 for v in values):
            raise ValueError(f"kernel hyperparameters must be positive and finite: {values}")

    @property
    def dim(self) -> int:
        return len(self.lengthscales)


def kernel_matrix(A: np.ndarray, B: np.ndarray, hyper: KernelHyper) -> np.ndarray:
    """Matern 5/2 covariance between the rows of ``A`` and ``B``."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    B = np.atleast_2d(np.asarray(B, dtype=float))
    if A.shape[1] != hyper.dim or B.shape[1] != hyper.dim:
        raise ValueError(
            f"input dimension {A.shape[1]}/{B.shape[1]} does not match {hyper.dim} lengthscales"
        )
    ls = np.asarray(hyper.lengthscales)
    r = cdist(A / ls, B / ls)
    sr = SQRT5 * r
    return hyper.signal_variance * (1.0 + sr + sr * sr / 3.0) * np.exp(-sr)


def matern_kernel(x, x_prime, hyper: KernelHyper) -> float:
    x = np.asarray(x, dtype=float).reshape(1, -1)
    x_prime = np.asarray(x_prime, dtype=float).reshape(1, -1)
    return float(kernel_matrix(x, x_prime, hyper)[0, 0])


def _factor(K: np.ndarray, scale: float):
    """Cholesky factor of ``K + jitter*I``, escalating the jitter on failure."""
    n = K.shape[0]
    for rel in JITTER_SCHEDULE:
        jitter = rel * scale
        try:
            L = cholesky(K + jitter * np.eye(n), lower=True, check_finite=False)
        except LinAlgError:
            continue
        if np.all(np.isfinite(L)):
            return L, jitter
    raise GpFitError(
        f"Cholesky factorisation failed up to jitter {JITTER_SCHEDULE[-1]:g}; "
        "inputs are probably near-duplicates"
    )


@dataclass(frozen=True, eq=False)
class GpModel:
    train_inputs: np.ndarray
    train_targets: np.ndarray  # centred
    target_offset: float
    hyper: KernelHyper
    chol: np.ndarray
    alpha: np.ndarray
    jitter: float

    @property
    def n(self) -> int:
        return self.train_inputs.shape[0]

    @property
    def dim(self) -> int:
        return self.train_inputs.shape[1]


def _as_training_set(X, y):
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=float).ravel()
    if X.shape[0] != y.size:
        raise ValueError(f"{X.shape[0]} inputs but {y.size} targets")
    if y.size < 1:
        raise ValueError("need at least one training point")
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
        raise ValueError("training data must be finite")
    return X, y


def fit_posterior(X, y, hyper: KernelHyper) -> GpModel:
    X, y = _as_training_set(X, y)
    if X.shape[1] != hyper.dim:
        raise ValueError(f"input dimension {X.shape[1]} does not match {hyper.dim} lengthscales")
    if X.shape[0] > 1:
        d = cdist(X, X)
        np.fill_diagonal(d, np.inf)
        if d.min() < 1e-10:
            i, j = np.unravel_index(np.argmin(d), d.shape)
            raise GpFitError(f"training inputs {i} and {j} are duplicates")
    offset = float(y.mean())
    yc = y - offset
    K = kernel_matrix(X, X, hyper)
    L, jitter = _factor(K, hyper.signal_variance)
    alpha = cho_solve((L, True), yc, check_finite=False)
    for arr in (X, yc, L, alpha):
        arr.setflags(write=False)
    return GpModel(X, yc, offset, hyper, L, alpha, jitter)


def _cross(model, Xs):
    Xs = np.atleast_2d(np.asarray(Xs, dtype=float))
    if Xs.shape[1] != model.dim:
        raise ValueError(f"query dimension {Xs.shape[1]} does not match model dimension {model.dim}")
    return Xs, kernel_matrix(model.train_inputs, Xs, model.hyper)


def predict(model: GpModel, Xs) -> tuple:
    """Posterior mean vector and covariance matrix at the rows of ``Xs``."""
    Xs, Kxs = _cross(model, Xs)
    mean = Kxs.T @ model.alpha + model.target_offset
    V = solve_triangular(model.chol, Kxs, lower=True, check_finite=False)
    cov = kernel_matrix(Xs, Xs, model.hyper) - V.T @ V
    cov = 0.5 * (cov + cov.T)
    diag = np.einsum("ii->i", cov)
    diag[diag < 0] = 0.0
    return mean, cov


def predict_mean(model: GpModel, Xs, chunk: int = 20000) -> np.ndarray:
    """Posterior mean only, evaluated in chunks for large query sets."""
    Xs = np.atleast_2d(np.asarray(Xs, dtype=float))
    out = np.empty(Xs.shape[0])
    for start in range(0, Xs.shape[0], chunk):
        _, Kxs = _cross(model, Xs[start : start + chunk])
        out[start : start + chunk] = Kxs.T @ model.alpha
    return out + model.target_offset


def predict_var(model: GpModel, Xs) -> np.ndarray:
    Xs, Kxs = _cross(model, Xs)
    V = solve_triangular(model.chol, Kxs, lower=True, check_finite=False)
    var = model.hyper.signal_variance - np.einsum("ij,ij->j", V, V)
    return np.maximum(var, 0.0)


def sample_function(model: GpModel, candidates, rng: np.random.Generator) -> np.ndarray:
    """One joint draw of the latent function at ``candidates`` from the posterior."""
    candidates = np.atleast_2d(np.asarray(candidates, dtype=float))
    if candidates.shape[0] < 1:
        raise ValueError("need at least one candidate")
    mean, cov = predict(model, candidates)
    z = rng.standard_normal(candidates.shape[0])
    try:
        L, _ = _factor(cov, model.hyper.signal_variance)
    except GpFitError:
        # near-duplicate candidates: symmetric square root with clipped eigenvalues
        w, V = np.linalg.eigh(cov)
        L = V * np.sqrt(np.maximum(w, 0.0))
    return mean + L @ z


# --- hyperparameters --------------------------------------------------------


def log_marginal_likelihood(X, y, hyper: KernelHyper) -> float:
    """Log evidence of the centred targets; ``-inf`` if the kernel matrix cannot be factored."""
    X, y = _as_training_set(X, y)
    yc = y - y.mean()
    K = kernel_matrix(X, X, hyper)
    try:
        L, _ = _factor(K, hyper.signal_variance)
    except GpFitError:
        return -math.inf
    alpha = cho_solve((L, True), yc, check_finite=False)
    n = yc.size
    return float(-0.5 * yc @ alpha - np.log(np.diag(L)).sum() - 0.5 * n * math.log(2 * math.pi))


def _golden_max(f, lo, hi, iters=20):
    """Golden-section search for a maximum of ``f`` on ``[lo, hi]``."""
    invphi = (math.sqrt(5) - 1) / 2
    a, b = lo, hi
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(iters):
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = f(d)
    return (c, fc) if fc >= fd else (d, fd)


def _start_points(dim):
    """Deterministic spread of log-lengthscale start vectors inside ``[0.05, 2]``."""
    lo, hi = math.log(0.05), math.log(2.0)
    golden = (math.sqrt(5) - 1) / 2
    return [
        np.array([lo + (((i + 0.5) / N_STARTS + j * golden) % 1.0) * (hi - lo) for j in range(dim)])
        for i in range(N_STARTS)
    ]


def _profiled_lml(X, yc, log_ls, var_bounds):
    """Likelihood with the signal variance at its closed-form optimum for these lengthscales.

    The jitter is proportional to the signal variance, so the factor of
    ``sf2 * (R + j I)`` is ``sqrt(sf2)`` times that of ``R + j I`` and the
    optimal ``sf2`` is ``y' (R + j I)^-1 y / n`` clipped to its bounds.
    """
    n = yc.size
    R = kernel_matrix(X, X, KernelHyper(1.0, np.exp(log_ls)))
    try:
        L, _ = _factor(R, 1.0)
    except GpFitError:
        return -math.inf, None
    quad = float(yc @ cho_solve((L, True), yc, check_finite=False))
    sf2 = min(max(quad / n, var_bounds[0]), var_bounds[1])
    val = -0.5 * quad / sf2 - 0.5 * n * math.log(sf2) - np.log(np.diag(L)).sum() - 0.5 * n * math.log(2 * math.pi)
    return float(val), sf2


def optimize_hyperparams(X, y, sweeps: int = 10) -> KernelHyper:
    """Maximise the log marginal likelihood over the kernel hyperparameters.

    Multi-start coordinate descent over the log-lengthscales, each coordinate
    optimised by golden-section search within the bounds, with the signal
    variance profiled out in closed form at every evaluation. A line-search
    result is only accepted if it improves the current value, so the result is
    at least as likely as every start point.
    """
    X, y = _as_training_set(X, y)
    n, dim = X.shape
    if n < 3:
        raise ValueError(f"need at least 3 points to fit hyperparameters, got {n}")
    yc = y - y.mean()
    var_lo = 1e-4
    var_bounds = (var_lo, max(1e4 * float(np.var(y)), 10 * var_lo))
    lo, hi = map(math.log, LENGTHSCALE_BOUNDS)

    def objective(log_ls):
        return _profiled_lml(X, yc, log_ls, var_bounds)[0]

    best_theta, best_val = None, -math.inf
    for theta in _start_points(dim):
        val = objective(theta)
        for _ in range(sweeps):
            before = val
            for j in range(dim):

                def along(v, j=j):
                    trial = theta.copy()
                    trial[j] = v
                    return objective(trial)

                v, fv = _golden_max(along, lo, hi)
                if fv > val:
                    theta = theta.copy()
                    theta[j] = v
                    val = fv
            if val - before < 1e-6:
                break
        if val > best_val:
            best_theta, best_val = theta, val
    if best_theta is None:
        raise GpFitError("hyperparameter search failed: no start point could be factored")
    _, sf2 = _profiled_lml(X, yc, best_theta, var_bounds)
    return KernelHyper(sf2, np.exp(best_theta))
