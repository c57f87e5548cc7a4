"""Gaussian mixtures: EM fitting, BIC model selection and box-truncated sampling."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .gp import GpModel, predict_mean

log = logging.getLogger(__name__)

COV_FLOOR = 1e-8
EM_TOL = 1e-6  # on the mean per-point log-likelihood
EM_MAX_ITER = 200
EM_RESTARTS = 5
MAX_ATTEMPTS = 1000


class GmmError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class GmmParams:
    weights: np.ndarray  # (K,)
    means: np.ndarray  # (K, d)
    covariances: np.ndarray  # (K, d, d)

    def __post_init__(self):
        w = np.array(self.weights, dtype=float).ravel()
        mu = np.atleast_2d(np.array(self.means, dtype=float))
        cov = np.array(self.covariances, dtype=float)
        if cov.ndim == 2 and mu.shape[1] == 1 and cov.shape == (w.size, 1):
            cov = cov.reshape(-1, 1, 1)
        K, d = mu.shape
        if w.size != K or cov.shape != (K, d, d):
            raise GmmError(f"inconsistent shapes: weights {w.shape}, means {mu.shape}, covariances {cov.shape}")
        if not all(np.all(np.isfinite(a)) for a in (w, mu, cov)):
            raise GmmError("mixture parameters must be finite")
        if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-9:
            raise GmmError(f"weights must be non-negative and sum to 1, got {w.tolist()}")
        for k in range(K):
            if not np.allclose(cov[k], cov[k].T, rtol=0, atol=1e-12 * max(1.0, np.abs(cov[k]).max())):
                raise GmmError(f"covariance {k} is not symmetric")
            eig = np.linalg.eigvalsh(cov[k])
            # reconstructing a floored matrix perturbs eigenvalues by ~eps * largest
            if eig[0] < COV_FLOOR * (1 - 1e-6) - 64 * np.finfo(float).eps * abs(eig[-1]):
                raise GmmError(f"covariance {k} has an eigenvalue below the floor {COV_FLOOR}")
        chol = np.linalg.cholesky(cov)
        for name, arr in (("weights", w), ("means", mu), ("covariances", cov), ("_chol", chol)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def n_components(self) -> int:
        return self.weights.size

    @property
    def dim(self) -> int:
        return self.means.shape[1]

    def n_free_parameters(self) -> int:
        K, d = self.n_components, self.dim
        return K - 1 + K * d + K * d * (d + 1) // 2

    def to_dict(self) -> dict:
        return {
            "weights": self.weights.tolist(),
            "means": self.means.tolist(),
            "covariances": self.covariances.tolist(),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "GmmParams":
        try:
            return cls(doc["weights"], doc["means"], doc["covariances"])
        except KeyError as exc:
            raise GmmError(f"mixture document lacks {exc.args[0]!r}") from None


def _component_logpdf(X, means, chols):
    """(n, K) log N(x_i; mu_k, Sigma_k) for lower Cholesky factors ``chols``."""
    d = X.shape[1]
    diff = X[None, :, :] - means[:, None, :]  # (K, n, d)
    z = np.matmul(diff, np.linalg.inv(chols).transpose(0, 2, 1))
    logdet = 2.0 * np.log(np.diagonal(chols, axis1=1, axis2=2)).sum(axis=1)
    return -0.5 * ((z * z).sum(axis=2).T + logdet + d * math.log(2 * math.pi))


def _logsumexp_rows(a):
    m = a.max(axis=1)
    return m + np.log(np.exp(a - m[:, None]).sum(axis=1))


def gmm_logpdf(params: GmmParams, X) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[1] != params.dim:
        raise GmmError(f"point dimension {X.shape[1]} does not match mixture dimension {params.dim}")
    with np.errstate(divide="ignore"):
        logw = np.log(params.weights)
    return logsumexp(_component_logpdf(X, params.means, params._chol) + logw, axis=1)


def gmm_density(params: GmmParams, x) -> float:
    """Mixture density at a single point."""
    x = np.asarray(x, dtype=float).ravel()
    return float(np.exp(gmm_logpdf(params, x[None, :])[0]))


# --- EM ---------------------------------------------------------------------


def _check_points(points, K):
    X = np.atleast_2d(np.asarray(points, dtype=float))
    n, d = X.shape
    if K < 1:
        raise GmmError("need at least one component")
    if n < K * (d + 1):
        raise GmmError(f"{n} points are too few for {K} components in {d} dimensions (need {K * (d + 1)})")
    if not np.all(np.isfinite(X)):
        raise GmmError("points must be finite")
    return X


def _floor_covs(covs):
    covs = 0.5 * (covs + covs.transpose(0, 2, 1))
    w, V = np.linalg.eigh(covs)
    low = w[:, 0] < COV_FLOOR
    if np.any(low):
        fixed = np.einsum("kij,kj,klj->kil", V[low], np.maximum(w[low], COV_FLOOR), V[low])
        covs[low] = 0.5 * (fixed + fixed.transpose(0, 2, 1))
    return covs


def _m_step(X, resp):
    """Raw (weights, means, covariances, cholesky factors) from responsibilities."""
    Nk = resp.sum(axis=0) + 10 * np.finfo(float).tiny
    weights = Nk / Nk.sum()
    means = (resp.T @ X) / Nk[:, None]
    D = X[None, :, :] - means[:, None, :]
    covs = _floor_covs(np.matmul((resp.T[:, :, None] * D).transpose(0, 2, 1), D) / Nk[:, None, None])
    return weights, means, covs, np.linalg.cholesky(covs)


def _kmeanspp(X, K, rng):
    n = X.shape[0]
    centers = [X[rng.integers(n)]]
    d2 = np.sum((X - centers[0]) ** 2, axis=1)
    for _ in range(1, K):
        total = d2.sum()
        idx = rng.integers(n) if total <= 0 else rng.choice(n, p=d2 / total)
        centers.append(X[idx])
        d2 = np.minimum(d2, np.sum((X - X[idx]) ** 2, axis=1))
    return np.array(centers)


def _initial_params(X, K, rng):
    centers = _kmeanspp(X, K, rng)
    labels = np.argmin(((X[:, None, :] - centers[None]) ** 2).sum(-1), axis=1)
    resp = np.zeros((X.shape[0], K))
    resp[np.arange(X.shape[0]), labels] = 1.0
    weights, means, covs, _ = _m_step(X, resp)
    # a seed cluster with too few points for a covariance falls back to the global one
    d = X.shape[1]
    glob = _floor_covs(np.cov(X, rowvar=False).reshape(1, d, d))[0]
    counts = np.bincount(labels, minlength=K)
    covs[counts <= d] = glob
    return GmmParams(weights, means, covs)


def _e_step(X, weights, means, chols):
    with np.errstate(divide="ignore"):
        logw = np.log(weights)
    joint = _component_logpdf(X, means, chols) + logw
    norm = _logsumexp_rows(joint)
    return np.exp(joint - norm[:, None]), float(norm.sum())


def em_iterate(points, params: GmmParams, max_iter: int = EM_MAX_ITER, tol: float = EM_TOL):
    """Run EM from ``params``; returns the fitted mixture and the log-likelihood after each E-step."""
    X = _check_points(points, params.n_components)
    n = X.shape[0]
    resp, ll = _e_step(X, params.weights, params.means, params._chol)
    history = [ll]
    for _ in range(max_iter):
        weights, means, covs, chols = _m_step(X, resp)
        resp, ll = _e_step(X, weights, means, chols)
        history.append(ll)
        if (history[-1] - history[-2]) / n < tol:
            break
    if len(history) > 1:
        params = GmmParams(weights, means, covs)
    return params, history


def em_fit(points, K: int, rng, restarts: int = EM_RESTARTS):
    """Best of ``restarts`` EM runs from k-means++ seeds; returns ``(params, loglik)``."""
    X = _check_points(points, K)
    best, best_ll = None, -math.inf
    for _ in range(restarts):
        params, history = em_iterate(X, _initial_params(X, K, rng))
        if history[-1] > best_ll:
            best, best_ll = params, history[-1]
    return best, best_ll


def bic(loglik: float, params: GmmParams, n: int) -> float:
    return -2.0 * loglik + params.n_free_parameters() * math.log(n)


def bic_sweep(points, K_max: int, rng) -> list:
    """``(K, params, loglik, bic)`` for every feasible ``K`` in ``1..K_max``."""
    X = np.atleast_2d(np.asarray(points, dtype=float))
    n, d = X.shape
    if n < 2 * (d + 1):
        raise GmmError(f"{n} points are too few to select a mixture in {d} dimensions (need {2 * (d + 1)})")
    out = []
    for K in range(1, min(K_max, n // (d + 1)) + 1):
        params, ll = em_fit(X, K, rng)
        out.append((K, params, ll, bic(ll, params, n)))
        log.debug("K=%d loglik=%.4f bic=%.4f", K, ll, out[-1][3])
    return out


def select_model(points, K_max: int = 8, rng=None) -> GmmParams:
    """Minimum-BIC mixture over ``K = 1..K_max``."""
    if rng is None:
        rng = np.random.default_rng(0)
    sweep = bic_sweep(points, K_max, rng)
    return min(sweep, key=lambda row: row[3])[1]


# --- surrogate low-cost set and sampling --------------------------------------


def extract_low_cost_set(model: GpModel, space, threshold: float, probes: int = 100_000, rng=None) -> np.ndarray:
    """Uniform probe points (parameter units) whose surrogate mean cost is at most ``threshold``.

    ``model`` is expected on unit-cube inputs, as produced by the optimiser.
    """
    if not threshold > 0:
        raise GmmError(f"threshold must be > 0, got {threshold}")
    if probes < 1000:
        raise GmmError(f"need at least 1000 probes, got {probes}")
    if rng is None:
        rng = np.random.default_rng(0)
    U = rng.random((probes, space.dim))
    keep = predict_mean(model, U) <= threshold
    points = space.denormalize(U[keep])
    need = 2 * (space.dim + 1)
    if points.shape[0] < need:
        raise GmmError(
            f"only {points.shape[0]} of {probes} probes have surrogate cost <= {threshold}; "
            f"need {need}, raise the threshold"
        )
    return points


def gmm_sample(params: GmmParams, n: int, bounds=None, rng=None, max_attempts: int = MAX_ATTEMPTS) -> np.ndarray:
    """``n`` draws from the mixture, each redrawn until it falls inside ``bounds``.

    Every pending sample picks a component and draws from it in each round;
    a sample that fails ``max_attempts`` times raises :class:`GmmError`.
    ``bounds`` is a parameter space or ``None`` for no truncation.
    """
    if n < 0:
        raise GmmError("n must be >= 0")
    if rng is None:
        rng = np.random.default_rng(0)
    d = params.dim
    if bounds is not None and bounds.dim != d:
        raise GmmError(f"bounds have {bounds.dim} parameters, mixture has dimension {d}")
    out = np.empty((n, d))
    pending = np.arange(n)
    attempts = 0
    while pending.size:
        if attempts >= max_attempts:
            raise GmmError(
                f"{pending.size} samples still outside the parameter box after {max_attempts} attempts; "
                "the mixture has little mass inside the box"
            )
        comp = rng.choice(params.n_components, size=pending.size, p=params.weights)
        z = rng.standard_normal((pending.size, d))
        draws = params.means[comp] + np.einsum("nij,nj->ni", params._chol[comp], z)
        if bounds is None:
            ok = np.ones(pending.size, dtype=bool)
        else:
            ok = np.all((draws >= bounds.lower) & (draws <= bounds.upper), axis=1)
        out[pending[ok]] = draws[ok]
        pending = pending[~ok]
        attempts += 1
    return out


def fit_low_cost_gmm(model, space, threshold, probes=100_000, K_max=8, max_points=5000, rng=None):
    """Surrogate low-cost set, thinned to at most ``max_points`` at random, then BIC selection.

    Returns ``(params, n_survivors)``.
    """
    if rng is None:
        rng = np.random.default_rng(0)
    pts = extract_low_cost_set(model, space, threshold, probes, rng)
    n_survivors = pts.shape[0]
    if n_survivors > max_points:
        pts = pts[np.sort(rng.choice(n_survivors, size=max_points, replace=False))]
    return select_model(pts, K_max, rng), n_survivors
