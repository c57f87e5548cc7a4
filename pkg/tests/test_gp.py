import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from scenopt import gp
from scenopt.gp import GpFitError, KernelHyper

from helpers import dense_posterior, random_problem


def test_kernel_at_zero_distance_is_signal_variance():
    hyper = KernelHyper(2.5, (0.3, 0.7))
    assert gp.matern_kernel([0.1, 0.2], [0.1, 0.2], hyper) == 2.5


def test_kernel_decays_to_zero():
    hyper = KernelHyper(1.0, (1.0,))
    assert gp.matern_kernel([0.0], [1e3], hyper) < 1e-300


def test_kernel_closed_form_at_unit_distance():
    expected = (1 + math.sqrt(5) + 5 / 3) * math.exp(-math.sqrt(5))
    assert expected == pytest.approx(0.5240, abs=5e-5)
    hyper = KernelHyper(1.0, (2.0, 0.5))
    # scaled distance: sqrt((1.2/2)^2 + (0.4/0.5)^2) = 1
    assert gp.matern_kernel([0.0, 0.0], [1.2, 0.4], hyper) == pytest.approx(expected, rel=1e-14)


def test_kernel_symmetric():
    rng = np.random.default_rng(0)
    hyper = KernelHyper(1.3, rng.uniform(0.1, 1, size=3))
    A = rng.uniform(size=(6, 3))
    K = gp.kernel_matrix(A, A, hyper)
    np.testing.assert_array_equal(K, K.T)


def test_kernel_dimension_mismatch():
    with pytest.raises(ValueError):
        gp.matern_kernel([0.0, 1.0], [0.0, 1.0], KernelHyper(1.0, (1.0,)))


def test_hyper_validation():
    with pytest.raises(ValueError):
        KernelHyper(0.0, (1.0,))
    with pytest.raises(ValueError):
        KernelHyper(1.0, (1.0, -2.0))


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_kernel_matrix_psd(seed):
    rng = np.random.default_rng(seed)
    X, _, hyper = random_problem(rng)
    K = gp.kernel_matrix(X, X, hyper)
    assert np.linalg.eigvalsh(K).min() >= -1e-8


# --- posterior --------------------------------------------------------------


def test_single_point_interpolation():
    model = gp.fit_posterior([[0.5]], [2.0], KernelHyper(1.0, (0.2,)))
    mean, cov = gp.predict(model, [[0.5]])
    assert mean[0] == pytest.approx(2.0, abs=1e-12)
    assert cov[0, 0] <= 1e-8


def test_duplicate_rows_rejected():
    with pytest.raises(GpFitError, match="duplicate"):
        gp.fit_posterior([[0.1, 0.2], [0.3, 0.3], [0.1, 0.2]], [1.0, 2.0, 3.0], KernelHyper(1.0, (1.0, 1.0)))


def test_constant_targets_give_constant_mean():
    X = np.array([[0.0], [0.3], [0.9]])
    model = gp.fit_posterior(X, [4.0, 4.0, 4.0], KernelHyper(1.0, (0.5,)))
    np.testing.assert_array_equal(model.alpha, 0.0)
    mean, _ = gp.predict(model, np.linspace(-1, 2, 7)[:, None])
    np.testing.assert_allclose(mean, 4.0, atol=1e-12)


def test_far_point_recovers_prior():
    X = np.array([[0.0], [0.1], [0.2]])
    model = gp.fit_posterior(X, [1.0, 3.0, 2.0], KernelHyper(1.7, (0.1,)))
    mean, cov = gp.predict(model, [[50.0]])
    assert mean[0] == pytest.approx(2.0, abs=1e-12)
    assert cov[0, 0] == pytest.approx(1.7, abs=1e-12)


def test_two_point_mean_dual_path():
    hyper = KernelHyper(1.0, (1.0,))
    X, y = np.array([[0.0], [1.0]]), np.array([0.0, 1.0])
    model = gp.fit_posterior(X, y, hyper)
    mean, _ = gp.predict(model, [[0.5]])
    # direct closed form for two points: k* K^-1 (y - c) + c
    k = gp.matern_kernel([0.0], [1.0], hyper)
    ks = gp.matern_kernel([0.0], [0.5], hyper)
    K = np.array([[1.0 + model.jitter, k], [k, 1.0 + model.jitter]])
    direct = np.array([ks, ks]) @ np.linalg.solve(K, y - 0.5) + 0.5
    assert mean[0] == pytest.approx(direct, abs=1e-10)
    assert mean[0] == pytest.approx(0.5, abs=1e-10)  # symmetry


def test_dimension_mismatch_in_predict():
    model = gp.fit_posterior([[0.0, 0.0]], [1.0], KernelHyper(1.0, (1.0, 1.0)))
    with pytest.raises(ValueError):
        gp.predict(model, [[0.0]])


def test_cholesky_reconstructs_kernel():
    rng = np.random.default_rng(3)
    X, y, hyper = random_problem(rng)
    model = gp.fit_posterior(X, y, hyper)
    K = gp.kernel_matrix(X, X, hyper) + model.jitter * np.eye(len(X))
    rel = np.linalg.norm(model.chol @ model.chol.T - K) / np.linalg.norm(K)
    assert rel <= 1e-8


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_interpolation_property(seed):
    rng = np.random.default_rng(seed)
    X, y, hyper = random_problem(rng)
    model = gp.fit_posterior(X, y, hyper)
    mean, cov = gp.predict(model, X)
    assert np.max(np.abs(mean - y)) <= 1e-6
    assert np.max(np.diag(cov)) <= 1e-8


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_predict_matches_dense_solve(seed):
    rng = np.random.default_rng(seed)
    X, y, hyper = random_problem(rng)
    Xs = rng.uniform(-0.2, 1.2, size=(7, X.shape[1]))
    model = gp.fit_posterior(X, y, hyper)
    mean, cov = gp.predict(model, Xs)
    dmean, dcov = dense_posterior(X, y, hyper, Xs, model.jitter)
    np.testing.assert_allclose(mean, dmean, atol=1e-9 * max(1.0, np.abs(y).max()))
    np.testing.assert_allclose(cov, 0.5 * (dcov + dcov.T), atol=1e-9)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), c=st.floats(-1e3, 1e3))
def test_target_translation(seed, c):
    rng = np.random.default_rng(seed)
    X, y, hyper = random_problem(rng)
    Xs = rng.uniform(size=(5, X.shape[1]))
    m1, c1 = gp.predict(gp.fit_posterior(X, y, hyper), Xs)
    m2, c2 = gp.predict(gp.fit_posterior(X, y + c, hyper), Xs)
    np.testing.assert_allclose(m2, m1 + c, atol=1e-9 * (1 + abs(c)))
    np.testing.assert_array_equal(c1, c2)


def test_predict_mean_chunks_agree():
    rng = np.random.default_rng(5)
    X, y, hyper = random_problem(rng)
    model = gp.fit_posterior(X, y, hyper)
    Xs = rng.uniform(size=(101, X.shape[1]))
    np.testing.assert_allclose(gp.predict_mean(model, Xs, chunk=17), gp.predict(model, Xs)[0], atol=1e-12)
    np.testing.assert_allclose(gp.predict_var(model, Xs), np.diag(gp.predict(model, Xs)[1]), atol=1e-12)


# --- hyperparameters --------------------------------------------------------


def test_optimize_needs_three_points():
    with pytest.raises(ValueError):
        gp.optimize_hyperparams([[0.0], [1.0]], [0.0, 1.0])


def test_constant_targets_push_lengthscale_to_upper_bound():
    X = np.linspace(0, 1, 6)[:, None]
    hyper = gp.optimize_hyperparams(X, np.full(6, 3.0))
    assert hyper.lengthscales[0] == pytest.approx(gp.LENGTHSCALE_BOUNDS[1], rel=1e-3)
    # grid oracle: the likelihood increases with lengthscale for a flat function
    grid = np.geomspace(*gp.LENGTHSCALE_BOUNDS, 25)
    vals = [gp.log_marginal_likelihood(X, np.full(6, 3.0), KernelHyper(hyper.signal_variance, (l,))) for l in grid]
    assert int(np.argmax(vals)) == len(grid) - 1


def test_lengthscale_recovery():
    rng = np.random.default_rng(42)
    true = KernelHyper(1.0, (0.3,))
    X = np.sort(rng.uniform(size=60))[:, None]
    K = gp.kernel_matrix(X, X, true) + 1e-10 * np.eye(60)
    y = np.linalg.cholesky(K) @ rng.standard_normal(60)
    hyper = gp.optimize_hyperparams(X, y)
    assert 0.15 <= hyper.lengthscales[0] <= 0.6
    # likelihood grid sweep oracle: the optimum is at least as good as the best grid point
    grid_ls = np.geomspace(0.01, 10, 60)
    grid_var = np.geomspace(1e-2, 1e2, 30)
    grid_best = max(
        gp.log_marginal_likelihood(X, y, KernelHyper(v, (l,))) for l in grid_ls for v in grid_var
    )
    assert gp.log_marginal_likelihood(X, y, hyper) >= grid_best - 1e-3


def test_optimum_beats_every_start():
    rng = np.random.default_rng(7)
    X = rng.uniform(size=(15, 2))
    y = np.sin(4 * X[:, 0]) + X[:, 1] ** 2
    hyper = gp.optimize_hyperparams(X, y)
    best = gp.log_marginal_likelihood(X, y, hyper)
    for log_ls in gp._start_points(2):
        for sf2 in (0.01, float(np.var(y)), 10.0):
            start = KernelHyper(sf2, np.exp(log_ls))
            assert best >= gp.log_marginal_likelihood(X, y, start) - 1e-9


def test_hyperparams_within_bounds():
    rng = np.random.default_rng(8)
    X = rng.uniform(size=(10, 3))
    hyper = gp.optimize_hyperparams(X, rng.normal(size=10))
    lo, hi = gp.LENGTHSCALE_BOUNDS
    assert all(lo <= l <= hi for l in hyper.lengthscales)


# --- sampling ---------------------------------------------------------------


def test_sample_at_training_points_is_degenerate():
    rng = np.random.default_rng(0)
    X = rng.uniform(size=(8, 2))
    y = rng.normal(size=8)
    model = gp.fit_posterior(X, y, KernelHyper(1.0, (0.4, 0.4)))
    draw = gp.sample_function(model, X, np.random.default_rng(1))
    np.testing.assert_allclose(draw, y, atol=1e-3)


def test_sample_deterministic():
    rng = np.random.default_rng(0)
    X = rng.uniform(size=(8, 2))
    model = gp.fit_posterior(X, rng.normal(size=8), KernelHyper(1.0, (0.4, 0.4)))
    cands = rng.uniform(size=(50, 2))
    a = gp.sample_function(model, cands, np.random.default_rng(9))
    b = gp.sample_function(model, cands, np.random.default_rng(9))
    np.testing.assert_array_equal(a, b)


def test_sample_far_point_moments():
    model = gp.fit_posterior([[0.0], [0.2]], [1.0, 2.0], KernelHyper(2.0, (0.1,)))
    rng = np.random.default_rng(11)
    n = 10_000
    draws = np.array([gp.sample_function(model, [[100.0]], rng)[0] for _ in range(n)])
    se_mean = math.sqrt(2.0 / n)
    se_var = 2.0 * math.sqrt(2.0 / (n - 1))
    assert abs(draws.mean() - 1.5) <= 3 * se_mean
    assert abs(draws.var(ddof=1) - 2.0) <= 3 * se_var
