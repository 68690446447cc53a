import math

import numpy as np
import pytest

from tests import oracles
from tests.conftest import random_dataset, random_params
from tgbo.gp import (
    Dataset,
    NumericalError,
    cholesky_with_jitter,
    fit,
    log_marginal_likelihood,
    log_marginal_likelihood_and_grad,
    log_marginal_likelihood_grad,
    log_pseudo_likelihood,
    predict,
    predict_batch,
)
from tgbo.kernels import KernelParams, covariance_matrix, covariance_with_grad

HALF_LOG_2PI = 0.91893853320467274178
SCALAR_LML = -2.1120857137646180512  # y = 2, k + noise = 4


def test_dataset_validation():
    with pytest.raises(ValueError):
        Dataset(np.zeros((3, 1)), np.zeros(2))
    with pytest.raises(ValueError):
        Dataset(np.zeros((0, 1)), np.zeros(0))
    with pytest.raises(ValueError):
        Dataset([[np.nan]], [1.0])
    assert Dataset([0.0, 1.0, 2.0], [1, 2, 3]).X.shape == (3, 1)


def test_fit_scalar_case():
    gp = fit(Dataset([[0.0]], [0.0]), KernelParams(1.0, [1.0]), 0.01)
    np.testing.assert_allclose(gp.chol_factor, [[math.sqrt(1.01)]], rtol=1e-15)
    assert gp.alpha.tolist() == [0.0]


def test_fit_alpha_solves_system(rng):
    ds = random_dataset(rng, 2, 3)
    p = random_params(rng, 3)
    gp = fit(ds, p, 1e-3)
    K = covariance_matrix(ds.X, ds.X, p) + 1e-3 * np.eye(2)
    np.testing.assert_allclose(K @ gp.alpha, ds.y, atol=1e-10)


def test_fit_factor_matches_dense_oracle(rng):
    ds = random_dataset(rng, 6, 2)
    p = KernelParams(1.0, [1.0, 1.0])
    gp = fit(ds, p, 1e-4)
    K = oracles.dense_cov(ds.X, ds.X, p) + 1e-4 * np.eye(6)
    np.testing.assert_allclose(gp.chol_factor, np.linalg.cholesky(K), atol=1e-10)
    rel = np.linalg.norm(gp.chol_factor @ gp.chol_factor.T - K) / np.linalg.norm(K)
    assert rel < 1e-8


def test_fitted_gp_is_immutable(rng):
    gp = fit(random_dataset(rng, 4, 1), KernelParams(1.0, [1.0]))
    with pytest.raises(ValueError):
        gp.alpha[0] = 1.0
    with pytest.raises(AttributeError):
        gp.noise_variance = 2.0


def test_jitter_rescues_duplicate_points():
    X = np.zeros((4, 1))
    ds = Dataset(X, [1.0, 1.0, 1.0, 1.0])
    gp = fit(ds, KernelParams(1.0, [1.0]), 0.0)
    assert gp.jitter > 0
    assert np.all(np.isfinite(gp.alpha))


def test_jitter_gives_up_with_diagnostic():
    A = -np.eye(3)
    with pytest.raises(NumericalError, match="diagonal"):
        cholesky_with_jitter(A)
    B = np.array([[2.0, 0.0], [0.0, -1.0]])
    with pytest.raises(NumericalError, match="6 jitter attempts"):
        cholesky_with_jitter(B)


def test_predict_interpolates_with_tiny_noise():
    ds = Dataset([[0.0], [0.7], [2.0]], [1.0, 3.5, -2.0])
    gp = fit(ds, KernelParams(1.5, [1.0]), 1e-10)
    post = predict(gp, [0.7])
    assert post.mean == pytest.approx(3.5, abs=1e-4)
    assert post.variance == pytest.approx(0.0, abs=1e-4)


def test_predict_reverts_to_prior_far_away(rng):
    ds = random_dataset(rng, 5, 2)
    p = KernelParams(1.7, [0.1, 0.1])
    gp = fit(ds, p, 1e-4)
    post = predict(gp, [10.0, 10.0])  # scaled distance > 50
    assert post.mean == pytest.approx(0.0, abs=1e-8)
    assert post.variance == pytest.approx(1.7**2, abs=1e-8)


def test_predict_matches_dense_inverse(rng):
    ds = random_dataset(rng, 5, 2)
    p = random_params(rng, 2)
    gp = fit(ds, p, 1e-3)
    x = rng.uniform(size=2)
    mu, var = oracles.dense_posterior(ds.X, ds.y, p, 1e-3, x)
    post = predict(gp, x)
    assert post.mean == pytest.approx(mu, abs=1e-8)
    assert post.variance == pytest.approx(var, abs=1e-8)


def test_predict_dimension_mismatch(rng):
    gp = fit(random_dataset(rng, 3, 2), KernelParams(1.0, [1.0, 1.0]))
    with pytest.raises(ValueError):
        predict(gp, [1.0])


def test_prior_mean_shifts_prediction(rng):
    ds = random_dataset(rng, 4, 1)
    p = KernelParams(1.0, [0.5])
    shifted = Dataset(ds.X, ds.y + 7.0)
    a = fit(ds, p)
    b = fit(shifted, p, prior_mean=7.0)
    ma, va = predict_batch(a, [[0.3], [5.0]])
    mb, vb = predict_batch(b, [[0.3], [5.0]])
    np.testing.assert_allclose(mb, ma + 7.0, atol=1e-12)
    np.testing.assert_allclose(vb, va, atol=1e-15)
    assert log_marginal_likelihood(shifted, p, prior_mean=7.0) == pytest.approx(
        log_marginal_likelihood(ds, p), abs=1e-12)


def test_variance_never_negative(rng):
    ds = random_dataset(rng, 10, 1)
    gp = fit(ds, KernelParams(1.0, [5.0]), 1e-10)
    _, var = predict_batch(gp, np.linspace(0, 1, 200)[:, None])
    assert np.all(var >= 0)
    # before clamping, round-off stays tiny on a well-conditioned fit
    gp = fit(ds, KernelParams(1.0, [0.2]), 1e-4)
    from scipy.linalg import solve_triangular
    Ks = covariance_matrix(ds.X, np.linspace(0, 1, 200)[:, None], gp.params)
    v = solve_triangular(gp.chol_factor, Ks, lower=True)
    assert np.min(1.0 - np.sum(v * v, axis=0)) >= -1e-8


def test_lml_scalar_cases():
    p = KernelParams(1.0, [1.0])
    assert log_marginal_likelihood(Dataset([[0.0]], [0.0]), p, 0.0) == pytest.approx(-HALF_LOG_2PI, abs=1e-15)
    v = log_marginal_likelihood(Dataset([[0.0]], [2.0]), KernelParams(2.0, [1.0]), 0.0)
    assert v == pytest.approx(SCALAR_LML, abs=1e-14)


def test_lml_matches_dense(rng):
    for n in range(1, 11):
        ds = random_dataset(rng, n, 2)
        p = random_params(rng, 2)
        assert log_marginal_likelihood(ds, p, 1e-3) == pytest.approx(
            oracles.dense_lml(ds.X, ds.y, p, 1e-3), rel=1e-10, abs=1e-10)


def test_lml_grad_shape_and_value_consistency(rng):
    ds = random_dataset(rng, 7, 4)
    p = random_params(rng, 4)
    v, g = log_marginal_likelihood_and_grad(ds, p, 1e-3)
    assert g.shape == (5,)
    assert v == pytest.approx(log_marginal_likelihood(ds, p, 1e-3), rel=1e-13)
    np.testing.assert_array_equal(g, log_marginal_likelihood_grad(ds, p, 1e-3))


def test_lml_grad_finite_differences(rng):
    ds = random_dataset(rng, 8, 2)
    p = random_params(rng, 2)
    g = log_marginal_likelihood_grad(ds, p, 1e-3)
    f = lambda v: log_marginal_likelihood(ds, KernelParams.from_vector(v), 1e-3)
    for k in range(3):
        fd = oracles.central_difference(f, p.to_vector(), k)
        assert g[k] == pytest.approx(fd, rel=1e-5, abs=1e-8)


def test_lml_grad_zero_targets(rng):
    X = rng.uniform(size=(6, 2))
    ds = Dataset(X, np.zeros(6))
    p = random_params(rng, 2)
    g = log_marginal_likelihood_grad(ds, p, 1e-3)
    Kinv = np.linalg.inv(oracles.dense_cov(X, X, p) + 1e-3 * np.eye(6))
    _, dK = covariance_with_grad(X, p)
    expected = [-0.5 * np.trace(Kinv @ dK[k]) for k in range(3)]
    np.testing.assert_allclose(g, expected, atol=1e-8)


def test_loo_matches_refit(rng):
    for n in range(2, 9):
        ds = random_dataset(rng, n, 2)
        p = random_params(rng, 2)
        assert log_pseudo_likelihood(ds, p, 1e-3) == pytest.approx(
            oracles.refit_loo(ds.X, ds.y, p, 1e-3), abs=1e-6)


def test_loo_symmetric_pair():
    ds = Dataset([[1.0, 0.0], [0.0, 1.0]], [0.4, 0.4])
    p = KernelParams(1.0, [1.0, 1.0])
    K = covariance_matrix(ds.X, ds.X, p) + 1e-3 * np.eye(2)
    Kinv = np.linalg.inv(K)
    terms = []
    for i in range(2):
        var = 1 / Kinv[i, i]
        resid = (Kinv @ ds.y)[i] / Kinv[i, i]
        terms.append(-0.5 * math.log(var) - 0.5 * resid**2 / var)
    assert terms[0] == pytest.approx(terms[1], rel=1e-12)
    assert log_pseudo_likelihood(ds, p, 1e-3) == pytest.approx(sum(terms) - 2 * HALF_LOG_2PI, abs=1e-12)


def test_loo_permutation_invariant(rng):
    ds = random_dataset(rng, 7, 3)
    p = random_params(rng, 3)
    perm = rng.permutation(7)
    a = log_pseudo_likelihood(ds, p)
    b = log_pseudo_likelihood(Dataset(ds.X[perm], ds.y[perm]), p)
    assert abs(a - b) <= 1e-12 * max(1.0, abs(a))


def test_loo_needs_two_points():
    with pytest.raises(ValueError):
        log_pseudo_likelihood(Dataset([[0.0]], [1.0]), KernelParams(1.0, [1.0]))
