"""Gaussian process regression on top of a Cholesky factorization.

Everything here is a pure function of its inputs. :func:`fit` returns an
immutable :class:`FittedGP`, and the likelihood routines refactorize on
each call because model selection evaluates them at a new parameter
vector every time.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_solve, solve_triangular

from .kernels import KernelParams, covariance_matrix, covariance_with_grad

LOG_2PI = np.log(2.0 * np.pi)

JITTER_START = 1e-10
JITTER_GROWTH = 10.0
JITTER_ATTEMPTS = 6


class NumericalError(ArithmeticError):
    """Raised when the covariance matrix cannot be factorized."""


@dataclass(frozen=True)
class Dataset:
    """Observed inputs ``X`` (n, d) and targets ``y`` (n,)."""

    X: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        X = np.array(self.X, dtype=float)
        y = np.array(self.y, dtype=float).ravel()
        if X.ndim == 1:
            X = X.reshape(-1, 1)
        if X.ndim != 2:
            raise ValueError("inputs must be a 2-d array")
        if X.shape[0] != y.size:
            raise ValueError(f"{X.shape[0]} inputs but {y.size} targets")
        if y.size < 1:
            raise ValueError("dataset must contain at least one observation")
        if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
            raise ValueError("dataset entries must be finite")
        X.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)

    @property
    def n(self) -> int:
        return self.y.size

    @property
    def dim(self) -> int:
        return self.X.shape[1]


@dataclass(frozen=True)
class Posterior:
    mean: float
    variance: float

    @property
    def std(self) -> float:
        return float(np.sqrt(self.variance))


@dataclass(frozen=True)
class FittedGP:
    """A GP conditioned on a dataset at fixed kernel parameters.

    ``chol_factor`` is the lower Cholesky factor of ``K + (noise + jitter) I``
    and ``alpha`` solves that system against ``y - prior_mean``.
    """

    params: KernelParams
    noise_variance: float
    chol_factor: np.ndarray
    alpha: np.ndarray
    dataset: Dataset
    prior_mean: float = 0.0
    jitter: float = 0.0

    def predict(self, x) -> Posterior:
        return predict(self, x)


def _check_inputs(dataset: Dataset, params: KernelParams, noise_variance: float):
    if dataset.dim != params.dim:
        raise ValueError(
            f"dataset has dimension {dataset.dim}, params have {params.dim} length-scales"
        )
    if not (np.isfinite(noise_variance) and noise_variance >= 0):
        raise ValueError(f"noise variance must be non-negative, got {noise_variance}")


def cholesky_with_jitter(A: np.ndarray):
    """Lower Cholesky factor of ``A``, adding diagonal jitter on failure.

    The jitter starts at ``1e-10 * mean(diag A)`` and grows tenfold, for at
    most six attempts. Returns ``(L, jitter)``.
    """
    try:
        return np.linalg.cholesky(A), 0.0
    except np.linalg.LinAlgError:
        pass
    scale = float(np.mean(np.diag(A)))
    if not np.isfinite(scale) or scale <= 0:
        raise NumericalError(f"covariance diagonal is degenerate (mean {scale!r})")
    jitter = JITTER_START * scale
    eye = np.eye(A.shape[0])
    for _ in range(JITTER_ATTEMPTS):
        try:
            return np.linalg.cholesky(A + jitter * eye), jitter
        except np.linalg.LinAlgError:
            jitter *= JITTER_GROWTH
    raise NumericalError(
        f"Cholesky failed after {JITTER_ATTEMPTS} jitter attempts "
        f"(last jitter {jitter / JITTER_GROWTH:.3e}, n={A.shape[0]}, "
        f"mean diagonal {scale:.3e})"
    )


def fit(dataset: Dataset, params: KernelParams, noise_variance: float = 1e-4,
        prior_mean: float = 0.0) -> FittedGP:
    """Condition a zero-mean (or constant-mean) GP on ``dataset``."""
    _check_inputs(dataset, params, noise_variance)
    K = covariance_matrix(dataset.X, dataset.X, params)
    K[np.diag_indices_from(K)] += noise_variance
    L, jitter = cholesky_with_jitter(K)
    alpha = cho_solve((L, True), dataset.y - prior_mean)
    L.setflags(write=False)
    alpha.setflags(write=False)
    return FittedGP(params, float(noise_variance), L, alpha, dataset,
                    float(prior_mean), jitter)


def predict_batch(gp: FittedGP, Xs):
    """Posterior mean and (clamped) latent variance at each row of ``Xs``."""
    Xs = np.asarray(Xs, dtype=float)
    if Xs.ndim == 1:
        Xs = Xs.reshape(1, -1)
    if Xs.shape[1] != gp.dataset.dim:
        raise ValueError(
            f"query dimension {Xs.shape[1]} does not match data dimension {gp.dataset.dim}"
        )
    Ks = covariance_matrix(gp.dataset.X, Xs, gp.params)
    mean = gp.prior_mean + Ks.T @ gp.alpha
    v = solve_triangular(gp.chol_factor, Ks, lower=True, check_finite=False)
    var = gp.params.signal**2 - np.einsum("ij,ij->j", v, v)
    return mean, np.maximum(var, 0.0)


def predict(gp: FittedGP, x) -> Posterior:
    x = np.asarray(x, dtype=float).ravel()
    if x.size != gp.dataset.dim:
        raise ValueError(
            f"query dimension {x.size} does not match data dimension {gp.dataset.dim}"
        )
    mean, var = predict_batch(gp, x.reshape(1, -1))
    return Posterior(float(mean[0]), float(var[0]))


def _factorize(dataset, params, noise_variance, with_grad=False):
    _check_inputs(dataset, params, noise_variance)
    if with_grad:
        K, dK = covariance_with_grad(dataset.X, params)
    else:
        K, dK = covariance_matrix(dataset.X, dataset.X, params), None
    K[np.diag_indices_from(K)] += noise_variance
    L, _ = cholesky_with_jitter(K)
    return L, dK


def log_marginal_likelihood(dataset: Dataset, params: KernelParams,
                            noise_variance: float = 1e-4,
                            prior_mean: float = 0.0) -> float:
    """Log evidence ``log p(y | X, params)`` of the GP model."""
    L, _ = _factorize(dataset, params, noise_variance)
    r = dataset.y - prior_mean
    alpha = cho_solve((L, True), r)
    return float(-0.5 * r @ alpha - np.sum(np.log(np.diag(L)))
                 - 0.5 * dataset.n * LOG_2PI)


def log_marginal_likelihood_and_grad(dataset: Dataset, params: KernelParams,
                                     noise_variance: float = 1e-4,
                                     prior_mean: float = 0.0):
    """Log evidence and its gradient with respect to ``params.to_vector()``.

    Uses ``d/dp = 0.5 tr((alpha alpha^T - Kinv) dK/dp)``.
    """
    L, dK = _factorize(dataset, params, noise_variance, with_grad=True)
    n = dataset.n
    r = dataset.y - prior_mean
    alpha = cho_solve((L, True), r)
    value = -0.5 * r @ alpha - np.sum(np.log(np.diag(L))) - 0.5 * n * LOG_2PI
    Kinv = cho_solve((L, True), np.eye(n))
    W = np.outer(alpha, alpha) - Kinv
    grad = 0.5 * np.einsum("ij,kji->k", W, dK)
    return float(value), grad


def log_marginal_likelihood_grad(dataset: Dataset, params: KernelParams,
                                 noise_variance: float = 1e-4,
                                 prior_mean: float = 0.0) -> np.ndarray:
    return log_marginal_likelihood_and_grad(dataset, params, noise_variance,
                                            prior_mean)[1]


def log_pseudo_likelihood(dataset: Dataset, params: KernelParams,
                          noise_variance: float = 1e-4,
                          prior_mean: float = 0.0) -> float:
    """Leave-one-out log predictive probability, summed over observations.

    All ``n`` held-out predictions come from one inverse of ``K + noise I``:
    the held-out mean is ``y_i - [Kinv y]_i / [Kinv]_ii`` and the
    predictive variance of ``y_i`` is ``1 / [Kinv]_ii``.
    """
    if dataset.n < 2:
        raise ValueError("leave-one-out needs at least two observations")
    L, _ = _factorize(dataset, params, noise_variance)
    r = dataset.y - prior_mean
    Kinv = cho_solve((L, True), np.eye(dataset.n))
    diag = np.diag(Kinv)
    if np.any(diag <= 0):
        raise NumericalError("inverse covariance has a non-positive diagonal")
    resid = (Kinv @ r) / diag  # y_i - mu_i
    var = 1.0 / diag
    terms = -0.5 * np.log(var) - 0.5 * resid**2 / var - 0.5 * LOG_2PI
    return float(np.sum(terms))
