"""Matern 5/2 covariance with automatic relevance determination (ARD)."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

SQRT5 = np.sqrt(5.0)
# exp(-800) underflows to 0 while the polynomial factor stays finite
MAX_SCALED_DIST = 800.0


@dataclass(frozen=True)
class KernelParams:
    """Free parameters of the Matern 5/2 ARD kernel.

    Attributes
    ----------
    signal : float
        Amplitude ``sigma_f``; the kernel is scaled by ``signal**2``.
    lengthscales : ndarray, shape (d,)
        One positive length-scale per input dimension.
    """

    signal: float
    lengthscales: np.ndarray

    def __post_init__(self):
        ls = np.array(self.lengthscales, dtype=float).ravel()
        ls.setflags(write=False)
        object.__setattr__(self, "lengthscales", ls)
        object.__setattr__(self, "signal", float(self.signal))
        if ls.size == 0:
            raise ValueError("at least one length-scale is required")
        if not (np.isfinite(self.signal) and self.signal > 0):
            raise ValueError(f"signal must be positive and finite, got {self.signal}")
        if not (np.all(np.isfinite(ls)) and np.all(ls > 0)):
            raise ValueError(f"length-scales must be positive and finite, got {ls}")

    @property
    def dim(self) -> int:
        return self.lengthscales.size

    def to_vector(self) -> np.ndarray:
        """Flatten to ``[signal, l_1, ..., l_d]``."""
        return np.concatenate(([self.signal], self.lengthscales))

    @classmethod
    def from_vector(cls, vec) -> "KernelParams":
        vec = np.asarray(vec, dtype=float).ravel()
        if vec.size < 2:
            raise ValueError("parameter vector needs signal plus >= 1 length-scale")
        return cls(vec[0], vec[1:])

    @classmethod
    def ones(cls, dim: int) -> "KernelParams":
        return cls(1.0, np.ones(dim))

    def __eq__(self, other):
        if not isinstance(other, KernelParams):
            return NotImplemented
        return np.array_equal(self.to_vector(), other.to_vector())

    def __hash__(self):
        return hash(self.to_vector().tobytes())


def _check_dim(d: int, params: KernelParams):
    if d != params.dim:
        raise ValueError(
            f"input dimension {d} does not match {params.dim} length-scales"
        )


def _matern_profile(r):
    # (1 + sqrt5 r + 5 r^2 / 3) exp(-sqrt5 r)
    sr = np.minimum(SQRT5 * r, MAX_SCALED_DIST)
    return (1.0 + sr + sr * sr / 3.0) * np.exp(-sr)


def matern52(x1, x2, params: KernelParams) -> float:
    """Covariance between two single points."""
    x1 = np.asarray(x1, dtype=float).ravel()
    x2 = np.asarray(x2, dtype=float).ravel()
    if x1.shape != x2.shape:
        raise ValueError(f"point shapes differ: {x1.shape} vs {x2.shape}")
    _check_dim(x1.size, params)
    r = np.sqrt(np.sum(((x1 - x2) / params.lengthscales) ** 2))
    return float(params.signal**2 * _matern_profile(r))


def _as_2d(X, params: KernelParams) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X.reshape(1, -1)
    if X.ndim != 2:
        raise ValueError(f"expected a 2-d array of points, got ndim={X.ndim}")
    _check_dim(X.shape[1], params)
    return X


def scaled_sqdist(X1, X2, params: KernelParams) -> np.ndarray:
    """Squared distances after dividing each coordinate by its length-scale."""
    A = _as_2d(X1, params) / params.lengthscales
    B = _as_2d(X2, params) / params.lengthscales
    diff = A[:, None, :] - B[None, :, :]
    return np.einsum("ijk,ijk->ij", diff, diff)


def covariance_matrix(X1, X2, params: KernelParams) -> np.ndarray:
    """Matrix of pairwise covariances, shape ``(len(X1), len(X2))``."""
    r = np.sqrt(scaled_sqdist(X1, X2, params))
    return params.signal**2 * _matern_profile(r)


def covariance_with_grad(X, params: KernelParams):
    """Symmetric covariance of ``X`` with itself and its parameter derivatives.

    Returns
    -------
    K : ndarray, shape (n, n)
    dK : ndarray, shape (d + 1, n, n)
        ``dK[0]`` is the derivative with respect to the signal amplitude,
        ``dK[k]`` with respect to length-scale ``k``.
    """
    X = _as_2d(X, params)
    ls = params.lengthscales
    diff = (X[:, None, :] - X[None, :, :]) / ls
    sq = diff**2
    r = np.sqrt(sq.sum(axis=-1))
    s2 = params.signal**2
    sr = np.minimum(SQRT5 * r, MAX_SCALED_DIST)
    expo = np.exp(-sr)
    K = s2 * (1.0 + sr + sr * sr / 3.0) * expo

    dK = np.empty((params.dim + 1,) + K.shape)
    dK[0] = 2.0 * K / params.signal
    # dk/dl_k = s2 * 5/3 * (1 + sqrt5 r) exp(-sqrt5 r) * (dx_k / l_k)^2 / l_k
    common = s2 * (5.0 / 3.0) * (1.0 + sr) * expo
    for k in range(params.dim):
        dK[k + 1] = common * sq[:, :, k] / ls[k]
    return K, dK
