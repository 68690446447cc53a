"""Expected improvement (for minimization) and its multi-start maximization."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import erfc

from .gp import FittedGP, Posterior, predict_batch
from .optim import Bounds, Tolerances, multistart_results

SQRT2 = np.sqrt(2.0)
INV_SQRT_2PI = 1.0 / np.sqrt(2.0 * np.pi)
SIGMA_FLOOR = 1e-12
# EI tails are nearly exponential and quasi-Newton steps crawl there; stop
# once the per-iteration gain drops below about 1e7 machine epsilons
ACQ_TOLERANCES = Tolerances(ftol=1e7 * np.finfo(float).eps)


class DomainBox(Bounds):
    """Axis-aligned search domain of the objective."""


def norm_cdf(z):
    return 0.5 * erfc(-np.asarray(z, dtype=float) / SQRT2)


def norm_pdf(z):
    z = np.asarray(z, dtype=float)
    return INV_SQRT_2PI * np.exp(-0.5 * z * z)


def ei_from_moments(mean, variance, best_observed):
    """Vectorized expected improvement below ``best_observed``."""
    mean = np.asarray(mean, dtype=float)
    sigma = np.sqrt(np.maximum(np.asarray(variance, dtype=float), 0.0))
    improve = best_observed - mean
    safe = sigma > SIGMA_FLOOR
    s = np.where(safe, sigma, 1.0)
    z = improve / s
    ei = np.where(safe, improve * norm_cdf(z) + s * norm_pdf(z),
                  np.maximum(improve, 0.0))
    # the closed form can dip below zero by round-off deep in the tail
    return np.maximum(ei, 0.0)


def expected_improvement(posterior: Posterior, best_observed: float) -> float:
    if not (np.isfinite(posterior.mean) and np.isfinite(posterior.variance)
            and np.isfinite(best_observed)):
        raise ValueError("expected improvement needs finite inputs")
    if posterior.variance < 0:
        raise ValueError(f"negative posterior variance {posterior.variance}")
    return float(ei_from_moments(posterior.mean, posterior.variance, best_observed))


def ei_at(gp: FittedGP, X, best_observed: float) -> np.ndarray:
    mean, var = predict_batch(gp, X)
    return ei_from_moments(mean, var, best_observed)


def _negative_ei_objective(gp, best_observed, steps):
    d = steps.size
    offsets = np.zeros((2 * d + 1, d))
    offsets[1:d + 1] = np.diag(steps)
    offsets[d + 1:] = -np.diag(steps)

    def fun(x):
        ei = ei_at(gp, x + offsets, best_observed)
        grad = (ei[1:d + 1] - ei[d + 1:]) / (2.0 * steps)
        return -ei[0], -grad

    return fun


def optimize_acquisition(gp: FittedGP, best_observed: float, domain: DomainBox,
                         n_starts: int = 100, rng=None,
                         tol: Tolerances = ACQ_TOLERANCES,
                         full_output: bool = False):
    """Maximize expected improvement over ``domain`` from uniform random starts.

    Each start runs projected L-BFGS-B on the negated EI, whose gradient is
    taken by central differences with step ``1e-7`` times the box width.

    Returns
    -------
    x : ndarray, shape (d,)
        The feasible point with the largest EI; ties go to the earliest start.
    info : dict
        Only when ``full_output`` is true. Keys ``ei``, ``degraded`` (every
        start failed, so the best raw start is returned) and ``n_evals``.
    """
    if n_starts < 1:
        raise ValueError("n_starts must be at least 1")
    rng = np.random.default_rng(rng)
    starts = rng.uniform(domain.lower, domain.upper, size=(n_starts, domain.dim))
    steps = 1e-7 * (domain.upper - domain.lower)
    fun = _negative_ei_objective(gp, best_observed, steps)
    results = multistart_results(fun, starts, domain, tol)
    n_evals = sum(r.n_evals for r in results)
    degraded = not any(r.converged for r in results)
    if degraded:
        ei = ei_at(gp, starts, best_observed)
        k = int(np.argmax(ei))
        x, best_ei = starts[k].copy(), float(ei[k])
    else:
        best = min(results, key=lambda r: r.value)
        x, best_ei = best.argmin, -best.value
    if full_output:
        return x, {"ei": best_ei, "degraded": degraded, "n_evals": n_evals}
    return x
