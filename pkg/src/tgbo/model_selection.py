"""Kernel-parameter selection: MLM, LOO-CV, and threshold-guided MLM.

Threshold-guided MLM reuses the previous parameters whenever the two most
recent selections are closer (in Euclidean norm) than a fraction of the
earlier one's norm, and otherwise falls back to ordinary MLM.
"""

from __future__ import annotations

import enum
import logging
import time
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np

from .gp import (
    Dataset,
    NumericalError,
    log_marginal_likelihood_and_grad,
    log_pseudo_likelihood,
)
from .kernels import KernelParams
from .optim import (
    DEFAULT_TOLERANCES,
    Bounds,
    Tolerances,
    bfgs_minimize,
    lbfgsb_minimize,
)

logger = logging.getLogger(__name__)

PARAM_LOWER = 1e-2
PARAM_UPPER = 1e3
LOO_FD_STEP = 1e-6


class Kind(str, enum.Enum):
    MLM = "mlm"
    LOO_CV = "loo"
    TG_MLM = "tg_mlm"


class Optimizer(str, enum.Enum):
    BFGS = "bfgs"
    LBFGSB = "lbfgsb"


@dataclass(frozen=True)
class SelectionStrategy:
    """How kernel parameters are chosen at each BO iteration.

    ``rho_fraction`` and ``recheck_every`` only matter for ``Kind.TG_MLM``.
    ``recheck_every=k`` forces a fresh MLM after ``k`` consecutive skips; it
    is off by default, in which case one skip makes every later
    iteration skip as well (the last two stored parameter vectors are then
    identical).
    """

    kind: Kind = Kind.TG_MLM
    optimizer: Optimizer = Optimizer.LBFGSB
    rho_fraction: float = 0.05
    recheck_every: Optional[int] = None
    warm_start: bool = True

    def __post_init__(self):
        object.__setattr__(self, "kind", Kind(self.kind))
        object.__setattr__(self, "optimizer", Optimizer(self.optimizer))
        if not self.rho_fraction >= 0:
            raise ValueError("rho_fraction must be non-negative")
        if self.recheck_every is not None and self.recheck_every < 1:
            raise ValueError("recheck_every must be a positive count")

    @property
    def label(self) -> str:
        return f"{self.kind.value}/{self.optimizer.value}"


@dataclass(frozen=True)
class HistoryEntry:
    params: KernelParams
    was_optimized: bool
    selection_time: float
    failed: bool = False


@dataclass
class ParamHistory:
    """Append-only record of the parameters used at each BO iteration."""

    entries: list = field(default_factory=list)

    def append(self, params, was_optimized, selection_time, failed=False):
        self.entries.append(HistoryEntry(params, bool(was_optimized),
                                         float(selection_time), bool(failed)))

    def __len__(self):
        return len(self.entries)

    def __getitem__(self, i):
        return self.entries[i]

    def __iter__(self):
        return iter(self.entries)

    @property
    def last(self) -> Optional[KernelParams]:
        return self.entries[-1].params if self.entries else None

    def trailing_skips(self) -> int:
        n = 0
        for e in reversed(self.entries):
            if e.was_optimized or e.failed:
                break
            n += 1
        return n


class Selection(NamedTuple):
    params: KernelParams
    was_optimized: bool
    failed: bool = False


def default_bounds(dim: int) -> Bounds:
    """Box ``[1e-2, 1e3]`` on the signal amplitude and every length-scale."""
    return Bounds.uniform(PARAM_LOWER, PARAM_UPPER, dim + 1)


def threshold_check(last, prev, rho_fraction: float) -> bool:
    """True when ``||last - prev|| < rho_fraction * ||prev||`` (skip MLM)."""
    a = last.to_vector() if isinstance(last, KernelParams) else np.asarray(last, float)
    b = prev.to_vector() if isinstance(prev, KernelParams) else np.asarray(prev, float)
    if a.shape != b.shape:
        raise ValueError(f"parameter vectors differ in length: {a.size} vs {b.size}")
    return bool(np.linalg.norm(a - b) < rho_fraction * np.linalg.norm(b))


def _valid(vec):
    return np.all(np.isfinite(vec)) and np.all(vec > 0)


def _mlm_objective(dataset, noise_variance, prior_mean):
    def fun(vec):
        if not _valid(vec):
            return np.inf, np.full(vec.shape, np.nan)
        try:
            v, g = log_marginal_likelihood_and_grad(
                dataset, KernelParams.from_vector(vec), noise_variance, prior_mean)
        except NumericalError:
            return np.inf, np.full(vec.shape, np.nan)
        return -v, -g
    return fun


def _loo_objective(dataset, noise_variance, prior_mean):
    def value(vec):
        return -log_pseudo_likelihood(dataset, KernelParams.from_vector(vec),
                                      noise_variance, prior_mean)

    def fun(vec):
        if not _valid(vec):
            return np.inf, np.full(vec.shape, np.nan)
        try:
            v = value(vec)
            grad = np.empty_like(vec)
            for k in range(vec.size):
                h = LOO_FD_STEP * vec[k]
                up, down = vec.copy(), vec.copy()
                up[k] += h
                down[k] -= h
                grad[k] = (value(up) - value(down)) / (2.0 * h)
        except NumericalError:
            return np.inf, np.full(vec.shape, np.nan)
        return v, grad
    return fun


def _in_log_space(fun):
    def wrapped(theta):
        if np.any(theta > 700):
            return np.inf, np.full(theta.shape, np.nan)
        lam = np.exp(theta)
        v, g = fun(lam)
        return v, g * lam
    return wrapped


def optimize_params(dataset: Dataset, kind: Kind, optimizer: Optimizer,
                    start: KernelParams, bounds: Bounds,
                    noise_variance: float = 1e-4, prior_mean: float = 0.0,
                    tol: Tolerances = DEFAULT_TOLERANCES) -> KernelParams:
    """Maximize the evidence (MLM) or the LOO pseudo-likelihood from ``start``.

    L-BFGS-B works on the raw parameters inside ``bounds``; BFGS works on
    their logarithms, unconstrained.
    """
    if kind is Kind.LOO_CV:
        fun = _loo_objective(dataset, noise_variance, prior_mean)
    else:
        fun = _mlm_objective(dataset, noise_variance, prior_mean)
    starts = [start] if isinstance(start, KernelParams) else list(start)
    best_vec, best_val = None, np.inf
    for p0 in starts:
        x0 = p0.to_vector()
        try:
            if optimizer is Optimizer.LBFGSB:
                res = lbfgsb_minimize(fun, bounds.project(x0), bounds, tol)
                vec = res.argmin
            else:
                res = bfgs_minimize(_in_log_space(fun), np.log(x0), tol)
                vec = np.exp(res.argmin)
        except ValueError:
            # objective not finite at this start
            continue
        if _valid(vec) and res.value < best_val:
            best_vec, best_val = vec, res.value
    if best_vec is None:
        raise NumericalError("no start produced valid kernel parameters")
    return KernelParams.from_vector(best_vec)


def select_params(dataset: Dataset, strategy: SelectionStrategy,
                  history: ParamHistory, bounds: Optional[Bounds] = None,
                  noise_variance: float = 1e-4, prior_mean: float = 0.0,
                  tol: Tolerances = DEFAULT_TOLERANCES) -> Selection:
    """Kernel parameters for the current iteration.

    Returns a :class:`Selection`. ``was_optimized`` is false both for a
    threshold skip and for a fallback after a numerical failure; ``failed``
    tells the two apart.
    """
    if bounds is None:
        bounds = default_bounds(dataset.dim)
    if strategy.kind is Kind.TG_MLM and len(history) >= 2:
        forced = (strategy.recheck_every is not None
                  and history.trailing_skips() >= strategy.recheck_every)
        if not forced and threshold_check(history[-1].params, history[-2].params,
                                          strategy.rho_fraction):
            return Selection(history[-1].params, False)

    starts = [KernelParams.ones(dataset.dim)]
    if len(history) and strategy.warm_start:
        starts.insert(0, history.last)
    try:
        params = optimize_params(dataset, strategy.kind, strategy.optimizer, starts,
                                 bounds, noise_variance, prior_mean, tol)
    except (NumericalError, ValueError) as err:
        if not len(history):
            raise
        logger.warning("model selection failed (%s); reusing previous parameters", err)
        return Selection(history[-1].params, False, True)
    return Selection(params, True)


def timed_select(dataset, strategy, history, bounds=None, noise_variance=1e-4,
                 prior_mean=0.0, tol=DEFAULT_TOLERANCES):
    """:func:`select_params` plus the elapsed wall time in seconds."""
    t0 = time.perf_counter()
    sel = select_params(dataset, strategy, history, bounds, noise_variance,
                        prior_mean, tol)
    return sel, time.perf_counter() - t0
