"""Bayesian optimization loop with pluggable kernel-parameter selection."""

from __future__ import annotations

import logging
import time
from dataclasses import asdict, dataclass, field
from typing import Callable, Optional

import numpy as np

from .acquisition import DomainBox, optimize_acquisition
from .gp import Dataset, fit
from .model_selection import (
    ParamHistory,
    SelectionStrategy,
    default_bounds,
    timed_select,
)
from .optim import Bounds

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class BOConfig:
    """Settings for one optimization run.

    With ``scale_inputs`` the surrogate sees the domain mapped onto the unit
    cube, so the parameter bounds read the same for every problem. With
    ``standardize_targets`` it is fit to observations shifted by their mean
    and divided by their standard deviation.
    """

    domain: DomainBox
    budget: int
    strategy: SelectionStrategy = field(default_factory=SelectionStrategy)
    n_initial: int = 3
    noise_variance: float = 1e-4
    seed: int = 0
    param_bounds: Optional[Bounds] = None
    n_starts: int = 100
    scale_inputs: bool = True
    standardize_targets: bool = True

    def __post_init__(self):
        if not isinstance(self.domain, Bounds):
            object.__setattr__(self, "domain", DomainBox(*self.domain))
        if self.n_initial < 1:
            raise ValueError("need at least one initial point")
        if self.budget < self.n_initial:
            raise ValueError("budget must be at least the number of initial points")
        if self.param_bounds is None:
            object.__setattr__(self, "param_bounds", default_bounds(self.domain.dim))
        elif self.param_bounds.dim != self.domain.dim + 1:
            raise ValueError("param_bounds must cover signal plus one length-scale per dimension")


@dataclass
class IterationRecord:
    iter: int
    x: list
    y: float
    best_y: float
    t_model_sel_s: float = 0.0
    t_acq_s: float = 0.0
    was_optimized: bool = False
    skipped: bool = False
    selection_failed: bool = False
    acq_degraded: bool = False
    params: Optional[list] = None


TIMING_FIELDS = ("t_model_sel_s", "t_acq_s")


@dataclass
class RunRecord:
    n_initial: int
    iterations: list = field(default_factory=list)
    error: Optional[str] = None

    @property
    def observations(self) -> np.ndarray:
        return np.array([it.y for it in self.iterations])

    @property
    def best_x(self):
        return best_point(self)[0] if self.iterations else None

    @property
    def best_y(self):
        return best_point(self)[1] if self.iterations else None

    @property
    def n_optimized(self) -> int:
        return sum(it.was_optimized for it in self.iterations)

    @property
    def skip_count(self) -> int:
        return sum(it.skipped for it in self.iterations)

    def to_dict(self, timings: bool = True) -> dict:
        iters = [asdict(it) for it in self.iterations]
        if not timings:
            for it in iters:
                for k in TIMING_FIELDS:
                    it.pop(k)
        best_x, best_y = (best_point(self) if self.iterations else (None, None))
        return {
            "n_initial": self.n_initial,
            "iterations": iters,
            "best_x": None if best_x is None else [float(v) for v in best_x],
            "best_y": best_y,
            "skip_count": self.skip_count,
            "error": self.error,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "RunRecord":
        its = [IterationRecord(**it) for it in data["iterations"]]
        return cls(data["n_initial"], its, data.get("error"))


def best_point(record):
    """``(x, y)`` of the lowest observation; ties go to the earliest."""
    iters = record.iterations if isinstance(record, RunRecord) else record
    if not iters:
        raise ValueError("record has no observations")
    ys = np.array([it.y for it in iters])
    k = int(np.argmin(ys))
    return np.array(iters[k].x), float(ys[k])


def _rngs(seed):
    init_seq, acq_seq = np.random.SeedSequence(seed).spawn(2)
    return np.random.default_rng(init_seq), np.random.default_rng(acq_seq)


def initial_design(domain: DomainBox, n: int, seed: int) -> np.ndarray:
    """Uniform i.i.d. points; identical for every strategy sharing ``seed``."""
    rng, _ = _rngs(seed)
    return rng.uniform(domain.lower, domain.upper, size=(n, domain.dim))


class _Aborted(Exception):
    pass


def run_bo(objective: Callable, config: BOConfig,
           callback: Optional[Callable] = None) -> RunRecord:
    """Minimize ``objective`` over ``config.domain``.

    The first ``n_initial`` points are uniform random; every later point
    maximizes expected improvement under a GP whose kernel parameters come
    from ``config.strategy``. ``callback(record)`` runs after each
    observation. A non-finite observation stops the run, and the partial
    record comes back with ``error`` set.
    """
    domain = config.domain
    init_rng, acq_rng = _rngs(config.seed)
    record = RunRecord(config.n_initial)
    X, Y = [], []

    def observe(x, **extra):
        y = float(objective(np.array(x)))
        if not np.isfinite(y):
            record.error = f"objective returned {y} at {list(x)}"
            raise _Aborted
        X.append(np.array(x, dtype=float))
        Y.append(y)
        best = min(Y) if len(record.iterations) == 0 else min(record.iterations[-1].best_y, y)
        record.iterations.append(IterationRecord(len(Y), [float(v) for v in x], y, best, **extra))
        if callback is not None:
            callback(record)

    history = ParamHistory()
    width = domain.upper - domain.lower
    if config.scale_inputs:
        gp_domain = DomainBox(np.zeros(domain.dim), np.ones(domain.dim))
    else:
        gp_domain = domain
    try:
        for x in init_rng.uniform(domain.lower, domain.upper,
                                  size=(config.n_initial, domain.dim)):
            observe(x)
        for _ in range(config.n_initial, config.budget):
            Xa, Ya = np.array(X), np.array(Y)
            if config.scale_inputs:
                Xa = (Xa - domain.lower) / width
            if config.standardize_targets:
                scale = float(np.std(Ya)) or 1.0
                Ya = (Ya - np.mean(Ya)) / scale
            data = Dataset(Xa, Ya)
            t0 = time.perf_counter()
            try:
                sel, _ = timed_select(data, config.strategy, history,
                                      config.param_bounds, config.noise_variance)
                gp = fit(data, sel.params, config.noise_variance)
            except Exception as err:  # noqa: BLE001 - surfaced in the record
                record.error = f"model selection failed: {err}"
                raise _Aborted
            t_sel = time.perf_counter() - t0
            history.append(sel.params, sel.was_optimized, t_sel, sel.failed)

            t0 = time.perf_counter()
            u, info = optimize_acquisition(gp, float(Ya.min()), gp_domain,
                                           config.n_starts, acq_rng, full_output=True)
            if config.scale_inputs:
                u = np.clip(domain.lower + u * width, domain.lower, domain.upper)
            t_acq = time.perf_counter() - t0
            observe(
                u,
                t_model_sel_s=t_sel,
                t_acq_s=t_acq,
                was_optimized=sel.was_optimized,
                skipped=not sel.was_optimized and not sel.failed,
                selection_failed=sel.failed,
                acq_degraded=info["degraded"],
                params=[float(v) for v in sel.params.to_vector()],
            )
    except _Aborted:
        logger.warning("run aborted: %s", record.error)
    return record
