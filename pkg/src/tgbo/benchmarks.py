"""Analytic benchmark functions with their usual domains and global minima.

Reference minimizers were polished with a local optimizer so that the
function value at each one agrees with ``reference_minimum`` to better
than 1e-8.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .acquisition import DomainBox


def beale(x):
    x1, x2 = x
    return ((1.5 - x1 + x1 * x2) ** 2 + (2.25 - x1 + x1 * x2**2) ** 2
            + (2.625 - x1 + x1 * x2**3) ** 2)


def bohachevsky(x):
    # first of the three Bohachevsky forms
    x1, x2 = x
    return (x1**2 + 2.0 * x2**2 - 0.3 * np.cos(3.0 * np.pi * x1)
            - 0.4 * np.cos(4.0 * np.pi * x2) + 0.7)


def branin(x):
    x1, x2 = x
    b = 5.1 / (4.0 * np.pi**2)
    c = 5.0 / np.pi
    t = 1.0 / (8.0 * np.pi)
    return (x2 - b * x1**2 + c * x1 - 6.0) ** 2 + 10.0 * (1.0 - t) * np.cos(x1) + 10.0


def eggholder(x):
    x1, x2 = x
    return (-(x2 + 47.0) * np.sin(np.sqrt(abs(x2 + x1 / 2.0 + 47.0)))
            - x1 * np.sin(np.sqrt(abs(x1 - (x2 + 47.0)))))


def goldstein_price(x):
    x1, x2 = x
    a = 1.0 + (x1 + x2 + 1.0) ** 2 * (
        19.0 - 14.0 * x1 + 3.0 * x1**2 - 14.0 * x2 + 6.0 * x1 * x2 + 3.0 * x2**2)
    b = 30.0 + (2.0 * x1 - 3.0 * x2) ** 2 * (
        18.0 - 32.0 * x1 + 12.0 * x1**2 + 48.0 * x2 - 36.0 * x1 * x2 + 27.0 * x2**2)
    return a * b


_H6_ALPHA = np.array([1.0, 1.2, 3.0, 3.2])
_H6_A = np.array([
    [10.0, 3.0, 17.0, 3.5, 1.7, 8.0],
    [0.05, 10.0, 17.0, 0.1, 8.0, 14.0],
    [3.0, 3.5, 1.7, 10.0, 17.0, 8.0],
    [17.0, 8.0, 0.05, 10.0, 0.1, 14.0],
])
_H6_P = 1e-4 * np.array([
    [1312, 1696, 5569, 124, 8283, 5886],
    [2329, 4135, 8307, 3736, 1004, 9991],
    [2348, 1451, 3522, 2883, 3047, 6650],
    [4047, 8828, 8732, 5743, 1091, 381],
])


def hartmann6(x):
    x = np.asarray(x, dtype=float)
    inner = np.sum(_H6_A * (x - _H6_P) ** 2, axis=1)
    return -float(_H6_ALPHA @ np.exp(-inner))


def holder_table(x):
    x1, x2 = x
    return -abs(np.sin(x1) * np.cos(x2)
                * np.exp(abs(1.0 - np.sqrt(x1**2 + x2**2) / np.pi)))


def rosenbrock(x):
    x1, x2 = x
    return 100.0 * (x2 - x1**2) ** 2 + (1.0 - x1) ** 2


def six_hump_camel(x):
    x1, x2 = x
    return ((4.0 - 2.1 * x1**2 + x1**4 / 3.0) * x1**2 + x1 * x2
            + (-4.0 + 4.0 * x2**2) * x2**2)


@dataclass(frozen=True)
class BenchmarkSpec:
    name: str
    function: Callable = field(repr=False)
    domain: DomainBox
    reference_minimum: float
    reference_minimizers: tuple
    default_budget: int

    @property
    def dimension(self) -> int:
        return self.domain.dim

    def __call__(self, x) -> float:
        return evaluate(self, x)


def evaluate(spec: BenchmarkSpec, x) -> float:
    """Value of ``spec`` at ``x``; ``x`` must lie in the domain."""
    x = np.asarray(x, dtype=float).ravel()
    if x.size != spec.dimension:
        raise ValueError(f"{spec.name} expects {spec.dimension} coordinates, got {x.size}")
    if not spec.domain.contains(x):
        raise ValueError(f"{x} lies outside the {spec.name} domain")
    return float(spec.function(x))


def _box(lower, upper):
    return DomainBox(np.asarray(lower, float), np.asarray(upper, float))


_SPECS = (
    BenchmarkSpec("beale", beale, _box([-4.5, -4.5], [4.5, 4.5]),
                  0.0, ((3.0, 0.5),), 100),
    BenchmarkSpec("bohachevsky", bohachevsky, _box([-100, -100], [100, 100]),
                  0.0, ((0.0, 0.0),), 100),
    BenchmarkSpec("branin", branin, _box([-5, 0], [10, 15]),
                  0.39788735772973816,
                  ((-np.pi, 12.275), (np.pi, 2.275), (3 * np.pi, 2.475)), 50),
    BenchmarkSpec("eggholder", eggholder, _box([-512, -512], [512, 512]),
                  -959.640662720851, ((512.0, 404.2318050882058),), 250),
    BenchmarkSpec("goldstein_price", goldstein_price, _box([-2, -2], [2, 2]),
                  3.0, ((0.0, -1.0),), 50),
    BenchmarkSpec("hartmann6", hartmann6, _box(np.zeros(6), np.ones(6)),
                  -3.3223680114155147,
                  ((0.20168951204427732, 0.15001069402524642, 0.4768739715146167,
                    0.2753324317414594, 0.31165161576290423, 0.657300531475685),),
                  250),
    BenchmarkSpec("holder_table", holder_table, _box([-10, -10], [10, 10]),
                  -19.208502567886743,
                  ((8.055023472141116, 9.664590028909654),
                   (-8.055023472141116, 9.664590028909654),
                   (8.055023472141116, -9.664590028909654),
                   (-8.055023472141116, -9.664590028909654)), 100),
    BenchmarkSpec("rosenbrock", rosenbrock, _box([-5, -5], [10, 10]),
                  0.0, ((1.0, 1.0),), 100),
    BenchmarkSpec("six_hump_camel", six_hump_camel, _box([-3, -2], [3, 2]),
                  -1.0316284534898774,
                  ((0.08984201368301331, -0.7126564032704135),
                   (-0.08984201368301331, 0.7126564032704135)), 100),
)

_ALIASES = {
    "goldsteinprice": "goldstein_price",
    "holdertable": "holder_table",
    "sixhumpcamel": "six_hump_camel",
    "hartmann6d": "hartmann6",
}


def registry() -> list[BenchmarkSpec]:
    """All nine benchmark specifications."""
    return list(_SPECS)


def get(name: str) -> BenchmarkSpec:
    key = name.lower().replace("-", "_")
    key = _ALIASES.get(key.replace("_", ""), key)
    for spec in _SPECS:
        if spec.name == key:
            return spec
    raise KeyError(f"unknown benchmark {name!r}; known: {[s.name for s in _SPECS]}")
