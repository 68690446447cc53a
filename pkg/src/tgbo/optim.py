"""Quasi-Newton minimizers: dense BFGS and a projected L-BFGS-B.

Objectives are callables returning ``(value, gradient)``. Non-finite
values at trial points are treated as "too far" by the line searches, so
objectives may signal failure by returning ``inf``.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Tolerances:
    gtol: float = 1e-5
    xtol: float = 1e-9
    maxiter: int = 200
    c1: float = 1e-4
    c2: float = 0.9
    curvature_eps: float = 1e-10
    memory: int = 10
    max_linesearch: int = 30
    # relative decrease stopping rule; disabled at 0
    ftol: float = 0.0


DEFAULT_TOLERANCES = Tolerances()


@dataclass(frozen=True)
class Bounds:
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = np.array(self.lower, dtype=float).ravel()
        hi = np.array(self.upper, dtype=float).ravel()
        if lo.shape != hi.shape:
            raise ValueError("lower and upper bounds differ in length")
        if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
            raise ValueError("bounds must be finite")
        if np.any(lo >= hi):
            raise ValueError("each lower bound must be strictly below its upper bound")
        lo.setflags(write=False)
        hi.setflags(write=False)
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @classmethod
    def uniform(cls, low: float, high: float, dim: int) -> "Bounds":
        return cls(np.full(dim, low), np.full(dim, high))

    @property
    def dim(self) -> int:
        return self.lower.size

    def contains(self, x) -> bool:
        x = np.asarray(x, dtype=float)
        return bool(np.all(x >= self.lower) and np.all(x <= self.upper))

    def project(self, x) -> np.ndarray:
        return np.clip(x, self.lower, self.upper)


@dataclass(frozen=True)
class OptimResult:
    argmin: np.ndarray
    value: float
    iterations: int
    converged: bool
    n_evals: int = 0
    message: str = ""


class _Counted:
    """Wraps an objective, counting calls and tracking the best point seen."""

    def __init__(self, fun):
        self.fun = fun
        self.n = 0
        self.best_x = None
        self.best_f = np.inf

    def __call__(self, x):
        self.n += 1
        f, g = self.fun(x)
        f = float(f)
        g = np.asarray(g, dtype=float)
        if not np.isfinite(f) or not np.all(np.isfinite(g)):
            return np.inf, g
        if f < self.best_f:
            self.best_f = f
            self.best_x = np.array(x, dtype=float)
        return f, g


def _cubic_min(a, fa, da, b, fb, db):
    """Minimizer of the cubic interpolating two points and slopes, or None."""
    d1 = da + db - 3.0 * (fa - fb) / (a - b)
    disc = d1 * d1 - da * db
    if disc < 0:
        return None
    d2 = np.sign(b - a) * np.sqrt(disc)
    denom = db - da + 2.0 * d2
    if denom == 0:
        return None
    t = b - (b - a) * (db + d2 - d1) / denom
    return t if np.isfinite(t) else None


def _zoom(phi, f0, d0, lo, f_lo, d_lo, hi, f_hi, d_hi, tol, budget):
    for _ in range(budget):
        a = None
        if np.isfinite(f_hi) and np.isfinite(d_hi):
            a = _cubic_min(lo, f_lo, d_lo, hi, f_hi, d_hi)
        elif np.isfinite(f_hi):
            # quadratic through f_lo, d_lo, f_hi
            h = hi - lo
            denom = 2.0 * (f_hi - f_lo - d_lo * h)
            if denom > 0:
                a = lo - d_lo * h * h / denom
        left, right = min(lo, hi), max(lo, hi)
        width = right - left
        if a is None or not (left + 0.1 * width <= a <= right - 0.1 * width):
            a = 0.5 * (lo + hi)
        if width <= 1e-16 * max(1.0, abs(right)):
            return None
        fa, ga, da = phi(a)
        if not np.isfinite(fa) or fa > f0 + tol.c1 * a * d0 or fa >= f_lo:
            hi, f_hi, d_hi = a, fa, da
        else:
            if abs(da) <= -tol.c2 * d0:
                return a, fa, ga
            if da * (hi - lo) >= 0:
                hi, f_hi, d_hi = lo, f_lo, d_lo
            lo, f_lo, d_lo = a, fa, da
    return None


def wolfe_line_search(fun, x, f0, g0, p, alpha0=1.0, tol=DEFAULT_TOLERANCES):
    """Step length satisfying the strong Wolfe conditions.

    Returns ``(alpha, f, g)`` or ``None`` when no acceptable step is found
    within ``tol.max_linesearch`` evaluations.
    """
    d0 = float(g0 @ p)
    if not d0 < 0:
        return None

    def phi(a):
        f, g = fun(x + a * p)
        d = float(g @ p) if np.isfinite(f) else np.nan
        return f, g, d

    a_prev, f_prev, d_prev = 0.0, f0, d0
    a = alpha0
    budget = tol.max_linesearch
    for i in range(budget):
        fa, ga, da = phi(a)
        if not np.isfinite(fa) or fa > f0 + tol.c1 * a * d0 or (i > 0 and fa >= f_prev):
            return _zoom(phi, f0, d0, a_prev, f_prev, d_prev, a, fa, da, tol,
                         budget - i - 1)
        if abs(da) <= -tol.c2 * d0:
            return a, fa, ga
        if da >= 0:
            return _zoom(phi, f0, d0, a, fa, da, a_prev, f_prev, d_prev, tol,
                         budget - i - 1)
        a_prev, f_prev, d_prev = a, fa, da
        a = 2.0 * a
    return None


def _secant_refine(fun, x, f0, g0, p, alpha, fa, ga, tol):
    """One secant step on the directional derivative from an accepted step.

    Exact on quadratics, which restores finite termination there; the
    refined step is kept only if it is lower and still strong-Wolfe.
    """
    d0 = float(g0 @ p)
    da = float(ga @ p)
    if abs(da) <= 1e-3 * abs(d0) or d0 - da == 0:
        return alpha, fa, ga
    a = alpha * d0 / (d0 - da)
    if not (np.isfinite(a) and a > 0) or abs(a - alpha) <= 1e-12 * alpha:
        return alpha, fa, ga
    fb, gb = fun(x + a * p)
    if (np.isfinite(fb) and fb < fa and fb <= f0 + tol.c1 * a * d0
            and abs(float(gb @ p)) <= -tol.c2 * d0):
        return a, fb, gb
    return alpha, fa, ga


def _initial_checks(f, g, x0):
    if not np.isfinite(f) or not np.all(np.isfinite(g)):
        raise ValueError(f"objective is not finite at the starting point {x0}")
    if g.shape != x0.shape:
        raise ValueError(f"gradient shape {g.shape} does not match x0 shape {x0.shape}")


def bfgs_minimize(fun, x0, tol: Tolerances = DEFAULT_TOLERANCES) -> OptimResult:
    """Unconstrained BFGS with a dense inverse-Hessian approximation.

    Parameters
    ----------
    fun : callable
        ``fun(x) -> (value, gradient)``.
    x0 : array_like
        Starting point.
    tol : Tolerances
        Stopping rule, line-search and update constants.
    """
    x = np.array(x0, dtype=float).ravel()
    obj = _Counted(fun)
    f, g = obj(x)
    _initial_checks(f, g, x)
    n = x.size
    H = np.eye(n)
    identity = True
    it = 0
    converged, message = False, "maximum iterations reached"
    while it < tol.maxiter:
        if np.max(np.abs(g)) < tol.gtol:
            converged, message = True, "gradient below tolerance"
            break
        p = -H @ g
        if not g @ p < 0:
            H, identity = np.eye(n), True
            p = -g
        alpha0 = min(1.0, 1.0 / np.linalg.norm(g)) if identity else 1.0
        step = wolfe_line_search(obj, x, f, g, p, alpha0, tol)
        if step is None and not identity:
            H, identity = np.eye(n), True
            p = -g
            step = wolfe_line_search(obj, x, f, g, p, min(1.0, 1.0 / np.linalg.norm(g)), tol)
        if step is None:
            message = "line search failed"
            break
        alpha, f_new, g_new = step
        alpha, f_new, g_new = _secant_refine(obj, x, f, g, p, alpha, f_new, g_new, tol)
        s = alpha * p
        x_new = x + s
        yv = g_new - g
        it += 1
        f_old = f
        x, f, g = x_new, f_new, g_new
        if np.linalg.norm(s) < tol.xtol:
            converged, message = True, "step below tolerance"
            break
        if tol.ftol > 0 and f_old - f <= tol.ftol * max(abs(f_old), abs(f), 1.0):
            converged, message = True, "relative decrease below tolerance"
            break
        sy = float(s @ yv)
        if sy > tol.curvature_eps:
            if identity:
                H = np.eye(n) * (sy / float(yv @ yv))
                identity = False
            rho = 1.0 / sy
            Hy = H @ yv
            H = (H - rho * (np.outer(s, Hy) + np.outer(Hy, s))
                 + (rho * rho * float(yv @ Hy) + rho) * np.outer(s, s))
    if not converged and obj.best_f < f:
        # a failed line search may have probed a lower point
        x = obj.best_x
        f = obj.best_f
    return OptimResult(x, float(f), it, converged, obj.n, message)


def _two_loop(q, S, Y):
    q = q.copy()
    stack = []
    for s, y in zip(reversed(S), reversed(Y)):
        rho = 1.0 / (s @ y)
        a = rho * (s @ q)
        q -= a * y
        stack.append((rho, a, s, y))
    s, y = S[-1], Y[-1]
    q *= (s @ y) / (y @ y)
    for rho, a, s, y in reversed(stack):
        b = rho * (y @ q)
        q += (a - b) * s
    return q


def lbfgsb_minimize(fun, x0, bounds: Bounds,
                    tol: Tolerances = DEFAULT_TOLERANCES) -> OptimResult:
    """Box-constrained limited-memory BFGS with gradient projection.

    Variables sitting on a bound whose gradient points out of the box are
    held fixed; the two-loop direction is computed on the remaining ones
    and the step is found by projected backtracking. Every iterate is
    feasible.
    """
    x = np.array(x0, dtype=float).ravel()
    if x.size != bounds.dim:
        raise ValueError(f"x0 has {x.size} entries but bounds have {bounds.dim}")
    if not bounds.contains(x):
        raise ValueError(f"starting point {x} lies outside the bounds")
    lo, hi = bounds.lower, bounds.upper
    obj = _Counted(fun)
    f, g = obj(x)
    _initial_checks(f, g, x)
    S, Y = deque(maxlen=tol.memory), deque(maxlen=tol.memory)
    it = 0
    converged, message = False, "maximum iterations reached"
    while it < tol.maxiter:
        pg = np.clip(x - g, lo, hi) - x
        if np.max(np.abs(pg)) < tol.gtol:
            converged, message = True, "projected gradient below tolerance"
            break
        blocked = ((x <= lo) & (g > 0)) | ((x >= hi) & (g < 0))
        gf = np.where(blocked, 0.0, g)
        if S:
            d = -_two_loop(gf, S, Y)
            d[blocked] = 0.0
            alpha = 1.0
        else:
            d = None
        if d is None or not gf @ d < 0:
            d = -gf
            alpha = min(1.0, 1.0 / np.linalg.norm(gf))
        accepted = None
        for _ in range(tol.max_linesearch):
            xt = np.clip(x + alpha * d, lo, hi)
            s = xt - x
            slope = float(g @ s)
            if not np.any(s) or not slope < 0:
                break
            ft, gt = obj(xt)
            if np.isfinite(ft) and ft <= f + tol.c1 * slope:
                accepted = (xt, ft, gt, s)
                break
            alpha *= 0.5
        if accepted is None:
            message = "line search failed"
            break
        xt, ft, gt, s = accepted
        yv = gt - g
        it += 1
        f_old = f
        x, f, g = xt, ft, gt
        if np.linalg.norm(s) < tol.xtol:
            converged, message = True, "step below tolerance"
            break
        if tol.ftol > 0 and f_old - f <= tol.ftol * max(abs(f_old), abs(f), 1.0):
            converged, message = True, "relative decrease below tolerance"
            break
        if s @ yv > tol.curvature_eps:
            S.append(s)
            Y.append(yv)
    return OptimResult(x, float(f), it, converged, obj.n, message)


def multistart_minimize(fun, starts, bounds: Bounds,
                        tol: Tolerances = DEFAULT_TOLERANCES) -> OptimResult:
    """Run :func:`lbfgsb_minimize` from every start and keep the lowest value."""
    results = multistart_results(fun, starts, bounds, tol)
    return min(results, key=lambda r: r.value)


def multistart_results(fun, starts, bounds: Bounds,
                       tol: Tolerances = DEFAULT_TOLERANCES) -> list[OptimResult]:
    starts = np.asarray(starts, dtype=float)
    if starts.size == 0:
        raise ValueError("multistart needs at least one starting point")
    starts = starts.reshape(-1, bounds.dim)
    return [lbfgsb_minimize(fun, s, bounds, tol) for s in starts]
