"""Scalar numerical kernels: adaptive quadrature, bracketed monotone root
finding, and standard-normal special functions.

Quadrature is globally adaptive Gauss-Legendre: each segment is integrated
with a 21-point rule, the deviation from the embedded 10-point rule serves as
the error estimate, and the segment with the largest estimate is bisected
until the total estimate meets the tolerance.  Infinite endpoints are mapped
to a finite interval with the substitution x = tan(u).

Root finding is plain bisection on a sign-change bracket, optionally polished
with a few Newton steps when a derivative is supplied.  A vectorized variant
(`solve_monotone_vec`) runs the same safeguarded Newton-bisection scheme
elementwise over arrays; it is the workhorse behind all conditional-quantile
solves in this package.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr, ndtri

__all__ = [
    "QuadratureConfig",
    "RootConfig",
    "QuadratureBudgetError",
    "BracketError",
    "ConvergenceError",
    "integrate_1d",
    "find_root_monotone",
    "solve_monotone_vec",
    "std_normal_cdf",
    "std_normal_pdf",
    "std_normal_log_pdf",
    "std_normal_quantile",
]

LOG_2PI = math.log(2.0 * math.pi)


class QuadratureBudgetError(RuntimeError):
    """Subdivision budget exhausted; carries the best estimate so far."""

    def __init__(self, estimate: float, residual: float, max_subdivisions: int):
        self.estimate = estimate
        self.residual = residual
        super().__init__(
            f"quadrature budget of {max_subdivisions} subdivisions exhausted; "
            f"best estimate {estimate!r} with residual {residual:.3e}"
        )


class BracketError(ValueError):
    """The supplied interval does not bracket a sign change."""


class ConvergenceError(RuntimeError):
    """Iteration budget exhausted before reaching the requested tolerance."""


@dataclass(frozen=True)
class QuadratureConfig:
    abs_tol: float = 1e-10
    rel_tol: float = 1e-9
    max_subdivisions: int = 10_000

    def __post_init__(self):
        if not self.abs_tol > 0:
            raise ValueError(f"abs_tol must be positive, got {self.abs_tol}")
        if not self.rel_tol > 0:
            raise ValueError(f"rel_tol must be positive, got {self.rel_tol}")
        if not self.max_subdivisions >= 1:
            raise ValueError(f"max_subdivisions must be >= 1, got {self.max_subdivisions}")


@dataclass(frozen=True)
class RootConfig:
    x_tol: float = 1e-12
    f_tol: float = 1e-12
    max_iterations: int = 256

    def __post_init__(self):
        if not (self.x_tol > 0 and self.f_tol > 0 and self.max_iterations > 0):
            raise ValueError("all RootConfig fields must be positive")


# 10/21-point Gauss-Legendre pair on [-1, 1]; the 21-point value is kept, the
# difference to the 10-point value estimates its error.
_X10, _W10 = np.polynomial.legendre.leggauss(10)
_X21, _W21 = np.polynomial.legendre.leggauss(21)


def _gauss_pair(f, a: float, b: float) -> tuple[float, float]:
    half = 0.5 * (b - a)
    mid = 0.5 * (a + b)
    v21 = half * float(np.dot(_W21, np.asarray(f(mid + half * _X21), dtype=float)))
    v10 = half * float(np.dot(_W10, np.asarray(f(mid + half * _X10), dtype=float)))
    return v21, abs(v21 - v10)


def _tan_substituted(f):
    def g(u):
        t = np.tan(np.asarray(u, dtype=float))
        weight = 1.0 + t * t
        values = np.asarray(f(t), dtype=float) * weight
        # the weight overflows only past |x| ~ 1e154, where any integrable
        # target of this package is identically zero
        return np.where(np.isfinite(values), values, 0.0)

    return g


def integrate_1d(f, a: float, b: float, cfg: QuadratureConfig | None = None) -> float:
    """Integral of ``f`` over [a, b] to ``max(abs_tol, rel_tol * |I|)``.

    ``f`` must accept a float or a 1-D ndarray of evaluation points.  Infinite
    endpoints are allowed.  Raises :class:`QuadratureBudgetError` when the
    subdivision budget runs out before the tolerance is met.
    """
    cfg = cfg or QuadratureConfig()
    if math.isnan(a) or math.isnan(b):
        raise ValueError("integration endpoints must not be NaN")
    if a > b:
        raise ValueError(f"expected a <= b, got a={a}, b={b}")
    if a == b:
        return 0.0
    if math.isinf(a) or math.isinf(b):
        return integrate_1d(_tan_substituted(f), math.atan(a), math.atan(b), cfg)

    value, err = _gauss_pair(f, a, b)
    total_value, total_err = value, err
    heap = [(-err, 0, a, b, value)]
    tiebreak = 1
    splits = 0
    while total_err > max(cfg.abs_tol, cfg.rel_tol * abs(total_value)):
        if splits >= cfg.max_subdivisions:
            raise QuadratureBudgetError(total_value, total_err, cfg.max_subdivisions)
        neg_err, _, lo, hi, old_value = heapq.heappop(heap)
        mid = 0.5 * (lo + hi)
        v_left, e_left = _gauss_pair(f, lo, mid)
        v_right, e_right = _gauss_pair(f, mid, hi)
        total_value += v_left + v_right - old_value
        total_err += e_left + e_right + neg_err  # neg_err == -old_err
        heapq.heappush(heap, (-e_left, tiebreak, lo, mid, v_left))
        heapq.heappush(heap, (-e_right, tiebreak + 1, mid, hi, v_right))
        tiebreak += 2
        splits += 1
    # resum the segment values to shed the accumulation error of the updates
    return float(sum(entry[4] for entry in heap))


def find_root_monotone(g, lo: float, hi: float, cfg: RootConfig | None = None, dg=None) -> float:
    """Root of a strictly increasing ``g`` on a bracket [lo, hi].

    Requires ``g(lo) <= 0 <= g(hi)``; raises :class:`BracketError` otherwise.
    Bisection guarantees convergence to ``x_tol`` bracket width or ``f_tol``
    residual; when ``dg`` is given, up to three Newton steps (clamped to the
    final bracket) polish the bisection result.
    """
    cfg = cfg or RootConfig()
    if not lo <= hi:
        raise ValueError(f"expected lo <= hi, got lo={lo}, hi={hi}")
    g_lo = g(lo)
    g_hi = g(hi)
    if g_lo > 0.0 or g_hi < 0.0:
        raise BracketError(
            f"g must change sign on the bracket: g({lo}) = {g_lo}, g({hi}) = {g_hi}"
        )
    if abs(g_lo) <= cfg.f_tol:
        return lo
    if abs(g_hi) <= cfg.f_tol:
        return hi

    x = 0.5 * (lo + hi)
    converged = False
    for _ in range(cfg.max_iterations):
        gx = g(x)
        if abs(gx) <= cfg.f_tol:
            converged = True
            break
        if gx < 0.0:
            lo = x
        else:
            hi = x
        if hi - lo <= cfg.x_tol:
            x = 0.5 * (lo + hi)
            converged = True
            break
        x = 0.5 * (lo + hi)
    if not converged:
        raise ConvergenceError(
            f"no convergence within {cfg.max_iterations} iterations; bracket [{lo}, {hi}]"
        )
    if dg is not None:
        for _ in range(3):
            d = dg(x)
            if not d > 0.0:
                break
            step = g(x) / d
            candidate = x - step
            if not lo <= candidate <= hi:
                break
            x = candidate
            if abs(step) <= cfg.x_tol:
                break
    return x


def solve_monotone_vec(f_df, lo: np.ndarray, hi: np.ndarray, cfg: RootConfig | None = None) -> np.ndarray:
    """Elementwise root solve for increasing functions on bracket arrays.

    ``f_df(x)`` must return the pair ``(f(x), f'(x))`` evaluated elementwise,
    with ``f(lo) <= 0 <= f(hi)`` for every element.  Each element takes a
    Newton step when it lands inside its current bracket and a bisection step
    otherwise, so convergence is guaranteed and typically quadratic.
    """
    cfg = cfg or RootConfig()
    lo = np.array(lo, dtype=float)
    hi = np.array(hi, dtype=float)
    x = 0.5 * (lo + hi)
    step_old = hi - lo
    frozen = np.zeros(x.shape, dtype=bool)
    for _ in range(cfg.max_iterations):
        fx, dfx = f_df(x)
        negative = fx < 0.0
        np.copyto(lo, x, where=~frozen & negative)
        np.copyto(hi, x, where=~frozen & ~negative)
        frozen |= (np.abs(fx) <= cfg.f_tol) | (hi - lo <= cfg.x_tol)
        if frozen.all():
            return x
        midpoint = 0.5 * (lo + hi)
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            newton = x - fx / dfx
        # take the Newton step only when it stays inside the bracket and
        # progresses at least as fast as bisection would (rtsafe criterion);
        # this rules out slow creep on plateaus of multimodal CDFs
        accept = (
            (newton > lo)
            & (newton < hi)
            & (2.0 * np.abs(fx) <= np.abs(step_old * dfx))
        )
        proposal = np.where(accept, newton, midpoint)
        step_old = np.abs(proposal - x)
        np.copyto(x, proposal, where=~frozen)
    raise ConvergenceError(
        f"{int((~frozen).sum())} of {frozen.size} elements did not converge "
        f"within {cfg.max_iterations} iterations"
    )


def std_normal_cdf(x):
    """Standard normal CDF, elementwise on arrays."""
    return ndtr(x)


def std_normal_pdf(x):
    """Standard normal density, elementwise on arrays."""
    x = np.asarray(x, dtype=float)
    return np.exp(-0.5 * x * x - 0.5 * LOG_2PI)


def std_normal_log_pdf(x):
    x = np.asarray(x, dtype=float)
    return -0.5 * x * x - 0.5 * LOG_2PI


def std_normal_quantile(u):
    """Inverse of the standard normal CDF; requires 0 < u < 1."""
    u_arr = np.asarray(u, dtype=float)
    if np.any(u_arr <= 0.0) or np.any(u_arr >= 1.0):
        raise ValueError("quantile argument must lie strictly inside (0, 1)")
    return ndtri(u)
