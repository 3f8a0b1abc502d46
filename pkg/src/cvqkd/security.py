"""Optimization and root finding on top of the key-rate bound.

Displacement is optimized by a coarse log-spaced scan followed by
golden-section refinement around the best node.  Noise and squeezing
limits are found by bisection on the optimized rate.  A configuration
counts as secure only when its rate is strictly positive.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import partial
from typing import Callable, NamedTuple, Optional, Sequence

import numpy as np
from scipy import optimize

from .errors import DomainError
from .protocol import Channel, Preparation
from .rates import DIRECTIONS, Direction, Reading, rate_value

SIGMA_BOUNDS = (1e-4, 100.0)
COARSE_POINTS = 60
SIGMA_RTOL = 1e-6
EPSILON_BOUNDS = (0.0, 2.0)
EPSILON_TOL = 1e-5
V_BOUNDS = (1e-3, 1.0)
V_TOL = 1e-4
BOUNDARY_TOL = 1e-4
DB_PER_KM = 0.2


# -- parallel helpers ----------------------------------------------------------

def worker_count() -> int:
    """Worker processes allowed by ``CVQKD_THREADS`` (0 or unset means all CPUs)."""
    raw = os.environ.get("CVQKD_THREADS", "0").strip() or "0"
    try:
        n = int(raw)
    except ValueError:
        raise DomainError(f"CVQKD_THREADS must be an integer, got {raw!r}")
    if n < 0:
        raise DomainError("CVQKD_THREADS must be non-negative")
    return n or (os.cpu_count() or 1)


def pmap(fn: Callable, items: Sequence) -> list:
    """Order-preserving map, spread over processes when more than one worker is allowed."""
    items = list(items)
    workers = min(worker_count(), len(items))
    if workers <= 1:
        return [fn(item) for item in items]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


# -- displacement optimization -------------------------------------------------

class Optimum(NamedTuple):
    sigma_x: float
    sigma_p: float
    rate: float

    @property
    def secure(self) -> bool:
        return self.rate > 0

    @property
    def sigma(self) -> float:
        return self.sigma_x


def _maximize_1d(f: Callable[[float], float], lo: float, hi: float,
                 points: int = COARSE_POINTS, rtol: float = SIGMA_RTOL) -> tuple[float, float]:
    grid = np.logspace(math.log10(lo), math.log10(hi), points)
    values = np.array([f(s) for s in grid])
    i = int(np.argmax(values))
    if i == 0 or i == points - 1:
        return float(grid[i]), float(values[i])
    neg = lambda s: -f(s)
    try:
        x = optimize.golden(neg, brack=(grid[i - 1], grid[i], grid[i + 1]), tol=rtol)
    except ValueError:
        # flat plateau: the bracket condition fails, the scan node is as good as it gets
        return float(grid[i]), float(values[i])
    fx = f(x)
    if fx < values[i]:
        return float(grid[i]), float(values[i])
    return float(x), float(fx)


def optimize_displacement(v: float, ch: Channel, beta: float, direction: Direction = "rr",
                          mode: str = "symmetric", reading: Reading = "full",
                          bounds: tuple[float, float] = SIGMA_BOUNDS) -> Optimum:
    """Maximize the key rate over displacement variance.

    ``mode="symmetric"`` uses one variance for both quadratures;
    ``"independent"`` runs coordinate ascent over ``sigma_x`` and ``sigma_p``.
    The returned rate may be negative, in which case ``secure`` is False.
    """
    if direction not in DIRECTIONS:
        raise DomainError(f"direction must be 'dr' or 'rr', got {direction!r}")
    rate = lambda sx, sp: rate_value(Preparation(v, sx, sp), ch, beta, direction, reading)
    lo, hi = bounds
    if mode == "symmetric":
        s, r = _maximize_1d(lambda s: rate(s, s), lo, hi)
        return Optimum(s, s, r)
    if mode != "independent":
        raise DomainError(f"mode must be 'symmetric' or 'independent', got {mode!r}")
    sx, best = _maximize_1d(lambda s: rate(s, s), lo, hi)
    sp = sx
    for _ in range(20):
        sx, _r = _maximize_1d(lambda s: rate(s, sp), lo, hi)
        sp, r = _maximize_1d(lambda s: rate(sx, s), lo, hi)
        done = abs(r - best) < 1e-8
        best = max(best, r)
        if done:
            break
    return Optimum(sx, sp, best)


# -- noise tolerance ------------------------------------------------------------

@dataclass
class NoiseToleranceResult:
    v: float
    beta: float
    eta: float
    direction: str
    epsilon_max: float
    sigma_opt: float
    iterations: int
    converged: bool
    secure: bool


def max_tolerable_noise(v: float, eta: float, beta: float, direction: Direction = "rr",
                        reading: Reading = "full", tol: float = EPSILON_TOL) -> NoiseToleranceResult:
    """Largest excess noise for which the optimized rate stays positive."""
    best = lambda eps: optimize_displacement(v, Channel(eta, eps), beta, direction, reading=reading)
    at_zero = best(0.0)
    if not at_zero.secure:
        return NoiseToleranceResult(v, beta, eta, direction, 0.0, at_zero.sigma, 0, True, False)
    lo, hi = EPSILON_BOUNDS
    at_hi = best(hi)
    if at_hi.secure:
        return NoiseToleranceResult(v, beta, eta, direction, hi, at_hi.sigma, 0, False, True)
    root, info = optimize.bisect(lambda e: best(e).rate, lo, hi, xtol=tol, full_output=True,
                                 disp=False)
    # report the largest bracket end that is still secure
    eps = root
    opt = best(eps)
    while not opt.secure and eps > 0:
        eps = max(eps - tol, 0.0)
        opt = best(eps)
    return NoiseToleranceResult(v, beta, eta, direction, eps, opt.sigma, info.iterations,
                                info.converged, True)


class SqueezingLimit(NamedTuple):
    v_max: float
    secure: bool


def max_squeezed_variance_dr(eta: float, beta: float, tol: float = V_TOL,
                             reading: Reading = "full") -> SqueezingLimit:
    """Largest signal variance giving a positive optimized DR rate on a pure-loss channel."""
    if not 0.0 < eta <= 1.0:
        raise DomainError(f"transmittance must lie in (0, 1], got {eta}")
    ch = Channel(eta, 0.0)
    rate = lambda v: optimize_displacement(v, ch, beta, "dr", reading=reading).rate
    lo, hi = V_BOUNDS
    if rate(hi) > 0:
        return SqueezingLimit(1.0, True)
    if rate(lo) <= 0:
        return SqueezingLimit(0.0, False)
    # invariant: rate(lo) > 0 >= rate(hi)
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if rate(mid) > 0:
            lo = mid
        else:
            hi = mid
    return SqueezingLimit(lo, True)


# -- closed-form limits ---------------------------------------------------------

def dr_coherent_beta_threshold(eta: float) -> float:
    """Efficiency ``1/eta - 1`` required by coherent-state DR (individual attacks)."""
    if not 0.5 < eta < 1.0:
        raise DomainError(f"threshold defined for eta in (0.5, 1), got {eta}")
    return 1.0 / eta - 1.0


def sigma_limits_high_squeezing(beta: float) -> tuple[float, float]:
    """Secure displacement interval for strongly squeezed signals and weak transmittance."""
    if not 0.0 <= beta <= 1.0:
        raise DomainError(f"beta must lie in [0, 1], got {beta}")
    root = math.sqrt(beta)
    hi = math.inf if beta == 1.0 else 1.0 / (1.0 - root)
    return 1.0 / (1.0 + root), hi


def distance_to_transmittance(d_km: float, db_per_km: float = DB_PER_KM) -> float:
    if d_km < 0:
        raise DomainError(f"distance must be non-negative, got {d_km}")
    return 10.0 ** (-db_per_km * d_km / 10.0)


# -- sweeps -----------------------------------------------------------------------

@dataclass(frozen=True)
class Axis:
    name: str
    min: float
    max: float
    count: int
    spacing: str = "linear"

    def __post_init__(self):
        if self.count < 2:
            raise DomainError(f"axis {self.name}: count must be >= 2")
        if not self.min < self.max:
            raise DomainError(f"axis {self.name}: min must be below max")
        if self.spacing not in ("linear", "log"):
            raise DomainError(f"axis {self.name}: spacing must be 'linear' or 'log'")
        if self.spacing == "log" and self.min <= 0:
            raise DomainError(f"axis {self.name}: log spacing needs positive bounds")

    def values(self) -> np.ndarray:
        if self.spacing == "log":
            return np.logspace(math.log10(self.min), math.log10(self.max), self.count)
        return np.linspace(self.min, self.max, self.count)


@dataclass(frozen=True)
class SweepGrid:
    """Axes plus the parameters held fixed during a sweep (``eta``, ``epsilon``)."""

    axes: tuple
    direction: Direction = "rr"
    beta: float = 1.0
    fixed: dict = field(default_factory=dict)

    def axis(self, name: str) -> Axis:
        for a in self.axes:
            if a.name == name:
                return a
        raise DomainError(f"grid has no axis named {name!r}")


@dataclass
class RegionResult:
    v: np.ndarray
    sigma: np.ndarray
    rate: np.ndarray  # shape (len(v), len(sigma))
    boundary: list  # (v, sigma) points where the rate changes sign

    @property
    def secure(self) -> np.ndarray:
        return self.rate > 0


def _region_column(v: float, sigmas, ch: Channel, beta: float, direction: str, reading: str):
    f = lambda s: rate_value(Preparation(v, s, s), ch, beta, direction, reading)
    rates = np.array([f(s) for s in sigmas])
    secure = rates > 0
    boundary = []
    for j in np.flatnonzero(secure[1:] != secure[:-1]):
        lo, hi = float(sigmas[j]), float(sigmas[j + 1])
        f_lo = rates[j] > 0
        while hi - lo > BOUNDARY_TOL:
            mid = 0.5 * (lo + hi)
            if (f(mid) > 0) == f_lo:
                lo = mid
            else:
                hi = mid
        boundary.append((v, 0.5 * (lo + hi)))
    return rates, boundary


def security_region(grid: SweepGrid, reading: Reading = "full") -> RegionResult:
    """Sign of the key rate over a ``(v, sigma)`` grid with per-column boundary refinement."""
    vs = grid.axis("v").values()
    sigmas = grid.axis("sigma").values()
    ch = Channel(grid.fixed.get("eta", 1.0), grid.fixed.get("epsilon", 0.0))
    column = partial(_region_column, sigmas=sigmas, ch=ch, beta=grid.beta,
                     direction=grid.direction, reading=reading)
    results = pmap(column, [float(v) for v in vs])
    rate = np.vstack([r for r, _ in results])
    boundary = [pt for _, b in results for pt in b]
    return RegionResult(vs, sigmas, rate, boundary)


class CurvePoint(NamedTuple):
    distance_km: float
    eta: float
    sigma_opt: float
    rate: float


def _curve_point(d: float, v: float, epsilon: float, beta: float, direction: str,
                 reading: str) -> CurvePoint:
    eta = distance_to_transmittance(d)
    opt = optimize_displacement(v, Channel(eta, epsilon), beta, direction, reading=reading)
    return CurvePoint(d, eta, opt.sigma, opt.rate)


def rate_vs_distance_curve(v: float, epsilon: float, beta: float, direction: Direction,
                           d_grid: Sequence[float], reading: Reading = "full") -> list[CurvePoint]:
    point = partial(_curve_point, v=v, epsilon=epsilon, beta=beta, direction=direction,
                    reading=reading)
    return pmap(point, [float(d) for d in d_grid])


def max_secure_distance(curve: Sequence[CurvePoint]) -> Optional[float]:
    """Largest distance on the curve with a strictly positive rate."""
    secure = [p.distance_km for p in curve if p.rate > 0]
    return max(secure) if secure else None


TABLE1_BETAS = (0.2, 0.4, 0.6, 0.8)
TABLE1_VS = (1.0, 0.5)


def _table_cell(args, eta: float, direction: str, reading: str) -> NoiseToleranceResult:
    beta, v = args
    return max_tolerable_noise(v, eta, beta, direction, reading=reading)


def noise_table(betas=TABLE1_BETAS, vs=TABLE1_VS, eta: float = 0.1, direction: Direction = "rr",
                reading: Reading = "full") -> list[NoiseToleranceResult]:
    """Maximum tolerable noise for every ``(beta, v)`` pair, beta-major."""
    cell = partial(_table_cell, eta=eta, direction=direction, reading=reading)
    return pmap(cell, [(b, v) for b in betas for v in vs])
