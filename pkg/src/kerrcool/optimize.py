"""Best-cooling searches: detuning (inner) and input power (outer)."""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import minimize_scalar

from .fluctuations import occupation_at
from .model import SystemParams
from .steady_state import NoBistability, bistability_threshold


class NoStableOperatingPoint(ArithmeticError):
    """Every candidate power led to a mechanically unstable system."""


@dataclass(frozen=True)
class DetuningOptimum:
    detuning: float
    n_m: float


@dataclass(frozen=True)
class PowerOptimum:
    n_in: float
    detuning: float
    n_m: float


@dataclass(frozen=True)
class G0SweepRow:
    g0: float
    n_in_kerr: float
    n_m_kerr: float
    n_m_linear_same_power: float
    n_in_linear: float
    n_m_linear_best: float


def optimal_detuning(
    n_in: float,
    params: SystemParams,
    delta_range: Optional[tuple[float, float]] = None,
    n_grid: int = 121,
    policy: str = "lowest",
) -> DetuningOptimum:
    """Minimum over detuning of the phonon number at fixed input flux.

    A uniform grid locates the basin, then a bounded scalar search refines
    inside the two neighbouring cells. The minimum close to bistability is a
    near-cusp, which is why no gradient method is used.
    """
    kappa = params.kappa
    lo, hi = delta_range or (-3.0 * kappa, kappa)
    grid = np.linspace(lo, hi, n_grid)
    values = np.array([occupation_at(d, n_in, params, policy) for d in grid])
    i = int(np.argmin(values))
    if not math.isfinite(values[i]):
        return DetuningOptimum(float("nan"), math.inf)
    a, b = grid[max(i - 1, 0)], grid[min(i + 1, n_grid - 1)]
    res = minimize_scalar(
        lambda d: occupation_at(d, n_in, params, policy),
        bounds=(a, b),
        method="bounded",
        options={"xatol": 1e-9 * kappa},
    )
    if res.fun < values[i]:
        return DetuningOptimum(float(res.x), float(res.fun))
    return DetuningOptimum(float(grid[i]), float(values[i]))


def linear_power_ceiling(params: SystemParams) -> float:
    """Input flux at which the resonant coupling G would reach 5 w_m; far past any optimum."""
    return 25.0 * params.kappa * params.omega_m**2 / (4.0 * params.g0**2)


def optimize_power(
    params: SystemParams,
    cap_fraction: Optional[float] = 0.99,
    n_coarse: int = 9,
    decades: float = 6.0,
    delta_range: Optional[tuple[float, float]] = None,
    n_grid: int = 121,
) -> PowerOptimum:
    """Minimize the best-detuning phonon number over input flux.

    With ``cap_fraction`` set, the flux is limited to that fraction of the
    bistability threshold. ``cap_fraction=None`` (or a linear cavity) searches
    without a cap up to :func:`linear_power_ceiling`.
    """
    if params.g0 <= 0:
        raise ValueError("g0 must be > 0 to optimize backaction cooling")
    if cap_fraction is not None:
        if not 0.0 < cap_fraction <= 1.0:
            raise ValueError("cap_fraction must be in (0, 1]")
        try:
            upper = cap_fraction * bistability_threshold(params)
        except NoBistability:
            upper = linear_power_ceiling(params)
        upper = min(upper, linear_power_ceiling(params))
    else:
        upper = linear_power_ceiling(params)
    log_hi = math.log10(upper)
    log_lo = log_hi - decades
    cache: dict[float, DetuningOptimum] = {}

    def objective(log_n: float) -> float:
        if log_n not in cache:
            cache[log_n] = optimal_detuning(10.0**log_n, params, delta_range, n_grid)
        return cache[log_n].n_m

    coarse = np.linspace(log_lo, log_hi, n_coarse)
    vals = [objective(x) for x in coarse]
    i = int(np.argmin(vals))
    if not math.isfinite(vals[i]):
        raise NoStableOperatingPoint("no stable operating point at any probed power")
    a, b = coarse[max(i - 1, 0)], coarse[min(i + 1, n_coarse - 1)]
    minimize_scalar(objective, bounds=(a, b), method="bounded", options={"xatol": 1e-4})
    best = min(cache, key=lambda k: cache[k].n_m)
    return PowerOptimum(10.0**best, cache[best].detuning, cache[best].n_m)


def _g0_sweep_row(args) -> G0SweepRow:
    g0, params, cap_fraction, n_grid = args
    kerr = params.with_g0(g0)
    linear = kerr.with_kerr(0.0)
    opt_k = optimize_power(kerr, cap_fraction, n_grid=n_grid)
    same = optimal_detuning(opt_k.n_in, linear, n_grid=n_grid)
    opt_l = optimize_power(linear, None, n_grid=n_grid)
    return G0SweepRow(g0, opt_k.n_in, opt_k.n_m, same.n_m, opt_l.n_in, opt_l.n_m)


def g0_sweep(
    g0_values: Sequence[float],
    params: SystemParams,
    cap_fraction: float = 0.99,
    n_grid: int = 121,
    workers: int = 1,
) -> list[G0SweepRow]:
    """Best phonon number versus g0 for the Kerr cavity and two linear comparisons.

    Per g0: the Kerr optimum with power capped below bistability, the linear
    cavity at that same power, and the linear cavity at its own best power.
    """
    jobs = [(float(g), params, cap_fraction, n_grid) for g in g0_values]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_g0_sweep_row, jobs))
    return [_g0_sweep_row(j) for j in jobs]
