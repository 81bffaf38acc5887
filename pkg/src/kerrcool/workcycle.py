"""Time-domain cavity response to a prescribed coherent mechanical oscillation.

The cavity amplitude obeys

    d alpha/dt = [i(Delta - g0 x/x_zpm - K |alpha|^2) - kappa/2] alpha - sqrt(kappa) alpha_in

with x(t) = 2 sqrt(n_coh) x_zpm cos(w_m t). The mechanics is not driven back;
the loop traced in (x, n_c) gives the work done per cycle.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.integrate import trapezoid

from .model import HBAR, TWO_PI, DriveSpec, SystemParams
from .steady_state import intracavity_roots, select_branch

log = logging.getLogger(__name__)

STEPS_PER_SCALE = 200


class IntegrationError(ArithmeticError):
    def __init__(self, message: str, last_state: complex, last_time: float):
        super().__init__(message)
        self.last_state = last_state
        self.last_time = last_time


@dataclass(frozen=True)
class Trajectory:
    t: np.ndarray
    alpha: np.ndarray
    x: np.ndarray
    n_c: np.ndarray
    x_amplitude: float
    omega_m: float
    samples_per_cycle: int
    recorded_cycles: int


@dataclass(frozen=True)
class WorkResult:
    work: float
    per_cycle: np.ndarray
    drift: float
    periodic: bool


def default_settle_cycles(params: SystemParams) -> int:
    period = TWO_PI / params.omega_m
    return max(3, math.ceil(10.0 / params.kappa / period))


def time_step(params: SystemParams, detuning: float) -> float:
    scales = [TWO_PI / params.omega_m, TWO_PI / params.kappa]
    if detuning != 0.0:
        scales.append(TWO_PI / abs(detuning))
    return min(scales) / STEPS_PER_SCALE


def integrate_cavity(
    drive: DriveSpec,
    params: SystemParams,
    n_m_coherent: float,
    n_cycles: int = 3,
    settle_cycles: Optional[int] = None,
    branch_policy: str = "lowest",
    alpha0: Optional[complex] = None,
) -> Trajectory:
    """Fixed-step RK4 integration; only the ``n_cycles`` after settling are returned.

    The start value defaults to the static solution on the branch chosen by
    ``branch_policy`` so that near bistability the intended loop is traced.
    """
    if n_cycles < 1:
        raise ValueError("n_cycles must be >= 1")
    if n_m_coherent < 0:
        raise ValueError("n_m_coherent must be >= 0")
    if settle_cycles is None:
        settle_cycles = default_settle_cycles(params)
    kappa, wm, g0, kerr = params.kappa, params.omega_m, params.g0, params.kerr
    det = drive.detuning
    amp_in = math.sqrt(drive.n_in)  # real input amplitude fixes the global phase
    x_amp = 2.0 * math.sqrt(n_m_coherent)  # in units of x_zpm

    if alpha0 is None:
        if drive.n_in > 0:
            # the prescribed motion has no static offset, so only K enters here
            st = select_branch(intracavity_roots(drive, params.with_g0(0.0)), branch_policy)
            shift = det - kerr * st.n_c
            alpha0 = -math.sqrt(kappa) * amp_in / (-1j * shift + kappa / 2.0)
        else:
            alpha0 = 0.0

    period = TWO_PI / wm
    steps_per_cycle = max(int(math.ceil(period / time_step(params, det))), 16)
    h = period / steps_per_cycle
    total = (settle_cycles + n_cycles) * steps_per_cycle
    keep_from = settle_cycles * steps_per_cycle

    def rhs(t: float, a: complex) -> complex:
        x = x_amp * math.cos(wm * t)
        return (1j * (det - g0 * x - kerr * (a.real * a.real + a.imag * a.imag)) - kappa / 2.0) * a - math.sqrt(
            kappa
        ) * amp_in

    a = complex(alpha0)
    out = np.empty(total - keep_from + 1, dtype=complex)
    t = 0.0
    for k in range(total):
        if k >= keep_from:
            out[k - keep_from] = a
        k1 = rhs(t, a)
        k2 = rhs(t + h / 2, a + h / 2 * k1)
        k3 = rhs(t + h / 2, a + h / 2 * k2)
        k4 = rhs(t + h, a + h * k3)
        a = a + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        t = (k + 1) * h
        if not (math.isfinite(a.real) and math.isfinite(a.imag)):
            raise IntegrationError("cavity amplitude diverged", complex(out[max(k - keep_from, 0)]), t)
    out[-1] = a
    times = (keep_from + np.arange(out.size)) * h
    x = x_amp * params.mech.x_zpm * np.cos(wm * times)
    return Trajectory(
        t=times,
        alpha=out,
        x=x,
        n_c=np.abs(out) ** 2,
        x_amplitude=x_amp * params.mech.x_zpm,
        omega_m=wm,
        samples_per_cycle=steps_per_cycle,
        recorded_cycles=n_cycles,
    )


def work_per_cycle(traj: Trajectory, params: SystemParams, drift_tol: float = 0.01) -> WorkResult:
    """Work done by radiation pressure on the mechanics, averaged over the recorded cycles.

    Negative values mean energy is taken out of the oscillator (cooling).
    """
    x_zpm = params.mech.x_zpm
    force = -HBAR * params.g0 / x_zpm * traj.n_c
    velocity = -traj.x_amplitude * traj.omega_m * np.sin(traj.omega_m * traj.t)
    power = force * velocity
    m = traj.samples_per_cycle
    per_cycle = np.array(
        [trapezoid(power[c * m : (c + 1) * m + 1], traj.t[c * m : (c + 1) * m + 1]) for c in range(traj.recorded_cycles)]
    )
    work = float(np.mean(per_cycle))
    if per_cycle.size > 1:
        scale = max(float(np.max(np.abs(per_cycle))), 1e-300)
        drift = float(np.max(np.abs(np.diff(per_cycle)))) / scale
    else:
        drift = 0.0
    periodic = drift <= drift_tol
    if not periodic:
        log.warning("trajectory not periodic: cycle-to-cycle work drift %.3g", drift)
    return WorkResult(work=work, per_cycle=per_cycle, drift=drift, periodic=periodic)


def damping_from_work(work: float, n_m_coherent: float, params: SystemParams) -> float:
    """Optical damping rate implied by the work per cycle (energy balance), rad/s."""
    if not n_m_coherent > 0:
        raise ValueError("n_m_coherent must be > 0")
    period = TWO_PI / params.omega_m
    return -work / (period * HBAR * params.omega_m * n_m_coherent)


def loop_area(traj: Trajectory, params: SystemParams) -> float:
    """Signed area enclosed in the (x/x_zpm, n_c) plane over the first recorded cycle."""
    m = traj.samples_per_cycle
    x = traj.x[: m + 1] / params.mech.x_zpm
    return float(trapezoid(traj.n_c[: m + 1], x))
