"""Linearized quantum fluctuations around the classical Kerr-cavity steady state.

Conventions: o[w] = int dt exp(i w t) o(t). The probe detuning is
Delta = w_p - w_c (red detuning is negative). The cavity susceptibility is
X_c[w] = 1 / (-i (w + Delta~) + kappa/2), the mechanical peak sits at +w_m.

Eliminating the cavity leaves a 2x2 system for (b, b^dagger) whose coupling
is the self-energy

    Sigma[w] = -2 G^2 (Delta~ + Lambda) / (X_c^-1[w] X_c^-1*[-w] - Lambda^2)

with G = g0 sqrt(n_c) and the squeezing strength Lambda = K n_c. Lambda is
kept signed: the Kerr phase enters through the sign of K, so for K < 0 the
combination Delta~ + Lambda equals Delta - |K| n_c, not Delta + 3|K| n_c.

With this Sigma the damping is gamma_m + 2 Im Sigma[w_m] and the mechanical
peak moves to w_m - Re Sigma[w_m].
"""
from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np

from .model import DriveSpec, SystemParams, to_hz, TWO_PI
from .steady_state import (
    SteadyState,
    effective_kerr,
    intracavity_roots,
    select_branch,
    sweep,
)
from .trace import SpectrumTrace

log = logging.getLogger(__name__)

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(16)


class MechanicalInstability(ArithmeticError):
    """The linearized system has a growing mode (gamma_eff <= 0 or unstable pole)."""


class SelfEnergyDivergence(ArithmeticError):
    """X~_c^-1 vanishes: parametric instability pole on the real frequency axis."""


class QuadratureError(ArithmeticError):
    """Spectral integral did not converge under panel doubling."""


@dataclass(frozen=True)
class LinearizedParams:
    delta_tilde: float
    squeezing: float
    g: float
    kappa: float
    gamma_m: float
    omega_m: float
    n_thermal: float = 0.0
    n_cav_thermal: float = 0.0
    n_c: float = 0.0
    unstable_branch: bool = False

    phi = 0.0

    @property
    def lambda_mag(self) -> float:
        return abs(self.squeezing)


@dataclass(frozen=True)
class MechanicalResponse:
    sigma_re: float
    sigma_im: float
    gamma_opt: float
    delta_omega: float
    gamma_m: float
    omega_m: float

    @property
    def gamma_eff(self) -> float:
        return self.gamma_m + self.gamma_opt

    @property
    def omega_eff(self) -> float:
        return self.omega_m + self.delta_omega

    @property
    def unstable(self) -> bool:
        return self.gamma_eff <= 0


@dataclass(frozen=True)
class CoolingPoint:
    detuning: float
    n_in: float
    n_c: float
    n_m: float
    gamma_eff: float
    omega_eff: float
    stable: bool
    n_roots: int = 1
    flag: str = ""


def linearize(
    drive: DriveSpec, n_c: float, params: SystemParams, unstable_branch: bool = False
) -> LinearizedParams:
    """Linearized couplings around a classical photon number ``n_c``.

    The detuning seen by the fluctuations includes the Kerr shift and the
    static mechanical displacement (the part of K_eff that is not K).
    """
    if n_c < 0:
        raise ValueError("n_c must be >= 0")
    if unstable_branch:
        log.warning("linearizing around an unstable steady-state branch (n_c=%g)", n_c)
    k = params.kerr
    k_mech = effective_kerr(params) - k
    return LinearizedParams(
        delta_tilde=drive.detuning - (2.0 * k + k_mech) * n_c,
        squeezing=k * n_c,
        g=params.g0 * math.sqrt(n_c),
        kappa=params.kappa,
        gamma_m=params.gamma_m,
        omega_m=params.omega_m,
        n_thermal=params.mech.n_thermal,
        n_cav_thermal=params.cavity.n_cav_thermal,
        n_c=n_c,
        unstable_branch=unstable_branch,
    )


def cavity_susceptibility(omega, lin: LinearizedParams):
    return 1.0 / (-1j * (np.asarray(omega) + lin.delta_tilde) + lin.kappa / 2.0)


def _inv_chi(omega, lin: LinearizedParams):
    # X_c^-1[w] and X_c^-1*[-w]
    a = -1j * (omega + lin.delta_tilde) + lin.kappa / 2.0
    b = -1j * (omega - lin.delta_tilde) + lin.kappa / 2.0
    return a, b


def self_energy(omega, lin: LinearizedParams):
    """Cavity-induced self-energy Sigma[w] (rad/s); accepts scalars or arrays."""
    omega = np.asarray(omega, dtype=float)
    a, b = _inv_chi(omega, lin)
    xt_inv = a * b - lin.squeezing**2
    if np.any(xt_inv == 0):
        raise SelfEnergyDivergence("X~_c^-1 vanishes on the real axis")
    sigma = -2.0 * lin.g**2 * (lin.delta_tilde + lin.squeezing) / xt_inv
    return sigma if np.ndim(sigma) else complex(sigma)


def mechanical_response(lin: LinearizedParams, at: str = "omega_m") -> MechanicalResponse:
    """Optical damping and spring shift.

    ``at="omega_m"`` evaluates Sigma at the bare mechanical frequency;
    ``at="self-consistent"`` iterates the evaluation point to the shifted one.
    """
    w = lin.omega_m
    sigma = self_energy(w, lin)
    if at == "self-consistent":
        for _ in range(50):
            w_new = lin.omega_m - sigma.real
            sigma = self_energy(w_new, lin)
            if abs(w_new - w) <= 1e-13 * lin.omega_m:
                break
            w = w_new
    elif at != "omega_m":
        raise ValueError(f"unknown evaluation point {at!r}")
    return MechanicalResponse(
        sigma_re=sigma.real,
        sigma_im=sigma.imag,
        gamma_opt=2.0 * sigma.imag,
        delta_omega=-sigma.real,
        gamma_m=lin.gamma_m,
        omega_m=lin.omega_m,
    )


def drift_matrix(lin: LinearizedParams) -> np.ndarray:
    """Drift matrix of (d, d^dagger, b, b^dagger) with a real classical amplitude."""
    dt, lam, g = lin.delta_tilde, lin.squeezing, lin.g
    k2, g2 = lin.kappa / 2.0, lin.gamma_m / 2.0
    wm = lin.omega_m
    return np.array(
        [
            [1j * dt - k2, -1j * lam, -1j * g, -1j * g],
            [1j * lam, -1j * dt - k2, 1j * g, 1j * g],
            [-1j * g, -1j * g, -1j * wm - g2, 0.0],
            [1j * g, 1j * g, 0.0, 1j * wm - g2],
        ],
        dtype=complex,
    )


def poles(lin: LinearizedParams) -> np.ndarray:
    """Eigenvalues of the drift matrix (all real parts negative when stable)."""
    return np.linalg.eigvals(drift_matrix(lin))


def is_stable(lin: LinearizedParams) -> bool:
    return bool(np.all(poles(lin).real < 0)) and mechanical_response(lin).gamma_eff > 0


def spectral_density(omega, lin: LinearizedParams) -> np.ndarray:
    """Phonon spectral density S(w) with n_m = int dw/2pi S(w).

    Solves the effective (b, b^dagger) system in closed form, including the
    intrinsic bath and both quadratures of the optical input noise.
    """
    w = np.asarray(omega, dtype=float)
    a, b = _inv_chi(w, lin)
    lam, g = lin.squeezing, lin.g
    xt_inv = a * b - lam**2
    p = -1j * (w - lin.omega_m) + lin.gamma_m / 2.0
    r = -1j * (w + lin.omega_m) + lin.gamma_m / 2.0
    coupling = -2.0 * g**2 * (lin.delta_tilde + lam)  # Sigma * X~^-1
    det = p * r * xt_inv - 2.0 * lin.omega_m * coupling
    sg = math.sqrt(lin.gamma_m)
    sk = math.sqrt(lin.kappa)
    c_b = -sg * (r * xt_inv + 1j * coupling) / det
    c_bd = -sg * 1j * coupling / det
    c_d = 1j * sk * g * r * (b + 1j * lam) / det
    c_dd = 1j * sk * g * r * (a - 1j * lam) / det
    nb, nc = lin.n_thermal, lin.n_cav_thermal
    return (
        np.abs(c_b) ** 2 * nb
        + np.abs(c_bd) ** 2 * (nb + 1.0)
        + np.abs(c_d) ** 2 * nc
        + np.abs(c_dd) ** 2 * (nc + 1.0)
    )


def _breakpoints(lin: LinearizedParams) -> tuple[np.ndarray, float]:
    lam = poles(lin)
    centers = -lam.imag
    widths = np.maximum(-lam.real, 1e-300)
    span = max(float(np.max(np.abs(centers) + widths)), lin.kappa, abs(lin.delta_tilde))
    w_max = 50.0 * span
    pts = [np.array([-w_max, 0.0, w_max])]
    for c, h in zip(centers, widths):
        steps = h * 2.0 ** np.arange(-3, int(math.log2(2 * w_max / h)) + 2)
        pts.append(c + steps)
        pts.append(c - steps)
        pts.append(np.array([c]))
    x = np.concatenate(pts)
    x = np.unique(np.clip(x, -w_max, w_max))
    keep = np.concatenate([[True], np.diff(x) > 1e-12 * w_max])
    return x[keep], w_max


def _panel_quad(f, edges: np.ndarray) -> float:
    lo, hi = edges[:-1], edges[1:]
    half = (hi - lo)[:, None] / 2.0
    mid = (hi + lo)[:, None] / 2.0
    nodes = mid + half * _GL_NODES[None, :]
    vals = f(nodes.ravel()).reshape(nodes.shape)
    return float(np.sum(vals * _GL_WEIGHTS[None, :] * half))


def _tails(f, w_max: float) -> float:
    # |w| > w_max through w = w_max / u, u in (0, 1)
    u = (_GL_NODES + 1.0) / 2.0
    wts = _GL_WEIGHTS / 2.0
    w = w_max / u
    jac = w_max / u**2
    return float(np.sum((f(w) + f(-w)) * jac * wts))


def _refine(edges: np.ndarray) -> np.ndarray:
    mids = (edges[:-1] + edges[1:]) / 2.0
    out = np.empty(edges.size + mids.size)
    out[0::2] = edges
    out[1::2] = mids
    return out


# Near an instability the integrand peak is resolved only to ~1e-9 relative
# because of cancellation in the determinant; accept that as converged.
_ROUNDOFF_RTOL = 1e-7


def _integrate(f, lin: LinearizedParams, rtol: float) -> float:
    edges, w_max = _breakpoints(lin)
    prev = _panel_quad(f, edges) + _tails(f, w_max)
    for _ in range(4):
        edges = _refine(edges)
        cur = _panel_quad(f, edges) + _tails(f, w_max)
        if abs(cur - prev) <= rtol * abs(cur):
            return cur
        last, prev = prev, cur
    if abs(cur - last) <= _ROUNDOFF_RTOL * abs(cur):
        log.debug("spectral integral at roundoff floor: %r vs %r", last, cur)
        return cur
    raise QuadratureError(f"spectral integral not converged: last two estimates {last!r}, {cur!r}")


def _check_stable(lin: LinearizedParams) -> MechanicalResponse:
    resp = mechanical_response(lin)
    if resp.unstable:
        raise MechanicalInstability(f"mechanical instability: gamma_eff = {resp.gamma_eff:g} rad/s")
    if np.any(poles(lin).real >= 0):
        raise MechanicalInstability("mechanical instability: linearized system has a growing mode")
    return resp


def phonon_occupation(lin: LinearizedParams, rtol: float = 1e-10) -> float:
    """Mean phonon number <b^dagger b> in the linearized steady state."""
    _check_stable(lin)
    n = _integrate(lambda w: spectral_density(w, lin), lin, rtol) / TWO_PI
    return max(n, 0.0)


def spectrum_grid(lin: LinearizedParams, points_per_panel: int = 64) -> np.ndarray:
    """Non-uniform ordinary-frequency grid (Hz) resolving every spectral feature."""
    _check_stable(lin)
    edges, _ = _breakpoints(lin)
    t = np.linspace(0.0, 1.0, points_per_panel, endpoint=False)
    w = (edges[:-1, None] + (edges[1:] - edges[:-1])[:, None] * t[None, :]).ravel()
    w = np.append(w, edges[-1])
    return w / TWO_PI


def mechanical_spectrum(freq_hz, lin: LinearizedParams, enbw: float = 1.0) -> SpectrumTrace:
    """Phonon PSD in quanta/Hz on an ordinary-frequency grid; its area is n_m."""
    _check_stable(lin)
    freq = np.asarray(freq_hz, dtype=float)
    psd = spectral_density(TWO_PI * freq, lin)
    return SpectrumTrace(
        freq,
        psd,
        enbw=enbw,
        metadata={"units": "quanta/Hz", "n_c": lin.n_c, "delta_tilde_hz": to_hz(lin.delta_tilde)},
    )


def weak_coupling_occupation(lin: LinearizedParams) -> float:
    """Rate-equation estimate (gamma n_th + Gamma_opt n_ba) / (gamma + Gamma_opt)."""
    k2 = lin.kappa / 2.0
    wm = lin.omega_m
    g2 = lin.g**2
    a_minus = g2 * lin.kappa / (k2**2 + (lin.delta_tilde + wm) ** 2)
    a_plus = g2 * lin.kappa / (k2**2 + (lin.delta_tilde - wm) ** 2)
    gamma_opt = a_minus - a_plus
    n_ba = a_plus / gamma_opt if gamma_opt != 0 else math.inf
    return (lin.gamma_m * lin.n_thermal + gamma_opt * n_ba) / (lin.gamma_m + gamma_opt)


def _evaluate(args) -> CoolingPoint:
    st, params, at = args
    drive = DriveSpec(st.detuning, st.n_in)
    branch_ok = st.stable[st.selected]
    lin = linearize(drive, st.n_c, params)
    resp = mechanical_response(lin, at=at)
    common = dict(
        detuning=st.detuning,
        n_in=st.n_in,
        n_c=st.n_c,
        gamma_eff=resp.gamma_eff,
        omega_eff=resp.omega_eff,
        n_roots=len(st.roots),
    )
    if not branch_ok:
        return CoolingPoint(n_m=math.nan, stable=False, flag="unstable cavity branch", **common)
    try:
        n_m = phonon_occupation(lin)
    except MechanicalInstability as exc:
        return CoolingPoint(n_m=math.nan, stable=False, flag=str(exc), **common)
    except (QuadratureError, SelfEnergyDivergence) as exc:
        return CoolingPoint(n_m=math.nan, stable=False, flag=str(exc), **common)
    return CoolingPoint(n_m=n_m, stable=True, **common)


def cooling_trace(
    delta_grid: Sequence[float],
    n_in: float,
    params: SystemParams,
    branch_policy: str = "lowest",
    at: str = "omega_m",
    workers: int = 1,
) -> list[CoolingPoint]:
    """Phonon occupation, damping and frequency along a detuning sweep.

    Points in an instability region are returned with ``stable=False`` and
    ``n_m = nan`` rather than dropped.
    """
    states = sweep(delta_grid, n_in, params, branch_policy)
    jobs = [(st, params, at) for st in states]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_evaluate, jobs, chunksize=max(1, len(jobs) // (4 * workers))))
    return [_evaluate(j) for j in jobs]


def occupation_at(
    detuning: float, n_in: float, params: SystemParams, policy: str = "lowest"
) -> float:
    """n_m at one detuning, ``inf`` when the operating point is unstable."""
    st = select_branch(intracavity_roots(DriveSpec(detuning, n_in), params), policy)
    if not st.stable[st.selected]:
        return math.inf
    lin = linearize(DriveSpec(detuning, n_in), st.n_c, params)
    try:
        return phonon_occupation(lin)
    except (MechanicalInstability, SelfEnergyDivergence):
        return math.inf
