"""Classical steady state of the driven Kerr cavity.

The mean intracavity photon number solves

    n [(-Delta + K_eff n)^2 + (kappa/2)^2] = kappa n_in

which is cubic in n. Roots come from a closed form (trigonometric branch for
three real roots, a cancellation-free Cardano branch otherwise) and are then
polished with Newton steps on the unscaled polynomial.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .model import DriveSpec, SystemParams

MERGE_RTOL = 1e-8

POLICIES = ("sweep-from-red", "sweep-from-blue", "lowest", "highest")


class NoBistability(ValueError):
    """Raised for a linear cavity (K_eff == 0), where no fold exists."""


@dataclass(frozen=True)
class SteadyState:
    roots: tuple[float, ...]
    stable: tuple[bool, ...]
    k_eff: float
    detuning: float
    n_in: float
    selected: int = 0
    ill_conditioned: bool = False

    @property
    def n_c(self) -> float:
        return self.roots[self.selected]

    @property
    def bistable(self) -> bool:
        return len(self.roots) == 3


def effective_kerr(params: SystemParams) -> float:
    """Kerr constant including the static optomechanical contribution."""
    wm, gm = params.omega_m, params.gamma_m
    return params.kerr - 2.0 * params.g0**2 * wm / (wm**2 + gm**2 / 4.0)


def bistability_threshold(params: SystemParams) -> float:
    """Critical input photon flux above which a bistable detuning window opens."""
    k_eff = effective_kerr(params)
    if k_eff == 0.0:
        raise NoBistability("linear cavity (K_eff = 0): no bistability")
    return params.kappa**2 / (3.0 * math.sqrt(3.0) * abs(k_eff))


def cubic_residual(n: float, detuning: float, n_in: float, kappa: float, k_eff: float) -> float:
    u = -detuning + k_eff * n
    return n * (u * u + kappa * kappa / 4.0) - kappa * n_in


def _response_slope(n: float, detuning: float, kappa: float, k_eff: float) -> float:
    # d(kappa n_in)/dn along the response curve; negative on the middle branch
    u = -detuning + k_eff * n
    return u * u + kappa * kappa / 4.0 + 2.0 * k_eff * n * u


def _depressed_roots(d: float, p: float) -> list[float]:
    """Real roots of x^3 - 2d x^2 + (d^2+1) x - p = 0."""
    shift = 2.0 * d / 3.0
    P = 1.0 - d * d / 3.0
    Q = 2.0 * d**3 / 27.0 + 2.0 * d / 3.0 - p
    disc = 4.0 * P**3 + 27.0 * Q * Q
    if P < 0.0 and disc < 0.0:
        r = 2.0 * math.sqrt(-P / 3.0)
        arg = 1.5 * Q / P * math.sqrt(-3.0 / P)
        phi = math.acos(max(-1.0, min(1.0, arg))) / 3.0
        return [r * math.cos(phi - 2.0 * math.pi * k / 3.0) + shift for k in range(3)]
    D = Q * Q / 4.0 + P**3 / 27.0
    sq = math.sqrt(max(D, 0.0))
    u = np.cbrt(-Q / 2.0 - math.copysign(sq, Q))
    t = u - P / (3.0 * u) if u != 0.0 else 0.0
    return [t + shift]


def _polish(n: float, detuning: float, n_in: float, kappa: float, k_eff: float) -> float:
    for _ in range(3):
        res = cubic_residual(n, detuning, n_in, kappa, k_eff)
        slope = _response_slope(n, detuning, kappa, k_eff)
        if slope == 0.0 or res == 0.0:
            break
        trial = n - res / slope
        if trial < 0.0:
            break
        if abs(cubic_residual(trial, detuning, n_in, kappa, k_eff)) >= abs(res):
            break
        n = trial
    return n


def _solve(detuning: float, n_in: float, kappa: float, k_eff: float) -> tuple[list[float], bool]:
    if n_in == 0.0:
        return [0.0], False
    s = kappa / 2.0
    if k_eff == 0.0:
        return [kappa * n_in / (detuning**2 + s * s)], False
    d = detuning / s
    p = k_eff * kappa * n_in / s**3
    xs = _depressed_roots(d, p)
    ns = sorted(max(x * s / k_eff, 0.0) for x in xs)
    ns = [_polish(n, detuning, n_in, kappa, k_eff) for n in ns]
    ns.sort()
    merged: list[float] = []
    ill = False
    for n in ns:
        if merged and abs(n - merged[-1]) <= MERGE_RTOL * max(abs(n), abs(merged[-1])):
            ill = True
            continue
        merged.append(n)
    if len(merged) == 2:
        # a fold point: one root is double; keep both but report conditioning
        ill = True
    return merged, ill


def intracavity_roots(drive: DriveSpec, params: SystemParams) -> SteadyState:
    """All non-negative photon-number roots of the steady-state cubic, ascending."""
    if drive.n_in < 0:
        raise ValueError("n_in must be >= 0")
    k_eff = effective_kerr(params)
    roots, ill = _solve(drive.detuning, drive.n_in, params.kappa, k_eff)
    if not roots:
        raise RuntimeError("steady-state cubic returned no real root")
    stable = tuple(_response_slope(n, drive.detuning, params.kappa, k_eff) > 0 for n in roots)
    if len(roots) == 3:
        stable = (stable[0], False, stable[2])
    return SteadyState(
        roots=tuple(roots),
        stable=stable,
        k_eff=k_eff,
        detuning=drive.detuning,
        n_in=drive.n_in,
        ill_conditioned=ill,
    )


def select_branch(
    state: SteadyState, policy: str = "lowest", previous: Optional[float] = None
) -> SteadyState:
    """Pick one root according to ``policy``; returns a copy with ``selected`` set.

    The sweep policies follow the branch closest to ``previous`` (the photon
    number at the preceding detuning of the sweep), which reproduces
    hysteresis when the sweep direction is reversed.
    """
    if policy not in POLICIES:
        raise ValueError(f"unknown branch policy {policy!r}; expected one of {POLICIES}")
    roots = state.roots
    if len(roots) == 1:
        idx = 0
    elif policy == "lowest":
        idx = 0
    elif policy == "highest":
        idx = len(roots) - 1
    else:
        candidates = [i for i, ok in enumerate(state.stable) if ok] or list(range(len(roots)))
        if previous is None:
            # far from resonance a sweep starts on the branch the fold leans away from
            low_first = (policy == "sweep-from-red") == (state.k_eff < 0)
            idx = candidates[0] if low_first else candidates[-1]
        else:
            idx = min(candidates, key=lambda i: abs(roots[i] - previous))
    return SteadyState(
        roots=state.roots,
        stable=state.stable,
        k_eff=state.k_eff,
        detuning=state.detuning,
        n_in=state.n_in,
        selected=idx,
        ill_conditioned=state.ill_conditioned,
    )


def sweep(
    detunings: Sequence[float], n_in: float, params: SystemParams, policy: str = "lowest"
) -> list[SteadyState]:
    """Steady states along a detuning grid, honouring sweep-direction policies.

    The returned list is in the order of ``detunings`` regardless of the
    direction the sweep was performed in.
    """
    detunings = list(detunings)
    order = list(range(len(detunings)))
    if policy == "sweep-from-red":
        order.sort(key=lambda i: detunings[i])
    elif policy == "sweep-from-blue":
        order.sort(key=lambda i: -detunings[i])
    out: list[Optional[SteadyState]] = [None] * len(detunings)
    prev = None
    for i in order:
        st = select_branch(intracavity_roots(DriveSpec(detunings[i], n_in), params), policy, prev)
        prev = st.n_c
        out[i] = st
    return out  # type: ignore[return-value]


def steady_displacement(n_c: float, params: SystemParams) -> float:
    """Static mechanical position quadrature <q> produced by ``n_c`` photons."""
    wm, gm = params.omega_m, params.gamma_m
    return -math.sqrt(2.0) * params.g0 * wm * n_c / (wm**2 + gm**2 / 4.0)
