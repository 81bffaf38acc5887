"""Physical parameters and unit conventions.

Every frequency stored on these objects is angular (rad/s). Configuration
files and CSV/JSON outputs use ordinary frequencies (Hz); conversion happens
once, in :func:`hz` / :func:`to_hz` at the I/O boundary.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional

from scipy import constants

HBAR = constants.hbar
K_B = constants.k
TWO_PI = 2.0 * math.pi


def hz(f: float) -> float:
    """Ordinary frequency (Hz) to angular frequency (rad/s)."""
    return TWO_PI * f


def to_hz(omega: float) -> float:
    """Angular frequency (rad/s) to ordinary frequency (Hz)."""
    return omega / TWO_PI


class ParameterError(ValueError):
    """Raised when a physical input is outside its domain."""


@dataclass(frozen=True)
class CavityParams:
    omega_c: float
    kappa: float
    kerr: float = 0.0
    n_cav_thermal: float = 0.0


@dataclass(frozen=True)
class MechParams:
    omega_m: float
    gamma_m: float
    x_zpm: float = 1.0e-15
    n_thermal: float = 0.0


@dataclass(frozen=True)
class CouplingParams:
    g0: float
    flux_per_zpm: Optional[float] = None


@dataclass(frozen=True)
class SystemParams:
    cavity: CavityParams
    mech: MechParams
    coupling: CouplingParams

    # flat accessors used throughout the numerics
    @property
    def kappa(self) -> float:
        return self.cavity.kappa

    @property
    def kerr(self) -> float:
        return self.cavity.kerr

    @property
    def omega_m(self) -> float:
        return self.mech.omega_m

    @property
    def gamma_m(self) -> float:
        return self.mech.gamma_m

    @property
    def g0(self) -> float:
        return self.coupling.g0

    def with_kerr(self, kerr: float) -> "SystemParams":
        return replace(self, cavity=replace(self.cavity, kerr=kerr))

    def with_g0(self, g0: float) -> "SystemParams":
        return replace(self, coupling=replace(self.coupling, g0=g0))

    def with_thermal(self, n_thermal: float) -> "SystemParams":
        return replace(self, mech=replace(self.mech, n_thermal=n_thermal))


@dataclass(frozen=True)
class DriveSpec:
    """Probe tone: detuning from the cavity (rad/s) and input photon flux (1/s)."""

    detuning: float
    n_in: float


@dataclass(frozen=True)
class Violation:
    field: str
    message: str


def thermal_occupation(temperature: float, omega: float) -> float:
    """Bose-Einstein occupation of a mode at angular frequency ``omega``."""
    if not temperature > 0 or not omega > 0:
        raise ParameterError(
            f"temperature and omega must be positive, got T={temperature}, omega={omega}"
        )
    return 1.0 / math.expm1(HBAR * omega / (K_B * temperature))


def photon_flux(power_dbm: float, attenuation_db: float, omega_p: float) -> float:
    """Photon flux (1/s) reaching the cavity for a source power and line attenuation."""
    watts = 1e-3 * 10.0 ** ((power_dbm - attenuation_db) / 10.0)
    return watts / (HBAR * omega_p)


def validate(params: SystemParams) -> list[Violation]:
    """Return every violated invariant; an empty list means the parameters are usable."""
    out: list[Violation] = []

    def check(ok: bool, name: str, msg: str) -> None:
        if not ok:
            out.append(Violation(name, msg))

    c, m, g = params.cavity, params.mech, params.coupling
    finite = {
        "cavity.omega_c": c.omega_c,
        "cavity.kappa": c.kappa,
        "cavity.kerr": c.kerr,
        "cavity.n_cav_thermal": c.n_cav_thermal,
        "mech.omega_m": m.omega_m,
        "mech.gamma_m": m.gamma_m,
        "mech.x_zpm": m.x_zpm,
        "mech.n_thermal": m.n_thermal,
        "coupling.g0": g.g0,
    }
    for name, value in finite.items():
        check(math.isfinite(value), name, "must be finite")
    check(c.omega_c > 0, "cavity.omega_c", "must be > 0")
    check(c.kappa > 0, "cavity.kappa", "must be > 0")
    check(c.n_cav_thermal >= 0, "cavity.n_cav_thermal", "must be >= 0")
    check(m.omega_m > 0, "mech.omega_m", "must be > 0")
    check(m.gamma_m > 0, "mech.gamma_m", "must be > 0")
    check(m.x_zpm > 0, "mech.x_zpm", "must be > 0")
    check(m.n_thermal >= 0, "mech.n_thermal", "must be >= 0")
    check(g.g0 >= 0, "coupling.g0", "must be >= 0")
    if g.flux_per_zpm is not None:
        check(g.flux_per_zpm > 0, "coupling.flux_per_zpm", "must be > 0 when given")
    return out


def reference_device(
    g0_hz: float = 201.0,
    kerr_hz: float = -12.2e3,
    temperature: float = 0.1,
    gamma_m_hz: float = 0.4,
) -> SystemParams:
    """Device parameters of the measured SQUID cavity / cantilever system."""
    omega_m = hz(274.41e3)
    return SystemParams(
        cavity=CavityParams(omega_c=hz(8.176e9), kappa=hz(3.5e6), kerr=hz(kerr_hz)),
        mech=MechParams(
            omega_m=omega_m,
            gamma_m=hz(gamma_m_hz),
            n_thermal=thermal_occupation(temperature, omega_m),
        ),
        coupling=CouplingParams(g0=hz(g0_hz), flux_per_zpm=0.38e-6),
    )
