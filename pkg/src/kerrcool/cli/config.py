"""Run configuration: TOML in ordinary-frequency units, converted once to rad/s."""
from __future__ import annotations

import copy
import hashlib
import json
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

import numpy as np

from ..model import (
    CavityParams,
    CouplingParams,
    MechParams,
    SystemParams,
    hz,
    photon_flux,
    thermal_occupation,
    validate,
)
from ..steady_state import POLICIES

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib


class ConfigError(ValueError):
    pass


DEFAULTS: dict[str, Any] = {
    "cavity": {"f_c_hz": 8.176e9, "kappa_hz": 3.5e6, "kerr_hz": -12.2e3, "n_cav_thermal": 0.0},
    "mechanics": {"f_m_hz": 274.41e3, "gamma_m_hz": 0.4, "x_zpm_m": 1e-15, "temperature_k": 0.1},
    "coupling": {"g0_hz": 201.0, "flux_per_zpm": 0.38e-6},
    "sweep": {
        "detuning_hz": "-5e6:5e6:201",
        "n_in": [1e8],
        "branch_policy": "lowest",
        "evaluate_at": "omega_m",
    },
    "fluxnoise": {"n_samples": 50, "span": 2.0},
    "output": {"dir": "out", "format": "csv"},
}

FORMATS = ("csv", "json")


@dataclass(frozen=True)
class RunConfig:
    system: SystemParams
    detunings: np.ndarray
    n_in: tuple[float, ...]
    branch_policy: str
    evaluate_at: str
    fluxnoise: dict[str, Any]
    output_dir: Path
    output_format: str
    raw: dict[str, Any] = field(repr=False, default_factory=dict)

    @property
    def digest(self) -> str:
        """Hash of the physics and sweep settings; the output location is excluded."""
        raw = copy.deepcopy(self.raw)
        raw.get("output", {}).pop("dir", None)
        text = json.dumps(raw, sort_keys=True, default=str)
        return hashlib.sha256(text.encode()).hexdigest()


def parse_grid(value: Any) -> np.ndarray:
    """Grid from ``"start:stop:count"``, ``"a,b,c"``, a single number or a list."""
    if isinstance(value, (int, float)):
        return np.array([float(value)])
    if isinstance(value, (list, tuple)):
        if not value:
            raise ConfigError("empty grid")
        try:
            return np.array([float(v) for v in value])
        except ValueError as exc:
            raise ConfigError(f"cannot parse grid {value!r}: {exc}") from exc
    if isinstance(value, str) and "," in value:
        return parse_grid([v for v in value.split(",") if v.strip()])
    if isinstance(value, str):
        parts = value.split(":")
        try:
            if len(parts) == 1:
                return np.array([float(parts[0])])
            if len(parts) == 3:
                start, stop, count = float(parts[0]), float(parts[1]), int(parts[2])
                if count < 1:
                    raise ConfigError(f"grid count must be >= 1 in {value!r}")
                return np.linspace(start, stop, count)
        except ValueError as exc:
            raise ConfigError(f"cannot parse grid {value!r}: {exc}") from exc
    raise ConfigError(f"cannot parse grid {value!r}; use start:stop:count or a list")


def _merge(base: dict, extra: dict) -> dict:
    out = copy.deepcopy(base)
    for key, value in extra.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = _merge(out[key], value)
        else:
            out[key] = value
    return out


def _coerce(text: str) -> Any:
    try:
        return tomllib.loads(f"v = {text}")["v"]
    except tomllib.TOMLDecodeError:
        return text


def apply_overrides(raw: dict, overrides: list[str]) -> dict:
    """Apply ``section.key=value`` overrides (value parsed as a TOML literal when possible)."""
    raw = copy.deepcopy(raw)
    for item in overrides:
        if "=" not in item or "." not in item.split("=", 1)[0]:
            raise ConfigError(f"override {item!r} must look like section.key=value")
        path, value = item.split("=", 1)
        section, key = path.strip().split(".", 1)
        raw.setdefault(section, {})[key] = _coerce(value.strip())
    return raw


def load_raw(path: Optional[Path]) -> dict:
    if path is None:
        return copy.deepcopy(DEFAULTS)
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"invalid TOML in {path}: {exc}") from exc
    return _merge(DEFAULTS, data)


def _num(section: dict, key: str, where: str) -> float:
    try:
        value = float(section[key])
    except KeyError as exc:
        raise ConfigError(f"missing {where}.{key}") from exc
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{where}.{key} must be a number") from exc
    if not math.isfinite(value):
        raise ConfigError(f"{where}.{key} must be finite")
    return value


def build_system(raw: dict) -> SystemParams:
    cav, mech, coup = raw.get("cavity", {}), raw.get("mechanics", {}), raw.get("coupling", {})
    omega_m = hz(_num(mech, "f_m_hz", "mechanics"))
    if "n_thermal" in mech:
        n_th = _num(mech, "n_thermal", "mechanics")
    else:
        try:
            n_th = thermal_occupation(_num(mech, "temperature_k", "mechanics"), omega_m)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
    flux = coup.get("flux_per_zpm")
    system = SystemParams(
        cavity=CavityParams(
            omega_c=hz(_num(cav, "f_c_hz", "cavity")),
            kappa=hz(_num(cav, "kappa_hz", "cavity")),
            kerr=hz(_num(cav, "kerr_hz", "cavity")),
            n_cav_thermal=_num(cav, "n_cav_thermal", "cavity"),
        ),
        mech=MechParams(
            omega_m=omega_m,
            gamma_m=hz(_num(mech, "gamma_m_hz", "mechanics")),
            x_zpm=_num(mech, "x_zpm_m", "mechanics"),
            n_thermal=n_th,
        ),
        coupling=CouplingParams(g0=hz(_num(coup, "g0_hz", "coupling")), flux_per_zpm=None if flux is None else float(flux)),
    )
    problems = validate(system)
    if problems:
        raise ConfigError("; ".join(f"{v.field}: {v.message}" for v in problems))
    return system


def _input_fluxes(sweep: dict, system: SystemParams) -> tuple[float, ...]:
    if "power_dbm" in sweep:
        powers = parse_grid(sweep["power_dbm"])
        att = float(sweep.get("attenuation_db", 0.0))
        values = [photon_flux(p, att, system.cavity.omega_c) for p in powers]
    else:
        values = list(parse_grid(sweep.get("n_in", [])))
    if not values:
        raise ConfigError("sweep.n_in is empty")
    if any(v < 0 or not math.isfinite(v) for v in values):
        raise ConfigError("sweep.n_in values must be finite and >= 0")
    return tuple(float(v) for v in values)


def load_config(path: Optional[Path], overrides: Optional[list[str]] = None) -> RunConfig:
    raw = apply_overrides(load_raw(path), overrides or [])
    system = build_system(raw)
    sweep = raw.get("sweep", {})
    detunings = hz(parse_grid(sweep.get("detuning_hz")))
    policy = str(sweep.get("branch_policy", "lowest"))
    if policy not in POLICIES:
        raise ConfigError(f"sweep.branch_policy must be one of {POLICIES}")
    at = str(sweep.get("evaluate_at", "omega_m"))
    if at not in ("omega_m", "self-consistent"):
        raise ConfigError("sweep.evaluate_at must be 'omega_m' or 'self-consistent'")
    out = raw.get("output", {})
    fmt = str(out.get("format", "csv"))
    if fmt not in FORMATS:
        raise ConfigError(f"output.format must be one of {FORMATS}")
    return RunConfig(
        system=system,
        detunings=np.asarray(detunings),
        n_in=_input_fluxes(sweep, system),
        branch_policy=policy,
        evaluate_at=at,
        fluxnoise=dict(raw.get("fluxnoise", {})),
        output_dir=Path(out.get("dir", "out")),
        output_format=fmt,
        raw=raw,
    )
