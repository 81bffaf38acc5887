"""Command-line entry point.

Exit codes: 0 success, 1 configuration error, 2 numerical failure (a
``diagnostics.json`` is written next to the outputs).
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import os
import sys
import traceback
from pathlib import Path
from typing import Any, Optional

import numpy as np

from .. import __version__
from ..analysis import (
    CalibrationInput,
    cavity_slopes,
    circle_fit,
    dho_fit,
    goodness_of_fit,
    gorodetsky_g0,
    integrate_peak,
    remove_outliers,
    rescale_to_zpm,
    s21_full,
    slope_calibration_g0sq_nm,
)
from ..analysis.circle import CircleFitResult
from ..analysis.spectrum import FitError
from ..fluctuations import cooling_trace, linearize, mechanical_spectrum, spectrum_grid
from ..fluxnoise import (
    DELTA_PHI_FITTED,
    DELTA_PHI_LINEWIDTH,
    FluxNoiseSpec,
    composite_linewidth_frequency,
    composite_spectrum,
    sigma_from_flux,
)
from ..model import TWO_PI, DriveSpec, hz, thermal_occupation, to_hz
from ..optimize import g0_sweep
from ..steady_state import intracavity_roots, select_branch, sweep
from ..trace import read_csv, write_csv
from ..workcycle import damping_from_work, integrate_cavity, loop_area, work_per_cycle
from .config import ConfigError, RunConfig, load_config, parse_grid

log = logging.getLogger("kerrcool")

WORKERS_ENV = "KERRCOOL_WORKERS"

# Column documentation shared by --help and the schema file.
SCHEMA: dict[str, dict[str, str]] = {
    "steady": {
        "delta_hz": "probe detuning w_p - w_c (Hz)",
        "n_in": "input photon flux (1/s)",
        "n_c_root1": "smallest intracavity photon number",
        "n_c_root2": "middle root (empty if single-valued)",
        "n_c_root3": "largest root (empty if single-valued)",
        "selected": "index of the branch chosen by the policy",
        "stable_flags": "per-root stability, e.g. 101",
    },
    "cool-trace": {
        "delta_hz": "probe detuning (Hz)",
        "n_c": "intracavity photon number on the selected branch",
        "n_m": "mean phonon number (nan when unstable)",
        "gamma_eff_hz": "total mechanical damping / 2pi (Hz)",
        "omega_eff_hz": "shifted mechanical frequency / 2pi (Hz)",
        "stable": "1 when the operating point is stable",
    },
    "spectrum": {"freq_hz": "ordinary frequency (Hz)", "psd": "phonon spectral density (quanta/Hz)"},
    "workcycle": {
        "t_s": "time (s)",
        "x_over_xzpm": "prescribed displacement in units of x_zpm",
        "n_c": "intracavity photon number",
    },
    "fluxnoise": {"freq_hz": "ordinary frequency (Hz)", "psd": "flux-noise averaged phonon density (quanta/Hz)"},
    "fig4c": {
        "g0_hz": "single-photon coupling / 2pi (Hz)",
        "n_in_kerr": "optimal input flux for the Kerr cavity (1/s)",
        "n_m_kerr": "best phonon number, Kerr cavity below bistability",
        "n_m_linear_same_power": "best phonon number of a linear cavity at n_in_kerr",
        "n_in_linear": "optimal input flux for the linear cavity (1/s)",
        "n_m_linear_best": "best phonon number of a linear cavity at its optimal power",
    },
}


class NumericalFailure(RuntimeError):
    pass


def _workers(args) -> int:
    if getattr(args, "workers", None):
        return max(1, int(args.workers))
    try:
        return max(1, int(os.environ.get(WORKERS_ENV, "1")))
    except ValueError as exc:
        raise ConfigError(f"{WORKERS_ENV} must be an integer") from exc


def _provenance(cfg: Optional[RunConfig], command: str, seed: Optional[int]) -> dict[str, Any]:
    return {
        "tool": "kerrcool",
        "version": __version__,
        "command": command,
        "config_sha256": cfg.digest if cfg else None,
        "seed": seed,
    }


def _header(prov: dict[str, Any]) -> list[str]:
    return [f"provenance={json.dumps(prov, sort_keys=True)}"]


def _fmt(value: Any) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def write_table(path: Path, columns: list[str], rows: list[list[Any]], fmt: str, prov: dict[str, Any]) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    if fmt == "json":
        path = path.with_suffix(".json")
        records = [dict(zip(columns, [None if (isinstance(v, float) and math.isnan(v)) else v for v in r])) for r in rows]
        payload = {"provenance": prov, "columns": columns, "rows": records}
        path.write_text(json.dumps(payload, indent=1, default=_json_default))
        return path
    path = path.with_suffix(".csv")
    with path.open("w", newline="") as fh:
        for line in _header(prov):
            fh.write(f"# {line}\n")
        w = csv.writer(fh)
        w.writerow(columns)
        for r in rows:
            w.writerow([_fmt(v) for v in r])
    return path


def _json_default(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    raise TypeError(f"not JSON serializable: {type(obj)}")


def write_json(path: Path, payload: dict[str, Any], prov: dict[str, Any]) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps({"provenance": prov, **payload}, indent=1, sort_keys=True, default=_json_default))
    return path


def write_schema(out_dir: Path) -> Path:
    return write_json(out_dir / "schema.json", {"columns": SCHEMA}, {"tool": "kerrcool", "version": __version__})


# --- subcommands -----------------------------------------------------------


def cmd_steady(args, cfg: RunConfig) -> list[Path]:
    detunings = hz(parse_grid(args.delta)) if args.delta else cfg.detunings
    fluxes = parse_grid(args.n_in) if args.n_in else cfg.n_in
    rows = []
    for n_in in fluxes:
        for st in sweep(detunings, float(n_in), cfg.system, cfg.branch_policy):
            roots = list(st.roots) + [math.nan] * (3 - len(st.roots))
            if len(st.roots) == 1:
                roots = [st.roots[0], "", ""]
            flags = "".join("1" if s else "0" for s in st.stable)
            rows.append([to_hz(st.detuning), n_in, *roots, st.selected, flags])
    prov = _provenance(cfg, "steady", args.seed)
    return [write_table(cfg.output_dir / "steady", list(SCHEMA["steady"]), rows, cfg.output_format, prov)]


def cmd_cool_trace(args, cfg: RunConfig) -> list[Path]:
    detunings = hz(parse_grid(args.delta)) if args.delta else cfg.detunings
    fluxes = parse_grid(args.n_in) if args.n_in else cfg.n_in
    prov = _provenance(cfg, "cool-trace", args.seed)
    out = []
    for k, n_in in enumerate(fluxes):
        points = cooling_trace(detunings, float(n_in), cfg.system, cfg.branch_policy, cfg.evaluate_at, _workers(args))
        rows = [
            [to_hz(p.detuning), p.n_c, p.n_m, to_hz(p.gamma_eff), to_hz(p.omega_eff), p.stable] for p in points
        ]
        out.append(
            write_table(
                cfg.output_dir / f"cool_trace_{k:02d}", list(SCHEMA["cool-trace"]), rows, cfg.output_format,
                {**prov, "n_in": float(n_in)},
            )
        )
    return out


def _operating_point(args, cfg: RunConfig):
    detuning = hz(float(args.delta_hz)) if args.delta_hz is not None else float(cfg.detunings[0])
    n_in = float(args.n_in) if args.n_in is not None else cfg.n_in[0]
    drive = DriveSpec(detuning, n_in)
    st = select_branch(intracavity_roots(drive, cfg.system), cfg.branch_policy)
    return drive, st


def cmd_spectrum(args, cfg: RunConfig) -> list[Path]:
    drive, st = _operating_point(args, cfg)
    lin = linearize(drive, st.n_c, cfg.system, unstable_branch=not st.stable[st.selected])
    grid = parse_grid(args.freq) if args.freq else spectrum_grid(lin)
    trace = mechanical_spectrum(grid, lin, enbw=args.enbw)
    prov = _provenance(cfg, "spectrum", args.seed)
    path = cfg.output_dir / "spectrum.csv"
    path.parent.mkdir(parents=True, exist_ok=True)
    write_csv(trace, path, header=_header(prov))
    return [path]


def cmd_workcycle(args, cfg: RunConfig) -> list[Path]:
    drive, _ = _operating_point(args, cfg)
    traj = integrate_cavity(
        drive, cfg.system, args.n_coherent, n_cycles=args.cycles, branch_policy=cfg.branch_policy
    )
    work = work_per_cycle(traj, cfg.system)
    gamma = damping_from_work(work.work, args.n_coherent, cfg.system)
    prov = _provenance(cfg, "workcycle", args.seed)
    rows = [[t, x / cfg.system.mech.x_zpm, n] for t, x, n in zip(traj.t, traj.x, traj.n_c)]
    p1 = write_table(cfg.output_dir / "workcycle", list(SCHEMA["workcycle"]), rows, "csv", prov)
    p2 = write_json(
        cfg.output_dir / "workcycle_summary.json",
        {
            "work_J": work.work,
            "gamma_est_hz": to_hz(gamma),
            "loop_area": loop_area(traj, cfg.system),
            "periodic": work.periodic,
            "cycle_drift": work.drift,
        },
        prov,
    )
    return [p1, p2]


def _delta_phi(text: str) -> float:
    named = {"fitted": DELTA_PHI_FITTED, "linewidth": DELTA_PHI_LINEWIDTH}
    if text in named:
        return named[text]
    try:
        return float(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected a number, 'fitted' or 'linewidth', got {text!r}") from exc


def cmd_fluxnoise(args, cfg: RunConfig) -> list[Path]:
    drive, _ = _operating_point(args, cfg)
    fn = cfg.fluxnoise
    if args.sigma_hz is not None:
        sigma = hz(args.sigma_hz)
    else:
        delta_phi = args.delta_phi if args.delta_phi is not None else fn.get("delta_phi")
        if delta_phi is None and "sigma_hz" in fn:
            sigma = hz(float(fn["sigma_hz"]))
        elif delta_phi is None:
            raise ConfigError("fluxnoise needs --sigma-hz, --delta-phi or fluxnoise.delta_phi")
        else:
            if cfg.system.coupling.flux_per_zpm is None:
                raise ConfigError("coupling.flux_per_zpm is required to convert delta_phi")
            if isinstance(delta_phi, str):
                try:
                    delta_phi = _delta_phi(delta_phi)
                except argparse.ArgumentTypeError as exc:
                    raise ConfigError(f"fluxnoise.delta_phi: {exc}") from exc
            sigma = sigma_from_flux(float(delta_phi), cfg.system.coupling.flux_per_zpm, cfg.system.g0)
    noise = FluxNoiseSpec(sigma, int(fn.get("n_samples", 50)), float(fn.get("span", 2.0)))
    grid = parse_grid(args.freq) if args.freq else None
    trace, res = composite_spectrum(drive.detuning, drive.n_in, cfg.system, noise, grid, cfg.branch_policy)
    fm = to_hz(cfg.system.omega_m)
    try:
        gamma_fit, f_fit = composite_linewidth_frequency(trace)
    except (FitError, ValueError) as exc:
        log.warning("composite Lorentzian fit failed: %s", exc)
        gamma_fit, f_fit = math.nan, math.nan
    prov = _provenance(cfg, "fluxnoise", args.seed)
    path = cfg.output_dir / "fluxnoise_spectrum.csv"
    path.parent.mkdir(parents=True, exist_ok=True)
    write_csv(trace, path, header=_header(prov))
    summary = write_json(
        cfg.output_dir / "fluxnoise_summary.json",
        {
            "n_m_composite": res.n_m,
            "gamma_fit_hz": gamma_fit,
            "f_fit_hz": f_fit,
            "excluded_weight": res.excluded_weight,
            "sigma_hz": to_hz(sigma),
            "f_m_hz": fm,
        },
        prov,
    )
    return [path, summary]


def _read_s21(path: Path):
    with path.open(newline="") as fh:
        rows = list(csv.DictReader(line for line in fh if not line.startswith("#")))
    try:
        f = np.array([float(r["freq_hz"]) for r in rows])
        z = np.array([complex(float(r["re_s21"]), float(r["im_s21"])) for r in rows])
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"{path}: expected numeric columns freq_hz,re_s21,im_s21") from exc
    return f, z


def cmd_fit_cavity(args, cfg: RunConfig) -> list[Path]:
    prov = _provenance(cfg, "fit-cavity", args.seed)
    out = []
    if args.synthesize:
        rng = np.random.default_rng(args.seed)
        p = dict(a=10.1, alpha_env=-2.33, tau=73.7e-9, f_c=to_hz(cfg.system.cavity.omega_c), phi_0=0.02,
                 q_loaded=2349.0, q_coupling_abs=3485.0)
        width = p["f_c"] / p["q_loaded"]
        f = np.linspace(p["f_c"] - 5 * width, p["f_c"] + 5 * width, args.points)
        noise = p["a"] * 10.0 ** (-args.snr_db / 20.0) / math.sqrt(2.0)
        z = s21_full(f, **p) + noise * (rng.standard_normal(f.size) + 1j * rng.standard_normal(f.size))
        synth = cfg.output_dir / "s21_synthetic.csv"
        synth.parent.mkdir(parents=True, exist_ok=True)
        with synth.open("w", newline="") as fh:
            fh.write(f"# {_header(prov)[0]}\n")
            w = csv.writer(fh)
            w.writerow(["freq_hz", "re_s21", "im_s21"])
            for fi, zi in zip(f, z):
                w.writerow([repr(float(fi)), repr(float(zi.real)), repr(float(zi.imag))])
        out.append(synth)
    elif args.input:
        f, z = _read_s21(Path(args.input))
    else:
        raise ConfigError("fit-cavity needs --input or --synthesize")
    r = circle_fit(f, z)
    out.append(write_json(cfg.output_dir / "cavity_fit.json", _cavity_payload(r), prov))
    return out


def _cavity_payload(r: CircleFitResult) -> dict[str, Any]:
    return {
        "a": r.a,
        "alpha_env_rad": r.alpha_env,
        "tau_s": r.tau,
        "f_c_hz": r.f_c,
        "phi_0_rad": r.phi_0,
        "q_loaded": r.q_loaded,
        "q_coupling_abs": r.q_coupling_abs,
        "q_internal": r.q_internal,
        "residual_rms": r.residual_rms,
    }


def _band(text: Optional[str]) -> Optional[tuple[float, float]]:
    if text is None:
        return None
    try:
        lo, hi = (float(v) for v in text.split(":"))
    except ValueError as exc:
        raise ConfigError(f"band {text!r} must be lo:hi") from exc
    return lo, hi


def cmd_fit_spectrum(args, cfg: RunConfig) -> list[Path]:
    trace = read_csv(Path(args.input), enbw=args.enbw)
    removed = 0
    protect = _band(args.protect)
    if protect is not None:
        cleaned = remove_outliers(trace, protect)
        trace, removed = cleaned.trace, cleaned.removed
    window = _band(args.window)
    fit = dho_fit(trace, window, min_snr_db=args.min_snr_db)
    payload: dict[str, Any] = {
        "amplitude": fit.amplitude,
        "center_hz": fit.center,
        "linewidth_hz": fit.linewidth,
        "offset": fit.offset,
        "errors": fit.errors,
        "area": fit.area,
        "snr_db": fit.snr_db,
        "outliers_removed": removed,
    }
    integral = None
    floor_band = _band(args.floor_band)
    if floor_band is not None:
        band = window or (fit.center - 5 * fit.linewidth, fit.center + 5 * fit.linewidth)
        integral = integrate_peak(trace, band, floor_band, linewidth=fit.linewidth)
        payload["integrated_area"] = integral.area
        payload["integrated_area_uncertainty"] = integral.uncertainty
    quality = goodness_of_fit(fit, integral, min_snr_db=args.min_snr_db)
    payload["accepted"] = quality.accepted
    payload["rejection_reasons"] = list(quality.reasons)
    prov = _provenance(cfg, "fit-spectrum", args.seed)
    return [write_json(cfg.output_dir / "spectrum_fit.json", payload, prov)]


def cmd_calibrate(args, cfg: RunConfig) -> list[Path]:
    trace = read_csv(Path(args.input), enbw=args.enbw)
    if args.cavity_fit:
        data = json.loads(Path(args.cavity_fit).read_text())
        res = CircleFitResult(
            a=data["a"], alpha_env=data["alpha_env_rad"], tau=data["tau_s"], omega_c=hz(data["f_c_hz"]),
            phi_0=data["phi_0_rad"], q_loaded=data["q_loaded"], q_coupling_abs=data["q_coupling_abs"],
            residual_rms=data.get("residual_rms", 0.0),
        )
        if args.pump_hz is None:
            raise ConfigError("--pump-hz is required with --cavity-fit")
        slope_mag, slope_phase, s21 = cavity_slopes(res, hz(args.pump_hz))
    elif args.slopes:
        parts = [float(v) for v in args.slopes.split(":")]
        if len(parts) != 4:
            raise ConfigError("--slopes must be alpha:beta:re_s21:im_s21 (slopes per rad/s)")
        slope_mag, slope_phase, s21 = parts[0], parts[1], complex(parts[2], parts[3])
    else:
        raise ConfigError("calibrate needs --cavity-fit with --pump-hz, or --slopes")
    if args.n_m is not None:
        n_m = args.n_m
    elif args.temperature is not None:
        n_m = thermal_occupation(args.temperature, cfg.system.omega_m)
    else:
        n_m = cfg.system.mech.n_thermal
    inp = CalibrationInput(
        spectrum=trace,
        dev=hz(args.dev_hz),
        omega_mod=hz(args.f_mod_hz),
        enbw=trace.enbw,
        s21_at_pump=s21,
        slope_mag=slope_mag,
        slope_phase=slope_phase,
        carrier_freq=args.carrier_hz,
        mech_window=_band(args.mech_window),
    )
    g0 = gorodetsky_g0(inp, n_m)
    g0sq_nm = slope_calibration_g0sq_nm(inp)
    prov = _provenance(cfg, "calibrate", args.seed)
    out = [
        write_json(
            cfg.output_dir / "calibration.json",
            {
                "g0_gorodetsky_hz": to_hz(g0.g0),
                "g0_gorodetsky_uncertainty_hz": to_hz(g0.uncertainty),
                "g0sq_nm_slope_hz2": g0sq_nm / TWO_PI**2,
                "g0_slope_hz": to_hz(math.sqrt(g0sq_nm / n_m)),
                "n_m": n_m,
            },
            prov,
        )
    ]
    if args.rescale:
        rescaled = rescale_to_zpm(trace, inp, g0.g0)
        path = cfg.output_dir / "rescaled_spectrum.csv"
        write_csv(rescaled, path, header=_header(prov))
        out.append(path)
    return out


def cmd_g0_sweep(args, cfg: RunConfig) -> list[Path]:
    g0_values = hz(parse_grid(args.g0))
    rows = g0_sweep(g0_values, cfg.system, cap_fraction=args.cap, workers=_workers(args))
    table = [
        [to_hz(r.g0), r.n_in_kerr, r.n_m_kerr, r.n_m_linear_same_power, r.n_in_linear, r.n_m_linear_best]
        for r in rows
    ]
    prov = _provenance(cfg, "fig4c", args.seed)
    return [write_table(cfg.output_dir / "g0_sweep", list(SCHEMA["fig4c"]), table, cfg.output_format, prov)]


COMMANDS = {
    "steady": cmd_steady,
    "cool-trace": cmd_cool_trace,
    "spectrum": cmd_spectrum,
    "workcycle": cmd_workcycle,
    "fluxnoise": cmd_fluxnoise,
    "fit-cavity": cmd_fit_cavity,
    "fit-spectrum": cmd_fit_spectrum,
    "calibrate": cmd_calibrate,
    "fig4c": cmd_g0_sweep,
}


def _columns_epilog(name: str) -> Optional[str]:
    cols = SCHEMA.get(name)
    if not cols:
        return None
    return "output columns:\n" + "\n".join(f"  {k:24s} {v}" for k, v in cols.items())


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="TOML run configuration (Hz units); defaults to the built-in device")
    common.add_argument("--set", dest="overrides", action="append", default=[], metavar="SECTION.KEY=VALUE",
                        help="override a configuration entry (repeatable)")
    common.add_argument("--out", type=Path, help="output directory (overrides output.dir)")
    common.add_argument("--seed", type=int, default=0, help="seed for stochastic steps (noise synthesis)")
    common.add_argument("--workers", type=int, help=f"worker processes (default: ${WORKERS_ENV} or 1)")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="kerrcool", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"kerrcool {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name: str, help_text: str) -> argparse.ArgumentParser:
        return sub.add_parser(name, parents=[common], help=help_text, epilog=_columns_epilog(name),
                              formatter_class=argparse.RawDescriptionHelpFormatter)

    p = add("steady", "classical photon-number roots over detuning/power grids")
    p.add_argument("--delta", help="detuning grid in Hz, start:stop:count")
    p.add_argument("--n-in", help="input flux grid (1/s), start:stop:count or a single value")

    p = add("cool-trace", "phonon number, damping and frequency versus detuning; one file per n_in")
    p.add_argument("--delta", help="detuning grid in Hz, start:stop:count")
    p.add_argument("--n-in", help="input flux grid (1/s)")

    for name, text in (("spectrum", "phonon spectral density at one operating point"),
                       ("fluxnoise", "flux-noise averaged spectrum and phonon number")):
        p = add(name, text)
        p.add_argument("--delta-hz", type=float, help="detuning (Hz); default first config grid point")
        p.add_argument("--n-in", type=float, help="input flux (1/s); default first config value")
        p.add_argument("--freq", help="frequency grid in Hz (default: adaptive)")
        if name == "spectrum":
            p.add_argument("--enbw", type=float, default=1.0, help="ENBW metadata (Hz)")
        else:
            p.add_argument(
                "--delta-phi",
                type=_delta_phi,
                help="rms flux noise in flux quanta, or 'fitted' / 'linewidth' for the reference device values",
            )
            p.add_argument("--sigma-hz", type=float, help="detuning noise standard deviation (Hz)")

    p = add("workcycle", "time-domain cavity loop under a coherent mechanical oscillation")
    p.add_argument("--delta-hz", type=float)
    p.add_argument("--n-in", type=float)
    p.add_argument("--n-coherent", type=float, required=True, help="coherent phonon number of the prescribed motion")
    p.add_argument("--cycles", type=int, default=3)

    p = add("fit-cavity", "circle fit of a notch resonator trace (CSV freq_hz,re_s21,im_s21)")
    p.add_argument("--input", help="S21 CSV")
    p.add_argument("--synthesize", action="store_true", help="fit a seeded synthetic trace instead of --input")
    p.add_argument("--snr-db", type=float, default=60.0)
    p.add_argument("--points", type=int, default=801)

    p = add("fit-spectrum", "Lorentzian sideband fit with outlier removal and integration check")
    p.add_argument("--input", required=True, help="spectrum CSV (freq_hz,psd)")
    p.add_argument("--enbw", type=float, help="ENBW (Hz) if not in the file")
    p.add_argument("--window", help="fit window lo:hi (Hz)")
    p.add_argument("--protect", help="band lo:hi (Hz) shielded from outlier removal")
    p.add_argument("--floor-band", help="noise-floor band lo:hi (Hz) for numerical integration")
    p.add_argument("--min-snr-db", type=float, default=3.0)

    p = add("calibrate", "g0 from the reference-tone and cavity-slope methods")
    p.add_argument("--input", required=True, help="analyser spectrum CSV (freq_hz,psd)")
    p.add_argument("--enbw", type=float)
    p.add_argument("--dev-hz", type=float, required=True, help="frequency-modulation deviation (Hz)")
    p.add_argument("--f-mod-hz", type=float, required=True, help="modulation offset from the carrier (Hz)")
    p.add_argument("--carrier-hz", type=float, default=0.0, help="carrier position on the spectrum axis (Hz)")
    p.add_argument("--mech-window", required=True, help="sideband fit window lo:hi (Hz)")
    p.add_argument("--cavity-fit", help="cavity_fit.json from fit-cavity")
    p.add_argument("--pump-hz", type=float, help="pump frequency (Hz) used with --cavity-fit")
    p.add_argument("--slopes", help="alpha:beta:re_s21:im_s21 given directly")
    p.add_argument("--n-m", type=float, help="known phonon number")
    p.add_argument("--temperature", type=float, help="bath temperature (K) giving n_m")
    p.add_argument("--rescale", action="store_true", help="also write the spectrum in phonon units")

    p = add("fig4c", "best phonon number versus g0: Kerr cavity and linear comparisons")
    p.add_argument("--g0", required=True, help="g0 grid in Hz, start:stop:count or a list")
    p.add_argument("--cap", type=float, default=0.99, help="power cap as a fraction of bistability")
    return parser


def run(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    overrides = list(args.overrides)
    if args.out is not None:
        overrides.append(f'output.dir="{args.out.as_posix()}"')
    try:
        cfg = load_config(args.config, overrides)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    try:
        write_schema(cfg.output_dir)
        paths = COMMANDS[args.command](args, cfg)
    except (ConfigError, OSError, KeyError, json.JSONDecodeError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return 1
    except (ArithmeticError, FitError, RuntimeError, ValueError, np.linalg.LinAlgError) as exc:
        diag = cfg.output_dir / "diagnostics.json"
        write_json(
            diag,
            {"error": type(exc).__name__, "message": str(exc), "traceback": traceback.format_exc()},
            _provenance(cfg, args.command, args.seed),
        )
        print(f"numerical failure: {exc} (details in {diag})", file=sys.stderr)
        return 2
    for p in paths:
        print(p)
    return 0


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
