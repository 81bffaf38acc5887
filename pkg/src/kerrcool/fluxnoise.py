"""Quasi-static flux noise as a Gaussian spread of probe-cavity detunings.

Each detuning sample yields its own mechanical spectrum; the measured
spectrum is their weighted average. Samples that land in an unstable region
are dropped and the remaining weights renormalized.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .fluctuations import (
    MechanicalInstability,
    SelfEnergyDivergence,
    linearize,
    phonon_occupation,
    spectral_density,
    spectrum_grid,
)
from .model import TWO_PI, DriveSpec, SystemParams
from .steady_state import intracavity_roots, select_branch
from .trace import SpectrumTrace

log = logging.getLogger(__name__)

# rms flux noise of the reference device, in flux quanta: from fits of the
# cooled spectra and from the excess mechanical linewidth, respectively
DELTA_PHI_FITTED = 76.8e-6
DELTA_PHI_LINEWIDTH = 302e-6


class AllSamplesUnstable(ArithmeticError):
    pass


@dataclass(frozen=True)
class FluxNoiseSpec:
    sigma: float
    n_samples: int = 50
    span: float = 2.0

    def __post_init__(self) -> None:
        if not self.sigma >= 0:
            raise ValueError("sigma must be >= 0")
        if self.n_samples < 1:
            raise ValueError("n_samples must be >= 1")
        if not self.span > 0:
            raise ValueError("span must be > 0")


@dataclass(frozen=True)
class CompositeResult:
    n_m: float
    detunings: np.ndarray
    weights: np.ndarray
    n_m_samples: np.ndarray
    excluded_weight: float


def sigma_from_flux(delta_phi: float, flux_per_zpm: float, g0: float) -> float:
    """Detuning spread (rad/s) produced by an rms flux noise ``delta_phi`` (flux quanta)."""
    if not flux_per_zpm > 0:
        raise ValueError("flux_per_zpm must be > 0")
    return delta_phi / flux_per_zpm * g0


def gaussian_weights(noise: FluxNoiseSpec, delta_0: float) -> tuple[np.ndarray, np.ndarray]:
    """Equally spaced detunings over delta_0 +- span*sigma and normalized Gaussian weights."""
    if noise.sigma == 0 or noise.n_samples == 1:
        return np.array([delta_0]), np.array([1.0])
    offsets = np.linspace(-noise.span, noise.span, noise.n_samples)
    w = np.exp(-0.5 * offsets**2)
    w = (w + w[::-1]) / 2.0  # exact mirror symmetry despite linspace rounding
    w /= math.fsum(w)
    return delta_0 + noise.sigma * offsets, w


def _sample(detuning: float, n_in: float, params: SystemParams, policy: str):
    drive = DriveSpec(detuning, n_in)
    st = select_branch(intracavity_roots(drive, params), policy)
    if not st.stable[st.selected]:
        return None
    lin = linearize(drive, st.n_c, params)
    try:
        n_m = phonon_occupation(lin)
    except (MechanicalInstability, SelfEnergyDivergence):
        return None
    return lin, n_m


def _collect(delta_0, n_in, params, noise, policy):
    dets, w = gaussian_weights(noise, delta_0)
    samples = [_sample(d, n_in, params, policy) for d in dets]
    ok = np.array([s is not None for s in samples])
    if not ok.any():
        raise AllSamplesUnstable("every detuning sample is mechanically unstable")
    excluded = float(math.fsum(w[~ok]))
    if excluded > 0:
        log.info("flux noise: excluded %d unstable samples (weight %.3g)", int((~ok).sum()), excluded)
    w_ok = w * ok
    w_ok /= math.fsum(w_ok)
    return dets, w_ok, samples, excluded


def composite_phonon_number(
    delta_0: float, n_in: float, params: SystemParams, noise: FluxNoiseSpec, policy: str = "lowest"
) -> CompositeResult:
    dets, w, samples, excluded = _collect(delta_0, n_in, params, noise, policy)
    n_s = np.array([s[1] if s is not None else math.nan for s in samples])
    n_m = math.fsum(wi * ni for wi, ni in zip(w, n_s) if wi > 0)
    return CompositeResult(n_m, dets, w, n_s, excluded)


def composite_spectrum(
    delta_0: float,
    n_in: float,
    params: SystemParams,
    noise: FluxNoiseSpec,
    freq_hz: Optional[np.ndarray] = None,
    policy: str = "lowest",
) -> tuple[SpectrumTrace, CompositeResult]:
    """Weighted mean of the component phonon spectra on a shared grid.

    Without ``freq_hz`` the grid is the union of every component's adaptive
    grid, so all peaks are resolved and the area tracks the weighted phonon sum.
    """
    dets, w, samples, excluded = _collect(delta_0, n_in, params, noise, policy)
    good = [(wi, s) for wi, s in zip(w, samples) if s is not None and wi > 0]
    if freq_hz is None:
        freq_hz = np.unique(np.concatenate([spectrum_grid(s[0]) for _, s in good]))
    freq_hz = np.asarray(freq_hz, dtype=float)
    psd = np.zeros_like(freq_hz)
    for wi, (lin, _) in good:
        psd += wi * spectral_density(TWO_PI * freq_hz, lin)
    n_s = np.array([s[1] if s is not None else math.nan for s in samples])
    n_m = math.fsum(wi * s[1] for wi, s in good)
    trace = SpectrumTrace(
        freq_hz,
        psd,
        metadata={"units": "quanta/Hz", "sigma_hz": noise.sigma / TWO_PI, "excluded_weight": excluded},
    )
    return trace, CompositeResult(n_m, dets, w, n_s, excluded)


def composite_linewidth_frequency(composite: SpectrumTrace, window: Optional[tuple[float, float]] = None):
    """Lorentzian linewidth and centre (both Hz) of a composite mechanical peak."""
    from .analysis.spectrum import lorentzian_fit

    trace = composite
    if window is not None:
        trace = composite.window(*window)
    if not trace.psd.max() > 3.0 * np.median(trace.psd):
        raise ValueError("no resolvable peak: maximum is below 3x the median")
    fit = lorentzian_fit(trace)
    return fit.linewidth, fit.center
