"""Coupling-rate calibration from a probe-tone spectrum.

A mechanical frequency modulation of amplitude d_omega turns the transmitted
probe into a carrier plus sidebands whose power, relative to the incident
carrier power A_p^2, is (alpha^2 + beta^2) d_omega^2 / 4, where alpha and
beta are the slopes of |S21| and arg S21 of the normalized cavity response.
For the mechanics d_omega = 2 sqrt(n_m) g0; a deliberate frequency modulation
of deviation Dev gives a reference line of the same form.

Notch geometry: sidebands generated inside the resonator leave equally in
both directions, so only half reaches the output port, while the carrier
arrives with |S21(w_p)|^2. The reference tone is treated the same way as the
mechanical sideband, so its ratio to the sideband is unaffected.

Spectra are analyser power per ENBW bin; the sideband is a Lorentzian of
peak height h and FWHM Gamma (rad/s) with integrated power h Gamma / (4 ENBW),
while the carrier and reference tone are single-bin lines.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..model import TWO_PI
from ..trace import SpectrumTrace
from .spectrum import DHOFitResult, dho_fit

NOTCH_SIDEBAND_FRACTION = 0.5


class MissingCalibrationPeak(ValueError):
    pass


@dataclass(frozen=True)
class CalibrationInput:
    """Everything needed to turn one analyser trace into g0.

    Frequencies on the spectrum axis (carrier, sideband window, reference
    tone) are in Hz; ``dev`` and ``omega_mod`` are angular.
    """

    spectrum: SpectrumTrace
    dev: float
    omega_mod: float
    enbw: float
    s21_at_pump: complex
    slope_mag: float
    slope_phase: float
    carrier_freq: float = 0.0
    mech_window: Optional[tuple[float, float]] = None
    floor: Optional[float] = None

    def __post_init__(self) -> None:
        if not self.enbw > 0:
            raise ValueError("enbw must be positive")
        if self.dev < 0:
            raise ValueError("dev must be >= 0")

    @property
    def cal_freq(self) -> float:
        return self.carrier_freq + self.omega_mod / TWO_PI


@dataclass(frozen=True)
class G0Estimate:
    g0: float
    uncertainty: float


def _floor(inp: CalibrationInput) -> float:
    if inp.floor is not None:
        return inp.floor
    psd = inp.spectrum.psd
    if inp.mech_window is not None:
        f = inp.spectrum.freq
        outside = (f < inp.mech_window[0]) | (f > inp.mech_window[1])
        if outside.sum() >= 3:
            psd = psd[outside]
    return float(np.median(psd))


def line_height(inp: CalibrationInput, freq: float, tol_bins: int = 2, side_bins: int = 8) -> float:
    """Height of a single-bin line near ``freq`` above its local background.

    The background is the mean of the two flanks just outside the search
    window, which removes sloping contributions such as a nearby sideband tail.
    """
    f, p = inp.spectrum.freq, inp.spectrum.psd
    i = int(np.argmin(np.abs(f - freq)))
    lo, hi = max(i - tol_bins, 0), min(i + tol_bins + 1, f.size)
    peak = lo + int(np.argmax(p[lo:hi]))
    left = p[max(lo - side_bins, 0) : lo]
    right = p[hi : hi + side_bins]
    if left.size and right.size:
        background = 0.5 * (float(np.median(left)) + float(np.median(right)))
    elif left.size or right.size:
        background = float(np.median(left if left.size else right))
    else:
        background = _floor(inp)
    return float(p[peak]) - background


def calibration_peak_height(inp: CalibrationInput, min_ratio: float = 3.0) -> float:
    h = line_height(inp, inp.cal_freq)
    floor = _floor(inp)
    if h <= 0 or h < (min_ratio - 1.0) * max(floor, 0.0):
        raise MissingCalibrationPeak(f"no calibration line at {inp.cal_freq:g} Hz")
    return h


def _sideband_fit(inp: CalibrationInput, dho: Optional[DHOFitResult]) -> DHOFitResult:
    if dho is not None:
        return dho
    if inp.mech_window is None:
        raise ValueError("mech_window is required when no sideband fit is supplied")
    return dho_fit(inp.spectrum, inp.mech_window)


def sideband_power(dho: DHOFitResult, enbw: float) -> float:
    """Integrated sideband power h Gamma / (4 ENBW) with Gamma in rad/s."""
    gamma = TWO_PI * dho.linewidth
    return dho.amplitude * gamma / (4.0 * enbw)


def gorodetsky_g0(inp: CalibrationInput, n_m: float, dho: Optional[DHOFitResult] = None) -> G0Estimate:
    """g0 from the ratio of the mechanical sideband to the frequency-modulation reference line."""
    if not n_m > 0:
        raise ValueError("n_m must be > 0")
    fit = _sideband_fit(inp, dho)
    p_cal = calibration_peak_height(inp)
    g0_sq = inp.dev**2 / (4.0 * n_m) * sideband_power(fit, inp.enbw) / p_cal
    rel = 0.0
    if fit.errors:
        ra = fit.errors.get("amplitude", 0.0) / fit.amplitude if fit.amplitude else 0.0
        rw = fit.errors.get("linewidth", 0.0) / fit.linewidth if fit.linewidth else 0.0
        rel = 0.5 * math.hypot(ra, rw)
    g0 = math.sqrt(g0_sq)
    return G0Estimate(g0, g0 * rel)


def slope_calibration_g0sq_nm(inp: CalibrationInput, dho: Optional[DHOFitResult] = None) -> float:
    """g0^2 n_m from the sideband-to-carrier ratio and the cavity slopes, notch corrected."""
    s21_sq = abs(inp.s21_at_pump) ** 2
    if s21_sq < 1e-12:
        raise ValueError("|S21| at the pump is ~0; the carrier ratio is ill-conditioned")
    slope_sq = inp.slope_mag**2 + inp.slope_phase**2
    if slope_sq == 0:
        raise ValueError("cavity slopes vanish at the pump frequency")
    fit = _sideband_fit(inp, dho)
    carrier = line_height(inp, inp.carrier_freq)
    if not carrier > 0:
        raise MissingCalibrationPeak("no carrier line found")
    # carrier / |S21|^2 is the incident power; the sideband lost half to the backward port
    incident = carrier / s21_sq
    return sideband_power(fit, inp.enbw) / (NOTCH_SIDEBAND_FRACTION * slope_sq * incident)


def rescale_factor(inp: CalibrationInput, g0: float) -> float:
    """Analyser power -> phonon PSD (quanta/Hz) factor; a sideband's area becomes n_m."""
    p_cal = calibration_peak_height(inp)
    return (inp.dev / 2.0) ** 2 / (p_cal * inp.enbw * g0**2)


def rescale_to_zpm(spectrum: SpectrumTrace, inp: CalibrationInput, g0: float) -> SpectrumTrace:
    factor = rescale_factor(inp, g0)
    return spectrum.with_psd(spectrum.psd * factor, units="xzpm^2/Hz", rescale_factor=factor)


def synthesize_calibration_spectrum(
    freq: np.ndarray,
    g0: float,
    n_m: float,
    gamma_m: float,
    omega_m: float,
    dev: float,
    omega_mod: float,
    enbw: float,
    s21_at_pump: complex,
    slope_mag: float,
    slope_phase: float,
    carrier_power: float = 1.0,
    floor: float = 0.0,
    carrier_freq: float = 0.0,
) -> SpectrumTrace:
    """Forward model of the analyser trace: carrier, mechanical sideband and reference line.

    ``carrier_power`` is the incident A_p^2; ``freq`` (Hz) is the analyser axis.
    Lines are placed in the bin nearest their frequency.
    """
    freq = np.asarray(freq, dtype=float)
    slope_sq = slope_mag**2 + slope_phase**2
    psd = np.full(freq.shape, float(floor))
    # mechanical sideband: total power (slope^2/4) (2 sqrt(n) g0)^2 A^2, half forward
    p_mech = NOTCH_SIDEBAND_FRACTION * slope_sq * n_m * g0**2 * carrier_power
    h_m = p_mech * 4.0 * enbw / gamma_m
    f_m = carrier_freq + omega_m / TWO_PI
    fwhm_hz = gamma_m / TWO_PI
    psd += h_m / (1.0 + (2.0 * (freq - f_m) / fwhm_hz) ** 2)
    p_cal = NOTCH_SIDEBAND_FRACTION * slope_sq * dev**2 / 4.0 * carrier_power
    psd[int(np.argmin(np.abs(freq - (carrier_freq + omega_mod / TWO_PI))))] += p_cal
    psd[int(np.argmin(np.abs(freq - carrier_freq)))] += abs(s21_at_pump) ** 2 * carrier_power
    return SpectrumTrace(freq, psd, enbw=enbw, metadata={"units": "W"})
