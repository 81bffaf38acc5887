"""Mechanical sideband fitting, integration and cleaning."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.integrate import trapezoid
from scipy.ndimage import median_filter
from scipy.optimize import OptimizeWarning, curve_fit

from ..trace import SpectrumTrace

MAD_TO_SIGMA = 1.4826


class FitError(RuntimeError):
    pass


class LowSignal(FitError):
    """Peak is not sufficiently far above the noise floor to trust a fit."""


@dataclass(frozen=True)
class DHOFitResult:
    amplitude: float
    center: float
    linewidth: float
    offset: float
    errors: dict[str, float] = field(default_factory=dict)

    @property
    def area(self) -> float:
        """Integral over ordinary frequency of the Lorentzian above the offset."""
        return math.pi * self.amplitude * self.linewidth / 2.0

    @property
    def snr_db(self) -> float:
        if self.offset <= 0:
            return math.inf
        return 10.0 * math.log10((self.amplitude + self.offset) / self.offset)

    def evaluate(self, freq) -> np.ndarray:
        return lorentzian(np.asarray(freq, dtype=float), self.amplitude, self.center, self.linewidth, self.offset)


@dataclass(frozen=True)
class PeakIntegral:
    area: float
    uncertainty: float
    floor: float
    truncation_factor: float = 1.0


@dataclass(frozen=True)
class OutlierResult:
    trace: SpectrumTrace
    removed: int


@dataclass(frozen=True)
class FitQuality:
    accepted: bool
    reasons: tuple[str, ...]


def lorentzian(f, amplitude, center, linewidth, offset):
    """Lorentzian with peak ``amplitude`` above ``offset`` and FWHM ``linewidth``."""
    return amplitude / (1.0 + (2.0 * (f - center) / linewidth) ** 2) + offset


def _guess(trace: SpectrumTrace):
    f, p = trace.freq, trace.psd
    offset = float(np.median(p))
    i = int(np.argmax(p))
    amp = float(p[i] - offset)
    half = offset + amp / 2.0
    above = np.nonzero(p >= half)[0]
    width = float(f[above[-1]] - f[above[0]]) if above.size > 1 else float(np.median(np.diff(f)))
    width = max(width, float(np.median(np.diff(f))))
    return amp, float(f[i]), width, offset


def _fit(model, trace: SpectrumTrace, min_snr_db: Optional[float]) -> DHOFitResult:
    if trace.freq.size < 5:
        raise FitError("too few samples in the fit window")
    p0 = _guess(trace)
    scale_p = max(abs(p0[0]), abs(p0[3]), 1e-300)
    f0 = p0[1]
    x = trace.freq - f0
    y = trace.psd / scale_p

    def shifted(xx, a, c, w, o):
        return model(xx + f0, a, c + f0, w, o)

    try:
        with warnings.catch_warnings():
            # exact synthetic data leaves the covariance undefined
            warnings.simplefilter("ignore", OptimizeWarning)
            popt, pcov = curve_fit(
                shifted,
                x,
                y,
                p0=[p0[0] / scale_p, 0.0, p0[2], p0[3] / scale_p],
                maxfev=20000,
            )
    except (RuntimeError, ValueError) as exc:
        raise FitError(f"spectrum fit did not converge: {exc}") from exc
    amp, c, w, off = popt
    errs = np.sqrt(np.abs(np.diag(pcov))) if np.all(np.isfinite(pcov)) else np.full(4, np.inf)
    res = DHOFitResult(
        amplitude=float(amp * scale_p),
        center=float(c + f0),
        linewidth=float(abs(w)),
        offset=float(off * scale_p),
        errors={
            "amplitude": float(errs[0] * scale_p),
            "center": float(errs[1]),
            "linewidth": float(errs[2]),
            "offset": float(errs[3] * scale_p),
        },
    )
    if res.amplitude < 0:
        raise FitError("fit converged to a dip, not a peak")
    if min_snr_db is not None and res.snr_db < min_snr_db:
        raise LowSignal(f"peak only {res.snr_db:.2f} dB above the noise floor (< {min_snr_db} dB)")
    return res


def lorentzian_fit(trace: SpectrumTrace, window: Optional[tuple[float, float]] = None, min_snr_db=None):
    if window is not None:
        trace = trace.window(*window)
    return _fit(lorentzian, trace, min_snr_db)


def dho_fit(
    trace: SpectrumTrace, window: Optional[tuple[float, float]] = None, min_snr_db: Optional[float] = 3.0
) -> DHOFitResult:
    """Least-squares fit of a Lorentzian peak plus flat offset.

    Peaks less than ``min_snr_db`` above the fitted offset raise :class:`LowSignal`.
    """
    if window is not None:
        trace = trace.window(*window)
    return _fit(lorentzian, trace, min_snr_db)


def integrate_peak(
    trace: SpectrumTrace,
    band: tuple[float, float],
    floor_band: tuple[float, float],
    linewidth: Optional[float] = None,
) -> PeakIntegral:
    """Area above the median floor inside ``band``.

    The uncertainty is the standard error of the floor estimate times the
    band width. With ``linewidth`` (FWHM, Hz) the Lorentzian tails outside
    a band centred on the peak are added back.
    """
    lo, hi = band
    if lo < trace.freq[0] or hi > trace.freq[-1]:
        raise ValueError("integration band lies outside the frequency grid")
    if not (floor_band[1] <= lo or floor_band[0] >= hi):
        raise ValueError("floor_band must not overlap the integration band")
    fsel = (trace.freq >= floor_band[0]) & (trace.freq <= floor_band[1])
    if fsel.sum() < 2:
        raise ValueError("floor_band holds fewer than two samples")
    floor_vals = trace.psd[fsel]
    floor = float(np.median(floor_vals))
    # median's standard error for roughly Gaussian scatter
    std_err = math.sqrt(math.pi / 2.0) * float(np.std(floor_vals, ddof=1)) / math.sqrt(floor_vals.size)
    sel = (trace.freq >= lo) & (trace.freq <= hi)
    f, p = trace.freq[sel], trace.psd[sel]
    area = float(trapezoid(p - floor, f))
    width = float(f[-1] - f[0]) if f.size > 1 else 0.0
    factor = 1.0
    if linewidth is not None:
        factor = lorentzian_band_fraction((hi - lo) / 2.0, linewidth)
        area /= factor
    return PeakIntegral(area=area, uncertainty=std_err * width / factor, floor=floor, truncation_factor=factor)


def lorentzian_band_fraction(half_band: float, linewidth: float) -> float:
    """Fraction of a Lorentzian's area inside +- ``half_band`` of its centre."""
    return 2.0 / math.pi * math.atan(2.0 * half_band / linewidth)


def remove_outliers(
    trace: SpectrumTrace,
    protect_band: tuple[float, float],
    threshold_sigmas: float = 6.0,
    median_width: int = 31,
    max_passes: int = 20,
) -> OutlierResult:
    """Replace spikes outside ``protect_band`` with a running median.

    A point is a spike when it exceeds the running median by more than
    ``threshold_sigmas`` robust standard deviations (MAD based). Passes are
    repeated until nothing changes, so the operation is idempotent.
    """
    lo, hi = protect_band
    if lo < trace.freq[0] or hi > trace.freq[-1]:
        raise ValueError("protect_band must lie inside the frequency grid")
    psd = trace.psd.copy()
    free = (trace.freq < lo) | (trace.freq > hi)
    removed = np.zeros(psd.size, dtype=bool)
    for _ in range(max_passes):
        local = median_filter(psd, size=median_width, mode="nearest")
        dev = psd - local
        sigma = MAD_TO_SIGMA * float(np.median(np.abs(dev[free]))) if free.any() else 0.0
        # noiseless traces have zero scatter; fall back to a roundoff-level scale
        sigma = max(sigma, 1e-9 * float(np.median(np.abs(psd))))
        if sigma <= 0:
            break
        spikes = free & (dev > threshold_sigmas * sigma)
        if not spikes.any():
            break
        psd[spikes] = local[spikes]
        removed |= spikes
    return OutlierResult(trace.with_psd(psd), int(removed.sum()))


def goodness_of_fit(
    fit: DHOFitResult,
    integral: Optional[PeakIntegral] = None,
    min_snr_db: float = 3.0,
    max_ratio: float = 1.5,
    linewidth_bounds: tuple[float, float] = (5e-6, 300.0),
) -> FitQuality:
    """Acceptance checks on a fitted sideband: SNR, fit-vs-integral agreement and linewidth range."""
    reasons = []
    if fit.snr_db < min_snr_db:
        reasons.append(f"snr {fit.snr_db:.2f} dB below {min_snr_db} dB")
    if integral is not None:
        if integral.area <= 0:
            reasons.append("integrated area is not positive")
        else:
            ratio = fit.area / integral.area
            if not (1.0 / max_ratio <= ratio <= max_ratio):
                reasons.append(f"fit/integral area ratio {ratio:.3g} outside factor {max_ratio}")
    lo, hi = linewidth_bounds
    if not (lo <= fit.linewidth <= hi):
        reasons.append(f"linewidth {fit.linewidth:.3g} Hz outside [{lo:g}, {hi:g}] Hz")
    return FitQuality(accepted=not reasons, reasons=tuple(reasons))
