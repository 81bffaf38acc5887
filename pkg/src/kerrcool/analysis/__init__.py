"""Measurement analysis: resonator fit, sideband fits, binning and g0 calibration."""
from .binning import Binning, kmeans_bin
from .calibration import (
    CalibrationInput,
    G0Estimate,
    MissingCalibrationPeak,
    gorodetsky_g0,
    rescale_factor,
    rescale_to_zpm,
    slope_calibration_g0sq_nm,
    synthesize_calibration_spectrum,
)
from .circle import CircleFitError, CircleFitResult, cavity_slopes, circle_fit, internal_q, s21_full
from .spectrum import (
    DHOFitResult,
    FitError,
    LowSignal,
    PeakIntegral,
    dho_fit,
    goodness_of_fit,
    integrate_peak,
    lorentzian,
    lorentzian_fit,
    remove_outliers,
)

__all__ = [
    "Binning",
    "CalibrationInput",
    "CircleFitError",
    "CircleFitResult",
    "DHOFitResult",
    "FitError",
    "G0Estimate",
    "LowSignal",
    "MissingCalibrationPeak",
    "PeakIntegral",
    "cavity_slopes",
    "circle_fit",
    "dho_fit",
    "goodness_of_fit",
    "gorodetsky_g0",
    "integrate_peak",
    "internal_q",
    "kmeans_bin",
    "lorentzian",
    "lorentzian_fit",
    "remove_outliers",
    "rescale_factor",
    "rescale_to_zpm",
    "s21_full",
    "slope_calibration_g0sq_nm",
    "synthesize_calibration_spectrum",
]
