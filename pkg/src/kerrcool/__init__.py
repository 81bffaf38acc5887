"""Backaction cooling of a mechanical mode by a Kerr-nonlinear microwave cavity."""
from .fluctuations import (
    CoolingPoint,
    LinearizedParams,
    MechanicalInstability,
    MechanicalResponse,
    cavity_susceptibility,
    cooling_trace,
    linearize,
    mechanical_response,
    mechanical_spectrum,
    phonon_occupation,
    self_energy,
    spectrum_grid,
)
from .model import (
    CavityParams,
    CouplingParams,
    DriveSpec,
    MechParams,
    SystemParams,
    hz,
    reference_device,
    thermal_occupation,
    to_hz,
    validate,
)
from .steady_state import (
    SteadyState,
    bistability_threshold,
    effective_kerr,
    intracavity_roots,
    select_branch,
    steady_displacement,
)
from .trace import SpectrumTrace

__version__ = "0.1.0"
