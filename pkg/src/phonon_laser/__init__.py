"""Two-mode photonic-molecule phonon laser: model, dynamics and spectra."""

__version__ = "0.1.0"

from .errors import PhononLaserError, RuntimeFailure, ValidationError  # noqa: E402
from .model import (  # noqa: E402
    Branch,
    CouplingModel,
    MechanicalMode,
    OpticalMode,
    PhotonicMolecule,
    PumpConfig,
    mechanical_gain,
    supermodes,
    threshold_power,
)

__all__ = [
    "Branch",
    "CouplingModel",
    "MechanicalMode",
    "OpticalMode",
    "PhononLaserError",
    "PhotonicMolecule",
    "PumpConfig",
    "RuntimeFailure",
    "ValidationError",
    "mechanical_gain",
    "supermodes",
    "threshold_power",
]
