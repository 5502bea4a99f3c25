"""Decoherence, non-Markovianity and geometric phase of a dephasing qubit
coupled to thermal and non-equilibrium bosonic baths."""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    ConfigError,
    ConvergenceError,
    DegeneracyError,
    DomainError,
    GpDephaseError,
    OutputError,
    PositivityWarning,
)
from .envmodels import NonEqEnv, SpectralDensity, ThermalEnv  # noqa: E402
from .qubit import BlochInitial  # noqa: E402
from .gp import GpResult, GpRun, gp_evaluate, gp_unitary  # noqa: E402

__all__ = [
    "__version__",
    "ConfigError",
    "ConvergenceError",
    "DegeneracyError",
    "DomainError",
    "GpDephaseError",
    "OutputError",
    "PositivityWarning",
    "SpectralDensity",
    "ThermalEnv",
    "NonEqEnv",
    "BlochInitial",
    "GpRun",
    "GpResult",
    "gp_evaluate",
    "gp_unitary",
]
