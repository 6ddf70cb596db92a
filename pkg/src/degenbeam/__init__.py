"""Spectral Galerkin simulation of a hinged beam with degenerate nonlocal damping."""

__version__ = "0.1.0"

from .spectral import (  # noqa: E402
    DomainSpec,
    Spectrum,
    build_spectrum,
    fractional_norm,
    h_norm_sq,
    hs_norm_sq,
    tail_project,
    head_project,
)
from .model import ModelParams, Nonlinearity, check_assumptions, energy  # noqa: E402
from .galerkin import GalerkinSystem, InitialData, ModalState, project_initial  # noqa: E402
from .integrator import SolverConfig, Trajectory, integrate, integrate_pair, energy_residual  # noqa: E402
from .diagnostics import ModelContext  # noqa: E402

__all__ = [
    "DomainSpec", "Spectrum", "build_spectrum", "fractional_norm", "h_norm_sq", "hs_norm_sq",
    "tail_project", "head_project", "ModelParams", "Nonlinearity", "check_assumptions", "energy",
    "GalerkinSystem", "InitialData", "ModalState", "project_initial", "SolverConfig",
    "Trajectory", "integrate", "integrate_pair", "energy_residual", "ModelContext",
]
