"""Spectral toolkit for the rotating compressible Euler system."""

from .dispersion import (
    OMEGA,
    OMEGA_INC,
    SIGMA,
    Branch,
    asym_gap,
    distances,
    distances_rz,
    grad_lam_rz,
    hessian_lam_rz,
    lam,
    lam_rz,
)
from .grid import PhysParams, SpectralGrid, build_grid, mixed_time_norm, norm
from .localization import LocSpec, phi, project, psi, symbol, symbol_mesh
from .modes import (
    AngleCoeffs,
    ModeSet,
    ModeTransform,
    StateW,
    angle_coeffs,
    from_aux,
    from_modes,
    matrix_m,
    project_mode,
    to_aux,
    to_modes,
)
from .propagator import (
    DecayReport,
    OptimalDecayResult,
    StrichartzReport,
    bessel_j0,
    evolve_linear,
    kernel_quadrature,
    measure_decay,
    optimal_decay,
    strichartz_norm,
)
from .solver import (
    SolverConfig,
    Trajectory,
    compression_pulse,
    energy_physical,
    gronwall_check,
    lifespan_sweep,
    rhs,
    simulate,
    step,
)

__version__ = "0.1.0"
