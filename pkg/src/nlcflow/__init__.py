"""Staggered-grid solver and verification harness for density-dependent nematic flow."""

from .config import SolverConfig, config_from_dict, load_config
from .coupling import (
    PicardOptions,
    SchemeOptions,
    Trajectory,
    iterate_distance,
    run,
    simulate,
    step_coupled,
    trajectory_iteration,
)
from .diagnostics import (
    CSV_COLUMNS,
    DiagnosticsRecord,
    decay_check,
    dirichlet_eigenvalue,
    dissipation,
    energy,
    energy_law_residual,
    relative_energy,
    transport_conservation_report,
)
from .director import DirectorOptions, solve_director
from .errors import (
    CflViolation,
    ConfigError,
    FormatError,
    GridMismatch,
    InvalidPreset,
    IoError,
    LinearSolveDiverged,
    NlcflowError,
    NonPositiveDensity,
    NonSolenoidalVelocity,
    PicardDiverged,
    SaddleSolveDiverged,
    SolverError,
)
from .fields import FlowState, Grid, div, grad, laplacian
from .io import read_snapshot, read_state, write_snapshot, write_state
from .presets import PRESETS, make_initial_data
from .stokes import StokesOptions, StokesSolver, solve_stokes
from .transport import TransportOptions, solve_transport

__version__ = "0.1.0"
