"""Observable regularity diagnostics for the periodic 3D Navier-Stokes equations."""

from .errors import BlowUpError, ConfigError, ObsRegError, ResolutionMismatchError, SnapshotFormatError
from .nse_solver import SolverConfig, Trajectory, beltrami_field, nonlinear_term, random_solenoidal_field, run, step
from .nudging import NudgeConfig, SyncSeries, default_gain, feedback, run_nudged
from .observers import ModalData, NodalData, observe_modal, observe_nodal
from .regularity_monitor import CriterionReport, ObservationSeries, check, h_sweep, mh_modal, mh_nodal, wh
from .spectral_core import (
    PhysicalField,
    SpectralField,
    TorusConfig,
    leray_project,
    norms,
    stokes_eigenvalue,
    to_physical,
    to_spectral,
)
from .tetra_interpolant import (
    TetraTopology,
    build_basis,
    directional_data,
    evaluate,
    gradient,
    h1_data_norms,
    l2_error,
    locate,
    mean_correct,
)

__version__ = "0.1.0"
