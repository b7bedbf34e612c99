"""On-grid sparse 2-D array synthesis with reweighted-L1 cone programs."""

__version__ = "0.1.0"

from .beampattern import bp_cut, bp_raster, evaluate_bp, grating_lobes, steering_matrix
from .conic import ConicProblem, SolveStatus, solve
from .geometry import (
    ApertureLayout,
    ApodizationVector,
    DenseGridSpec,
    build_dense_layout,
    count_active,
    prune_by_threshold,
)
from .synthesis import MaskSpec, SynthesisConfig, run_synthesis, verify_solution

__all__ = [
    "__version__",
    "ApertureLayout",
    "ApodizationVector",
    "ConicProblem",
    "DenseGridSpec",
    "MaskSpec",
    "SolveStatus",
    "SynthesisConfig",
    "bp_cut",
    "bp_raster",
    "build_dense_layout",
    "count_active",
    "evaluate_bp",
    "grating_lobes",
    "prune_by_threshold",
    "run_synthesis",
    "solve",
    "steering_matrix",
    "verify_solution",
]
