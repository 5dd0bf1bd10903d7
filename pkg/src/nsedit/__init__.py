"""Sequential null-space-aligned editing for linear associative memories."""

from .errors import (
    ConditioningError,
    ConfigError,
    DimensionError,
    GapDegenerateError,
    MatrixFormatError,
    NotSPDError,
    NSEditError,
    NumericalError,
)
from .numerics import CholeskyFactor, SvdResult, cholesky, psd_eig, spectral_norm, thin_svd, tri_solve
from .projector import (
    AlignmentRecord,
    Projector,
    align,
    deviation,
    estimate_initial,
    interference_bound_check,
    oracle_recompute,
    thm2_bound,
)
from .sequence import EditSession, Method, SolverConfig, StepTrace, StreamAbort, apply_edit, new_session, run_stream
from .solver import EditBatch, residual, solve_alphaedit, solve_direct, solve_plain, solve_woodbury
from .synth import SummaryReport, WorldSpec, gen_stream, gen_world, metrics

__version__ = "0.1.0"

__all__ = [
    "AlignmentRecord",
    "CholeskyFactor",
    "ConditioningError",
    "ConfigError",
    "DimensionError",
    "EditBatch",
    "EditSession",
    "GapDegenerateError",
    "MatrixFormatError",
    "Method",
    "NSEditError",
    "NotSPDError",
    "NumericalError",
    "Projector",
    "SolverConfig",
    "StepTrace",
    "StreamAbort",
    "SummaryReport",
    "SvdResult",
    "WorldSpec",
    "align",
    "apply_edit",
    "cholesky",
    "deviation",
    "estimate_initial",
    "gen_stream",
    "gen_world",
    "interference_bound_check",
    "metrics",
    "new_session",
    "oracle_recompute",
    "psd_eig",
    "residual",
    "run_stream",
    "solve_alphaedit",
    "solve_direct",
    "solve_plain",
    "solve_woodbury",
    "spectral_norm",
    "thin_svd",
    "thm2_bound",
    "tri_solve",
]
