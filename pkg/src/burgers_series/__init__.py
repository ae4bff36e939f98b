"""Picard correction-series solver for the viscous Burgers system on the unit torus."""

__version__ = "0.1.0"

from .errors import (
    BurgersSeriesError,
    ConfigurationError,
    DimensionError,
    DomainError,
    EvaluationError,
    InstabilityError,
    NumericalError,
    OverflowGuardError,
    RangeError,
    ShapeError,
    StepFailure,
    StepTooSmallError,
)
from .fields import (
    Grid,
    NormReport,
    VectorField,
    c01_norm,
    c12_norm,
    curl2d,
    make_grid,
    norm_report,
    sample,
    spectral_derivative,
    sup_norm,
)
from .kernels import (
    ConstantEstimate,
    KernelParams,
    ParametrixKernel,
    ParametrixSeries,
    estimate_cstar,
    gaussian_kernel,
    parametrix_correction,
    periodized_gaussian,
)
from .linear import LinearProblem, Trajectory, cross_check_backends, solve_correction, solve_linear
from .config import SolverConfig, initial_field, load_config, parse_config, parse_preset
from .scheme import (
    GlobalSolution,
    PicardTrace,
    Schedule,
    build_schedule,
    first_substep,
    picard_step,
    residual,
    run_global,
)
from .oracles import (
    PotentialData,
    check_max_principle,
    check_uniqueness,
    decay_weight_probe,
    hopf_cole_solution,
)
from .compactify import (
    CompactPoint,
    first_derivative_factor,
    from_compact,
    second_derivative_terms,
    to_compact,
)
