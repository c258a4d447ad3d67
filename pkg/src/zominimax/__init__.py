"""Derivative-free solvers for smooth min-max problems.

Two alternating descent/ascent solvers driven purely by function values:
a plain two-point-estimate scheme for deterministic objectives and a
variance-reduced scheme with periodic full-batch restarts for expectation
objectives, plus theory-backed parameter schedules, a verification problem
suite, measurement tools, and a multi-seed experiment harness.
"""

from .agda import (
    AgdaConfig,
    AgdaState,
    agda_step,
    derive_agda_params,
    run_agda,
    run_fo_agda,
)
from .diagnostics import (
    EstimatorStats,
    RegretOptions,
    RegretReport,
    RunTrace,
    StationarityOptions,
    StationarityReport,
    TraceRecorder,
    TraceRow,
    estimator_stats,
    potential_v,
    regret,
    smoothed_grad_reference,
    stationarity,
)
from .errors import (
    ConfigError,
    DimensionMismatchError,
    DivergenceError,
    OracleError,
    UnknownMetricError,
)
from .estimators import (
    DirectionBatch,
    SmoothingParams,
    sample_unit_sphere,
    sample_unit_sphere_batch,
    two_point_grad_x,
    two_point_grad_x_batch,
    two_point_grad_y,
    two_point_grad_y_batch,
)
from .harness import ExperimentConfig, emit_plot, reproduce, run_experiment
from .metering import QueryMeter
from .problems import (
    Ball,
    Box,
    MinimaxProblem,
    ProblemConstants,
    StochasticMinimaxProblem,
    as_vector,
    project_ball,
    project_box,
    with_value_noise,
)
from .rng import RngStream
from .suite import (
    PlQuadraticSpec,
    WganSpec,
    build_problem,
    make_pl_quadratic,
    make_robust_polynomial,
    make_wgan,
    noisy_robust_polynomial,
    scalar_pl_quadratic,
)
from .vragda import (
    VragdaConfig,
    VragdaState,
    derive_vragda_params,
    run_vragda,
    vragda_x_update,
    vragda_y_update,
)

__version__ = "0.1.0"
