"""State estimation via sliding-window factor optimization and Kalman baselines."""

from .models import (
    ContinuousLinearSystem,
    DiscreteLinearSystem,
    EstimationError,
    GaussianBelief,
    NonlinearMeasurementModel,
    PartitionedContinuousSystem,
    PartitionedDiscreteSystem,
    discretize_linear,
    discretize_partitioned,
    symmetrize,
)
from .kalman import KalmanState, ekf_update, kf_predict, kf_update, run_kalman
from .window import (
    EXACT_JOINT,
    DIAGONAL_PRIORS,
    DivergenceError,
    Factor,
    FactorWindow,
    RankDeficiencyError,
    SolveResult,
    UnanchoredVariableError,
    VariableBlock,
    assemble,
    build_linear_chain_window,
    gauss_newton,
    marginalize,
    slide,
    solve_normal_equations,
)
from .gssm import (
    DimensionReport,
    EstimatePoint,
    GssmWindow,
    build_gssm_window,
    dimension_report,
    gssm_step,
)
from .radar import (
    RadarTruth,
    RangeMeasurements,
    ScenarioConfig,
    linearize_range,
    make_estimator,
    measure_range,
    radar_ekf_config,
    radar_fgo_config,
    radar_gssm_config,
    simulate_truth,
)
from .series import (
    CSV_HEADER,
    EstimateSeries,
    MonteCarloSummary,
    RadarRunTable,
    RmseSummary,
    compute_rmse,
)
from .bench import compare, monte_carlo, run_estimator, run_single, simulate_pair

__version__ = "0.1.0"
