"""Sequential experimental design for ODE parameter estimation.

Pick the next measurement (time point or observable) by maximizing the
kNN-estimated mutual information between uncertain parameters and predicted
observables, then assimilate the measurement with an ensemble Kalman filter.
"""

__version__ = "0.1.0"

from .design import (
    DesignCandidate,
    DesignSpace,
    StageRecord,
    Strategy,
    run_sequential,
    score_candidate,
    select_design,
)
from .ensemble import (
    Ensemble,
    ObservationModel,
    PriorSpec,
    enkf_update,
    ensemble_stats,
    forecast,
    init_ensemble,
    predict_observations,
)
from .errors import (
    ConfigError,
    DivergenceError,
    EstimatorError,
    InvalidInput,
    NumericalError,
    SeqDesignError,
)
from .harness import (
    Dataset,
    ExperimentConfig,
    MetricsRecord,
    RunResults,
    compute_metrics,
    export_csv,
    run_trials,
    simulate_truth,
)
from .infotheory import MiEstimate, digamma, kl_entropy, ksg_mi, mi_decomposition
from .models import (
    AugmentedState,
    ModelSpec,
    build_lotka_volterra,
    build_stat5,
    get_model,
    integrate,
    lv_rhs,
    observe_mean,
    stat5_rhs,
)

__all__ = [
    "AugmentedState",
    "ConfigError",
    "Dataset",
    "DesignCandidate",
    "DesignSpace",
    "DivergenceError",
    "Ensemble",
    "EstimatorError",
    "ExperimentConfig",
    "InvalidInput",
    "MetricsRecord",
    "MiEstimate",
    "ModelSpec",
    "NumericalError",
    "ObservationModel",
    "PriorSpec",
    "RunResults",
    "SeqDesignError",
    "StageRecord",
    "Strategy",
    "build_lotka_volterra",
    "build_stat5",
    "compute_metrics",
    "digamma",
    "enkf_update",
    "ensemble_stats",
    "export_csv",
    "forecast",
    "get_model",
    "init_ensemble",
    "integrate",
    "kl_entropy",
    "ksg_mi",
    "lv_rhs",
    "mi_decomposition",
    "observe_mean",
    "predict_observations",
    "run_sequential",
    "run_trials",
    "score_candidate",
    "select_design",
    "simulate_truth",
    "stat5_rhs",
]
