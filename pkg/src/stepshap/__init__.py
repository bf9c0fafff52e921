"""Shapley attribution of step-to-step prediction changes in online
time-series monitoring, with deletion/preservation faithfulness metrics."""

from .attribution import (
    AttributionResult,
    DEFAULT_PERMUTATIONS,
    EXACT_FEATURE_CAP,
    NormalizationStatus,
    PermutationPlan,
    exact_shapley,
    feature_occlusion,
    from_scores,
    normalize,
    prediction_delta,
    random_attribution,
    sampled_shapley,
    subset_value,
)
from .baselines import (
    BASELINE_KINDS,
    BaselineRow,
    BaselineStrategy,
    baseline_row,
    prepare_dataset,
    prepare_window,
    substitute,
)
from .core import (
    Dataset,
    FeatureSchema,
    LabeledInstance,
    ObservedSet,
    ValidationIssue,
    ValidationReport,
    Window,
    conform_window,
    derive_observed_set,
    validate_dataset,
    windows_equal,
)
from .errors import (
    BudgetExceededError,
    ConfigurationError,
    ContractViolationError,
    DataFormatError,
    DegenerateLabelsError,
    InputShapeError,
    ModelFaultError,
    StepshapError,
    UndefinedMetricError,
)
from .metrics import (
    DirectionEval,
    EvalReport,
    LEAST_SALIENT,
    MOST_SALIENT,
    RemovalCurve,
    RemovalPolicy,
    apr,
    auc,
    aupd,
    aupp,
    cpd,
    cpp,
    dataset_degradation,
    rank_features,
    remove_k,
    removal_curve,
)
from .predictors import (
    CountingPredictor,
    InteractionSyntheticModel,
    LinearLogitModel,
    Predictor,
    TinyLogisticScorer,
    TrainConfig,
    load_model,
    save_model,
    train_tiny_logistic,
)
from .synthetic import SyntheticResult, SyntheticSpec, build_scorer, generate

__version__ = "0.1.0"
