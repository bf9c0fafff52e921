"""Faithfulness evaluation for final-step attributions.

Per instance, features are removed one at a time in attribution order
(most salient first, or least salient first) and the cumulative absolute
prediction change along the removal path is tracked. Stepwise absolute
differences avoid the cancellation that plagues remove-all-at-once
scoring: two removed features with opposite-signed effects cannot mask
each other. Dataset-level counterparts track how the ranking quality
(AUC, average precision) degrades as removal deepens.

"Removal" always means replacement by the baseline-row value, so removing
an already-missing feature is a no-op by construction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .attribution import AttributionResult
from .baselines import BaselineStrategy, baseline_row
from .core import Dataset, Window
from .errors import ContractViolationError, UndefinedMetricError
from .predictors import Predictor

MOST_SALIENT = "most_salient"
LEAST_SALIENT = "least_salient"
DIRECTIONS = (MOST_SALIENT, LEAST_SALIENT)

DEFAULT_REMOVAL_FRACTION = 0.25


@dataclass(frozen=True)
class RemovalPolicy:
    """Adaptive per-instance removal budget.

    With m observed features out of D, removing the most salient features
    is capped at ceil(fraction * m); removing the least salient is capped
    at (D - m) + ceil(fraction * m), since the D - m missing features rank
    below every observed one and their removal costs nothing.
    """

    fraction: float = DEFAULT_REMOVAL_FRACTION
    direction: str = MOST_SALIENT

    def __post_init__(self) -> None:
        if not (0.0 < self.fraction <= 1.0):
            raise ValueError(f"fraction must lie in (0, 1], got {self.fraction}")
        if self.direction not in DIRECTIONS:
            raise ValueError(f"direction must be one of {DIRECTIONS}, got {self.direction!r}")

    def budget(self, observed_count: int, feature_count: int) -> int:
        cap = math.ceil(self.fraction * observed_count)
        if self.direction == MOST_SALIENT:
            return cap
        return (feature_count - observed_count) + cap


def rank_features(attr: AttributionResult, direction: str) -> list[int]:
    """Feature removal order for one direction.

    Most salient: observed features by descending absolute attribution.
    Least salient: unobserved features first (their attribution is zero by
    definition), then observed features by ascending absolute attribution.
    Ties always break by ascending feature index, for reproducibility.
    """
    if direction not in DIRECTIONS:
        raise ValueError(f"direction must be one of {DIRECTIONS}, got {direction!r}")
    magnitude = np.abs(attr.attributions)
    observed = list(attr.observed.indices)
    if direction == MOST_SALIENT:
        return sorted(observed, key=lambda j: (-magnitude[j], j))
    missing = [j for j in range(attr.feature_count) if j not in attr.observed]
    return missing + sorted(observed, key=lambda j: (magnitude[j], j))


def remove_k(
    window: Window, ranked: list[int], k: int, strategy: BaselineStrategy
) -> Window:
    """Replace the first ``k`` ranked features at the final step by their
    baseline-row values. ``k = 0`` returns the window unchanged."""
    if not (0 <= k <= len(ranked)):
        raise ContractViolationError(
            f"removal count {k} outside the available budget 0..{len(ranked)}"
        )
    if k == 0:
        return window
    base = baseline_row(window, strategy)
    values = window.values.copy()
    values[-1, ranked[:k]] = base.values[ranked[:k]]
    return Window(values, window.mask, window.end_time)


@dataclass(frozen=True)
class RemovalCurve:
    """Predictions and cumulative absolute change along one removal path."""

    instance_id: str
    direction: str
    predictions: np.ndarray  # length K + 1, prediction after k removals
    cumulative: np.ndarray  # length K + 1, cumulative |step difference|

    def __post_init__(self) -> None:
        predictions = np.array(self.predictions, dtype=np.float64, copy=True)
        cumulative = np.array(self.cumulative, dtype=np.float64, copy=True)
        if predictions.shape != cumulative.shape or predictions.ndim != 1:
            raise ValueError("predictions and cumulative must be 1-d arrays of equal length")
        predictions.setflags(write=False)
        cumulative.setflags(write=False)
        object.__setattr__(self, "predictions", predictions)
        object.__setattr__(self, "cumulative", cumulative)


def removal_curve(
    model: Predictor,
    window: Window,
    attr: AttributionResult,
    direction: str,
    k_budget: int,
    strategy: BaselineStrategy,
    instance_id: str = "",
) -> RemovalCurve:
    ranked = rank_features(attr, direction)
    windows = [remove_k(window, ranked, k, strategy) for k in range(k_budget + 1)]
    predictions = np.asarray(model.predict_batch(windows), dtype=np.float64)
    cumulative = np.concatenate([[0.0], np.cumsum(np.abs(np.diff(predictions)))])
    return RemovalCurve(instance_id, direction, predictions, cumulative)


def cpd(
    model: Predictor,
    window: Window,
    attr: AttributionResult,
    k: int,
    strategy: BaselineStrategy,
) -> float:
    """Cumulative absolute prediction change after the ``k`` most salient
    removals. Non-negative and non-decreasing in ``k``."""
    curve = removal_curve(model, window, attr, MOST_SALIENT, k, strategy)
    return float(curve.cumulative[k])


def cpp(
    model: Predictor,
    window: Window,
    attr: AttributionResult,
    k: int,
    strategy: BaselineStrategy,
) -> float:
    """Like :func:`cpd` but along the least-salient removal path. A faithful
    ranking keeps this small: removing unimportant features should barely
    move the prediction."""
    curve = removal_curve(model, window, attr, LEAST_SALIENT, k, strategy)
    return float(curve.cumulative[k])


def _area(cumulative: np.ndarray, k: int) -> float:
    if k < 1:
        raise ContractViolationError("area metrics need a removal budget of at least 1")
    return float(cumulative[1 : k + 1].mean())


def aupd(
    model: Predictor,
    window: Window,
    attr: AttributionResult,
    k: int,
    strategy: BaselineStrategy,
) -> float:
    """Mean of the cumulative difference over budgets 1..k. Weighs earlier
    (higher-ranked) removals more than the endpoint value does."""
    curve = removal_curve(model, window, attr, MOST_SALIENT, k, strategy)
    return _area(curve.cumulative, k)


def aupp(
    model: Predictor,
    window: Window,
    attr: AttributionResult,
    k: int,
    strategy: BaselineStrategy,
) -> float:
    curve = removal_curve(model, window, attr, LEAST_SALIENT, k, strategy)
    return _area(curve.cumulative, k)


def auc(scores: np.ndarray, labels: np.ndarray) -> float:
    """Area under the ROC curve as the Mann-Whitney statistic, ties counted
    one half. Needs both classes present."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    if scores.shape != labels.shape or scores.ndim != 1:
        raise ValueError("scores and labels must be 1-d arrays of equal length")
    positive = labels == 1
    n_pos = int(positive.sum())
    n_neg = int(labels.size - n_pos)
    if n_pos == 0 or n_neg == 0:
        raise UndefinedMetricError("AUC needs both classes present")
    _, inverse, counts = np.unique(scores, return_inverse=True, return_counts=True)
    ends = np.cumsum(counts)
    midranks = (ends - counts + 1 + ends) / 2.0
    rank_sum = float(midranks[inverse][positive].sum())
    return (rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)


def apr(scores: np.ndarray, labels: np.ndarray) -> float:
    """Average precision: the stepwise (non-interpolated) integral of the
    precision-recall curve, with tied scores entering together."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    if scores.shape != labels.shape or scores.ndim != 1:
        raise ValueError("scores and labels must be 1-d arrays of equal length")
    positive = (labels == 1).astype(np.float64)
    n_pos = float(positive.sum())
    if n_pos == 0:
        raise UndefinedMetricError("average precision needs at least one positive")
    order = np.argsort(-scores, kind="mergesort")
    sorted_scores = scores[order]
    tp = np.cumsum(positive[order])
    seen = np.arange(1, scores.size + 1, dtype=np.float64)
    # evaluate only where the threshold changes (last index of each tie group)
    boundary = np.append(sorted_scores[1:] != sorted_scores[:-1], True)
    precision = tp[boundary] / seen[boundary]
    recall = tp[boundary] / n_pos
    recall_steps = np.diff(np.concatenate([[0.0], recall]))
    return float(np.dot(recall_steps, precision))


@dataclass(frozen=True)
class DirectionEval:
    """Dataset-level degradation along one removal direction."""

    direction: str
    budgets: tuple[int, ...]  # adaptive per-instance budget K_i
    per_instance_area: tuple[float, ...]  # AUPD or AUPP at K_i (nan when K_i = 0)
    auc_at_k: tuple[float, ...]  # k = 0..k_max, k = 0 is the unperturbed value
    apr_at_k: tuple[float, ...]
    mean_cumulative_at_k: tuple[float, ...]  # mean over instances, frozen past budget
    auc_area: float  # mean_k |auc(0) - auc(k)| over k = 1..k_max
    apr_area: float

    @property
    def k_max(self) -> int:
        return len(self.auc_at_k) - 1

    @property
    def mean_area(self) -> float:
        values = np.asarray(self.per_instance_area)
        valid = values[~np.isnan(values)]
        return float(valid.mean()) if valid.size else float("nan")


@dataclass(frozen=True)
class EvalReport:
    """Full faithfulness report for one attribution method.

    Wall-clock time is informational only and excluded from serialized
    reports so identical runs produce identical bytes.
    """

    method: str
    baseline_kind: str
    fraction: float
    most: DirectionEval
    least: DirectionEval
    attribution_eval_count: int
    metric_eval_count: int
    wall_clock_seconds: float = 0.0

    @property
    def aupd_mean(self) -> float:
        return self.most.mean_area

    @property
    def aupp_mean(self) -> float:
        return self.least.mean_area

    @property
    def auaucd(self) -> float:
        return self.most.auc_area

    @property
    def auaprd(self) -> float:
        return self.most.apr_area

    @property
    def auaucp(self) -> float:
        return self.least.auc_area

    @property
    def auaprp(self) -> float:
        return self.least.apr_area


def _direction_eval(
    model: Predictor,
    ds: Dataset,
    attrs: list[AttributionResult],
    policy: RemovalPolicy,
    k_max: int | None,
    strategy: BaselineStrategy,
) -> tuple[DirectionEval, int]:
    d = ds.schema.feature_count
    labels = ds.labels()
    budgets = []
    paths = []
    eval_count = 0
    for inst, attr in zip(ds.instances, attrs):
        k_i = policy.budget(len(attr.observed), d)
        ranked = rank_features(attr, policy.direction)
        windows = [remove_k(inst.window, ranked, k, strategy) for k in range(k_i + 1)]
        predictions = np.asarray(model.predict_batch(windows), dtype=np.float64)
        eval_count += len(windows)
        budgets.append(k_i)
        paths.append(predictions)
    horizon = max(budgets) if k_max is None else int(k_max)
    if horizon < 1:
        raise ContractViolationError("dataset degradation needs a horizon of at least 1")

    per_instance_area = tuple(
        float(np.cumsum(np.abs(np.diff(path))).mean()) if k_i >= 1 else float("nan")
        for path, k_i in zip(paths, budgets)
    )
    auc_at_k = []
    apr_at_k = []
    mean_cum = []
    cumulatives = [
        np.concatenate([[0.0], np.cumsum(np.abs(np.diff(path)))]) for path in paths
    ]
    for k in range(horizon + 1):
        scores_k = np.array([path[min(k, k_i)] for path, k_i in zip(paths, budgets)])
        auc_at_k.append(auc(scores_k, labels))
        apr_at_k.append(apr(scores_k, labels))
        mean_cum.append(
            float(np.mean([c[min(k, k_i)] for c, k_i in zip(cumulatives, budgets)]))
        )
    auc_arr = np.asarray(auc_at_k)
    apr_arr = np.asarray(apr_at_k)
    return (
        DirectionEval(
            direction=policy.direction,
            budgets=tuple(budgets),
            per_instance_area=per_instance_area,
            auc_at_k=tuple(auc_at_k),
            apr_at_k=tuple(apr_at_k),
            mean_cumulative_at_k=tuple(mean_cum),
            auc_area=float(np.mean(np.abs(auc_arr[0] - auc_arr[1:]))),
            apr_area=float(np.mean(np.abs(apr_arr[0] - apr_arr[1:]))),
        ),
        eval_count,
    )


def dataset_degradation(
    model: Predictor,
    ds: Dataset,
    attrs: list[AttributionResult],
    fraction: float = DEFAULT_REMOVAL_FRACTION,
    k_max: int | None = None,
    strategy: BaselineStrategy | None = None,
    method: str = "",
    attribution_eval_count: int = 0,
) -> EvalReport:
    """Evaluate one method's attributions over a whole labelled dataset.

    Both removal directions are walked. At each depth k every instance
    contributes its prediction after min(k, budget) removals, so instances
    whose adaptive budget is below k stay frozen at their maximal removal
    rather than dropping out or resurrecting features. AUC and average
    precision are recomputed over the full set at every depth, and the
    report carries the mean absolute degradation across depths 1..k_max
    for both metrics and both directions.
    """
    if strategy is None:
        raise ContractViolationError("dataset_degradation needs a baseline strategy")
    if len(attrs) != len(ds.instances):
        raise ContractViolationError(
            f"{len(attrs)} attribution results for {len(ds.instances)} instances"
        )
    most, evals_most = _direction_eval(
        model, ds, attrs, RemovalPolicy(fraction, MOST_SALIENT), k_max, strategy
    )
    least, evals_least = _direction_eval(
        model, ds, attrs, RemovalPolicy(fraction, LEAST_SALIENT), k_max, strategy
    )
    return EvalReport(
        method=method,
        baseline_kind=strategy.kind,
        fraction=fraction,
        most=most,
        least=least,
        attribution_eval_count=attribution_eval_count,
        metric_eval_count=evals_most + evals_least,
    )
