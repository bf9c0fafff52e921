"""Attribution of step-to-step prediction changes to final-step features.

The quantity being explained is the prediction delta: model output with the
final step observed minus model output with the final step replaced by its
baseline row. Signed per-feature attributions are estimated by sampling
permutations of the observed features and averaging marginal contributions
(the classical sampling approximation of Shapley values), then rescaled so
they sum exactly to the delta. A brute-force subset-enumeration oracle,
occlusion baselines and a random null are provided for verification and
benchmarking.

Only features actually measured at the final step can carry attribution;
everything else is exactly zero.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Sequence

import numpy as np

from .baselines import BaselineStrategy, baseline_row, substitute
from .core import ObservedSet, Window, derive_observed_set
from .errors import BudgetExceededError, ConfigurationError, ContractViolationError
from .predictors import Predictor
from .rng import philox

DEFAULT_PERMUTATIONS = 25
EXACT_FEATURE_CAP = 20
DEGENERATE_SUM_EPS = 1e-12
EFFICIENCY_RTOL = 1e-9

_PREDICT_CHUNK = 4096


class NormalizationStatus(str, Enum):
    APPLIED = "applied"
    SKIPPED_ZERO_DELTA = "skipped_zero_delta"
    SKIPPED_DEGENERATE_SUM = "skipped_degenerate_sum"
    SIGN_MISMATCH_FALLBACK = "sign_mismatch_fallback"
    # exact oracle results and perturbation scores are never rescaled
    NOT_APPLIED = "not_applied"


@dataclass(frozen=True)
class PermutationPlan:
    """A fixed batch of sampled orderings of the observed features.

    Regenerating with the same seed yields the identical orderings, so any
    attribution computed from a plan is reproducible bit for bit.
    """

    n: int
    seed: int
    permutations: tuple[tuple[int, ...], ...]

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ValueError("permutation count must be at least 1")
        if len(self.permutations) != self.n:
            raise ValueError("plan holds a different number of permutations than n")
        base = None
        for perm in self.permutations:
            key = tuple(sorted(perm))
            if base is None:
                base = key
            if key != base or len(set(perm)) != len(perm):
                raise ValueError("each permutation must be a bijection on one observed set")

    @classmethod
    def sample(cls, observed: ObservedSet, n: int, seed: int) -> "PermutationPlan":
        """Draw ``n`` uniform orderings of ``observed`` (Fisher-Yates over a
        counter-based generator, sampled with replacement)."""
        if n < 1:
            raise ValueError("permutation count must be at least 1")
        rng = philox(seed)
        indices = np.array(observed.indices, dtype=np.int64)
        perms = tuple(
            tuple(int(j) for j in indices[rng.permutation(len(indices))]) for _ in range(n)
        )
        return cls(n=n, seed=int(seed), permutations=perms)


@dataclass(frozen=True)
class AttributionResult:
    """Signed per-feature attributions for one window's final step.

    ``raw`` holds the unrescaled estimates, ``attributions`` the final
    values after normalization (identical to ``raw`` when normalization was
    skipped or not applicable). Entries outside the observed set are zero.
    """

    delta: float
    raw: np.ndarray
    attributions: np.ndarray
    observed: ObservedSet
    status: NormalizationStatus
    model_eval_count: int

    def __post_init__(self) -> None:
        raw = np.array(self.raw, dtype=np.float64, copy=True)
        attr = np.array(self.attributions, dtype=np.float64, copy=True)
        if raw.shape != attr.shape or raw.ndim != 1:
            raise ValueError("raw and attributions must be 1-d arrays of equal length")
        hidden = np.ones(raw.shape[0], dtype=bool)
        hidden[list(self.observed.indices)] = False
        if raw[hidden].any() or attr[hidden].any():
            raise ValueError("attributions must be zero outside the observed set")
        raw.setflags(write=False)
        attr.setflags(write=False)
        object.__setattr__(self, "raw", raw)
        object.__setattr__(self, "attributions", attr)
        object.__setattr__(self, "delta", float(self.delta))
        object.__setattr__(self, "model_eval_count", int(self.model_eval_count))

    @property
    def feature_count(self) -> int:
        return self.raw.shape[0]


def _predict_chunked(model: Predictor, windows: Sequence[Window]) -> np.ndarray:
    if len(windows) <= _PREDICT_CHUNK:
        return np.asarray(model.predict_batch(windows), dtype=np.float64)
    parts = [
        np.asarray(model.predict_batch(windows[i : i + _PREDICT_CHUNK]), dtype=np.float64)
        for i in range(0, len(windows), _PREDICT_CHUNK)
    ]
    return np.concatenate(parts)


def prediction_delta(model: Predictor, window: Window, strategy: BaselineStrategy) -> float:
    """Model output on the window minus output with the final step withheld."""
    base = baseline_row(window, strategy)
    scores = model.predict_batch([window, substitute(window, (), base)])
    return float(scores[0] - scores[1])


def subset_value(
    model: Predictor,
    window: Window,
    subset: ObservedSet | Iterable[int],
    strategy: BaselineStrategy,
) -> float:
    """Contribution to the delta when only ``subset`` is observed at the end.

    v(S) = f(window with only S kept) - f(window with nothing kept);
    v(empty) = 0 and v(full observed set) = delta by construction.
    """
    base = baseline_row(window, strategy)
    scores = model.predict_batch(
        [substitute(window, subset, base), substitute(window, (), base)]
    )
    return float(scores[0] - scores[1])


def normalize(
    raw: np.ndarray, delta: float, observed: ObservedSet
) -> tuple[np.ndarray, NormalizationStatus]:
    """Rescale raw estimates so they sum to the delta, with guards.

    The plain rescale multiplies by delta / sum(raw). Guards cover the
    cases where that would misbehave: a zero delta forces all-zero
    attributions, a near-zero sum returns the raw estimates unchanged, and
    a sum whose sign disagrees with the delta falls back to spreading the
    gap additively over the observed features (a multiplicative rescale
    would flip every sign). The taken branch is reported in the status.
    """
    raw = np.asarray(raw, dtype=np.float64)
    out = raw.copy()
    if delta == 0.0:
        return np.zeros_like(raw), NormalizationStatus.SKIPPED_ZERO_DELTA
    total = float(raw.sum())
    if abs(total) < DEGENERATE_SUM_EPS:
        return out, NormalizationStatus.SKIPPED_DEGENERATE_SUM
    if math.copysign(1.0, total) != math.copysign(1.0, delta):
        correction = (delta - total) / len(observed)
        out[list(observed.indices)] += correction
        return out, NormalizationStatus.SIGN_MISMATCH_FALLBACK
    return out * (delta / total), NormalizationStatus.APPLIED


def sampled_shapley(
    model: Predictor,
    window: Window,
    plan: PermutationPlan,
    strategy: BaselineStrategy,
) -> AttributionResult:
    """Permutation-sampling estimate of final-step attributions.

    For each sampled ordering the nested prefixes (empty set up to the full
    observed set) are evaluated once as a single batch, and each feature's
    marginal contribution is read off as the difference of consecutive
    prefix scores. This spends exactly n * (m + 1) evaluations for m
    observed features, plus 2 for the delta itself; looping over (feature,
    permutation) pairs would cost a factor m more for the same estimate.

    Raw estimates are the per-feature means over the plan's orderings, and
    are then normalized to sum to the delta (see :func:`normalize`).
    Deterministic given (model, window, plan, strategy): accumulation order
    is fixed by permutation index and position.
    """
    observed = derive_observed_set(window)
    # the plan constructor guarantees all permutations cover one set,
    # so checking the first against this window suffices
    if plan.permutations and tuple(sorted(plan.permutations[0])) != observed.indices:
        raise ContractViolationError(
            "plan permutations do not match the window's observed set"
        )
    base = baseline_row(window, strategy)
    empty = substitute(window, (), base)
    delta_scores = model.predict_batch([window, empty])
    delta = float(delta_scores[0] - delta_scores[1])
    eval_count = 2

    m = len(observed)
    d = window.feature_count
    raw = np.zeros(d)

    prefix_windows: list[Window] = []
    for perm in plan.permutations:
        prefix_windows.append(empty)
        values = window.values.copy()
        values[-1] = base.values
        for j in perm:
            values[-1, j] = window.values[-1, j]
            prefix_windows.append(Window(values, window.mask, window.end_time))
    scores = _predict_chunked(model, prefix_windows)
    eval_count += len(prefix_windows)

    per_perm = scores.reshape(plan.n, m + 1)
    for i, perm in enumerate(plan.permutations):
        marginals = np.diff(per_perm[i])
        for pos, j in enumerate(perm):
            raw[j] += marginals[pos]
    if m:
        raw /= plan.n

    attributions, status = normalize(raw, delta, observed)
    return AttributionResult(delta, raw, attributions, observed, status, eval_count)


def exact_shapley(
    model: Predictor,
    window: Window,
    strategy: BaselineStrategy,
    feature_cap: int = EXACT_FEATURE_CAP,
) -> AttributionResult:
    """Brute-force attribution by enumerating every observed-feature subset.

    For m observed features this evaluates the model on all 2^m kept
    subsets (plus once on the original window) and combines marginal
    contributions with the standard combinatorial weights: feature j gets
    the average over subset sizes of the mean marginal v(S + j) - v(S)
    across subsets S of that size not containing j. The result sums to the
    delta without any normalization.

    Refuses to run past ``feature_cap`` observed features; the error names
    the evaluation budget that would be required.
    """
    observed = derive_observed_set(window)
    m = len(observed)
    if m > feature_cap:
        raise BudgetExceededError(
            f"exact attribution over {m} observed features requires 2^{m} + 1 = "
            f"{2 ** m + 1} model evaluations, above the cap of {feature_cap} features"
        )
    base = baseline_row(window, strategy)
    original_score = float(model.predict_batch([window])[0])
    eval_count = 1

    indices = np.array(observed.indices, dtype=np.int64)
    n_subsets = 1 << m
    subset_windows = []
    for bits in range(n_subsets):
        members = indices[[(bits >> i) & 1 == 1 for i in range(m)]]
        subset_windows.append(substitute(window, members, base))
    values = _predict_chunked(model, subset_windows)
    eval_count += n_subsets

    delta = original_score - float(values[0])
    raw = np.zeros(window.feature_count)
    if m:
        all_bits = np.arange(n_subsets, dtype=np.int64)
        sizes = np.zeros(n_subsets, dtype=np.int64)
        for i in range(m):
            sizes += (all_bits >> i) & 1
        inverse_weight = np.array([1.0 / math.comb(m - 1, s) for s in range(m)])
        for i, j in enumerate(indices):
            without = all_bits[(all_bits >> i) & 1 == 0]
            gains = values[without | (1 << i)] - values[without]
            raw[j] = float(np.dot(inverse_weight[sizes[without]], gains)) / m

    return AttributionResult(
        delta, raw, raw, observed, NormalizationStatus.NOT_APPLIED, eval_count
    )


def _with_final_value(window: Window, feature: int, value: float) -> Window:
    values = window.values.copy()
    values[-1, feature] = value
    return Window(values, window.mask, window.end_time)


def feature_occlusion(
    model: Predictor,
    window: Window,
    mode: str = "zero",
    rng: np.random.Generator | None = None,
    pool: Sequence[np.ndarray] | None = None,
    draw_count: int = 10,
) -> np.ndarray:
    """Perturbation importance: how much the score moves when one observed
    final-step value is replaced.

    ``zero`` substitutes 0.0; ``training_sample`` substitutes values drawn
    from a per-feature pool of observed training values and averages the
    absolute score change over ``draw_count`` draws. Returns unsigned
    magnitude scores, zero outside the observed set.
    """
    observed = derive_observed_set(window)
    scores = np.zeros(window.feature_count)
    if mode not in ("zero", "training_sample"):
        raise ConfigurationError(f"unknown occlusion mode {mode!r}")
    windows: list[Window] = [window]
    if mode == "zero":
        for j in observed:
            windows.append(_with_final_value(window, j, 0.0))
        predictions = _predict_chunked(model, windows)
        scores[list(observed.indices)] = np.abs(predictions[0] - predictions[1:])
        return scores
    if pool is None:
        raise ConfigurationError("training_sample occlusion needs a per-feature value pool")
    if rng is None:
        raise ConfigurationError("training_sample occlusion needs a random generator")
    if draw_count < 1:
        raise ConfigurationError("draw_count must be at least 1")
    draws = {}
    for j in observed:
        values = np.asarray(pool[j], dtype=np.float64)
        if values.size == 0:
            raise ConfigurationError(f"training pool for feature {j} is empty")
        draws[j] = values[rng.integers(0, values.size, size=draw_count)]
        for value in draws[j]:
            windows.append(_with_final_value(window, j, float(value)))
    predictions = _predict_chunked(model, windows)
    offset = 1
    for j in observed:
        block = predictions[offset : offset + draw_count]
        scores[j] = float(np.mean(np.abs(predictions[0] - block)))
        offset += draw_count
    return scores


def random_attribution(
    observed: ObservedSet, feature_count: int, rng: np.random.Generator
) -> np.ndarray:
    """Null baseline: i.i.d. uniform(-1, 1) scores on the observed features."""
    scores = np.zeros(feature_count)
    if len(observed):
        scores[list(observed.indices)] = rng.uniform(-1.0, 1.0, size=len(observed))
    return scores


def from_scores(
    scores: np.ndarray,
    observed: ObservedSet,
    delta: float,
    model_eval_count: int,
) -> AttributionResult:
    """Wrap raw per-feature scores (occlusion, random) as an unnormalized
    result so ranking and metrics treat every method uniformly."""
    scores = np.asarray(scores, dtype=np.float64)
    return AttributionResult(
        delta, scores, scores, observed, NormalizationStatus.NOT_APPLIED, model_eval_count
    )
