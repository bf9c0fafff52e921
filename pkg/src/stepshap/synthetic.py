"""Synthetic monitoring data with known ground-truth drivers.

Each feature follows a stationary AR(1) latent path around its own base
level. A built-in scorer applied to the fully observed latents produces
the outcome probability, labels are drawn from it (or thresholded), and
only afterwards is the observation mask applied, mimicking irregular
measurement. Because the scorer is known in closed form, the generator
also records each instance's true per-feature contribution to the
final-step score change, which downstream tests use as ground truth.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .baselines import BaselineStrategy, FORWARD_FILL, baseline_row, prepare_window
from .core import Dataset, FeatureSchema, LabeledInstance, Window
from .errors import DegenerateLabelsError
from .predictors import (
    InteractionSyntheticModel,
    LinearLogitModel,
    Predictor,
    TinyLogisticScorer,
)
from .rng import substream

SCORERS = ("linear", "interaction")
LABEL_MODES = ("bernoulli", "threshold")


@dataclass(frozen=True)
class SyntheticSpec:
    feature_count: int
    window_length: int
    instance_count: int
    observe_prob: float | tuple[float, ...] = 0.8
    ar_coef: float = 0.7
    ar_noise: float = 0.4
    level_scale: float = 1.0
    scorer: str = "linear"
    label_mode: str = "bernoulli"
    label_noise: float = 0.0
    seed: int = 0

    def __post_init__(self) -> None:
        if self.feature_count < 1 or self.window_length < 1 or self.instance_count < 1:
            raise ValueError("feature_count, window_length and instance_count must be positive")
        probs = self.observe_probs()
        if probs.shape != (self.feature_count,) or not ((probs > 0.0) & (probs <= 1.0)).all():
            raise ValueError("observe_prob must lie in (0, 1], one value or one per feature")
        if not (0.0 <= abs(self.ar_coef) < 1.0):
            raise ValueError("ar_coef must satisfy |ar_coef| < 1 for a stationary latent")
        if self.ar_noise <= 0.0:
            raise ValueError("ar_noise must be positive")
        if self.scorer not in SCORERS:
            raise ValueError(f"scorer must be one of {SCORERS}, got {self.scorer!r}")
        if self.label_mode not in LABEL_MODES:
            raise ValueError(f"label_mode must be one of {LABEL_MODES}, got {self.label_mode!r}")
        if not (0.0 <= self.label_noise <= 0.5):
            raise ValueError("label_noise must lie in [0, 0.5]")

    def observe_probs(self) -> np.ndarray:
        if isinstance(self.observe_prob, (int, float)):
            return np.full(self.feature_count, float(self.observe_prob))
        return np.array([float(p) for p in self.observe_prob])

    def stationary_scale(self) -> float:
        return self.ar_noise / np.sqrt(1.0 - self.ar_coef**2)


@dataclass(frozen=True)
class SyntheticResult:
    dataset: Dataset
    driver_scores: np.ndarray  # (n, D) per-feature true final-step contributions
    positive_fraction: float
    scorer: Predictor

    def __post_init__(self) -> None:
        drivers = np.array(self.driver_scores, dtype=np.float64, copy=True)
        drivers.setflags(write=False)
        object.__setattr__(self, "driver_scores", drivers)


def _base_levels(spec: SyntheticSpec) -> np.ndarray:
    rng = substream(spec.seed, "levels")
    return rng.uniform(-2.0, 2.0, size=spec.feature_count) * spec.level_scale


def build_scorer(spec: SyntheticSpec) -> Predictor:
    """Deterministically construct the ground-truth scorer for a spec.

    Coefficients are scaled so the pre-link score has a spread of roughly
    1.5 around zero at the latent distribution, and the intercept centers
    the score at the per-feature base levels, which keeps generated labels
    close to balanced.
    """
    d, w = spec.feature_count, spec.window_length
    levels = _base_levels(spec)
    rng = substream(spec.seed, "model")
    spread = spec.stationary_scale()
    if spec.scorer == "linear":
        weights = rng.normal(0.0, 1.0, size=(w, d))
        weights[:-1] *= 0.15
        scale = 1.5 / (np.sqrt((weights**2).sum()) * spread)
        weights *= scale
        bias = -float(weights.sum(axis=0) @ levels)
        return LinearLogitModel(weights, bias, link="sigmoid")
    linear = rng.normal(0.0, 1.0, size=d)
    pairwise = np.triu(rng.normal(0.0, 1.0, size=(d, d)), k=1)
    keep = rng.random((d, d)) < 0.4  # sparse interactions
    pairwise = np.where(keep, pairwise, 0.0)
    history = rng.normal(0.0, 0.1, size=d)
    scale = 1.5 / (np.sqrt((linear**2).sum()) * spread)
    linear *= scale
    pairwise *= 0.35 * scale / max(1.0, spread)
    center = float(
        linear @ levels
        + levels @ np.triu(pairwise, k=1) @ levels
        + (history @ levels if w > 1 else 0.0)
    )
    return InteractionSyntheticModel(w, -center, linear, pairwise, history)


def final_step_contributions(
    model: Predictor, final_values: np.ndarray, baseline_values: np.ndarray
) -> np.ndarray:
    """Closed-form per-feature share of the pre-link score change between
    the baseline final row and the actual final row.

    For linear scorers this is weight * (value - baseline). For the
    interaction scorer each pairwise term x_j * x_k splits evenly between
    its two features, which is the exact allocation for a multilinear
    score. The shares always sum to the full pre-link change.
    """
    x = np.asarray(final_values, dtype=np.float64)
    b = np.asarray(baseline_values, dtype=np.float64)
    if isinstance(model, (LinearLogitModel, TinyLogisticScorer)):
        return model.weights[-1] * (x - b)
    if isinstance(model, InteractionSyntheticModel):
        symmetric = model.pairwise + model.pairwise.T
        return (x - b) * (model.linear + symmetric @ ((x + b) / 2.0))
    raise TypeError(f"no closed-form contributions for {type(model).__name__}")


def generate(spec: SyntheticSpec) -> SyntheticResult:
    """Generate a labelled dataset plus its ground-truth driver scores.

    Deterministic per seed: the scorer, levels, latent paths, labels and
    masks all come from named sub-streams of the spec seed. Raises when
    the draw yields a single class, with a hint to regenerate.
    """
    d, w, n = spec.feature_count, spec.window_length, spec.instance_count
    scorer = build_scorer(spec)
    levels = _base_levels(spec)
    probs = spec.observe_probs()
    rng = substream(spec.seed, "data")
    scale0 = spec.stationary_scale()

    windows: list[Window] = []
    labels: list[int] = []
    full_mask = np.ones((w, d), dtype=bool)
    for _ in range(n):
        eps = rng.normal(size=(w, d))
        latent = np.empty((w, d))
        latent[0] = levels + scale0 * eps[0]
        for t in range(1, w):
            latent[t] = levels + spec.ar_coef * (latent[t - 1] - levels) + spec.ar_noise * eps[t]
        score = float(scorer.predict_batch([Window(latent, full_mask)])[0])
        if spec.label_mode == "bernoulli":
            label = int(rng.random() < score)
        else:
            label = int(score >= 0.5)
        if spec.label_noise > 0.0 and rng.random() < spec.label_noise:
            label = 1 - label
        mask = rng.random((w, d)) < probs
        values = np.where(mask, latent, np.nan)
        windows.append(Window(values, mask))
        labels.append(label)

    if len(set(labels)) < 2:
        raise DegenerateLabelsError(
            f"generated {n} instances of a single class ({labels[0]}); "
            "regenerate with a different seed or adjust the labeling settings"
        )

    fill = []
    for j in range(d):
        observed = np.concatenate([win.values[win.mask[:, j], j] for win in windows])
        fill.append(float(np.median(observed)) if observed.size else 0.0)
    schema = FeatureSchema(tuple(f"f{j}" for j in range(d)), tuple(fill))

    instances = tuple(
        LabeledInstance(win, label, f"inst-{i:05d}")
        for i, (win, label) in enumerate(zip(windows, labels))
    )
    dataset = Dataset(schema, instances, max_sequence_length=w)

    strategy = BaselineStrategy(FORWARD_FILL, schema)
    drivers = np.zeros((n, d))
    for i, inst in enumerate(instances):
        prepared = prepare_window(inst.window, strategy)
        base = baseline_row(prepared, strategy)
        contrib = final_step_contributions(scorer, prepared.values[-1], base.values)
        observed_mask = prepared.mask[-1]
        drivers[i, observed_mask] = contrib[observed_mask]

    return SyntheticResult(
        dataset=dataset,
        driver_scores=drivers,
        positive_fraction=float(np.mean(labels)),
        scorer=scorer,
    )
