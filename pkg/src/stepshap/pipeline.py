"""End-to-end orchestration shared by the CLI and experiment scripts.

Wires together dataset preparation, model construction, per-instance
attribution for every method, and the dataset-level faithfulness report.
All per-instance randomness is keyed by the root seed and the instance id,
so results do not depend on iteration or scheduling order.
"""

from __future__ import annotations

import time
from dataclasses import replace

import numpy as np

from .attribution import (
    AttributionResult,
    PermutationPlan,
    exact_shapley,
    feature_occlusion,
    from_scores,
    prediction_delta,
    random_attribution,
    sampled_shapley,
)
from .baselines import BaselineStrategy
from .config import RunConfig
from .core import Dataset, conform_window, derive_observed_set, LabeledInstance
from .errors import ConfigurationError
from .metrics import EvalReport, dataset_degradation
from .predictors import Predictor, TrainConfig, load_model, train_tiny_logistic
from .rng import derive_seed, substream
from .synthetic import SyntheticSpec, build_scorer, generate


def spec_from_config(cfg: RunConfig) -> SyntheticSpec:
    return SyntheticSpec(
        feature_count=cfg.features,
        window_length=cfg.window,
        instance_count=cfg.instances,
        observe_prob=cfg.observe_prob,
        ar_coef=cfg.ar_coef,
        ar_noise=cfg.ar_noise,
        level_scale=cfg.level_scale,
        scorer=cfg.scorer,
        label_mode=cfg.label_mode,
        label_noise=cfg.label_noise,
        seed=cfg.seed,
    )


def conform_dataset(ds: Dataset, target_length: int) -> Dataset:
    """Fit every window to the model's input length (pad or crop)."""
    instances = tuple(
        LabeledInstance(conform_window(inst.window, target_length), inst.label, inst.instance_id)
        for inst in ds.instances
    )
    return Dataset(ds.schema, instances, max(ds.max_sequence_length, target_length))


def make_model(cfg: RunConfig, prepared: Dataset) -> Predictor:
    """Build or train the predictor named by the config."""
    if cfg.model_path is not None:
        return load_model(cfg.model_path, prepared.schema)
    if cfg.model == "tiny_logistic":
        return train_tiny_logistic(
            prepared, TrainConfig(cfg.learning_rate, cfg.epochs, cfg.seed)
        )
    return build_scorer(_scorer_spec(cfg, prepared))


def _scorer_spec(cfg: RunConfig, prepared: Dataset) -> SyntheticSpec:
    # built-in scorers must match the dataset's window shape, not the config default
    w = prepared.instances[0].window.window_length if prepared.instances else cfg.window
    d = prepared.schema.feature_count
    base = spec_from_config(cfg)
    return SyntheticSpec(
        feature_count=d,
        window_length=w,
        instance_count=base.instance_count,
        observe_prob=1.0,
        ar_coef=base.ar_coef,
        ar_noise=base.ar_noise,
        level_scale=base.level_scale,
        scorer="linear" if cfg.model == "linear" else "interaction",
        label_mode=base.label_mode,
        label_noise=base.label_noise,
        seed=cfg.seed,
    )


def observed_value_pool(ds: Dataset) -> list[np.ndarray]:
    """Per-feature pools of observed values, for training-sample occlusion."""
    d = ds.schema.feature_count
    pools: list[list[float]] = [[] for _ in range(d)]
    for inst in ds.instances:
        win = inst.window
        for j in range(d):
            pools[j].extend(win.values[win.mask[:, j], j].tolist())
    return [np.array(p) for p in pools]


def compute_attributions(
    method: str,
    model: Predictor,
    prepared: Dataset,
    strategy: BaselineStrategy,
    cfg: RunConfig,
    pool: list[np.ndarray] | None = None,
) -> list[AttributionResult]:
    """One attribution result per instance for the named method."""
    results = []
    for inst in prepared.instances:
        window = inst.window
        observed = derive_observed_set(window)
        if method == "deltashap":
            plan = PermutationPlan.sample(
                observed, cfg.n, derive_seed(cfg.seed, "permutations", inst.instance_id)
            )
            results.append(sampled_shapley(model, window, plan, strategy))
        elif method == "oracle":
            results.append(exact_shapley(model, window, strategy, cfg.exact_cap))
        elif method == "fo":
            scores = feature_occlusion(model, window, "zero")
            delta = prediction_delta(model, window, strategy)
            results.append(from_scores(scores, observed, delta, len(observed) + 3))
        elif method == "afo":
            if pool is None:
                raise ConfigurationError("afo needs a per-feature training-value pool")
            rng = substream(cfg.seed, "afo-draws", inst.instance_id)
            scores = feature_occlusion(
                model, window, "training_sample", rng=rng, pool=pool, draw_count=cfg.afo_draws
            )
            delta = prediction_delta(model, window, strategy)
            results.append(
                from_scores(scores, observed, delta, len(observed) * cfg.afo_draws + 3)
            )
        elif method == "random":
            rng = substream(cfg.seed, "random", inst.instance_id)
            scores = random_attribution(observed, window.feature_count, rng)
            delta = prediction_delta(model, window, strategy)
            results.append(from_scores(scores, observed, delta, 2))
        else:
            raise ConfigurationError(f"unknown attribution method {method!r}")
    return results


def evaluate_methods(
    model: Predictor,
    prepared: Dataset,
    strategy: BaselineStrategy,
    cfg: RunConfig,
) -> dict[str, EvalReport]:
    """Attribute every instance with each configured method and score the
    attributions with the full faithfulness report."""
    pool = observed_value_pool(prepared) if "afo" in cfg.method else None
    reports: dict[str, EvalReport] = {}
    for method in cfg.method:
        start = time.perf_counter()
        attrs = compute_attributions(method, model, prepared, strategy, cfg, pool)
        eval_total = sum(a.model_eval_count for a in attrs)
        report = dataset_degradation(
            model,
            prepared,
            attrs,
            fraction=cfg.p,
            k_max=cfg.k_max,
            strategy=strategy,
            method=method,
            attribution_eval_count=eval_total,
        )
        reports[method] = replace(report, wall_clock_seconds=time.perf_counter() - start)
    return reports


def run_generation(cfg: RunConfig):
    return generate(spec_from_config(cfg))
