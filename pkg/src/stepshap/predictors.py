"""Black-box predictors over fixed-shape windows.

Everything downstream (attribution, metrics, the CLI) talks to models only
through :class:`Predictor`, so any scorer mapping a batch of windows to
probabilities can be slotted in. The built-in models are deliberately
simple: a linear scorer with a closed-form attribution target, a synthetic
nonlinear scorer whose pairwise terms make coalition effects matter, and a
small trainable logistic scorer so ranking metrics are meaningful on
generated data.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .core import FeatureSchema, Window, _frozen_array
from .errors import (
    ConfigurationError,
    DataFormatError,
    DegenerateLabelsError,
    InputShapeError,
    ModelFaultError,
)
from .rng import substream

SIGMOID = "sigmoid"
IDENTITY_CLAMP = "identity_clamp"
LINKS = (SIGMOID, IDENTITY_CLAMP)

MODEL_FORMAT_VERSION = 1


def _sigmoid(z: np.ndarray) -> np.ndarray:
    # tanh form is stable for large |z|
    return 0.5 * (1.0 + np.tanh(0.5 * z))


def stack_windows(windows: Sequence[Window], window_length: int, feature_count: int) -> np.ndarray:
    """Validate a batch and stack it into a (B, W, D) array.

    Rejects shape mismatches and non-finite cells; windows must be prepared
    (all cells numerically filled) before prediction.
    """
    arrays = []
    for i, win in enumerate(windows):
        if win.window_length != window_length or win.feature_count != feature_count:
            raise InputShapeError(
                f"window {i} has shape ({win.window_length}, {win.feature_count}), "
                f"model expects ({window_length}, {feature_count})"
            )
        arrays.append(win.values)
    if not arrays:
        return np.empty((0, window_length, feature_count))
    batch = np.stack(arrays)
    if not np.isfinite(batch).all():
        raise InputShapeError("batch holds non-finite cells; prepare windows before prediction")
    return batch


def _checked(scores: np.ndarray) -> np.ndarray:
    scores = np.asarray(scores, dtype=np.float64)
    if not np.isfinite(scores).all():
        raise ModelFaultError("model produced non-finite scores")
    if scores.size and (scores.min() < 0.0 or scores.max() > 1.0):
        raise ModelFaultError(
            f"model produced scores outside [0, 1]: range [{scores.min()}, {scores.max()}]"
        )
    return scores


class Predictor:
    """Scoring interface: a deterministic, order-preserving map from a batch
    of windows to probabilities in [0, 1], independent of batch splitting."""

    window_length: int
    feature_count: int

    def predict_batch(self, windows: Sequence[Window]) -> np.ndarray:
        raise NotImplementedError


@dataclass(frozen=True, eq=False)
class LinearLogitModel(Predictor):
    """score = sum(weights * values) + bias, through the chosen link.

    With the identity-clamp link and inputs kept inside a box where the raw
    score stays in [0, 1], attributions have an exact closed form, which
    makes this the oracle target for additivity tests.
    """

    weights: np.ndarray
    bias: float = 0.0
    link: str = SIGMOID

    def __post_init__(self) -> None:
        weights = np.asarray(self.weights, dtype=np.float64)
        if weights.ndim != 2:
            raise ValueError("weights must be a (window_length, feature_count) matrix")
        if self.link not in LINKS:
            raise ValueError(f"unknown link {self.link!r}, expected one of {LINKS}")
        object.__setattr__(self, "weights", _frozen_array(weights, np.float64))
        object.__setattr__(self, "bias", float(self.bias))

    @property
    def window_length(self) -> int:
        return self.weights.shape[0]

    @property
    def feature_count(self) -> int:
        return self.weights.shape[1]

    def predict_batch(self, windows: Sequence[Window]) -> np.ndarray:
        batch = stack_windows(windows, self.window_length, self.feature_count)
        raw = np.einsum("bwd,wd->b", batch, self.weights) + self.bias
        if self.link == SIGMOID:
            return _checked(_sigmoid(raw))
        return _checked(np.clip(raw, 0.0, 1.0))


@dataclass(frozen=True, eq=False)
class InteractionSyntheticModel(Predictor):
    """Nonlinear synthetic scorer with explicit final-step interactions.

    score = sigmoid(intercept + linear . x_T + sum_{j<k} pairwise[j,k] x_Tj x_Tk
                    + history . mean(rows before last))

    The final step enters only through the listed terms; the history term
    ignores the last row, so it cancels out of all final-step marginals.
    """

    window_length: int
    intercept: float
    linear: np.ndarray
    pairwise: np.ndarray
    history: np.ndarray

    def __post_init__(self) -> None:
        linear = np.asarray(self.linear, dtype=np.float64)
        pairwise = np.triu(np.asarray(self.pairwise, dtype=np.float64), k=1)
        history = np.asarray(self.history, dtype=np.float64)
        d = linear.shape[0]
        if linear.ndim != 1:
            raise ValueError("linear coefficients must be 1-dimensional")
        if pairwise.shape != (d, d):
            raise ValueError(f"pairwise coefficients must be ({d}, {d})")
        if history.shape != (d,):
            raise ValueError(f"history weights must have length {d}")
        if int(self.window_length) < 1:
            raise ValueError("window_length must be positive")
        object.__setattr__(self, "window_length", int(self.window_length))
        object.__setattr__(self, "intercept", float(self.intercept))
        object.__setattr__(self, "linear", _frozen_array(linear, np.float64))
        object.__setattr__(self, "pairwise", _frozen_array(pairwise, np.float64))
        object.__setattr__(self, "history", _frozen_array(history, np.float64))

    @property
    def feature_count(self) -> int:
        return self.linear.shape[0]

    def raw_score(self, batch: np.ndarray) -> np.ndarray:
        last = batch[:, -1, :]
        score = self.intercept + last @ self.linear
        score = score + np.einsum("bj,jk,bk->b", last, self.pairwise, last)
        if self.window_length > 1:
            score = score + batch[:, :-1, :].mean(axis=1) @ self.history
        return score

    def predict_batch(self, windows: Sequence[Window]) -> np.ndarray:
        batch = stack_windows(windows, self.window_length, self.feature_count)
        return _checked(_sigmoid(self.raw_score(batch)))


@dataclass(frozen=True, eq=False)
class TinyLogisticScorer(Predictor):
    """Logistic regression over the flattened window, fit by full-batch
    gradient descent. Stands in for a recurrent backbone at desk scale."""

    weights: np.ndarray
    bias: float
    loss_history: tuple[float, ...] = ()

    def __post_init__(self) -> None:
        weights = np.asarray(self.weights, dtype=np.float64)
        if weights.ndim != 2:
            raise ValueError("weights must be a (window_length, feature_count) matrix")
        object.__setattr__(self, "weights", _frozen_array(weights, np.float64))
        object.__setattr__(self, "bias", float(self.bias))
        object.__setattr__(self, "loss_history", tuple(float(v) for v in self.loss_history))

    @property
    def window_length(self) -> int:
        return self.weights.shape[0]

    @property
    def feature_count(self) -> int:
        return self.weights.shape[1]

    def predict_batch(self, windows: Sequence[Window]) -> np.ndarray:
        batch = stack_windows(windows, self.window_length, self.feature_count)
        raw = np.einsum("bwd,wd->b", batch, self.weights) + self.bias
        return _checked(_sigmoid(raw))


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.5
    epochs: int = 300
    seed: int = 0

    def __post_init__(self) -> None:
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.epochs < 0:
            raise ValueError("epochs must be non-negative")


def _log_loss(probs: np.ndarray, y: np.ndarray) -> float:
    eps = 1e-12
    p = np.clip(probs, eps, 1.0 - eps)
    return float(-np.mean(y * np.log(p) + (1.0 - y) * np.log(1.0 - p)))


def train_tiny_logistic(ds, config: TrainConfig = TrainConfig()) -> TinyLogisticScorer:
    """Fit the flattened-window logistic scorer on a prepared dataset.

    Full-batch descent keeps the run bit-reproducible for a given seed.
    Requires both label classes; windows must share one shape and be fully
    imputed.
    """
    if not ds.instances:
        raise DegenerateLabelsError("cannot train on an empty dataset")
    labels = ds.labels()
    if labels.min() == labels.max():
        raise DegenerateLabelsError(
            f"training data holds a single class ({int(labels[0])}); both classes are required"
        )
    w0 = ds.instances[0].window.window_length
    d0 = ds.instances[0].window.feature_count
    batch = stack_windows([inst.window for inst in ds.instances], w0, d0)
    flat = batch.reshape(len(ds.instances), w0 * d0)
    y = labels.astype(np.float64)

    rng = substream(config.seed, "logistic-init")
    weights = rng.normal(0.0, 0.01, size=w0 * d0)
    bias = 0.0
    losses = [_log_loss(_sigmoid(flat @ weights + bias), y)]
    n = len(y)
    for _ in range(config.epochs):
        probs = _sigmoid(flat @ weights + bias)
        residual = probs - y
        weights = weights - config.learning_rate * (flat.T @ residual) / n
        bias = bias - config.learning_rate * float(residual.mean())
        losses.append(_log_loss(_sigmoid(flat @ weights + bias), y))
    return TinyLogisticScorer(weights.reshape(w0, d0), bias, tuple(losses))


class CountingPredictor(Predictor):
    """Wrapper that counts how many windows the inner model evaluates."""

    def __init__(self, inner: Predictor) -> None:
        self.inner = inner
        self.evaluations = 0
        self.calls = 0

    @property
    def window_length(self) -> int:
        return self.inner.window_length

    @property
    def feature_count(self) -> int:
        return self.inner.feature_count

    def predict_batch(self, windows: Sequence[Window]) -> np.ndarray:
        self.evaluations += len(windows)
        self.calls += 1
        return self.inner.predict_batch(windows)


_KINDS = {
    "linear_logit": LinearLogitModel,
    "interaction_synthetic": InteractionSyntheticModel,
    "tiny_logistic": TinyLogisticScorer,
}


def save_model(model: Predictor, path: str | Path, schema: FeatureSchema | None = None) -> None:
    """Write a built-in model as a versioned JSON document."""
    if isinstance(model, LinearLogitModel):
        kind, payload = "linear_logit", {
            "weights": model.weights.tolist(),
            "bias": model.bias,
            "link": model.link,
        }
    elif isinstance(model, InteractionSyntheticModel):
        kind, payload = "interaction_synthetic", {
            "window_length": model.window_length,
            "intercept": model.intercept,
            "linear": model.linear.tolist(),
            "pairwise": model.pairwise.tolist(),
            "history": model.history.tolist(),
        }
    elif isinstance(model, TinyLogisticScorer):
        kind, payload = "tiny_logistic", {
            "weights": model.weights.tolist(),
            "bias": model.bias,
            "loss_history": list(model.loss_history),
        }
    else:
        raise ConfigurationError(f"cannot serialize model of type {type(model).__name__}")
    document = {
        "format_version": MODEL_FORMAT_VERSION,
        "kind": kind,
        "schema_hash": schema.fingerprint() if schema is not None else None,
        **payload,
    }
    Path(path).write_text(json.dumps(document, indent=2) + "\n", encoding="utf-8")


def load_model(path: str | Path, schema: FeatureSchema | None = None) -> Predictor:
    """Load a model saved by :func:`save_model`, checking version and,
    when a schema is supplied, the recorded schema hash."""
    try:
        document = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise DataFormatError(f"{path}: not valid JSON: {exc}") from exc
    version = document.get("format_version")
    if version != MODEL_FORMAT_VERSION:
        raise DataFormatError(
            f"{path}: unsupported model format version {version!r}, expected {MODEL_FORMAT_VERSION}"
        )
    kind = document.get("kind")
    if kind not in _KINDS:
        raise DataFormatError(f"{path}: unknown model kind {kind!r}")
    stored_hash = document.get("schema_hash")
    if schema is not None and stored_hash is not None and stored_hash != schema.fingerprint():
        raise ConfigurationError(
            f"{path}: model was saved for schema {stored_hash}, got {schema.fingerprint()}"
        )
    if kind == "linear_logit":
        return LinearLogitModel(np.array(document["weights"]), document["bias"], document["link"])
    if kind == "interaction_synthetic":
        return InteractionSyntheticModel(
            document["window_length"],
            document["intercept"],
            np.array(document["linear"]),
            np.array(document["pairwise"]),
            np.array(document["history"]),
        )
    return TinyLogisticScorer(
        np.array(document["weights"]), document["bias"], tuple(document.get("loss_history", ()))
    )
