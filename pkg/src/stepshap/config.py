"""Run configuration: defaults, config files, CLI merging.

A config file is a flat JSON object whose keys mirror the CLI flags
(``seed``, ``n``, ``p``, ``baseline``, ``method``, ``format``, ``out``,
``data``, plus model/training and data-generation knobs). Command-line
flags override file values, which override defaults.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, fields
from pathlib import Path

from .baselines import BASELINE_KINDS
from .errors import ConfigurationError
from .synthetic import LABEL_MODES, SCORERS

METHODS = ("deltashap", "fo", "afo", "random")
MODEL_KINDS = ("tiny_logistic", "linear", "interaction")


@dataclass
class RunConfig:
    seed: int = 0
    n: int = 25
    p: float = 0.25
    baseline: str = "forward_fill"
    method: tuple[str, ...] = METHODS
    format: str = "csv"
    out: str | None = None
    data: str | None = None
    model: str = "tiny_logistic"
    model_path: str | None = None
    k_max: int | None = None
    learning_rate: float = 0.5
    epochs: int = 300
    afo_draws: int = 10
    exact_cap: int = 20
    # synthetic generation
    features: int = 6
    window: int = 4
    instances: int = 200
    observe_prob: float = 0.8
    ar_coef: float = 0.7
    ar_noise: float = 0.4
    level_scale: float = 1.0
    scorer: str = "linear"
    label_mode: str = "bernoulli"
    label_noise: float = 0.0

    def __post_init__(self) -> None:
        if isinstance(self.method, str):
            self.method = tuple(m.strip() for m in self.method.split(",") if m.strip())
        else:
            self.method = tuple(self.method)
        unknown = [m for m in self.method if m not in METHODS]
        if unknown:
            raise ConfigurationError(f"unknown methods {unknown}; choose from {METHODS}")
        if not self.method:
            raise ConfigurationError("at least one method is required")
        if self.n < 1:
            raise ConfigurationError("n must be at least 1")
        if not (0.0 < self.p <= 1.0):
            raise ConfigurationError(f"p must lie in (0, 1], got {self.p}")
        if self.baseline not in BASELINE_KINDS:
            raise ConfigurationError(
                f"unknown baseline {self.baseline!r}; choose from {BASELINE_KINDS}"
            )
        if self.model not in MODEL_KINDS:
            raise ConfigurationError(f"unknown model {self.model!r}; choose from {MODEL_KINDS}")
        if self.format not in ("csv", "jsonl"):
            raise ConfigurationError(f"unknown format {self.format!r}; choose csv or jsonl")
        if self.scorer not in SCORERS:
            raise ConfigurationError(f"unknown scorer {self.scorer!r}; choose from {SCORERS}")
        if self.label_mode not in LABEL_MODES:
            raise ConfigurationError(
                f"unknown label_mode {self.label_mode!r}; choose from {LABEL_MODES}"
            )
        if self.k_max is not None and self.k_max < 1:
            raise ConfigurationError("k_max must be at least 1 when given")
        if self.afo_draws < 1:
            raise ConfigurationError("afo_draws must be at least 1")


_FIELD_NAMES = {f.name for f in fields(RunConfig)}


def load_config_file(path: str | Path) -> dict:
    """Parse a flat key-value config document, rejecting unknown keys."""
    try:
        document = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"{path}: invalid JSON: {exc}") from None
    if not isinstance(document, dict):
        raise ConfigurationError(f"{path}: config must be a flat JSON object")
    unknown = sorted(set(document) - _FIELD_NAMES)
    if unknown:
        raise ConfigurationError(f"{path}: unknown config keys {unknown}")
    return document


def resolve_config(cli_values: dict, config_path: str | Path | None = None) -> RunConfig:
    """Merge defaults, config-file values and CLI overrides (in that order)."""
    merged: dict = {}
    if config_path is not None:
        merged.update(load_config_file(config_path))
    merged.update({k: v for k, v in cli_values.items() if v is not None})
    try:
        return RunConfig(**merged)
    except TypeError as exc:
        raise ConfigurationError(str(exc)) from None
