"""Data model for irregularly observed multivariate time-series windows.

Conventions used throughout the package:

- a window is a fixed-shape ``W x D`` value matrix plus a boolean mask of
  the same shape (``True`` means the cell was actually measured);
- raw, unprepared windows carry NaN in every masked-out cell as a
  tripwire against silently consuming unimputed values. The mask is the
  authoritative record of what was observed;
- all types are immutable after construction and safe to share between
  threads.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from typing import Iterator

import numpy as np


def _frozen_array(values, dtype) -> np.ndarray:
    arr = np.asarray(values, dtype=dtype)
    if arr is values and not arr.flags.writeable:
        return arr  # already immutable, safe to share
    arr = np.array(arr, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class FeatureSchema:
    """Names and per-feature fallback fill values for the monitored features.

    ``population_fill`` supplies the baseline value used when a feature has
    never been observed; the ingestion layer computes it as the per-feature
    median of all observed values in the training data.
    """

    names: tuple[str, ...]
    population_fill: tuple[float, ...]

    def __post_init__(self) -> None:
        names = tuple(str(n) for n in self.names)
        fill = tuple(float(v) for v in self.population_fill)
        if len(names) < 1:
            raise ValueError("schema needs at least one feature")
        if any(not n for n in names):
            raise ValueError("feature names must be non-empty")
        if len(set(names)) != len(names):
            raise ValueError("feature names must be unique")
        if len(fill) != len(names):
            raise ValueError(
                f"population_fill has {len(fill)} entries for {len(names)} features"
            )
        if not all(np.isfinite(fill)):
            raise ValueError("population_fill values must be finite")
        object.__setattr__(self, "names", names)
        object.__setattr__(self, "population_fill", fill)

    @property
    def feature_count(self) -> int:
        return len(self.names)

    def fill_array(self) -> np.ndarray:
        return np.array(self.population_fill, dtype=np.float64)

    def fingerprint(self) -> str:
        """Stable short hash identifying this schema in saved artifacts."""
        payload = json.dumps(
            {"names": list(self.names), "population_fill": [repr(v) for v in self.population_fill]},
            sort_keys=True,
        )
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()[:16]


@dataclass(frozen=True, eq=False)
class Window:
    """A ``W x D`` slice of a monitored record ending at time ``end_time``.

    ``values`` hold physical units per the schema; ``mask`` marks measured
    cells. Masked-out cells are NaN until :func:`stepshap.baselines.prepare_window`
    fills them.
    """

    values: np.ndarray
    mask: np.ndarray
    end_time: int = -1

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=np.float64)
        mask = np.asarray(self.mask, dtype=bool)
        if values.ndim != 2:
            raise ValueError(f"values must be 2-dimensional, got shape {values.shape}")
        if values.shape[0] < 1 or values.shape[1] < 1:
            raise ValueError(f"window needs at least one row and one feature, got {values.shape}")
        if mask.shape != values.shape:
            raise ValueError(f"mask shape {mask.shape} does not match values shape {values.shape}")
        end_time = int(self.end_time)
        if end_time < 0:
            end_time = values.shape[0] - 1
        object.__setattr__(self, "values", _frozen_array(values, np.float64))
        object.__setattr__(self, "mask", _frozen_array(mask, bool))
        object.__setattr__(self, "end_time", end_time)

    @property
    def window_length(self) -> int:
        return self.values.shape[0]

    @property
    def feature_count(self) -> int:
        return self.values.shape[1]


def windows_equal(a: Window, b: Window) -> bool:
    """Exact equality, treating NaN cells as equal to each other."""
    return (
        a.end_time == b.end_time
        and a.values.shape == b.values.shape
        and np.array_equal(a.values, b.values, equal_nan=True)
        and np.array_equal(a.mask, b.mask)
    )


@dataclass(frozen=True)
class ObservedSet:
    """Feature indices measured at a window's final step, ascending."""

    indices: tuple[int, ...]

    def __post_init__(self) -> None:
        indices = tuple(int(i) for i in self.indices)
        if any(i < 0 for i in indices):
            raise ValueError("feature indices must be non-negative")
        if any(b <= a for a, b in zip(indices, indices[1:])):
            raise ValueError("indices must be strictly ascending")
        object.__setattr__(self, "indices", indices)

    def __len__(self) -> int:
        return len(self.indices)

    def __iter__(self) -> Iterator[int]:
        return iter(self.indices)

    def __contains__(self, item: object) -> bool:
        return item in self.indices


def derive_observed_set(window: Window) -> ObservedSet:
    """Features measured at the final step, read off the mask's last row."""
    return ObservedSet(tuple(int(j) for j in np.flatnonzero(window.mask[-1])))


@dataclass(frozen=True)
class LabeledInstance:
    window: Window
    label: int
    instance_id: str

    def __post_init__(self) -> None:
        label = int(self.label)
        if label not in (0, 1):
            raise ValueError(f"label must be 0 or 1, got {label}")
        object.__setattr__(self, "label", label)
        object.__setattr__(self, "instance_id", str(self.instance_id))


@dataclass(frozen=True)
class Dataset:
    schema: FeatureSchema
    instances: tuple[LabeledInstance, ...]
    max_sequence_length: int

    def __post_init__(self) -> None:
        object.__setattr__(self, "instances", tuple(self.instances))
        if int(self.max_sequence_length) < 1:
            raise ValueError("max_sequence_length must be positive")
        object.__setattr__(self, "max_sequence_length", int(self.max_sequence_length))

    def __len__(self) -> int:
        return len(self.instances)

    def labels(self) -> np.ndarray:
        return np.array([inst.label for inst in self.instances], dtype=np.int64)


@dataclass(frozen=True)
class ValidationIssue:
    instance_id: str
    code: str
    message: str
    time_index: int | None = None
    feature_index: int | None = None


@dataclass(frozen=True)
class ValidationReport:
    issues: tuple[ValidationIssue, ...]

    @property
    def ok(self) -> bool:
        return not self.issues


def validate_dataset(ds: Dataset) -> ValidationReport:
    """Check every dataset invariant, reporting violations as data.

    Nothing is raised: each problem becomes a :class:`ValidationIssue`
    carrying the instance id and, for cell-level problems, the (t, j)
    coordinates.
    """
    issues: list[ValidationIssue] = []
    d = ds.schema.feature_count
    for inst in ds.instances:
        win = inst.window
        if win.feature_count != d:
            issues.append(
                ValidationIssue(
                    inst.instance_id,
                    "feature-count-mismatch",
                    f"feature-count mismatch: window has {win.feature_count} features, schema has {d}",
                )
            )
            continue
        if win.window_length > ds.max_sequence_length:
            issues.append(
                ValidationIssue(
                    inst.instance_id,
                    "window-too-long",
                    f"window length {win.window_length} exceeds max sequence length "
                    f"{ds.max_sequence_length}",
                )
            )
        bad = win.mask & ~np.isfinite(win.values)
        for t, j in zip(*np.nonzero(bad)):
            issues.append(
                ValidationIssue(
                    inst.instance_id,
                    "non-finite-observed",
                    f"observed cell (t={int(t)}, feature={int(j)}) holds a non-finite value",
                    time_index=int(t),
                    feature_index=int(j),
                )
            )
    return ValidationReport(tuple(issues))


def conform_window(window: Window, target_length: int) -> Window:
    """Fit a window to a model's fixed input length.

    Shorter windows are front-padded with fully-missing rows (NaN values,
    mask false), so records near the start of a stay keep a constant input
    shape; longer windows keep only their most recent rows. Padding happens
    before imputation, so conform first and prepare afterwards.
    """
    if target_length < 1:
        raise ValueError("target_length must be positive")
    w = window.window_length
    if w == target_length:
        return window
    if w > target_length:
        return Window(
            window.values[w - target_length :],
            window.mask[w - target_length :],
            window.end_time,
        )
    pad = target_length - w
    values = np.full((target_length, window.feature_count), np.nan)
    values[pad:] = window.values
    mask = np.zeros((target_length, window.feature_count), dtype=bool)
    mask[pad:] = window.mask
    return Window(values, mask, window.end_time)
