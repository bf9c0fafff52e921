"""Counterfactual baselines for unobserved final-step features.

The attribution machinery needs to answer "what would the model input look
like if feature j had not been measured at the final step?". The default
answer is forward-filling: carry the most recent earlier observation, which
matches the usual preprocessing of irregular clinical series and keeps the
counterfactual in-distribution. Zero filling and per-feature population
fallbacks are available as ablation alternatives.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .core import Dataset, FeatureSchema, ObservedSet, Window, derive_observed_set
from .errors import ContractViolationError

FORWARD_FILL = "forward_fill"
ZERO = "zero"
POPULATION = "population"
BASELINE_KINDS = (FORWARD_FILL, ZERO, POPULATION)


@dataclass(frozen=True)
class BaselineStrategy:
    """How to fill cells that were not measured.

    The strategy is fixed per run and recorded in every result for
    provenance. The schema rides along because the population fill values
    are the fallback for features with no earlier observation.
    """

    kind: str
    schema: FeatureSchema

    def __post_init__(self) -> None:
        if self.kind not in BASELINE_KINDS:
            raise ValueError(f"unknown baseline kind {self.kind!r}, expected one of {BASELINE_KINDS}")


@dataclass(frozen=True)
class BaselineRow:
    """The counterfactual "nothing measured" final-step row.

    ``fallback_features`` lists features that had no in-window history and
    fell back to the population fill (forward-fill strategy only).
    """

    values: np.ndarray
    fallback_features: tuple[int, ...] = ()

    def __post_init__(self) -> None:
        values = np.array(self.values, dtype=np.float64, copy=True)
        if values.ndim != 1:
            raise ValueError("baseline row must be 1-dimensional")
        if not np.isfinite(values).all():
            raise ValueError("baseline row must be finite")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "fallback_features", tuple(int(i) for i in self.fallback_features))


def prepare_window(raw: Window, strategy: BaselineStrategy) -> Window:
    """Fill every masked-out cell, scanning forward in time.

    Observed cells are untouched and the mask is unchanged, so preparation
    is idempotent. Under forward filling each missing cell takes the most
    recent earlier observation of its feature, with the population fill as
    the fallback before the first observation.
    """
    values = raw.values
    mask = raw.mask
    out = np.empty_like(values)
    if strategy.kind == FORWARD_FILL:
        carry = strategy.schema.fill_array()
        for t in range(raw.window_length):
            row_mask = mask[t]
            out[t] = np.where(row_mask, values[t], carry)
            carry = np.where(row_mask, values[t], carry)
    else:
        fill = np.zeros(raw.feature_count) if strategy.kind == ZERO else strategy.schema.fill_array()
        out[:] = np.where(mask, values, fill)
    return Window(out, mask, raw.end_time)


def prepare_dataset(ds: Dataset, strategy: BaselineStrategy) -> Dataset:
    """Prepare every instance window, keeping labels and ids."""
    from .core import LabeledInstance

    prepared = tuple(
        LabeledInstance(prepare_window(inst.window, strategy), inst.label, inst.instance_id)
        for inst in ds.instances
    )
    return Dataset(ds.schema, prepared, ds.max_sequence_length)


def baseline_row(window: Window, strategy: BaselineStrategy) -> BaselineRow:
    """Counterfactual final-step row for a prepared window.

    Substituting this row for the final step yields the model input with
    the current measurements withheld. Under forward filling it equals the
    filled values as of the step before last; features with no history at
    all take the population fill and are flagged.
    """
    d = window.feature_count
    if strategy.kind == ZERO:
        return BaselineRow(np.zeros(d))
    if strategy.kind == POPULATION:
        return BaselineRow(strategy.schema.fill_array())
    carry = strategy.schema.fill_array()
    seen = np.zeros(d, dtype=bool)
    for t in range(window.window_length - 1):
        row_mask = window.mask[t]
        carry = np.where(row_mask, window.values[t], carry)
        seen |= row_mask
    fallback = tuple(int(j) for j in np.flatnonzero(~seen))
    return BaselineRow(carry, fallback)


def substitute(window: Window, subset: ObservedSet | Iterable[int], baseline: BaselineRow) -> Window:
    """Keep only the final-step features in ``subset`` observed.

    Features in the subset retain their values; every other final-step
    feature takes the baseline value. Earlier rows are untouched. The
    subset must lie within the window's observed set.
    """
    observed = derive_observed_set(window)
    indices = tuple(subset.indices if isinstance(subset, ObservedSet) else (int(i) for i in subset))
    outside = [j for j in indices if j not in observed]
    if outside:
        raise ContractViolationError(
            f"subset contains features not observed at the final step: {outside}"
        )
    if baseline.values.shape[0] != window.feature_count:
        raise ContractViolationError(
            f"baseline row has {baseline.values.shape[0]} entries for "
            f"{window.feature_count} features"
        )
    keep = np.zeros(window.feature_count, dtype=bool)
    keep[list(indices)] = True
    values = window.values.copy()
    values[-1] = np.where(keep, window.values[-1], baseline.values)
    return Window(values, window.mask, window.end_time)
