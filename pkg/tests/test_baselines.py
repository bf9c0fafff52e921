import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from stepshap import (
    BaselineStrategy,
    ContractViolationError,
    FeatureSchema,
    Window,
    baseline_row,
    derive_observed_set,
    prepare_window,
    substitute,
    windows_equal,
)
from tests.conftest import make_window


@pytest.fixture
def schema3():
    return FeatureSchema(("a", "b", "c"), (1.3, -0.5, 2.0))


def test_rejects_unknown_kind(schema3):
    with pytest.raises(ValueError):
        BaselineStrategy("nearest", schema3)


class TestPrepareWindow:
    def test_forward_fill_carries_last_observation(self, schema3):
        values = np.array([[5.0, np.nan, np.nan], [np.nan, np.nan, np.nan], [np.nan, np.nan, 1.0]])
        mask = ~np.isnan(values)
        win = Window(values, mask)
        prepared = prepare_window(win, BaselineStrategy("forward_fill", schema3))
        assert prepared.values[:, 0].tolist() == [5.0, 5.0, 5.0]
        assert np.array_equal(prepared.mask, mask)

    def test_never_observed_falls_back_to_population(self, schema3):
        win = Window(np.full((3, 3), np.nan), np.zeros((3, 3), dtype=bool))
        prepared = prepare_window(win, BaselineStrategy("forward_fill", schema3))
        assert prepared.values[:, 0].tolist() == [1.3, 1.3, 1.3]
        assert prepared.values[:, 2].tolist() == [2.0, 2.0, 2.0]

    def test_zero_strategy(self, schema3):
        values = np.array([[np.nan, 7.0, np.nan]])
        win = Window(values, ~np.isnan(values))
        prepared = prepare_window(win, BaselineStrategy("zero", schema3))
        assert prepared.values[0].tolist() == [0.0, 7.0, 0.0]

    def test_population_strategy(self, schema3):
        win = Window(np.full((1, 3), np.nan), np.zeros((1, 3), dtype=bool))
        prepared = prepare_window(win, BaselineStrategy("population", schema3))
        assert prepared.values[0].tolist() == [1.3, -0.5, 2.0]

    def test_observed_cells_untouched(self, schema3):
        values = np.array([[4.0, np.nan, 6.0], [np.nan, 2.0, np.nan]])
        win = Window(values, ~np.isnan(values))
        prepared = prepare_window(win, BaselineStrategy("forward_fill", schema3))
        assert prepared.values[0, 0] == 4.0 and prepared.values[1, 1] == 2.0

    @settings(max_examples=60, deadline=None)
    @given(
        values=arrays(np.float64, (4, 3), elements=st.floats(-5, 5)),
        mask=arrays(np.bool_, (4, 3)),
        kind=st.sampled_from(["forward_fill", "zero", "population"]),
    )
    def test_idempotent(self, values, mask, kind):
        schema = FeatureSchema(("a", "b", "c"), (1.3, -0.5, 2.0))
        win = Window(np.where(mask, values, np.nan), mask)
        strategy = BaselineStrategy(kind, schema)
        once = prepare_window(win, strategy)
        twice = prepare_window(once, strategy)
        assert windows_equal(once, twice)


class TestBaselineRow:
    def test_forward_fill_uses_previous_observation(self, schema3):
        values = np.array([[0.3, np.nan, np.nan], [0.7, np.nan, np.nan]])
        win = prepare_window(Window(values, ~np.isnan(values)), BaselineStrategy("forward_fill", schema3))
        row = baseline_row(win, BaselineStrategy("forward_fill", schema3))
        assert row.values[0] == 0.3
        assert row.fallback_features == (1, 2)

    def test_missing_at_final_step_is_noop(self, schema3):
        # a feature unobserved at T already carries its forward fill, so its
        # baseline entry equals the current value and occlusion changes nothing
        values = np.array([[2.5, np.nan, np.nan], [np.nan, np.nan, np.nan]])
        strategy = BaselineStrategy("forward_fill", schema3)
        win = prepare_window(Window(values, ~np.isnan(values)), strategy)
        row = baseline_row(win, strategy)
        assert row.values[0] == win.values[-1, 0] == 2.5
        swapped = substitute(win, (), row)
        assert windows_equal(swapped, win)

    def test_zero_strategy_all_zero(self, schema3):
        win = make_window(np.ones((2, 3)))
        row = baseline_row(win, BaselineStrategy("zero", schema3))
        assert row.values.tolist() == [0.0, 0.0, 0.0]

    def test_single_row_window_flags_population_fallback(self, schema3):
        win = make_window([[4.0, 5.0, 6.0]])
        row = baseline_row(win, BaselineStrategy("forward_fill", schema3))
        assert row.values.tolist() == [1.3, -0.5, 2.0]
        assert row.fallback_features == (0, 1, 2)


class TestSubstitute:
    def test_full_subset_is_identity(self, schema3):
        strategy = BaselineStrategy("forward_fill", schema3)
        win = make_window(np.arange(6.0).reshape(2, 3))
        row = baseline_row(win, strategy)
        assert windows_equal(substitute(win, derive_observed_set(win), row), win)

    def test_empty_subset_gives_baseline_row(self, schema3):
        strategy = BaselineStrategy("forward_fill", schema3)
        win = make_window(np.arange(6.0).reshape(2, 3))
        row = baseline_row(win, strategy)
        swapped = substitute(win, (), row)
        assert swapped.values[-1].tolist() == row.values.tolist()
        assert swapped.values[0].tolist() == win.values[0].tolist()

    def test_componentwise(self, schema3):
        values = np.array([[1.0, 1.0, 1.0], [4.0, np.nan, 6.0]])
        mask = ~np.isnan(values)
        strategy = BaselineStrategy("forward_fill", schema3)
        win = prepare_window(Window(values, mask), strategy)
        row = baseline_row(win, strategy)
        swapped = substitute(win, (0,), row)
        assert swapped.values[-1].tolist() == [4.0, row.values[1], row.values[2]]

    def test_rejects_unobserved_member(self, schema3):
        values = np.array([[1.0, 1.0, 1.0], [4.0, np.nan, 6.0]])
        win = Window(values, ~np.isnan(values))
        row = baseline_row(win, BaselineStrategy("zero", schema3))
        with pytest.raises(ContractViolationError):
            substitute(win, (1,), row)

    @settings(max_examples=60, deadline=None)
    @given(data=st.data())
    def test_agreement_on_overlap_and_complement(self, data):
        schema = FeatureSchema(tuple("abcde"), (0.0,) * 5)
        strategy = BaselineStrategy("forward_fill", schema)
        win = make_window(np.linspace(0.0, 1.0, 10).reshape(2, 5))
        row = baseline_row(win, strategy)
        observed = list(range(5))
        s1 = data.draw(st.sets(st.sampled_from(observed)))
        s2 = data.draw(st.sets(st.sampled_from(observed)))
        w1 = substitute(win, sorted(s1), row)
        w2 = substitute(win, sorted(s2), row)
        both = s1 & s2
        neither = set(observed) - (s1 | s2)
        for j in both | neither:
            assert w1.values[-1, j] == w2.values[-1, j]
