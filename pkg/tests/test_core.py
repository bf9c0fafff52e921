import numpy as np
import pytest
from hypothesis import given, strategies as st

from stepshap import (
    Dataset,
    FeatureSchema,
    LabeledInstance,
    ObservedSet,
    Window,
    conform_window,
    derive_observed_set,
    validate_dataset,
    windows_equal,
)
from tests.conftest import make_window


class TestFeatureSchema:
    def test_basic(self):
        schema = FeatureSchema(("a", "b"), (0.0, 1.5))
        assert schema.feature_count == 2
        assert schema.fill_array().tolist() == [0.0, 1.5]

    @pytest.mark.parametrize(
        "names,fill",
        [
            ((), ()),
            (("a", "a"), (0.0, 0.0)),
            (("a", ""), (0.0, 0.0)),
            (("a", "b"), (0.0,)),
            (("a",), (float("nan"),)),
        ],
    )
    def test_rejects_bad_schemas(self, names, fill):
        with pytest.raises(ValueError):
            FeatureSchema(names, fill)

    def test_fingerprint_stable_and_sensitive(self):
        a = FeatureSchema(("x", "y"), (0.0, 1.0))
        b = FeatureSchema(("x", "y"), (0.0, 1.0))
        c = FeatureSchema(("x", "y"), (0.0, 2.0))
        assert a.fingerprint() == b.fingerprint()
        assert a.fingerprint() != c.fingerprint()


class TestWindow:
    def test_shape_validation(self):
        with pytest.raises(ValueError):
            Window(np.zeros((2, 2)), np.ones((3, 2), dtype=bool))
        with pytest.raises(ValueError):
            Window(np.zeros(3), np.ones(3, dtype=bool))

    def test_defaults_and_immutability(self):
        win = make_window([[1.0, 2.0], [3.0, 4.0]])
        assert win.end_time == 1
        assert win.window_length == 2 and win.feature_count == 2
        with pytest.raises(ValueError):
            win.values[0, 0] = 9.0
        with pytest.raises(ValueError):
            win.mask[0, 0] = False

    def test_nan_allowed_at_masked_cells(self):
        win = Window(np.array([[np.nan, 1.0]]), np.array([[False, True]]))
        assert np.isnan(win.values[0, 0])

    def test_windows_equal_handles_nan(self):
        a = Window(np.array([[np.nan, 1.0]]), np.array([[False, True]]))
        b = Window(np.array([[np.nan, 1.0]]), np.array([[False, True]]))
        c = Window(np.array([[0.0, 1.0]]), np.array([[False, True]]))
        assert windows_equal(a, b)
        assert not windows_equal(a, c)


class TestObservedSet:
    def test_from_mask_last_row(self):
        win = Window(
            np.array([[0.0, 0.0, 0.0], [1.0, np.nan, 3.0]]),
            np.array([[True, True, True], [True, False, True]]),
        )
        assert derive_observed_set(win).indices == (0, 2)

    def test_empty_and_full(self):
        empty = Window(np.full((1, 3), np.nan), np.zeros((1, 3), dtype=bool))
        assert derive_observed_set(empty).indices == ()
        full = make_window(np.zeros((2, 5)))
        assert derive_observed_set(full).indices == (0, 1, 2, 3, 4)

    def test_pure_function_of_mask(self):
        win = Window(
            np.array([[1.0, np.nan], [2.0, np.nan]]),
            np.array([[True, False], [True, False]]),
        )
        assert derive_observed_set(win) == derive_observed_set(win)

    def test_rejects_unsorted(self):
        with pytest.raises(ValueError):
            ObservedSet((2, 1))

    @given(st.lists(st.booleans(), min_size=1, max_size=12))
    def test_size_bounds(self, last_row):
        d = len(last_row)
        mask = np.array([last_row])
        win = Window(np.where(mask, 0.0, np.nan), mask)
        observed = derive_observed_set(win)
        assert len(observed) <= d
        assert (len(observed) == d) == all(last_row)


def _dataset(schema, windows_labels):
    instances = tuple(
        LabeledInstance(win, label, f"i{k}") for k, (win, label) in enumerate(windows_labels)
    )
    return Dataset(schema, instances, max_sequence_length=4)


class TestValidateDataset:
    def test_well_formed_ok(self):
        schema = FeatureSchema(("a", "b"), (0.0, 0.0))
        wins = [
            (make_window(np.zeros((2, 2))), 0),
            (make_window(np.ones((3, 2))), 1),
            (Window(np.array([[np.nan, 1.0]]), np.array([[False, True]])), 0),
        ]
        report = validate_dataset(_dataset(schema, wins))
        assert report.ok

    def test_nan_observed_cell_cited(self):
        schema = FeatureSchema(("a", "b"), (0.0, 0.0))
        bad = Window(np.array([[0.0, 1.0], [np.nan, 2.0]]), np.ones((2, 2), dtype=bool))
        report = validate_dataset(_dataset(schema, [(bad, 0)]))
        assert not report.ok
        issue = report.issues[0]
        assert issue.code == "non-finite-observed"
        assert issue.instance_id == "i0"
        assert (issue.time_index, issue.feature_index) == (1, 0)

    def test_feature_count_mismatch(self):
        schema = FeatureSchema(("a", "b"), (0.0, 0.0))
        wrong = make_window(np.zeros((2, 3)))
        report = validate_dataset(_dataset(schema, [(wrong, 0)]))
        assert any("feature-count mismatch" in issue.message for issue in report.issues)

    def test_window_longer_than_max(self):
        schema = FeatureSchema(("a",), (0.0,))
        long = make_window(np.zeros((5, 1)))
        report = validate_dataset(_dataset(schema, [(long, 1)]))
        assert any(issue.code == "window-too-long" for issue in report.issues)


class TestLabeledInstance:
    def test_rejects_non_binary_label(self):
        win = make_window(np.zeros((1, 1)))
        with pytest.raises(ValueError):
            LabeledInstance(win, 2, "x")


class TestConformWindow:
    def test_identity(self):
        win = make_window(np.zeros((3, 2)))
        assert conform_window(win, 3) is win

    def test_front_padding(self):
        win = make_window([[1.0, 2.0]])
        padded = conform_window(win, 3)
        assert padded.window_length == 3
        assert not padded.mask[:2].any()
        assert np.isnan(padded.values[:2]).all()
        assert padded.values[2].tolist() == [1.0, 2.0]
        assert padded.end_time == win.end_time

    def test_crop_keeps_most_recent(self):
        win = make_window([[1.0], [2.0], [3.0]], end_time=7)
        cropped = conform_window(win, 2)
        assert cropped.values[:, 0].tolist() == [2.0, 3.0]
        assert cropped.end_time == 7
