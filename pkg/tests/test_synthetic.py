import numpy as np
import pytest

from stepshap import (
    BaselineStrategy,
    DegenerateLabelsError,
    SyntheticSpec,
    build_scorer,
    derive_observed_set,
    exact_shapley,
    generate,
    prepare_dataset,
    validate_dataset,
)
from stepshap.synthetic import final_step_contributions


def _spec(**overrides):
    params = dict(
        feature_count=5,
        window_length=4,
        instance_count=80,
        observe_prob=0.8,
        seed=11,
    )
    params.update(overrides)
    return SyntheticSpec(**params)


class TestGenerate:
    def test_deterministic_per_seed(self):
        a = generate(_spec())
        b = generate(_spec())
        for inst_a, inst_b in zip(a.dataset.instances, b.dataset.instances):
            assert np.array_equal(inst_a.window.values, inst_b.window.values, equal_nan=True)
            assert np.array_equal(inst_a.window.mask, inst_b.window.mask)
            assert inst_a.label == inst_b.label
        assert np.array_equal(a.driver_scores, b.driver_scores)

    def test_seeds_differ(self):
        a = generate(_spec(seed=1))
        b = generate(_spec(seed=2))
        assert not np.array_equal(
            a.dataset.instances[0].window.mask, b.dataset.instances[0].window.mask
        ) or not np.array_equal(
            a.dataset.instances[0].window.values,
            b.dataset.instances[0].window.values,
            equal_nan=True,
        )

    def test_full_observation_probability(self):
        result = generate(_spec(observe_prob=1.0))
        for inst in result.dataset.instances:
            assert inst.window.mask.all()

    def test_threshold_labels_match_score_sign_when_noise_free(self):
        result = generate(_spec(label_mode="threshold", label_noise=0.0, observe_prob=1.0))
        scorer = result.scorer
        for inst in result.dataset.instances:
            score = float(scorer.predict_batch([inst.window])[0])
            assert inst.label == int(score >= 0.5)

    def test_single_class_raises_with_hint(self):
        with pytest.raises(DegenerateLabelsError, match="regenerate"):
            generate(_spec(instance_count=3, label_mode="threshold", seed=5))

    def test_class_balance_reported(self):
        result = generate(_spec(instance_count=400))
        labels = result.dataset.labels()
        assert result.positive_fraction == labels.mean()
        assert 0.2 < result.positive_fraction < 0.8

    def test_dataset_validates_clean(self):
        result = generate(_spec())
        assert validate_dataset(result.dataset).ok

    def test_masked_cells_are_nan(self):
        result = generate(_spec(observe_prob=0.5))
        win = result.dataset.instances[0].window
        assert np.isnan(win.values[~win.mask]).all()
        assert np.isfinite(win.values[win.mask]).all()

    def test_population_fill_is_observed_median(self):
        result = generate(_spec())
        ds = result.dataset
        observed0 = np.concatenate(
            [inst.window.values[inst.window.mask[:, 0], 0] for inst in ds.instances]
        )
        assert ds.schema.population_fill[0] == pytest.approx(float(np.median(observed0)))

    def test_drivers_zero_off_observed(self):
        result = generate(_spec(observe_prob=0.5))
        for i, inst in enumerate(result.dataset.instances):
            hidden = ~inst.window.mask[-1]
            assert not result.driver_scores[i, hidden].any()


class TestBuildScorer:
    @pytest.mark.parametrize("kind", ["linear", "interaction"])
    def test_deterministic(self, kind):
        spec = _spec(scorer=kind)
        a = build_scorer(spec)
        b = build_scorer(spec)
        win_values = np.random.default_rng(0).normal(size=(4, 5))
        from tests.conftest import make_window

        win = make_window(win_values)
        assert a.predict_batch([win])[0] == b.predict_batch([win])[0]

    def test_contributions_sum_to_prelink_change(self):
        # the closed-form split must reproduce the full pre-link difference
        spec = _spec(scorer="interaction")
        model = build_scorer(spec)
        rng = np.random.default_rng(3)
        x = rng.normal(size=5)
        b = rng.normal(size=5)
        contributions = final_step_contributions(model, x, b)
        history = rng.normal(size=(3, 5))
        full = np.vstack([history, x])
        swapped = np.vstack([history, b])
        raw_change = model.raw_score(full[None]) - model.raw_score(swapped[None])
        assert contributions.sum() == pytest.approx(float(raw_change[0]), abs=1e-12)


class TestGroundTruthAgreement:
    def test_top_driver_matches_exact_attribution_on_most_instances(self):
        """Noise-free data: the feature with the largest true contribution
        should top the exact attribution ranking almost always; the rare
        exceptions are interaction-dominated instances."""
        spec = _spec(
            feature_count=6,
            instance_count=200,
            scorer="interaction",
            label_mode="threshold",
            label_noise=0.0,
            observe_prob=0.85,
            seed=23,
        )
        result = generate(spec)
        strategy = BaselineStrategy("forward_fill", result.dataset.schema)
        prepared = prepare_dataset(result.dataset, strategy)
        agree = 0
        eligible = 0
        mismatches = []
        for i, inst in enumerate(prepared.instances):
            drivers = np.abs(result.driver_scores[i])
            if len(derive_observed_set(inst.window)) == 0 or drivers.max() == 0.0:
                continue
            eligible += 1
            top_driver = int(drivers.argmax())
            attr = exact_shapley(result.scorer, inst.window, strategy)
            top_attr = int(np.abs(attr.attributions).argmax())
            if top_driver == top_attr:
                agree += 1
            else:
                mismatches.append(inst.instance_id)
        assert eligible > 150
        if mismatches:
            print(f"interaction-dominated instances: {mismatches}")
        assert agree / eligible >= 0.95
