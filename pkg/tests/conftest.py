import numpy as np
import pytest

from stepshap import (
    BaselineStrategy,
    FeatureSchema,
    InteractionSyntheticModel,
    LinearLogitModel,
    Window,
)


def make_window(values, mask=None, end_time=-1) -> Window:
    values = np.asarray(values, dtype=float)
    if mask is None:
        mask = np.ones_like(values, dtype=bool)
    return Window(values, mask, end_time)


@pytest.fixture
def schema4() -> FeatureSchema:
    return FeatureSchema(("hr", "sbp", "spo2", "gluc"), (0.1, -0.2, 0.0, 0.3))


@pytest.fixture
def d4_model() -> InteractionSyntheticModel:
    """Nonlinear 4-feature scorer with hand-enterable coefficients."""
    return InteractionSyntheticModel(
        window_length=3,
        intercept=0.1,
        linear=np.array([0.8, -0.5, 0.6, 0.3]),
        pairwise=np.array(
            [
                [0.0, 0.4, 0.0, -0.3],
                [0.0, 0.0, 0.2, 0.0],
                [0.0, 0.0, 0.0, 0.25],
                [0.0, 0.0, 0.0, 0.0],
            ]
        ),
        history=np.array([0.1, 0.05, -0.1, 0.2]),
    )


@pytest.fixture
def d4_window() -> Window:
    values = np.array(
        [
            [0.2, -0.1, 0.4, 0.0],
            [0.5, 0.3, -0.2, 0.6],
            [0.9, -0.4, 0.5, 0.2],
        ]
    )
    return make_window(values)


@pytest.fixture
def d4_strategy(schema4) -> BaselineStrategy:
    return BaselineStrategy("forward_fill", schema4)


@pytest.fixture
def d6_model() -> InteractionSyntheticModel:
    rng = np.random.default_rng(60)
    pairwise = np.triu(rng.normal(0.0, 0.3, (6, 6)), k=1)
    return InteractionSyntheticModel(
        window_length=4,
        intercept=-0.2,
        linear=rng.normal(0.0, 0.7, 6),
        pairwise=pairwise,
        history=rng.normal(0.0, 0.1, 6),
    )


@pytest.fixture
def d6_window() -> Window:
    rng = np.random.default_rng(61)
    return make_window(rng.normal(0.0, 0.8, (4, 6)))


@pytest.fixture
def schema6() -> FeatureSchema:
    return FeatureSchema(tuple(f"f{j}" for j in range(6)), (0.0,) * 6)


def additive_model(w: int, last_row_weights, bias: float) -> LinearLogitModel:
    """Identity-clamp scorer reading only the final row; attributions have
    the closed form weight * (value - baseline)."""
    weights = np.zeros((w, len(last_row_weights)))
    weights[-1] = last_row_weights
    return LinearLogitModel(weights, bias, link="identity_clamp")
