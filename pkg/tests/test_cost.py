import pytest

from app.models.strategy import (
    AllDataStrategy, AugmentNStrategy, BestPracticesStrategy, DEStrategy, DefaultStrategy,
    DENIALSStrategy, DENIStrategy, EnsembleStrategy, MixoutStrategy, NIStrategy,
    NoiseInputStrategy, NoiseWeightsStrategy, SWAStrategy,
)
from app.models.training import TrainConfig
from app.services.cost_service import default_steps, member_steps, normalized_cost

TRAIN = TrainConfig()


def test_default_budget_is_1250_steps():
    assert default_steps(TRAIN, 1000) == 1250


@pytest.mark.parametrize("strategy, expected", [
    (DefaultStrategy(), 1.0),
    (NoiseInputStrategy(), 1.0),
    (NoiseWeightsStrategy(), 1.0),
    (MixoutStrategy(), 1.0),
    (BestPracticesStrategy(), 2.0),
    (EnsembleStrategy(size=10), 10.0),
    (EnsembleStrategy(size=1), 1.0),
    (AugmentNStrategy(n=1), 2.4),
    (AugmentNStrategy(n=2), 3.6),
    (DEStrategy(), 1.9),
    (NIStrategy(), 2.8),
    (DENIStrategy(), 3.7),
    (DENIALSStrategy(n=1), 7.4),
    (DENIALSStrategy(n=2), 11.1),
])
def test_normalized_costs(strategy, expected):
    assert normalized_cost(strategy, TRAIN) == pytest.approx(expected)


def test_swa_cost_is_exact_step_ratio():
    assert normalized_cost(SWAStrategy(), TRAIN, 1000) == pytest.approx(2188 / 1250)
    assert round(normalized_cost(SWAStrategy(), TRAIN, 1000), 2) == 1.75
    assert normalized_cost(SWAStrategy(), TRAIN, 800) == pytest.approx(1.75)


def test_all_data_uses_full_pool():
    assert normalized_cost(AllDataStrategy(), TRAIN, 1000, n_all=4000) == pytest.approx(4.0)
    assert member_steps(AllDataStrategy(), TRAIN, 1000) == 1250


def test_deni_member_steps():
    assert member_steps(DENIStrategy(), TRAIN) == 4625
    assert member_steps(NIStrategy(), TRAIN) == 3500
    assert member_steps(DEStrategy(), TRAIN) == 2375
