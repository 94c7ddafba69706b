"""Default eğitim adımlarına göre normalize edilmiş hesaplama maliyeti."""
import math
from typing import Optional

from app.models.plan import PlanVariant
from app.models.strategy import (
    AllDataStrategy, AugmentNStrategy, BestPracticesStrategy, DEStrategy, DefaultStrategy,
    DENIALSStrategy, DENIStrategy, EnsembleStrategy, MixoutStrategy, NIStrategy,
    NoiseInputStrategy, NoiseWeightsStrategy, StrategyConfig, SWAStrategy,
)
from app.models.training import TrainConfig
from app.services.data_service import steps_per_epoch
from app.services.mitigation_service import build_phase_plan, denials_params

DEFAULT_BUDGET = 1000


def default_steps(train_cfg: TrainConfig, n_train: int = DEFAULT_BUDGET) -> int:
    return train_cfg.epochs * steps_per_epoch(n_train, train_cfg.batch_size)


def member_steps(
    strategy: StrategyConfig,
    train_cfg: TrainConfig,
    n_train: int = DEFAULT_BUDGET,
    n_all: Optional[int] = None,
) -> int:
    """Motorun sayacağı üye-adım sayısı, eğitim yapılmadan hesaplanır."""
    base = default_steps(train_cfg, n_train)
    if isinstance(strategy, (DefaultStrategy, NoiseInputStrategy, NoiseWeightsStrategy, MixoutStrategy)):
        return base
    if isinstance(strategy, AllDataStrategy):
        return default_steps(train_cfg, n_all if n_all is not None else n_train)
    if isinstance(strategy, BestPracticesStrategy):
        return default_steps(train_cfg.best_practices(), n_train)
    if isinstance(strategy, EnsembleStrategy):
        return strategy.size * base
    if isinstance(strategy, SWAStrategy):
        return base + base - math.floor(strategy.start_frac * base)
    if isinstance(strategy, AugmentNStrategy):
        epochs = max(1, int(round(train_cfg.epochs * strategy.epochs_multiplier)))
        return epochs * steps_per_epoch(n_train * (strategy.n + 1), train_cfg.batch_size)
    if isinstance(strategy, DEStrategy):
        return build_phase_plan(strategy.deni_params(), base, PlanVariant.DE).member_steps
    if isinstance(strategy, NIStrategy):
        return build_phase_plan(strategy.deni_params(), base, PlanVariant.NI).member_steps
    if isinstance(strategy, DENIStrategy):
        return build_phase_plan(strategy.deni_params(), base, PlanVariant.DENI).member_steps
    if isinstance(strategy, DENIALSStrategy):
        total = default_steps(train_cfg, n_train * (strategy.n + 1))
        return build_phase_plan(denials_params(strategy), total, PlanVariant.DENI).member_steps
    raise ValueError(f"Bilinmeyen strateji: {type(strategy).__name__}")


def normalized_cost(
    strategy: StrategyConfig,
    train_cfg: TrainConfig,
    n_train: int = DEFAULT_BUDGET,
    n_all: Optional[int] = None,
) -> float:
    return member_steps(strategy, train_cfg, n_train, n_all) / default_steps(train_cfg, n_train)
