"""Gauss gürültüsü ve ölçekleme katsayıları.

var_noise bir VARYANSTIR: gürültünün standart sapması sqrt(var_noise), etkin
bozulma standart sapması ise sqrt(var_noise) * lambda olur.

AllGroups hedefi yalnızca duyarlılık çalışması içindir: gürültüyü tüm
katmanlara eklemek modeli hiperparametrelere çok duyarlı yapar, biraz büyük
gürültü modeli tamamen bozabilir.
"""
from dataclasses import dataclass
from enum import Enum

import numpy as np

from app.config.logging import setup_logger
from app.exceptions import ConfigurationError, DegenerateGroupError
from app.models.dataset import Batch
from app.models.params import Origin, ParamGroup, ParamSet
from app.services.param_service import param_std
from app.services.rng_service import RngStream

logger = setup_logger(__name__)


class NoiseScaling(str, Enum):
    STD_ONLY = "std_only"
    STD_OVER_STEPS = "std_over_steps"
    NO_SCALING = "no_scaling"


class NoiseTarget(str, Enum):
    NEWLY_INITIALIZED_AND_ADAPTER = "newly_initialized_and_adapter"
    ALL_GROUPS = "all_groups"


@dataclass(frozen=True)
class NoiseSpec:
    var_noise: float
    scaling: NoiseScaling = NoiseScaling.STD_ONLY
    target: NoiseTarget = NoiseTarget.NEWLY_INITIALIZED_AND_ADAPTER

    def __post_init__(self):
        if not self.var_noise > 0:
            raise ConfigurationError(f"var_noise pozitif olmalı: {self.var_noise}")

    def targets(self, group: ParamGroup) -> bool:
        if self.target == NoiseTarget.ALL_GROUPS:
            return True
        return group.origin in (Origin.NEWLY_INITIALIZED, Origin.ADAPTER)


def sample_gaussian(shape, var: float, rng: RngStream) -> np.ndarray:
    """N(0, var) elemanları; var = 0 tümü sıfır tensör verir."""
    if var < 0:
        raise ValueError(f"Varyans negatif olamaz: {var}")
    if var == 0:
        return np.zeros(shape)
    return rng.normal(np.sqrt(var), shape)


def lambda_ensemble(group: ParamGroup) -> float:
    return param_std(group)


def lambda_steps(group: ParamGroup, step: int) -> float:
    if step < 1:
        raise ValueError(f"lambda_steps için adım >= 1 olmalı: {step}")
    return param_std(group) / step


def _scale(group: ParamGroup, spec: NoiseSpec, step: int) -> float:
    if spec.scaling == NoiseScaling.STD_ONLY:
        return lambda_ensemble(group)
    if spec.scaling == NoiseScaling.STD_OVER_STEPS:
        return lambda_steps(group, step)
    return 1.0


def perturb(params: ParamSet, spec: NoiseSpec, step: int, rng: RngStream) -> ParamSet:
    """Hedeflenen gruplara w + z * lambda uygular, z ~ N(0, var_noise)."""
    if spec.scaling == NoiseScaling.STD_OVER_STEPS and step < 1:
        raise ValueError("StdOverSteps için adım >= 1 olmalı")
    updated = {}
    for group in params:
        if not spec.targets(group):
            continue
        if group.size < 2:
            raise DegenerateGroupError(f"Hedef grup '{group.name}' en az 2 eleman içermeli")
        scale = _scale(group, spec, step)
        noise = sample_gaussian(group.shape, spec.var_noise, rng)
        if scale == 0.0:
            logger.warning(f"'{group.name}' grubu sabit (std=0), gürültü etkisiz kaldı")
            continue
        updated[group.name] = group.tensor + noise * scale
    return params.replace(updated)


def perturb_input(batch: Batch, var: float, rng: RngStream) -> Batch:
    if var < 0:
        raise ValueError(f"Varyans negatif olamaz: {var}")
    if var == 0:
        return batch
    features = batch.features + sample_gaussian(batch.features.shape, var, rng)
    return Batch(features=features, labels=batch.labels, ids=batch.ids)
