"""Azaltma stratejileri için yapılandırmalar (kind alanına göre ayrışan birleşim)."""
import math
from typing import Annotated, Any, Dict, Literal, Optional, Tuple, Union

from pydantic import BaseModel, Field, confloat, conint, parse_obj_as, root_validator

from app.services.noise_service import NoiseTarget


class _StrategyBase(BaseModel):
    name: Optional[str] = None

    class Config:
        allow_mutation = False
        extra = "forbid"

    @property
    def strategy_id(self) -> str:
        return self.name or self.default_id()

    def default_id(self) -> str:
        return self.kind


class DefaultStrategy(_StrategyBase):
    kind: Literal["default"] = "default"


class AllDataStrategy(_StrategyBase):
    """Default tarifi, örneklenmiş bütçe yerine tüm eğitim bölümünde."""

    kind: Literal["all_data"] = "all_data"


class BestPracticesStrategy(_StrategyBase):
    kind: Literal["best_practices"] = "best_practices"


class EnsembleStrategy(_StrategyBase):
    kind: Literal["ensemble"] = "ensemble"
    size: conint(ge=1) = 10

    def default_id(self) -> str:
        return f"ensemble-{self.size}"


class NoiseInputStrategy(_StrategyBase):
    kind: Literal["noise_input"] = "noise_input"
    var: confloat(ge=0) = 0.15
    every: conint(ge=1) = 25


class NoiseWeightsStrategy(_StrategyBase):
    kind: Literal["noise_weights"] = "noise_weights"
    var: confloat(gt=0) = 0.15
    every: conint(ge=1) = 25
    target: NoiseTarget = NoiseTarget.NEWLY_INITIALIZED_AND_ADAPTER


class SWAStrategy(_StrategyBase):
    kind: Literal["swa"] = "swa"
    start_frac: confloat(ge=0, lt=1) = 0.25


class MixoutStrategy(_StrategyBase):
    kind: Literal["mixout"] = "mixout"
    p: confloat(ge=0, lt=1) = 0.9


AUGMENT_EPOCH_MULTIPLIER = 1.2


class AugmentNStrategy(_StrategyBase):
    kind: Literal["augment_n"] = "augment_n"
    n: conint(ge=1) = 1
    epochs_multiplier: confloat(gt=0) = AUGMENT_EPOCH_MULTIPLIER

    def default_id(self) -> str:
        return f"augment-{self.n}"


class DeniConfig(BaseModel):
    """Gecikmeli topluluk + gürültülü enterpolasyon hiperparametreleri.

    ensemble_size TOPLAM üye sayısıdır: bozulmamış M + ensemble_size - 1 kopya.
    steps_noisy / steps_regular mutlak adımlardır; bir döngü gürültü penceresine
    sığmazsa reference_steps uzunluğundaki bir eğitime göre oranlanıp kısaltılır
    (varsayılanlar 1250 adımın %10'u). reference_steps=None kısaltmayı kapatır.
    """

    var_noise: confloat(ge=0) = 0.15
    noise_start_frac: float = 0.3
    noise_end_frac: float = 0.6
    ensemble_start_frac: float = 0.9
    steps_noisy: conint(gt=0) = 125
    steps_regular: conint(gt=0) = 125
    reference_steps: Optional[conint(gt=0)] = 1250
    ensemble_size: conint(ge=2) = 10
    scaled: bool = True
    noise_target: NoiseTarget = NoiseTarget.NEWLY_INITIALIZED_AND_ADAPTER

    class Config:
        allow_mutation = False
        extra = "forbid"

    @root_validator(skip_on_failure=True)
    def check_fractions(cls, values):
        start = values["noise_start_frac"]
        end = values["noise_end_frac"]
        ensemble = values["ensemble_start_frac"]
        if not 0 < start < end <= ensemble < 1:
            raise ValueError(
                "0 < noise_start_frac < noise_end_frac <= ensemble_start_frac < 1 olmalı "
                f"(gelen {start}, {end}, {ensemble})"
            )
        return values

    def deni_params(self) -> "DeniConfig":
        return DeniConfig(**{k: getattr(self, k) for k in DeniConfig.__fields__})

    def rescaled_steps(self, total_steps: int) -> Tuple[int, int]:
        """total_steps / reference_steps oranında kısaltılmış (steps_noisy, steps_regular), en az 1."""
        if self.reference_steps is None:
            return self.steps_noisy, self.steps_regular
        ratio = total_steps / self.reference_steps
        return (
            max(1, math.floor(self.steps_noisy * ratio + 0.5)),
            max(1, math.floor(self.steps_regular * ratio + 0.5)),
        )


class DEStrategy(DeniConfig, _StrategyBase):
    kind: Literal["de"] = "de"


class NIStrategy(DeniConfig, _StrategyBase):
    kind: Literal["ni"] = "ni"


class DENIStrategy(DeniConfig, _StrategyBase):
    kind: Literal["deni"] = "deni"


class DENIALSStrategy(DeniConfig, _StrategyBase):
    kind: Literal["denials"] = "denials"
    n: conint(ge=1) = 1


StrategyConfig = Annotated[
    Union[
        DefaultStrategy,
        AllDataStrategy,
        BestPracticesStrategy,
        EnsembleStrategy,
        NoiseInputStrategy,
        NoiseWeightsStrategy,
        SWAStrategy,
        MixoutStrategy,
        AugmentNStrategy,
        DEStrategy,
        NIStrategy,
        DENIStrategy,
        DENIALSStrategy,
    ],
    Field(discriminator="kind"),
]

KINDS = (
    "default", "all_data", "best_practices", "ensemble", "noise_input", "noise_weights",
    "swa", "mixout", "augment_n", "de", "ni", "deni", "denials",
)


def normalize_strategy_dict(raw: Any) -> Any:
    """{"deni": {...}} biçimini {"kind": "deni", ...} biçimine çevirir."""
    if isinstance(raw, str):
        return {"kind": raw}
    if isinstance(raw, dict) and "kind" not in raw and len(raw) == 1:
        (kind, body), = raw.items()
        if kind in KINDS:
            return {"kind": kind, **(body or {})}
    return raw


def parse_strategy(raw: Union[Dict, str]) -> StrategyConfig:
    return parse_obj_as(StrategyConfig, normalize_strategy_dict(raw))
