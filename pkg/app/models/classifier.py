from dataclasses import dataclass
from enum import Enum
from typing import List, Optional, Tuple

from pydantic import BaseModel, conint, confloat, validator, root_validator

from app.exceptions import ShapeMismatchError
from app.models.params import Origin, ParamSet


class TuningMode(str, Enum):
    FULL = "full"
    HEAD_ONLY = "head_only"
    LORA = "lora"


class LoRAConfig(BaseModel):
    rank: conint(gt=0) = 1
    alpha: confloat(gt=0) = 1.0
    adapter_dropout: confloat(ge=0, lt=1) = 0.1

    class Config:
        allow_mutation = False


# Büyük ölçekli referans ayarı (110M parametreli kodlayıcılar için).
# Küçük MLP'lerde eğitilen pay ancak rank 1 ile %10'un altında kalır:
# 32 -> [64, 64] omurga, 4 sınıf için 484 / 6756 ~ %7.
REFERENCE_LORA = LoRAConfig(rank=64, alpha=64.0, adapter_dropout=0.1)


class ModelSpec(BaseModel):
    input_dim: conint(gt=0)
    hidden_dims: List[conint(gt=0)] = [32]
    num_classes: conint(ge=2)
    dropout_rate: confloat(ge=0, lt=1) = 0.3
    tuning_mode: TuningMode = TuningMode.FULL
    lora: Optional[LoRAConfig] = None

    class Config:
        allow_mutation = False

    @validator("hidden_dims")
    def check_hidden(cls, value):
        if not value:
            raise ValueError("En az bir omurga katmanı gerekli")
        return value

    @root_validator(skip_on_failure=True)
    def check_lora(cls, values):
        mode = values.get("tuning_mode")
        lora = values.get("lora")
        if mode == TuningMode.LORA:
            lora = lora or LoRAConfig()
            dims = [values["input_dim"]] + list(values["hidden_dims"])
            for fan_in, fan_out in zip(dims[:-1], dims[1:]):
                if lora.rank > min(fan_in, fan_out):
                    raise ValueError(
                        f"LoRA rank {lora.rank} > min(fan_in={fan_in}, fan_out={fan_out})"
                    )
            values["lora"] = lora
        return values

    @property
    def layer_dims(self) -> List[Tuple[int, int]]:
        """Omurga katmanlarının (fan_in, fan_out) çiftleri."""
        dims = [self.input_dim] + list(self.hidden_dims)
        return list(zip(dims[:-1], dims[1:]))

    @property
    def lora_scale(self) -> float:
        # rank kararlı ölçekleme: alpha / sqrt(rank)
        return self.lora.alpha / (self.lora.rank ** 0.5)


def backbone_weight(i: int) -> str:
    return f"backbone.{i}.weight"


def backbone_bias(i: int) -> str:
    return f"backbone.{i}.bias"


def lora_a(i: int) -> str:
    return f"backbone.{i}.lora_A"


def lora_b(i: int) -> str:
    return f"backbone.{i}.lora_B"


HEAD_WEIGHT = "head.weight"
HEAD_BIAS = "head.bias"


@dataclass(frozen=True)
class Model:
    """Donmuş omurga + yeni sınıflandırma başı (+ isteğe bağlı LoRA çarpanları).

    pretrained_snapshot yalnızca Pretrained gruplarının değişmeyen kopyasıdır;
    Mixout bu kopyaya doğru karıştırır.
    """

    spec: ModelSpec
    params: ParamSet
    pretrained_snapshot: ParamSet

    def __post_init__(self):
        self.params.select([Origin.PRETRAINED]).require_congruent(self.pretrained_snapshot)

    def with_params(self, params: ParamSet) -> "Model":
        if not self.params.is_congruent(params):
            raise ShapeMismatchError("Yeni parametreler modelle uyumlu değil")
        return Model(self.spec, params, self.pretrained_snapshot)
