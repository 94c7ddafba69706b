from enum import Enum

from pydantic import BaseModel, confloat, conint, validator


class ScheduleKind(str, Enum):
    CONSTANT = "constant"
    WARMUP_LINEAR = "warmup_linear"


class OptimizerKind(str, Enum):
    ADAM = "adam"
    ADAMW = "adamw"


class ScheduleSpec(BaseModel):
    kind: ScheduleKind = ScheduleKind.CONSTANT
    base_lr: confloat(gt=0) = 1e-3
    total_steps: conint(gt=0)
    warmup_frac: float = 0.1

    class Config:
        allow_mutation = False

    @validator("warmup_frac")
    def check_warmup(cls, value, values):
        if values.get("kind") == ScheduleKind.WARMUP_LINEAR and not 0 < value < 1:
            raise ValueError("warmup_frac (0, 1) aralığında olmalı")
        return value


class TrainConfig(BaseModel):
    """Default tarifi: 10 epok, 8'lik yığın, Adam (sapma düzeltmesiz), sabit öğrenme oranı."""

    epochs: conint(gt=0) = 10
    batch_size: conint(gt=0) = 8
    learning_rate: confloat(gt=0) = 1e-3
    schedule: ScheduleKind = ScheduleKind.CONSTANT
    warmup_frac: confloat(gt=0, lt=1) = 0.1
    optimizer: OptimizerKind = OptimizerKind.ADAM
    bias_correction: bool = False
    weight_decay: confloat(ge=0) = 0.0
    beta1: confloat(gt=0, lt=1) = 0.9
    beta2: confloat(gt=0, lt=1) = 0.999
    eps: confloat(gt=0) = 1e-8

    class Config:
        allow_mutation = False

    def schedule_for(self, total_steps: int) -> ScheduleSpec:
        return ScheduleSpec(
            kind=self.schedule,
            base_lr=self.learning_rate,
            total_steps=total_steps,
            warmup_frac=self.warmup_frac,
        )

    def best_practices(self) -> "TrainConfig":
        """AdamW + sapma düzeltmesi + %10 ısınmalı doğrusal plan + 2 kat epok."""
        return self.copy(update={
            "optimizer": OptimizerKind.ADAMW,
            "bias_correction": True,
            "weight_decay": self.weight_decay or BEST_PRACTICES_WEIGHT_DECAY,
            "schedule": ScheduleKind.WARMUP_LINEAR,
            "warmup_frac": 0.1,
            "epochs": self.epochs * 2,
        })


BEST_PRACTICES_WEIGHT_DECAY = 0.01

# 110M parametreli kodlayıcılar için kullanılan değerler; masaüstü MLP'lerde 1e-3 kullanılır
REFERENCE_TRAIN_CONFIG = TrainConfig(learning_rate=1e-5)
