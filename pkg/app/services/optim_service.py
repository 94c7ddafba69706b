"""Adam / AdamW adımları ve öğrenme oranı planları."""
from dataclasses import dataclass, field, replace
from typing import Dict, Mapping, Tuple

import numpy as np

from app.config.logging import setup_logger
from app.exceptions import NonFiniteGradientError, ScheduleError
from app.models.params import ParamSet
from app.models.training import OptimizerKind, ScheduleKind, ScheduleSpec, TrainConfig

logger = setup_logger(__name__)


@dataclass
class OptimizerState:
    kind: OptimizerKind = OptimizerKind.ADAM
    bias_correction: bool = False
    weight_decay: float = 0.0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step_count: int = 0
    first_moment: Dict[str, np.ndarray] = field(default_factory=dict)
    second_moment: Dict[str, np.ndarray] = field(default_factory=dict)

    def copy(self) -> "OptimizerState":
        """Adım sayacı ve momentler dahil bağımsız kopya."""
        return replace(
            self,
            first_moment={k: v.copy() for k, v in self.first_moment.items()},
            second_moment={k: v.copy() for k, v in self.second_moment.items()},
        )


def new_optimizer_state(train_cfg: TrainConfig) -> OptimizerState:
    return OptimizerState(
        kind=train_cfg.optimizer,
        bias_correction=train_cfg.bias_correction,
        weight_decay=train_cfg.weight_decay if train_cfg.optimizer == OptimizerKind.ADAMW else 0.0,
        beta1=train_cfg.beta1,
        beta2=train_cfg.beta2,
        eps=train_cfg.eps,
    )


def lr_at(schedule: ScheduleSpec, step: int) -> float:
    if step < 0 or step > schedule.total_steps:
        raise ScheduleError(f"Adım {step}, [0, {schedule.total_steps}] aralığının dışında")
    if schedule.kind == ScheduleKind.CONSTANT:
        return schedule.base_lr
    warmup = schedule.warmup_frac * schedule.total_steps
    if step <= warmup:
        return schedule.base_lr * step / warmup
    return schedule.base_lr * (schedule.total_steps - step) / (schedule.total_steps - warmup)


def optimizer_step(
    state: OptimizerState,
    params: ParamSet,
    grads: Mapping[str, np.ndarray],
    lr: float,
) -> Tuple[ParamSet, OptimizerState]:
    """Eğitilebilir gruplar için bir Adam/AdamW adımı; yeni parametre ve durum döndürür."""
    trainable = [g for g in params if g.trainable]
    for group in trainable:
        grad = grads.get(group.name)
        if grad is None or np.shape(grad) != group.shape:
            raise ValueError(f"'{group.name}' için uyumlu gradyan yok")
        if not np.all(np.isfinite(grad)):
            raise NonFiniteGradientError(group.name)

    t = state.step_count + 1
    b1, b2 = state.beta1, state.beta2
    first, second, updated = {}, {}, {}
    for group in trainable:
        grad = np.asarray(grads[group.name], dtype=np.float64)
        m = b1 * state.first_moment.get(group.name, np.zeros(group.shape)) + (1.0 - b1) * grad
        v = b2 * state.second_moment.get(group.name, np.zeros(group.shape)) + (1.0 - b2) * grad * grad
        first[group.name], second[group.name] = m, v
        if state.bias_correction:
            m = m / (1.0 - b1 ** t)
            v = v / (1.0 - b2 ** t)
        weight = group.tensor
        if state.kind == OptimizerKind.ADAMW and state.weight_decay:
            # ayrıştırılmış ağırlık azaltımı, eski ağırlık üzerinden
            weight = weight - lr * state.weight_decay * weight
        updated[group.name] = weight - lr * m / (np.sqrt(v) + state.eps)

    new_state = OptimizerState(
        kind=state.kind,
        bias_correction=state.bias_correction,
        weight_decay=state.weight_decay,
        beta1=b1,
        beta2=b2,
        eps=state.eps,
        step_count=t,
        first_moment=first,
        second_moment=second,
    )
    return params.replace(updated), new_state
