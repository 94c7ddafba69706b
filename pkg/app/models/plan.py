from dataclasses import dataclass
from enum import Enum
from typing import Tuple, Union

from app.exceptions import PlanError


class PlanVariant(str, Enum):
    DE = "de"
    NI = "ni"
    DENI = "deni"


class LambdaKind(str, Enum):
    STEPS = "steps"        # lambda_steps, gürültülü enterpolasyon döngüleri
    ENSEMBLE = "ensemble"  # lambda_ensemble, son topluluk


@dataclass(frozen=True)
class TrainSingle:
    start: int
    end: int


@dataclass(frozen=True)
class PerturbSpawn:
    step: int
    lambda_kind: LambdaKind


@dataclass(frozen=True)
class TrainParallel:
    start: int
    end: int
    members: int


@dataclass(frozen=True)
class Aggregate:
    step: int


@dataclass(frozen=True)
class FinalEnsemble:
    step: int


PhaseEvent = Union[TrainSingle, PerturbSpawn, TrainParallel, Aggregate, FinalEnsemble]


@dataclass(frozen=True)
class PhasePlan:
    events: Tuple[PhaseEvent, ...]
    total_steps: int

    def __post_init__(self):
        object.__setattr__(self, "events", tuple(self.events))
        cursor = 0
        for event in self.events:
            if isinstance(event, (TrainSingle, TrainParallel)):
                if event.start != cursor or event.end <= event.start:
                    raise PlanError(f"Plan olayları bitişik değil: {event} (imleç {cursor})")
                cursor = event.end
            elif event.step != cursor:
                raise PlanError(f"Nokta olayı eğitim sınırında değil: {event} (imleç {cursor})")
        if cursor != self.total_steps:
            raise PlanError(f"Plan {cursor}. adımda bitiyor, beklenen {self.total_steps}")

    @property
    def member_steps(self) -> int:
        total = 0
        for event in self.events:
            if isinstance(event, TrainSingle):
                total += event.end - event.start
            elif isinstance(event, TrainParallel):
                total += (event.end - event.start) * event.members
        return total

    @property
    def cycles(self) -> int:
        return sum(
            1 for e in self.events
            if isinstance(e, PerturbSpawn) and e.lambda_kind == LambdaKind.STEPS
        )

    def event_steps(self) -> Tuple[int, ...]:
        """Bozma ve birleştirme olaylarının gerçekleştiği adımlar."""
        return tuple(sorted({
            e.step for e in self.events if isinstance(e, (PerturbSpawn, Aggregate))
        }))
