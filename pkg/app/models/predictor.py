from dataclasses import dataclass
from typing import Tuple, Union

from app.exceptions import CongruenceError
from app.models.params import ParamSet


@dataclass(frozen=True)
class SingleModel:
    params: ParamSet


@dataclass(frozen=True)
class VotingEnsemble:
    members: Tuple[ParamSet, ...]

    def __post_init__(self):
        members = tuple(self.members)
        if len(members) < 2:
            raise ValueError("Oylama topluluğu en az 2 üye içermeli")
        for other in members[1:]:
            if not members[0].is_congruent(other):
                raise CongruenceError("Topluluk üyeleri uyumlu değil")
        object.__setattr__(self, "members", members)


Predictor = Union[SingleModel, VotingEnsemble]
