from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, Iterator, Mapping, Optional, Tuple

import numpy as np

from app.exceptions import CongruenceError, NonFiniteValueError


class Origin(str, Enum):
    PRETRAINED = "pretrained"
    NEWLY_INITIALIZED = "newly_initialized"
    ADAPTER = "adapter"


# ikili kapsayıcıda köken tek bayt olarak yazılır
ORIGIN_CODES: Dict[Origin, int] = {
    Origin.PRETRAINED: 0,
    Origin.NEWLY_INITIALIZED: 1,
    Origin.ADAPTER: 2,
}


def as_tensor(values) -> np.ndarray:
    """Değerleri salt okunur, float64 bir kopyaya çevirir."""
    arr = np.array(values, dtype=np.float64, copy=True)
    if not np.all(np.isfinite(arr)):
        raise NonFiniteValueError("Tensörde NaN/Inf değer bulundu")
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class ParamGroup:
    name: str
    tensor: np.ndarray
    origin: Origin
    trainable: bool = True

    def __post_init__(self):
        object.__setattr__(self, "tensor", as_tensor(self.tensor))
        object.__setattr__(self, "origin", Origin(self.origin))

    @property
    def shape(self) -> Tuple[int, ...]:
        return tuple(self.tensor.shape)

    @property
    def size(self) -> int:
        return int(self.tensor.size)

    def with_tensor(self, tensor) -> "ParamGroup":
        return ParamGroup(self.name, tensor, self.origin, self.trainable)

    def with_trainable(self, trainable: bool) -> "ParamGroup":
        return ParamGroup(self.name, self.tensor, self.origin, trainable)


@dataclass(frozen=True)
class ParamSet:
    """Sıralı, adlandırılmış parametre grupları.

    Değiştirilemez bir değerdir; tüm işlemler yeni bir ParamSet döndürür.
    İki küme, grup adları, şekilleri ve kökenleri sırayla eşleşiyorsa uyumludur.
    """

    groups: Tuple[ParamGroup, ...] = field(default_factory=tuple)

    def __post_init__(self):
        groups = tuple(self.groups)
        names = [g.name for g in groups]
        if len(set(names)) != len(names):
            raise CongruenceError(f"Grup adları benzersiz olmalı: {names}")
        object.__setattr__(self, "groups", groups)
        object.__setattr__(self, "_index", {g.name: i for i, g in enumerate(groups)})

    def __iter__(self) -> Iterator[ParamGroup]:
        return iter(self.groups)

    def __len__(self) -> int:
        return len(self.groups)

    def __contains__(self, name: str) -> bool:
        return name in self._index

    def __getitem__(self, name: str) -> ParamGroup:
        try:
            return self.groups[self._index[name]]
        except KeyError:
            raise KeyError(f"Parametre grubu bulunamadı: {name}")

    def get(self, name: str) -> Optional[ParamGroup]:
        idx = self._index.get(name)
        return None if idx is None else self.groups[idx]

    @property
    def names(self) -> Tuple[str, ...]:
        return tuple(g.name for g in self.groups)

    @property
    def num_elements(self) -> int:
        return sum(g.size for g in self.groups)

    def trainable_names(self) -> Tuple[str, ...]:
        return tuple(g.name for g in self.groups if g.trainable)

    def is_congruent(self, other: "ParamSet") -> bool:
        if len(self.groups) != len(other.groups):
            return False
        return all(
            a.name == b.name and a.shape == b.shape and a.origin == b.origin
            for a, b in zip(self.groups, other.groups)
        )

    def require_congruent(self, other: "ParamSet") -> None:
        if not self.is_congruent(other):
            raise CongruenceError(
                f"ParamSet'ler uyumlu değil: {self.names} / {other.names}"
            )

    def replace(self, tensors: Mapping[str, np.ndarray]) -> "ParamSet":
        """Verilen grupların tensörlerini değiştirerek yeni bir küme döndürür."""
        unknown = set(tensors) - set(self._index)
        if unknown:
            raise KeyError(f"Bilinmeyen gruplar: {sorted(unknown)}")
        return ParamSet(tuple(
            g.with_tensor(tensors[g.name]) if g.name in tensors else g
            for g in self.groups
        ))

    def select(self, origins) -> "ParamSet":
        origins = {Origin(o) for o in origins}
        return ParamSet(tuple(g for g in self.groups if g.origin in origins))

    def tensors(self) -> Dict[str, np.ndarray]:
        return {g.name: g.tensor for g in self.groups}

    def bitwise_equal(self, other: "ParamSet") -> bool:
        return self.is_congruent(other) and all(
            a.tensor.tobytes() == b.tensor.tobytes()
            for a, b in zip(self.groups, other.groups)
        )
