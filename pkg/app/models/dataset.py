from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

Payload = Union[str, Tuple[float, ...]]


@dataclass(frozen=True)
class Sample:
    id: str
    payload: Payload
    label: int

    @property
    def is_text(self) -> bool:
        return isinstance(self.payload, str)


@dataclass(frozen=True)
class Dataset:
    """Örnekler + etiketler. Metin yükleri feature_dim boyutuna hash'lenir."""

    samples: Tuple[Sample, ...]
    num_classes: int
    feature_dim: int
    label_map: Dict[str, int] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "samples", tuple(self.samples))
        ids = [s.id for s in self.samples]
        if len(set(ids)) != len(ids):
            raise ValueError("Örnek kimlikleri benzersiz olmalı")
        for s in self.samples:
            if not 0 <= s.label < self.num_classes:
                raise ValueError(f"Geçersiz etiket {s.label} (örnek {s.id})")

    def __len__(self) -> int:
        return len(self.samples)

    @property
    def ids(self) -> List[str]:
        return [s.id for s in self.samples]

    @property
    def labels(self) -> np.ndarray:
        return np.array([s.label for s in self.samples], dtype=np.int64)

    @property
    def features(self) -> np.ndarray:
        cached = self.__dict__.get("_features")
        if cached is None:
            # döngüsel içe aktarımı önlemek için burada
            from app.services.data_service import vectorize_payload
            cached = np.stack([vectorize_payload(s.payload, self.feature_dim) for s in self.samples]) \
                if self.samples else np.zeros((0, self.feature_dim))
            cached.flags.writeable = False
            object.__setattr__(self, "_features", cached)
        return cached

    def class_counts(self) -> np.ndarray:
        return np.bincount(self.labels, minlength=self.num_classes)

    def subset(self, indices: Sequence[int]) -> "Dataset":
        return self.with_samples([self.samples[i] for i in indices])

    def with_samples(self, samples: Sequence[Sample]) -> "Dataset":
        return Dataset(tuple(samples), self.num_classes, self.feature_dim, dict(self.label_map))


@dataclass(frozen=True)
class Batch:
    features: np.ndarray
    labels: np.ndarray
    ids: Optional[Tuple[str, ...]] = None

    def __len__(self) -> int:
        return int(self.labels.shape[0])


# özgün kimlik -> sıralı parafraz yükleri
AugmentationMap = Dict[str, List[Payload]]
