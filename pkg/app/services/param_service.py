from typing import Sequence

import numpy as np

from app.config.logging import setup_logger
from app.exceptions import CongruenceError, DegenerateGroupError
from app.models.params import ParamGroup, ParamSet

logger = setup_logger(__name__)


def param_std(group: ParamGroup) -> float:
    """Grubun popülasyon standart sapması (bölen = eleman sayısı)."""
    if group.size < 2:
        raise DegenerateGroupError(
            f"'{group.name}' grubunda {group.size} eleman var, en az 2 gerekli"
        )
    data = group.tensor.ravel()
    mean = data.mean()
    return float(np.sqrt(np.mean((data - mean) ** 2)))


def axpy(dst: ParamSet, delta: ParamSet, scale: float) -> ParamSet:
    """dst + scale * delta; girdiler değişmez."""
    dst.require_congruent(delta)
    return dst.replace({
        g.name: g.tensor + scale * d.tensor
        for g, d in zip(dst.groups, delta.groups)
    })


def compensated_mean(arrays: Sequence[np.ndarray]) -> np.ndarray:
    """Eleman bazında ortalama; sıralı Kahan toplamı ile permütasyondan bağımsız."""
    if not arrays:
        raise ValueError("Ortalama için en az bir dizi gerekli")
    stacked = np.sort(np.stack([np.asarray(a, dtype=np.float64) for a in arrays]), axis=0)
    total = np.zeros(stacked.shape[1:])
    carry = np.zeros(stacked.shape[1:])
    for row in stacked:
        y = row - carry
        t = total + y
        carry = (t - total) - y
        total = t
    return total / len(arrays)


def mean_of(members: Sequence[ParamSet]) -> ParamSet:
    if not members:
        raise ValueError("Boş üye listesi")
    first = members[0]
    for other in members[1:]:
        if not first.is_congruent(other):
            raise CongruenceError("Ortalaması alınacak ParamSet'ler uyumlu değil")
    return first.replace({
        name: compensated_mean([m[name].tensor for m in members])
        for name in first.names
    })
