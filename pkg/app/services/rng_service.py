"""(seed, etiket) çiftinden türetilen, sayaç tabanlı rastgele sayı akışları.

Belgelenmiş etiketler: "init", "data_order", "model_noise",
"mitigation_noise"; topluluk üyeleri için "<etiket>:member:<k>".
"""
import hashlib
from typing import Optional

import numpy as np

from app.config.logging import setup_logger

logger = setup_logger(__name__)

INIT = "init"
DATA_ORDER = "data_order"
MODEL_NOISE = "model_noise"
MITIGATION_NOISE = "mitigation_noise"


class RngStream:
    """Tek sahipli rastgele akış; Philox (sayaç tabanlı) üreticisini sarar."""

    def __init__(self, seed: int, label: str):
        self.seed = int(seed)
        self.label = label
        self.generator = np.random.Generator(np.random.Philox(key=stream_key(seed, label)))

    def normal(self, scale: float, shape) -> np.ndarray:
        return self.generator.normal(0.0, scale, size=shape)

    def uniform(self, shape=None) -> np.ndarray:
        return self.generator.random(size=shape)

    def bernoulli(self, p: float, shape) -> np.ndarray:
        """1 olasılığı p olan 0/1 maskesi (float64)."""
        return (self.generator.random(size=shape) < p).astype(np.float64)

    def permutation(self, n: int) -> np.ndarray:
        return self.generator.permutation(n)

    def choice(self, n: int, size: int) -> np.ndarray:
        return self.generator.choice(n, size=size, replace=False)

    def integers(self, low: int, high: int, size=None):
        return self.generator.integers(low, high, size=size)

    def __repr__(self) -> str:
        return f"RngStream(seed={self.seed}, label={self.label!r})"


def stream_key(seed: int, label: str) -> int:
    """(seed, etiket) için 128 bitlik Philox anahtarı."""
    digest = hashlib.blake2b(
        f"{int(seed)}\x1f{label}".encode("utf-8"), digest_size=16
    ).digest()
    return int.from_bytes(digest, "little")


def member_label(label: str, member: Optional[int]) -> str:
    """0. üye temel etiketi kullanır, böylece tek üyeli topluluk Default ile aynıdır."""
    if not member:
        return label
    return f"{label}:member:{member}"


def derive_stream(seed: int, label: str) -> RngStream:
    if not label:
        raise ValueError("Akış etiketi boş olamaz")
    return RngStream(seed, label)
