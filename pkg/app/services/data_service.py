"""Veri bölme, K-shot örnekleme, metin hash'leme, sentetik veri ve artırma."""
import re
from typing import Dict, List, Tuple

import numpy as np

from app.config.logging import setup_logger
from app.exceptions import ConfigurationError, InsufficientSupportError
from app.models.dataset import AugmentationMap, Batch, Dataset, Payload, Sample
from app.services.rng_service import RngStream, derive_stream

logger = setup_logger(__name__)

FNV_OFFSET = 0xCBF29CE484222325
FNV_PRIME = 0x100000001B3
_MASK64 = (1 << 64) - 1
_TOKEN = re.compile(r"\w+", re.UNICODE)

MIN_PER_CLASS_FOR_SPLIT = 5


def fnv1a_64(text: str) -> int:
    h = FNV_OFFSET
    for byte in text.encode("utf-8"):
        h ^= byte
        h = (h * FNV_PRIME) & _MASK64
    return h


def hash_vectorize(text: str, dim: int) -> np.ndarray:
    """Küçük harfli kelime unigram + bigram sayıları, FNV-1a 64 ile hash'lenir.

    Kova = h mod dim, işaret = h'nin 63. biti (0 -> +1, 1 -> -1).
    Bigram anahtarı "w1 w2"dir. Sonuç L2 normalize edilir; boş metin sıfır vektör.
    """
    if dim < 2:
        raise ValueError(f"dim >= 2 olmalı: {dim}")
    vector = np.zeros(dim)
    tokens = _TOKEN.findall(text.lower())
    grams = tokens + [f"{a} {b}" for a, b in zip(tokens[:-1], tokens[1:])]
    for gram in grams:
        h = fnv1a_64(gram)
        vector[h % dim] += -1.0 if (h >> 63) & 1 else 1.0
    norm = np.linalg.norm(vector)
    if norm == 0:
        return vector
    return vector / norm


def vectorize_payload(payload: Payload, dim: int) -> np.ndarray:
    if isinstance(payload, str):
        return hash_vectorize(payload, dim)
    values = np.asarray(payload, dtype=np.float64)
    if values.shape != (dim,):
        raise ValueError(f"Özellik vektörü boyutu {values.shape}, beklenen ({dim},)")
    return values


def _class_indices(ds: Dataset) -> Dict[int, List[int]]:
    buckets: Dict[int, List[int]] = {c: [] for c in range(ds.num_classes)}
    for i, sample in enumerate(ds.samples):
        buckets[sample.label].append(i)
    return buckets


def split_80_20(ds: Dataset, seed: int) -> Tuple[Dataset, Dataset]:
    """Sınıflara göre katmanlı 80-20 bölme; her iki parça özgün sırayı korur."""
    rng = derive_stream(seed, "split")
    test_idx = []
    for label, indices in _class_indices(ds).items():
        if len(indices) < MIN_PER_CLASS_FOR_SPLIT:
            raise InsufficientSupportError(
                f"Sınıf {label}: {len(indices)} örnek, bölme için en az {MIN_PER_CLASS_FOR_SPLIT} gerekli"
            )
        n_test = int(np.floor(0.2 * len(indices) + 0.5))
        order = rng.permutation(len(indices))
        test_idx.extend(indices[j] for j in order[:n_test])
    test_set = set(test_idx)
    train_idx = [i for i in range(len(ds)) if i not in test_set]
    logger.info(f"80-20 bölme: {len(train_idx)} eğitim, {len(test_set)} test örneği")
    return ds.subset(train_idx), ds.subset(sorted(test_set))


def sample_shots(train: Dataset, k_per_class: int, rng: RngStream) -> Dataset:
    """Her sınıftan yerine koymadan tam k örnek seçer."""
    if k_per_class < 1:
        raise ValueError("k_per_class >= 1 olmalı")
    chosen = []
    for label, indices in _class_indices(train).items():
        if len(indices) < k_per_class:
            raise InsufficientSupportError(
                f"Sınıf {label}: {len(indices)} örnek var, {k_per_class} istendi"
            )
        picks = rng.choice(len(indices), k_per_class)
        chosen.extend(indices[j] for j in picks)
    return train.subset(sorted(chosen))


def split_pretext(pool: Dataset, frac: float, seed: int) -> Tuple[Dataset, Dataset]:
    """Omurga ön eğitimi için sınıflara göre katmanlı bir bölüm ayırır.

    Sonuç yalnızca havuza, frac'a ve tohuma bağlıdır; bütçe ya da örnek sayısı
    değişse de aynı (eğitim havuzu, pretext) çifti döner.
    """
    if not 0 <= frac < 1:
        raise ValueError(f"pretext oranı [0, 1) aralığında olmalı: {frac}")
    rng = derive_stream(seed, "pretext")
    held = []
    for indices in _class_indices(pool).values():
        n_held = int(np.floor(frac * len(indices) + 0.5))
        order = rng.permutation(len(indices))
        held.extend(indices[j] for j in order[:n_held])
    held_set = set(held)
    rest = [i for i in range(len(pool)) if i not in held_set]
    logger.info(f"Pretext bölümü: {len(held_set)} örnek ayrıldı, {len(rest)} örnek eğitim havuzunda")
    return pool.subset(rest), pool.subset(sorted(held_set))


def paraphrase_id(sample_id: str, j: int) -> str:
    return f"{sample_id}#p{j}"


def ids_without_paraphrases(ds: Dataset) -> List[str]:
    return [i for i in ds.ids if "#p" not in i]


def expand_with_augmentations(train: Dataset, aug: AugmentationMap, n: int) -> Dataset:
    """Her örneğin ardından ilk n parafrazını aynı etiketle ekler."""
    if n < 0:
        raise ValueError("n negatif olamaz")
    if n == 0:
        return train
    if len(ids_without_paraphrases(train)) != len(train):
        raise ConfigurationError("Veri kümesi zaten parafrazlarla genişletilmiş")
    samples = []
    for sample in train.samples:
        paraphrases = aug.get(sample.id)
        if paraphrases is None:
            raise ConfigurationError(f"'{sample.id}' için artırma bulunamadı")
        if len(paraphrases) < n:
            raise ConfigurationError(
                f"'{sample.id}' için {len(paraphrases)} parafraz var, {n} istendi"
            )
        samples.append(sample)
        for j, payload in enumerate(paraphrases[:n], start=1):
            samples.append(Sample(paraphrase_id(sample.id, j), payload, sample.label))
    return train.with_samples(samples)


def synth_blobs(
    num_classes: int,
    dim: int,
    n_per_class: int,
    center_scale: float,
    noise_std: float,
    label_flip_prob: float,
    seed: int,
) -> Dataset:
    """Gauss kümeleri; etiketler label_flip_prob olasılıkla başka bir sınıfa çevrilir."""
    if not 0 <= label_flip_prob < 0.5:
        raise ValueError("label_flip_prob [0, 0.5) aralığında olmalı")
    rng = derive_stream(seed, "synth")
    centers = rng.normal(center_scale, (num_classes, dim))
    samples = []
    idx = 0
    for label in range(num_classes):
        points = centers[label] + rng.normal(noise_std, (n_per_class, dim))
        flips = rng.uniform(n_per_class) < label_flip_prob
        others = rng.integers(1, num_classes, size=n_per_class)
        for point, flip, offset in zip(points, flips, others):
            observed = (label + int(offset)) % num_classes if flip else label
            samples.append(Sample(f"s{idx}", tuple(float(v) for v in point), observed))
            idx += 1
    return Dataset(tuple(samples), num_classes, dim)


def synth_augmentations(ds: Dataset, n: int, jitter_std: float, seed: int) -> AugmentationMap:
    """Özellik veri kümeleri için parafraz yerine geçen titreşimli kopyalar."""
    rng = derive_stream(seed, "augment")
    aug: AugmentationMap = {}
    for sample, vector in zip(ds.samples, ds.features):
        jitter = rng.normal(jitter_std, (n, ds.feature_dim))
        aug[sample.id] = [tuple(float(v) for v in vector + row) for row in jitter]
    return aug


def epoch_batches(train: Dataset, batch_size: int, rng_data_order: RngStream) -> List[Batch]:
    """Bir epok için karıştırılmış yığınlar; son yığın kısa olabilir."""
    if batch_size < 1:
        raise ValueError("batch_size >= 1 olmalı")
    order = rng_data_order.permutation(len(train))
    features = train.features
    labels = train.labels
    ids = train.ids
    return [
        Batch(
            features=features[chunk],
            labels=labels[chunk],
            ids=tuple(ids[i] for i in chunk),
        )
        for chunk in (order[start:start + batch_size] for start in range(0, len(order), batch_size))
    ]


def steps_per_epoch(n_samples: int, batch_size: int) -> int:
    return -(-n_samples // batch_size)


