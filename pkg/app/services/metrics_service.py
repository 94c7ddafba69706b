"""Makro F1, tohum özeti, Mann-Whitney U ve Levene (Brown-Forsythe) testleri."""
from collections import namedtuple
from itertools import combinations
from typing import Optional, Sequence

import numpy as np
from scipy.special import betainc
from scipy.stats import norm, rankdata

from app.config.logging import setup_logger
from app.exceptions import InsufficientRunsError
from app.models.results import BoxplotStats, ExperimentReport, RunResult

logger = setup_logger(__name__)

# her iki grup da bu boyutta veya daha küçükse kesin dağılım kullanılır
EXACT_MAX_N = 8

MannWhitneyResult = namedtuple("MannWhitneyResult", ("U", "p"))
LeveneResult = namedtuple("LeveneResult", ("W", "p"))


def f1_macro(preds, gold, num_classes: int) -> float:
    """Sınıflar üzerinden ağırlıksız F1 ortalaması; P+R=0 olan sınıfın F1'i 0."""
    preds = np.asarray(preds, dtype=np.int64)
    gold = np.asarray(gold, dtype=np.int64)
    if preds.shape != gold.shape:
        raise ValueError(f"Uzunluklar farklı: {preds.shape} / {gold.shape}")
    for arr in (preds, gold):
        if arr.size and (arr.min() < 0 or arr.max() >= num_classes):
            raise ValueError(f"Etiketler [0, {num_classes}) aralığında olmalı")
    confusion = np.bincount(gold * num_classes + preds, minlength=num_classes ** 2)
    confusion = confusion.reshape(num_classes, num_classes)
    tp = np.diag(confusion).astype(np.float64)
    predicted = confusion.sum(axis=0)
    actual = confusion.sum(axis=1)
    # 2PR/(P+R) = 2TP / (tahmin + gerçek)
    denom = predicted + actual
    scores = np.divide(2.0 * tp, denom, out=np.zeros(num_classes), where=denom > 0)
    return float(scores.mean())


def summarize(results: Sequence[RunResult], normalized_cost: Optional[float] = None) -> ExperimentReport:
    if len(results) < 2:
        raise InsufficientRunsError(f"Standart sapma için en az 2 koşu gerekli, {len(results)} var")
    ids = {r.strategy_id for r in results}
    if len(ids) != 1:
        raise ValueError(f"Özet tek bir stratejiye ait olmalı: {sorted(ids)}")
    scores = np.array([r.f1_macro for r in results], dtype=np.float64)
    return ExperimentReport(
        strategy_id=ids.pop(),
        results=list(results),
        mean=float(scores.mean()),
        std=float(scores.std(ddof=1)),
        normalized_cost=normalized_cost,
    )


def _exact_two_sided(ranks: np.ndarray, n1: int, u_obs: float) -> float:
    n = len(ranks)
    combos = np.array(list(combinations(range(n), n1)), dtype=np.int64)
    u_all = ranks[combos].sum(axis=1) - n1 * (n1 + 1) / 2.0
    center = n1 * (n - n1) / 2.0
    observed = abs(u_obs - center)
    extreme = np.abs(u_all - center) >= observed - 1e-9
    return float(extreme.mean())


def mann_whitney_u(a: Sequence[float], b: Sequence[float]) -> MannWhitneyResult:
    """İki yönlü test; U, a grubuna aittir."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    n1, n2 = len(a), len(b)
    if n1 == 0 or n2 == 0:
        raise ValueError("Her iki grup da en az bir değer içermeli")
    ranks = rankdata(np.concatenate([a, b]))
    u = float(ranks[:n1].sum() - n1 * (n1 + 1) / 2.0)

    if n1 <= EXACT_MAX_N and n2 <= EXACT_MAX_N:
        p = _exact_two_sided(ranks, n1, u)
    else:
        n = n1 + n2
        _, counts = np.unique(ranks, return_counts=True)
        tie_term = float((counts ** 3 - counts).sum())
        sd = np.sqrt(n1 * n2 / 12.0 * ((n + 1) - tie_term / (n * (n - 1))))
        if sd == 0:
            p = 1.0
        else:
            z = (abs(u - n1 * n2 / 2.0) - 0.5) / sd
            p = float(2.0 * norm.sf(z))
    return MannWhitneyResult(u, float(np.clip(p, 0.0, 1.0)))


def levene_test(a: Sequence[float], b: Sequence[float]) -> LeveneResult:
    """Medyan merkezli Levene; W ~ F(1, N-2)."""
    groups = [np.asarray(a, dtype=np.float64), np.asarray(b, dtype=np.float64)]
    if any(len(g) < 3 for g in groups):
        raise InsufficientRunsError("Levene testi için her grupta en az 3 değer gerekli")
    deviations = [np.abs(g - np.median(g)) for g in groups]
    n_total = sum(len(d) for d in deviations)
    grand = np.concatenate(deviations).mean()
    between = sum(len(d) * (d.mean() - grand) ** 2 for d in deviations)
    within = sum(((d - d.mean()) ** 2).sum() for d in deviations)
    d1, d2 = 1, n_total - 2
    if within == 0:
        if between == 0:
            return LeveneResult(0.0, 1.0)
        return LeveneResult(float("inf"), 0.0)
    w = float(d2 * between / (d1 * within))
    p = float(betainc(d2 / 2.0, d1 / 2.0, d2 / (d2 + d1 * w)))
    return LeveneResult(w, float(np.clip(p, 0.0, 1.0)))


def boxplot_stats(strategy_id: str, scores: Sequence[float]) -> BoxplotStats:
    """Çeyrekler ve 1.5*IQR dışındaki aykırı değerler."""
    values = np.sort(np.asarray(scores, dtype=np.float64))
    if values.size == 0:
        raise ValueError("Kutu grafiği için en az bir değer gerekli")
    q1, median, q3 = np.percentile(values, [25, 50, 75])
    iqr = q3 - q1
    low, high = q1 - 1.5 * iqr, q3 + 1.5 * iqr
    inside = values[(values >= low) & (values <= high)]
    outliers = values[(values < low) | (values > high)]
    return BoxplotStats(
        strategy_id=strategy_id,
        minimum=float(inside.min()),
        q1=float(q1),
        median=float(median),
        q3=float(q3),
        maximum=float(inside.max()),
        outliers=[float(v) for v in outliers],
    )
