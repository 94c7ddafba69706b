"""Düzgün ağırlık enterpolasyonu ve sert oylama."""
from typing import Sequence

import numpy as np

from app.config.logging import setup_logger
from app.exceptions import ShapeMismatchError
from app.models.classifier import ModelSpec
from app.models.params import ParamSet
from app.models.predictor import Predictor, SingleModel, VotingEnsemble
from app.services.model_service import model_from_params, predict_labels
from app.services.param_service import mean_of

logger = setup_logger(__name__)


def interpolate(members: Sequence[ParamSet]) -> ParamSet:
    """Eleman bazında aritmetik ortalama (sıralı, dengelenmiş toplam)."""
    if not members:
        raise ValueError("Enterpolasyon için en az bir üye gerekli")
    return mean_of(list(members))


def hard_vote(per_member_labels, num_classes: int) -> np.ndarray:
    """Her örnek için en çok oy alan sınıf; eşitlikte en küçük indeks."""
    votes = np.asarray(per_member_labels, dtype=np.int64)
    if votes.ndim != 2 or votes.shape[0] == 0:
        raise ValueError("Oylama için en az bir üye gerekli")
    if votes.size and (votes.min() < 0 or votes.max() >= num_classes):
        raise ValueError(f"Etiketler [0, {num_classes}) aralığında olmalı")
    counts = np.zeros((votes.shape[1], num_classes), dtype=np.int64)
    for row in votes:
        counts[np.arange(votes.shape[1]), row] += 1
    return np.argmax(counts, axis=1)


def predict(predictor: Predictor, model_spec: ModelSpec, features) -> np.ndarray:
    features = np.asarray(features, dtype=np.float64)
    if features.ndim != 2 or features.shape[1] != model_spec.input_dim:
        raise ShapeMismatchError(
            f"Özellik genişliği {features.shape[-1]}, beklenen {model_spec.input_dim}"
        )
    if isinstance(predictor, SingleModel):
        return predict_labels(model_from_params(model_spec, predictor.params), features)
    if isinstance(predictor, VotingEnsemble):
        labels = [
            predict_labels(model_from_params(model_spec, member), features)
            for member in predictor.members
        ]
        return hard_vote(np.stack(labels), model_spec.num_classes)
    raise TypeError(f"Bilinmeyen tahminci türü: {type(predictor).__name__}")
