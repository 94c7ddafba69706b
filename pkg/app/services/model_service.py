"""Küçük MLP sınıflandırıcılar: ileri/geri geçiş, dropout, Mixout ve LoRA.

Ağırlıklar (fan_out, fan_in) düzenindedir: z = h @ W.T + b.
LoRA etkin ağırlığı: W_eff = W + (alpha / sqrt(rank)) * B @ A.
"""
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Optional, Tuple

import numpy as np

from app.config.logging import setup_logger
from app.exceptions import ShapeMismatchError, StaleCacheError
from app.models.classifier import (
    HEAD_BIAS, HEAD_WEIGHT, Model, ModelSpec, TuningMode,
    backbone_bias, backbone_weight, lora_a, lora_b,
)
from app.models.dataset import Batch
from app.models.params import Origin, ParamGroup, ParamSet
from app.services.rng_service import RngStream

logger = setup_logger(__name__)

HEAD_INIT_STD = 0.02
LORA_INIT_STD = 0.02

# grup adı -> gradyan; ParamSet ile aynı sıra ve şekiller
Gradients = Dict[str, np.ndarray]


class Regularizer(str, Enum):
    DROPOUT = "dropout"
    MIXOUT = "mixout"


@dataclass(frozen=True)
class EvalMode:
    pass


@dataclass(frozen=True)
class TrainMode:
    rng_dropout: RngStream
    regularizer: Regularizer = Regularizer.DROPOUT
    mixout_p: float = 0.0


EVAL = EvalMode()


@dataclass
class _LayerCache:
    inputs: np.ndarray
    pre_activation: np.ndarray
    weight: np.ndarray                      # mixout sonrası temel ağırlık
    mixout_factor: Optional[np.ndarray] = None
    bias_mixout_factor: Optional[np.ndarray] = None
    lora_inputs: Optional[np.ndarray] = None  # adaptör dropout sonrası girdi
    lora_mask: Optional[np.ndarray] = None
    lora_hidden: Optional[np.ndarray] = None  # lora_inputs @ A.T


@dataclass
class ForwardCache:
    params: ParamSet
    layers: List[_LayerCache]
    backbone_output: np.ndarray
    head_inputs: np.ndarray
    dropout_mask: Optional[np.ndarray]
    logits: np.ndarray
    consumed: bool = field(default=False)


def random_backbone(spec: ModelSpec, rng: RngStream) -> ParamSet:
    """He başlatmalı omurga; önceden eğitilmiş kontrol noktası yerine kullanılabilir."""
    groups = []
    for i, (fan_in, fan_out) in enumerate(spec.layer_dims):
        groups.append(ParamGroup(
            backbone_weight(i), rng.normal(np.sqrt(2.0 / fan_in), (fan_out, fan_in)),
            Origin.PRETRAINED,
        ))
        groups.append(ParamGroup(backbone_bias(i), np.zeros(fan_out), Origin.PRETRAINED))
    return ParamSet(tuple(groups))


def extract_backbone(model: Model) -> ParamSet:
    """Modelin omurga gruplarını Pretrained kökenli, donmuş bir küme olarak döndürür."""
    groups = []
    for i in range(len(model.spec.hidden_dims)):
        for name in (backbone_weight(i), backbone_bias(i)):
            g = model.params[name]
            groups.append(ParamGroup(name, g.tensor, Origin.PRETRAINED, False))
    return ParamSet(tuple(groups))


def init_model(spec: ModelSpec, backbone: ParamSet, rng_init: RngStream) -> Model:
    """Omurgayı alır, başı ve (varsa) LoRA çarpanlarını başlatır.

    Baş ağırlıkları ~ N(0, 0.02^2), baş sapması 0; LoRA A ~ N(0, 0.02^2), B = 0.
    """
    full = spec.tuning_mode == TuningMode.FULL
    groups = []
    for i, (fan_in, fan_out) in enumerate(spec.layer_dims):
        for name, shape in ((backbone_weight(i), (fan_out, fan_in)), (backbone_bias(i), (fan_out,))):
            source = backbone.get(name)
            if source is None or source.shape != shape:
                got = None if source is None else source.shape
                raise ShapeMismatchError(f"Omurga grubu '{name}' beklenen {shape}, gelen {got}")
            groups.append(ParamGroup(name, source.tensor, Origin.PRETRAINED, full))
    if len(backbone) != len(groups):
        raise ShapeMismatchError("Omurga, model tanımından fazla grup içeriyor")
    snapshot = ParamSet(tuple(g.with_trainable(False) for g in groups))

    if spec.tuning_mode == TuningMode.LORA:
        rank = spec.lora.rank
        for i, (fan_in, fan_out) in enumerate(spec.layer_dims):
            groups.append(ParamGroup(lora_a(i), rng_init.normal(LORA_INIT_STD, (rank, fan_in)), Origin.ADAPTER))
            groups.append(ParamGroup(lora_b(i), np.zeros((fan_out, rank)), Origin.ADAPTER))

    last = spec.hidden_dims[-1]
    groups.append(ParamGroup(
        HEAD_WEIGHT, rng_init.normal(HEAD_INIT_STD, (spec.num_classes, last)), Origin.NEWLY_INITIALIZED
    ))
    groups.append(ParamGroup(HEAD_BIAS, np.zeros(spec.num_classes), Origin.NEWLY_INITIALIZED))
    return Model(spec, ParamSet(tuple(groups)), snapshot)


def model_from_params(spec: ModelSpec, params: ParamSet) -> Model:
    """Tahmin için: verilen parametrelerden model (Mixout kopyası omurgadır)."""
    snapshot = ParamSet(tuple(
        g.with_trainable(False) for g in params if g.origin == Origin.PRETRAINED
    ))
    return Model(spec, params, snapshot)


def effective_weight(model: Model, layer: int) -> np.ndarray:
    """Değerlendirme modundaki etkin ağırlık (LoRA deltası dahil)."""
    weight = model.params[backbone_weight(layer)].tensor
    if model.spec.tuning_mode != TuningMode.LORA:
        return weight
    delta = model.params[lora_b(layer)].tensor @ model.params[lora_a(layer)].tensor
    return weight + model.spec.lora_scale * delta


def trainable_fraction(model: Model) -> float:
    """Eğitilen (Adapter + NewlyInitialized) elemanların toplam parametrelere oranı."""
    trained = model.params.select([Origin.ADAPTER, Origin.NEWLY_INITIALIZED]).num_elements
    return trained / model.params.num_elements


def _mix(weight: np.ndarray, pretrained: np.ndarray, p: float, rng: RngStream):
    """Mixout: w' = (m*w0 + (1-m)*w - p*w0) / (1-p), m ~ Bernoulli(p)."""
    mask = rng.bernoulli(p, weight.shape)
    mixed = (mask * pretrained + (1.0 - mask) * weight - p * pretrained) / (1.0 - p)
    return mixed, (1.0 - mask) / (1.0 - p)


def forward(model: Model, batch: Batch, mode=EVAL) -> Tuple[np.ndarray, ForwardCache]:
    spec = model.spec
    params = model.params
    features = np.asarray(batch.features, dtype=np.float64)
    if features.ndim != 2 or features.shape[1] != spec.input_dim:
        raise ShapeMismatchError(
            f"Girdi genişliği {features.shape[-1] if features.ndim else None}, beklenen {spec.input_dim}"
        )
    training = isinstance(mode, TrainMode)
    mixout = training and mode.regularizer == Regularizer.MIXOUT
    lora = spec.tuning_mode == TuningMode.LORA

    hidden = features
    layers = []
    for i in range(len(spec.hidden_dims)):
        weight = params[backbone_weight(i)].tensor
        bias = params[backbone_bias(i)].tensor
        cache = _LayerCache(inputs=hidden, pre_activation=None, weight=weight)
        if mixout and params[backbone_weight(i)].trainable:
            snapshot = model.pretrained_snapshot
            weight, cache.mixout_factor = _mix(
                weight, snapshot[backbone_weight(i)].tensor, mode.mixout_p, mode.rng_dropout
            )
            bias, cache.bias_mixout_factor = _mix(
                bias, snapshot[backbone_bias(i)].tensor, mode.mixout_p, mode.rng_dropout
            )
            cache.weight = weight
        z = hidden @ weight.T + bias
        if lora:
            lora_in = hidden
            rate = spec.lora.adapter_dropout
            if training and rate > 0:
                cache.lora_mask = mode.rng_dropout.bernoulli(1.0 - rate, hidden.shape) / (1.0 - rate)
                lora_in = hidden * cache.lora_mask
            cache.lora_inputs = lora_in
            cache.lora_hidden = lora_in @ params[lora_a(i)].tensor.T
            z = z + spec.lora_scale * (cache.lora_hidden @ params[lora_b(i)].tensor.T)
        cache.pre_activation = z
        hidden = np.maximum(z, 0.0)
        layers.append(cache)

    backbone_output = hidden
    dropout_mask = None
    if training and not mixout and spec.dropout_rate > 0:
        keep = 1.0 - spec.dropout_rate
        dropout_mask = mode.rng_dropout.bernoulli(keep, hidden.shape) / keep
        hidden = hidden * dropout_mask

    logits = hidden @ params[HEAD_WEIGHT].tensor.T + params[HEAD_BIAS].tensor
    return logits, ForwardCache(
        params=params,
        layers=layers,
        backbone_output=backbone_output,
        head_inputs=hidden,
        dropout_mask=dropout_mask,
        logits=logits,
    )


def softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    exp = np.exp(shifted)
    return exp / exp.sum(axis=1, keepdims=True)


def cross_entropy(logits: np.ndarray, labels: np.ndarray) -> float:
    """Ortalama softmax çapraz entropi."""
    shifted = logits - logits.max(axis=1, keepdims=True)
    log_norm = np.log(np.exp(shifted).sum(axis=1))
    picked = shifted[np.arange(len(labels)), labels]
    return float(np.mean(log_norm - picked))


def backward(model: Model, cache: ForwardCache, labels) -> Tuple[Gradients, float]:
    """Kayıp ve parametre gruplarıyla aynı sırada gradyanlar (eğitilmeyenler sıfır)."""
    if cache.params is not model.params or cache.consumed:
        raise StaleCacheError("ForwardCache bu modelin güncel parametrelerine ait değil")
    cache.consumed = True
    spec = model.spec
    params = model.params
    labels = np.asarray(labels, dtype=np.int64)
    n = len(labels)
    if n != cache.logits.shape[0]:
        raise ShapeMismatchError("Etiket sayısı ile logit satırları uyuşmuyor")

    loss = cross_entropy(cache.logits, labels)
    dlogits = softmax(cache.logits)
    dlogits[np.arange(n), labels] -= 1.0
    dlogits /= n

    grads: Dict[str, np.ndarray] = {}
    grads[HEAD_WEIGHT] = dlogits.T @ cache.head_inputs
    grads[HEAD_BIAS] = dlogits.sum(axis=0)

    lora = spec.tuning_mode == TuningMode.LORA
    needs_backbone = spec.tuning_mode != TuningMode.HEAD_ONLY
    if needs_backbone:
        dhidden = dlogits @ params[HEAD_WEIGHT].tensor
        if cache.dropout_mask is not None:
            dhidden = dhidden * cache.dropout_mask
        for i in reversed(range(len(spec.hidden_dims))):
            layer = cache.layers[i]
            dz = dhidden * (layer.pre_activation > 0)
            dweight = dz.T @ layer.inputs
            dbias = dz.sum(axis=0)
            if layer.mixout_factor is not None:
                dweight = dweight * layer.mixout_factor
                dbias = dbias * layer.bias_mixout_factor
            grads[backbone_weight(i)] = dweight
            grads[backbone_bias(i)] = dbias
            if lora:
                scale = spec.lora_scale
                a = params[lora_a(i)].tensor
                b = params[lora_b(i)].tensor
                grads[lora_b(i)] = scale * dz.T @ layer.lora_hidden
                dlora_hidden = scale * dz @ b
                grads[lora_a(i)] = dlora_hidden.T @ layer.lora_inputs
            if i == 0:
                break
            dhidden = dz @ layer.weight
            if lora:
                dlora_in = dlora_hidden @ a
                if layer.lora_mask is not None:
                    dlora_in = dlora_in * layer.lora_mask
                dhidden = dhidden + dlora_in

    return {
        g.name: (grads[g.name] if g.trainable and g.name in grads else np.zeros(g.shape))
        for g in params
    }, loss


def predict_labels(model: Model, features: np.ndarray) -> np.ndarray:
    """Değerlendirme modunda argmax; eşitlikte en küçük sınıf indeksi."""
    logits, _ = forward(model, Batch(features=features, labels=np.zeros(len(features), dtype=np.int64)))
    return np.argmax(logits, axis=1)
