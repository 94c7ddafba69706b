import json
from pathlib import Path

import numpy as np
import pytest

from app.exceptions import CongruenceError, ShapeMismatchError, StaleCacheError
from app.models.classifier import (
    HEAD_BIAS, HEAD_WEIGHT, LoRAConfig, Model, ModelSpec, TuningMode, backbone_bias, backbone_weight,
    lora_a, lora_b,
)
from app.models.experiment import ExperimentConfig
from app.models.dataset import Batch
from app.models.params import Origin
from app.services.model_service import (
    EVAL, Regularizer, TrainMode, backward, cross_entropy, effective_weight, forward, init_model,
    predict_labels, random_backbone, trainable_fraction,
)
from app.services.rng_service import derive_stream


def small_batch(dim=6, n=7, seed=5):
    rng = derive_stream(seed, "test")
    return Batch(features=rng.normal(1.0, (n, dim)), labels=rng.integers(0, 3, size=n))


def numeric_gradient(model, batch, name, eps=1e-6, make_mode=lambda: EVAL):
    base = model.params[name].tensor
    grad = np.zeros(base.shape)
    for idx in np.ndindex(base.shape):
        shifted = []
        for sign in (1.0, -1.0):
            tensor = base.copy()
            tensor[idx] += sign * eps
            logits, _ = forward(model.with_params(model.params.replace({name: tensor})), batch, make_mode())
            shifted.append(cross_entropy(logits, batch.labels))
        grad[idx] = (shifted[0] - shifted[1]) / (2 * eps)
    return grad


def build(mode, lora=None):
    spec = ModelSpec(
        input_dim=6, hidden_dims=[8, 5], num_classes=3, dropout_rate=0.0, tuning_mode=mode, lora=lora
    )
    backbone = random_backbone(spec, derive_stream(0, "backbone"))
    return init_model(spec, backbone, derive_stream(0, "init"))


def test_full_gradients_match_finite_differences():
    model = build(TuningMode.FULL)
    batch = small_batch()
    _, cache = forward(model, batch)
    grads, loss = backward(model, cache, batch.labels)
    assert loss == pytest.approx(cross_entropy(cache.logits, batch.labels))
    for name in model.params.names:
        np.testing.assert_allclose(grads[name], numeric_gradient(model, batch, name), rtol=1e-4, atol=1e-7)


def test_head_only_freezes_backbone():
    model = build(TuningMode.HEAD_ONLY)
    assert model.params.trainable_names() == (HEAD_WEIGHT, HEAD_BIAS)
    batch = small_batch()
    _, cache = forward(model, batch)
    grads, _ = backward(model, cache, batch.labels)
    assert not np.any(grads[backbone_weight(0)])
    np.testing.assert_allclose(
        grads[HEAD_WEIGHT], numeric_gradient(model, batch, HEAD_WEIGHT), rtol=1e-4, atol=1e-7
    )


def test_lora_gradients_match_finite_differences():
    model = build(TuningMode.LORA, LoRAConfig(rank=2, alpha=2.0, adapter_dropout=0.0))
    rng = derive_stream(9, "test")
    # B = 0 olduğunda A'nın gradyanı sıfırdır; kontrol için B doldurulur
    model = model.with_params(model.params.replace({
        lora_b(0): rng.normal(0.1, (8, 2)),
        lora_b(1): rng.normal(0.1, (5, 2)),
    }))
    batch = small_batch()
    _, cache = forward(model, batch)
    grads, _ = backward(model, cache, batch.labels)
    for name in (lora_a(0), lora_b(0), lora_a(1), lora_b(1), HEAD_WEIGHT):
        np.testing.assert_allclose(grads[name], numeric_gradient(model, batch, name), rtol=1e-4, atol=1e-7)
    assert not np.any(grads[backbone_weight(1)])


def test_fresh_lora_model_matches_backbone():
    model = build(TuningMode.LORA, LoRAConfig(rank=2, alpha=2.0, adapter_dropout=0.0))
    assert model.params[lora_a(0)].origin == Origin.ADAPTER
    for layer in range(2):
        np.testing.assert_array_equal(effective_weight(model, layer), model.params[backbone_weight(layer)].tensor)
    batch = small_batch()
    logits, _ = forward(model, batch)
    hidden = batch.features
    for layer in range(2):
        w = model.params[backbone_weight(layer)].tensor
        b = model.params[f"backbone.{layer}.bias"].tensor
        hidden = np.maximum(hidden @ w.T + b, 0.0)
    expected = hidden @ model.params[HEAD_WEIGHT].tensor.T + model.params[HEAD_BIAS].tensor
    np.testing.assert_allclose(logits, expected, rtol=1e-12)


def test_lora_rank_must_fit_layers():
    with pytest.raises(ValueError):
        ModelSpec(input_dim=6, hidden_dims=[3], num_classes=2, tuning_mode=TuningMode.LORA,
                  lora=LoRAConfig(rank=4))


def test_stale_cache_is_rejected():
    model = build(TuningMode.FULL)
    batch = small_batch()
    _, cache = forward(model, batch)
    backward(model, cache, batch.labels)
    with pytest.raises(StaleCacheError):
        backward(model, cache, batch.labels)

    _, cache = forward(model, batch)
    moved = model.with_params(model.params.replace({HEAD_BIAS: np.ones(3)}))
    with pytest.raises(StaleCacheError):
        backward(moved, cache, batch.labels)


def test_wrong_input_width():
    model = build(TuningMode.FULL)
    with pytest.raises(ShapeMismatchError):
        forward(model, small_batch(dim=4))


def test_backbone_shape_mismatch():
    spec = ModelSpec(input_dim=6, hidden_dims=[8], num_classes=3)
    other = random_backbone(ModelSpec(input_dim=5, hidden_dims=[8], num_classes=3), derive_stream(0, "backbone"))
    with pytest.raises(ShapeMismatchError):
        init_model(spec, other, derive_stream(0, "init"))


def test_dropout_is_train_only():
    spec = ModelSpec(input_dim=6, hidden_dims=[8], num_classes=3, dropout_rate=0.5)
    model = init_model(spec, random_backbone(spec, derive_stream(0, "backbone")), derive_stream(0, "init"))
    batch = small_batch()
    eval_a, _ = forward(model, batch, EVAL)
    eval_b, _ = forward(model, batch, EVAL)
    np.testing.assert_array_equal(eval_a, eval_b)
    train_logits, cache = forward(model, batch, TrainMode(derive_stream(0, "model_noise")))
    assert cache.dropout_mask is not None
    assert not np.array_equal(train_logits, eval_a)


def test_predict_labels_shape():
    model = build(TuningMode.FULL)
    labels = predict_labels(model, small_batch().features)
    assert labels.shape == (7,)
    assert set(labels.tolist()) <= {0, 1, 2}


def test_mixout_without_mixing_is_plain_forward():
    model = build(TuningMode.FULL)
    batch = small_batch()
    expected, _ = forward(model, batch, EVAL)
    mixed, cache = forward(model, batch, TrainMode(derive_stream(0, "model_noise"), Regularizer.MIXOUT, 0.0))
    np.testing.assert_allclose(mixed, expected, rtol=0, atol=1e-12)
    assert cache.dropout_mask is None
    np.testing.assert_array_equal(cache.layers[0].mixout_factor, np.ones((8, 6)))


def test_mixout_gradients_match_finite_differences():
    model = build(TuningMode.FULL)
    # aynı tohumlu akış her ileri geçişte aynı maskeyi çeker
    make_mode = lambda: TrainMode(derive_stream(4, "model_noise"), Regularizer.MIXOUT, 0.3)
    pretrained = model.params[backbone_weight(0)].tensor
    moved = model.with_params(model.params.replace({
        backbone_weight(0): pretrained + derive_stream(6, "test").normal(0.1, pretrained.shape),
    }))
    batch = small_batch()
    _, cache = forward(moved, batch, make_mode())
    grads, _ = backward(moved, cache, batch.labels)
    assert np.any(cache.layers[0].mixout_factor == 0)
    for name in (backbone_weight(0), backbone_bias(0), backbone_weight(1), HEAD_WEIGHT):
        np.testing.assert_allclose(
            grads[name], numeric_gradient(moved, batch, name, make_mode=make_mode), rtol=1e-4, atol=1e-7
        )


def test_snapshot_must_cover_pretrained_groups():
    model = build(TuningMode.FULL)
    partial = model.params.select([Origin.NEWLY_INITIALIZED])
    with pytest.raises(CongruenceError):
        Model(model.spec, model.params, partial)


def test_reference_lora_config_trains_under_ten_percent():
    path = Path(__file__).resolve().parent.parent / "configs" / "experiment_lora.json"
    cfg = ExperimentConfig(**json.loads(path.read_text(encoding="utf-8")))
    synth = cfg.dataset.synth
    spec = cfg.model.to_spec(synth.dim, synth.num_classes)
    model = init_model(spec, random_backbone(spec, derive_stream(0, "backbone")), derive_stream(0, "init"))
    # omurga 6272, adaptör 224, baş 260 eleman
    assert model.params.num_elements == 6756
    assert trainable_fraction(model) == pytest.approx(484 / 6756)
    assert trainable_fraction(model) < 0.1
