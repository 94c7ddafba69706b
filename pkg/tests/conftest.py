import pytest

from app.models.classifier import ModelSpec
from app.models.training import TrainConfig
from app.services.data_service import synth_blobs
from app.services.model_service import random_backbone
from app.services.rng_service import derive_stream


@pytest.fixture
def blobs():
    # 3 sınıf x 20 örnek, 6 boyut, iyi ayrılmış
    return synth_blobs(3, 6, 20, 3.0, 0.5, 0.0, seed=0)


@pytest.fixture
def spec():
    return ModelSpec(input_dim=6, hidden_dims=[8], num_classes=3, dropout_rate=0.0)


@pytest.fixture
def backbone(spec):
    return random_backbone(spec, derive_stream(0, "backbone"))


@pytest.fixture
def train_cfg():
    # 60 örnek / 8 -> 8 adım/epok, toplam 16 adım
    return TrainConfig(epochs=2, batch_size=8)


@pytest.fixture
def isolated_logs(tmp_path, monkeypatch):
    monkeypatch.setattr("app.config.logging.LOG_DIR", str(tmp_path / "logs"))
    return tmp_path / "logs"
