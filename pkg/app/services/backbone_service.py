"""Önceden eğitilmiş omurga sağlama: pretext eğitimi, rastgele başlatma veya dosya."""
from pathlib import Path
from typing import Optional, Union

from app.config.logging import setup_logger
from app.config.settings import settings
from app.models.classifier import ModelSpec, TuningMode
from app.models.dataset import Dataset
from app.models.experiment import BackboneConfig
from app.models.params import ParamSet
from app.models.strategy import DefaultStrategy
from app.models.training import TrainConfig
from app.repository.checkpoint_repository import load_param_set, save_param_set
from app.services.mitigation_service import run_strategy
from app.services.model_service import extract_backbone, model_from_params, random_backbone
from app.services.rng_service import derive_stream

logger = setup_logger(__name__)


def pretext_backbone(cfg: BackboneConfig, spec: ModelSpec, pretext: Dataset) -> ParamSet:
    """Pretext bölümünde tüm katmanları eğitir ve omurgayı donmuş Pretrained grupları olarak döndürür."""
    full_spec = spec.copy(update={"tuning_mode": TuningMode.FULL, "lora": None})
    start = random_backbone(full_spec, derive_stream(cfg.seed, "backbone"))
    train_cfg = TrainConfig(epochs=cfg.pretext_epochs, learning_rate=cfg.pretext_learning_rate)
    outcome = run_strategy(DefaultStrategy(), full_spec, start, pretext, train_cfg, cfg.seed)
    return extract_backbone(model_from_params(full_spec, outcome.predictor.params))


def provision_backbone(
    cfg: BackboneConfig,
    spec: ModelSpec,
    pretext: Optional[Dataset],
    backbone_dir: Union[str, Path],
) -> ParamSet:
    """Dizindeki omurgayı döndürür; yoksa üretip kaydeder."""
    target = Path(backbone_dir) / settings.BACKBONE_FILE
    try:
        if target.exists():
            logger.info(f"Mevcut omurga kullanılıyor: {target}")
            return load_param_set(target)
        if cfg.source == "path":
            backbone = load_param_set(cfg.path)
        elif cfg.source == "random":
            backbone = random_backbone(spec, derive_stream(cfg.seed, "backbone"))
        elif pretext is None or len(pretext) == 0 or (pretext.class_counts() == 0).any():
            logger.warning("Pretext havuzu her sınıfı içermiyor, rastgele omurga kullanılıyor")
            backbone = random_backbone(spec, derive_stream(cfg.seed, "backbone"))
        else:
            logger.info(f"Pretext eğitimi başlıyor: {len(pretext)} örnek, {cfg.pretext_epochs} epok")
            backbone = pretext_backbone(cfg, spec, pretext)
        save_param_set(backbone, target)
        return backbone
    except Exception as e:
        logger.error(f"Omurga hazırlama hatası: {str(e)}")
        raise
