"""Deney, veri kaynağı, omurga ve duyarlılık taraması yapılandırmaları.

Varsayılanlar: 1000 örneklik bütçe (sınıflara eşit), 20 tohum (0..19),
10 epok, 8'lik yığın; duyarlılık noktası başına 5 tekrar.
"""
from typing import Any, Dict, List, Literal, Optional

from pydantic import BaseModel, confloat, conint, root_validator, validator

from app.config.settings import settings
from app.models.classifier import LoRAConfig, ModelSpec, TuningMode
from app.models.strategy import DefaultStrategy, DeniConfig, StrategyConfig, normalize_strategy_dict
from app.models.training import TrainConfig
from app.repository.dataset_repository import DEFAULT_TEXT_DIM, DatasetFormat

DEFAULT_BUDGET = 1000
DEFAULT_SEEDS = list(range(20))
DEFAULT_REPEATS = 5


class SynthSpec(BaseModel):
    num_classes: conint(ge=2) = 4
    dim: conint(gt=0) = 16
    n_per_class: conint(gt=0) = 300
    center_scale: confloat(gt=0) = 1.0
    noise_std: confloat(ge=0) = 1.0
    label_flip_prob: confloat(ge=0, lt=0.5) = 0.1
    seed: int = 0


class SynthAugmentSpec(BaseModel):
    """Özellik veri kümeleri için titreşimli parafrazlar."""

    n: conint(ge=1, le=10) = 2
    jitter_std: confloat(gt=0) = 0.05


class DatasetSource(BaseModel):
    path: Optional[str] = None
    format: Optional[DatasetFormat] = None
    classes: Optional[List[Any]] = None
    text_dim: conint(gt=0) = DEFAULT_TEXT_DIM
    synth: Optional[SynthSpec] = None
    augmentations: Optional[str] = None
    synth_augment: Optional[SynthAugmentSpec] = None

    @root_validator(skip_on_failure=True)
    def check_source(cls, values):
        if (values.get("path") is None) == (values.get("synth") is None):
            raise ValueError("'path' veya 'synth' alanlarından tam biri verilmeli")
        if values.get("augmentations") and values.get("synth_augment"):
            raise ValueError("'augmentations' ve 'synth_augment' birlikte kullanılamaz")
        return values


class ArchitectureConfig(BaseModel):
    hidden_dims: List[conint(gt=0)] = [32]
    dropout_rate: confloat(ge=0, lt=1) = 0.3
    tuning_mode: TuningMode = TuningMode.FULL
    lora: Optional[LoRAConfig] = None

    def to_spec(self, input_dim: int, num_classes: int) -> ModelSpec:
        return ModelSpec(
            input_dim=input_dim,
            hidden_dims=list(self.hidden_dims),
            num_classes=num_classes,
            dropout_rate=self.dropout_rate,
            tuning_mode=self.tuning_mode,
            lora=self.lora,
        )


class BackboneConfig(BaseModel):
    """pretext: eğitim havuzundan bütçeden bağımsız ayrılan bölümde Full eğitilmiş omurga.

    Bölüm yalnızca source='pretext' iken ayrılır ve hiçbir koşunun eğitim
    verisine girmez; aynı veri kümesi ve data_seed her zaman aynı omurgayı verir.
    """

    source: Literal["pretext", "random", "path"] = "pretext"
    path: Optional[str] = None
    pretext_frac: confloat(ge=0, lt=1) = 0.2
    pretext_epochs: conint(gt=0) = 5
    pretext_learning_rate: confloat(gt=0) = 1e-3
    seed: int = 0

    @root_validator(skip_on_failure=True)
    def check_path(cls, values):
        if values.get("source") == "path" and not values.get("path"):
            raise ValueError("source='path' için 'path' gerekli")
        return values


class ExperimentConfig(BaseModel):
    dataset: DatasetSource
    budget: Optional[conint(gt=0)] = DEFAULT_BUDGET
    shots_per_class: Optional[conint(gt=0)] = None
    seeds: List[int] = DEFAULT_SEEDS
    data_seed: int = 0
    # True: bütçe alt kümesi her tohum için yeniden seçilir
    vary_shots_per_seed: bool = False
    strategies: List[StrategyConfig] = [DefaultStrategy()]
    train: TrainConfig = TrainConfig()
    model: ArchitectureConfig = ArchitectureConfig()
    backbone: BackboneConfig = BackboneConfig()
    output_dir: str = f"{settings.RESULTS_DIR}/experiment"
    workers: conint(ge=1) = max(1, settings.WORKERS)
    baseline: str = "default"

    @validator("strategies", pre=True)
    def normalize_strategies(cls, value):
        if isinstance(value, (list, tuple)):
            return [normalize_strategy_dict(v) for v in value]
        return value

    @validator("seeds")
    def check_seeds(cls, value):
        if not value:
            raise ValueError("En az bir tohum gerekli")
        if len(set(value)) != len(value):
            raise ValueError("Tohumlar benzersiz olmalı")
        return value

    @validator("strategies")
    def check_strategies(cls, value):
        if not value:
            raise ValueError("En az bir strateji gerekli")
        ids = [s.strategy_id for s in value]
        duplicates = sorted({i for i in ids if ids.count(i) > 1})
        if duplicates:
            raise ValueError(f"Strateji kimlikleri benzersiz olmalı: {duplicates}")
        return value

    def shots_for(self, num_classes: int) -> Optional[int]:
        """Sınıf başına örnek sayısı; None tüm eğitim havuzu demektir."""
        if self.shots_per_class is not None:
            return self.shots_per_class
        if self.budget is None:
            return None
        return max(1, self.budget // num_classes)


class SweepSpec(BaseModel):
    """DeniConfig eksenleri üzerinde ızgara; her grup kendi içinde Kartezyen çarpımdır."""

    base: ExperimentConfig
    kind: Literal["de", "ni", "deni", "denials"] = "deni"
    params: Dict[str, Any] = {}
    grid: Optional[Dict[str, List[Any]]] = None
    groups: List[Dict[str, List[Any]]] = []
    repeats: conint(ge=1) = DEFAULT_REPEATS
    tie_steps_regular: bool = True

    @root_validator(skip_on_failure=True)
    def check_axes(cls, values):
        groups = list(values.get("groups") or [])
        if values.get("grid"):
            groups.insert(0, values["grid"])
        if not groups:
            raise ValueError("En az bir tarama ekseni gerekli")
        allowed = set(DeniConfig.__fields__)
        if values.get("kind") == "denials":
            allowed.add("n")
        for group in groups:
            unknown = sorted(set(group) - allowed)
            if unknown:
                raise ValueError(f"Izgara eksenleri DeniConfig alanları olmalı: {unknown}")
            if any(not axis_values for axis_values in group.values()):
                raise ValueError("Her eksen en az bir değer içermeli")
        values["groups"] = groups
        values["grid"] = None
        return values
