"""Tohum taramaları, strateji karşılaştırmaları, örnek sayısı ve duyarlılık taramaları.

Eğitim/test bölümü ve bütçe seçimi bir deney içinde tüm tohumlar için sabittir;
tohum yalnızca başlatma, veri sırası ve gürültü akışlarını değiştirir.
"""
import csv
import itertools
import json
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import dataclass, field
from pathlib import Path
from time import time
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

from pydantic import ValidationError

from app.config.logging import setup_logger
from app.database import get_db
from app.exceptions import ConfigurationError, InsufficientSupportError
from app.middleware.logging import log_run_middleware
from app.models.classifier import ModelSpec
from app.models.dataset import AugmentationMap, Dataset
from app.models.experiment import DatasetSource, ExperimentConfig, SweepSpec
from app.models.params import ParamSet
from app.models.results import ExperimentReport, RunResult
from app.models.strategy import AllDataStrategy, StrategyConfig, parse_strategy
from app.models.training import TrainConfig
from app.repository import run_repository
from app.repository.dataset_repository import load_augmentations, load_dataset
from app.repository.result_repository import find_run_result, save_run_result
from app.services.backbone_service import provision_backbone
from app.services.data_service import (
    sample_shots, split_80_20, split_pretext, synth_augmentations, synth_blobs,
)
from app.services.ensemble_service import predict
from app.services.metrics_service import f1_macro
from app.services.mitigation_service import run_strategy
from app.services.report_service import MANIFEST_FILE, build_reports, write_reports
from app.services.rng_service import derive_stream

logger = setup_logger(__name__)

SENSITIVITY_FILE = "sensitivity.csv"


@dataclass(frozen=True)
class PreparedData:
    train: Dataset
    pool: Dataset
    test: Dataset
    model_spec: ModelSpec
    backbone: ParamSet
    augmentations: Optional[AugmentationMap] = None
    shots_per_class: Optional[int] = None
    vary_shots_per_seed: bool = False


@dataclass(frozen=True)
class RunOutcome:
    strategy_id: str
    seed: int
    result: Optional[RunResult]
    error: Optional[str]
    elapsed: float


def load_source(source: DatasetSource) -> Dataset:
    if source.synth is not None:
        s = source.synth
        return synth_blobs(
            s.num_classes, s.dim, s.n_per_class, s.center_scale, s.noise_std, s.label_flip_prob, s.seed
        )
    return load_dataset(source.path, source.format, source.classes, source.text_dim)


def prepare_data(
    cfg: ExperimentConfig,
    run_dir: Union[str, Path],
    backbone_dir: Optional[Union[str, Path]] = None,
) -> PreparedData:
    """Bölme, bütçe seçimi, artırmalar ve omurga; tüm koşular için ortak.

    backbone_dir verilirse omurga orada aranır ve üretilirse oraya yazılır;
    örnek sayısı ve duyarlılık taramaları tek omurgayı böyle paylaşır.
    """
    try:
        ds = load_source(cfg.dataset)
        pool, test = split_80_20(ds, cfg.data_seed)
        pretext = None
        if cfg.backbone.source == "pretext":
            pool, pretext = split_pretext(pool, cfg.backbone.pretext_frac, cfg.data_seed)
        k = cfg.shots_for(ds.num_classes)
        train = pool if k is None else sample_shots(pool, k, derive_stream(cfg.data_seed, "shots"))
        model_spec = cfg.model.to_spec(ds.feature_dim, ds.num_classes)

        augmentations = None
        if cfg.dataset.augmentations:
            augmentations = load_augmentations(cfg.dataset.augmentations, ds)
        elif cfg.dataset.synth_augment is not None:
            spec = cfg.dataset.synth_augment
            augmentations = synth_augmentations(pool, spec.n, spec.jitter_std, cfg.data_seed)

        backbone = provision_backbone(cfg.backbone, model_spec, pretext, backbone_dir or run_dir)
        logger.info(
            f"Veri hazır: {len(train)} eğitim (havuz {len(pool)}), {len(test)} test, "
            f"{ds.num_classes} sınıf"
        )
        return PreparedData(
            train, pool, test, model_spec, backbone, augmentations, k, cfg.vary_shots_per_seed
        )
    except Exception as e:
        logger.error(f"Veri hazırlama hatası: {str(e)}")
        raise


def execute_run(
    strategy: StrategyConfig, seed: int, data: PreparedData, train_cfg: TrainConfig
) -> RunResult:
    if isinstance(strategy, AllDataStrategy):
        train = data.pool
    elif data.vary_shots_per_seed and data.shots_per_class is not None:
        train = sample_shots(data.pool, data.shots_per_class, derive_stream(seed, "shots"))
    else:
        train = data.train
    outcome = run_strategy(
        strategy, data.model_spec, data.backbone, train, train_cfg, seed, data.augmentations
    )
    preds = predict(outcome.predictor, data.model_spec, data.test.features)
    gold = data.test.labels
    return RunResult(
        seed=seed,
        strategy_id=strategy.strategy_id,
        predictions=[int(p) for p in preds],
        gold=[int(g) for g in gold],
        test_ids=data.test.ids,
        f1_macro=f1_macro(preds, gold, data.model_spec.num_classes),
        member_steps=outcome.member_steps,
    )


def _run_task(task: Tuple[StrategyConfig, int, PreparedData, TrainConfig]) -> RunOutcome:
    strategy, seed, data, train_cfg = task
    context = {
        "strategy_id": strategy.strategy_id,
        "seed": seed,
        "strategy": strategy.dict(),
        "n_train": len(data.train),
    }
    start = time()
    try:
        result = log_run_middleware(context, lambda: execute_run(strategy, seed, data, train_cfg))
        return RunOutcome(strategy.strategy_id, seed, result, None, time() - start)
    except Exception as e:
        return RunOutcome(strategy.strategy_id, seed, None, f"{type(e).__name__}: {e}", time() - start)


# alanlar değişirse mevcut sonuçlar geçersiz olur
_DATA_KEYS = (
    "dataset", "budget", "shots_per_class", "data_seed", "vary_shots_per_seed",
    "train", "model", "backbone",
)


def _write_manifest(cfg: ExperimentConfig, run_dir: Path, data: PreparedData) -> None:
    """Koşu dizininin yapılandırması; yeni stratejiler mevcut listeye eklenir."""
    config = json.loads(cfg.json(exclude={"workers", "output_dir", "seeds"}))
    path = run_dir / MANIFEST_FILE
    if path.exists():
        existing = json.loads(path.read_text(encoding="utf-8"))["config"]
        changed = [k for k in _DATA_KEYS if existing.get(k) != config.get(k)]
        if changed:
            raise ConfigurationError(f"Koşu dizini farklı bir yapılandırmaya ait ({changed}): {run_dir}")
        known = {parse_strategy(s).strategy_id for s in existing["strategies"]}
        config["strategies"] = existing["strategies"] + [
            s for s in config["strategies"] if parse_strategy(s).strategy_id not in known
        ]
    manifest = {
        "config": config,
        "n_train": len(data.train),
        "n_all": len(data.pool),
        "n_test": len(data.test),
        "num_classes": data.model_spec.num_classes,
    }
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _record_outcome(db, run_dir: Path, outcome: RunOutcome) -> RunOutcome:
    """Koşu biter bitmez sonucu ve defter kaydını yazar."""
    if outcome.result is not None:
        save_run_result(run_dir, outcome.result)
        run_repository.record_completed(
            db, outcome.strategy_id, outcome.seed,
            outcome.result.f1_macro, outcome.result.member_steps, outcome.elapsed,
        )
    else:
        run_repository.record_failed(db, outcome.strategy_id, outcome.seed, outcome.error, outcome.elapsed)
    return outcome


def run_experiment(
    cfg: ExperimentConfig, backbone_dir: Optional[Union[str, Path]] = None
) -> List[ExperimentReport]:
    """Her strateji x tohum için bir koşu; tamamlanmış koşular diskten okunur.

    Her sonuç dosyası koşu biter bitmez yazılır, kesilen deney kaldığı yerden sürer.
    """
    run_dir = Path(cfg.output_dir)
    run_dir.mkdir(parents=True, exist_ok=True)
    data = prepare_data(cfg, run_dir, backbone_dir)
    _write_manifest(cfg, run_dir, data)

    pending = []
    for strategy in cfg.strategies:
        for seed in cfg.seeds:
            if find_run_result(run_dir, strategy.strategy_id, seed) is None:
                pending.append((strategy, seed, data, cfg.train))
    skipped = len(cfg.strategies) * len(cfg.seeds) - len(pending)
    if skipped:
        logger.info(f"{skipped} koşu zaten tamamlanmış, atlanıyor")

    outcomes: List[RunOutcome] = []
    workers = min(cfg.workers, len(pending)) if pending else 1
    with get_db(run_dir) as db:
        if workers > 1:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                futures = [pool.submit(_run_task, task) for task in pending]
                for future in as_completed(futures):
                    outcomes.append(_record_outcome(db, run_dir, future.result()))
        else:
            for task in pending:
                outcomes.append(_record_outcome(db, run_dir, _run_task(task)))

    reports = build_reports(run_dir)
    write_reports(run_dir, reports, cfg.baseline)
    failed = sum(1 for o in outcomes if o.result is None)
    logger.info(f"Deney bitti: {len(outcomes)} koşu çalıştı, {failed} başarısız - {run_dir}")
    return reports


def run_shot_sweep(cfg: ExperimentConfig, shot_list: Sequence[int]) -> Dict[int, List[ExperimentReport]]:
    """Her k için ayrı deney; yetersiz sınıf desteği olan k atlanır.

    Tüm k değerleri temel dizindeki tek omurgayı kullanır.
    """
    base_dir = Path(cfg.output_dir)
    base_dir.mkdir(parents=True, exist_ok=True)
    sweeps: Dict[int, List[ExperimentReport]] = {}
    for k in shot_list:
        shot_cfg = cfg.copy(update={
            "shots_per_class": int(k),
            "budget": None,
            "output_dir": str(base_dir / f"shots_{k}"),
        })
        try:
            sweeps[int(k)] = run_experiment(shot_cfg, backbone_dir=base_dir)
        except InsufficientSupportError as e:
            logger.warning(f"{k} örnek/sınıf atlandı: {str(e)}")
    return sweeps


@dataclass
class SweepPoint:
    point_id: str
    group: int
    values: Dict[str, Any]
    status: str = "ok"
    error: Optional[str] = None
    report: Optional[ExperimentReport] = field(default=None, repr=False)


def _point_id(group: int, values: Dict[str, Any]) -> str:
    parts = [f"{k}-{values[k]}" for k in sorted(values)]
    return f"g{group}_" + "_".join(parts)


def sweep_points(sweep: SweepSpec) -> List[SweepPoint]:
    """Gruplar sırayla; her grup kendi eksenlerinin Kartezyen çarpımı."""
    points = []
    for gi, group in enumerate(sweep.groups):
        axes = sorted(group)
        for combo in itertools.product(*(group[a] for a in axes)):
            values = dict(zip(axes, combo))
            points.append(SweepPoint(_point_id(gi, values), gi, values))
    return points


def _point_strategy(sweep: SweepSpec, values: Dict[str, Any]) -> StrategyConfig:
    params = {**sweep.params, **values}
    if sweep.tie_steps_regular and "steps_noisy" in values and "steps_regular" not in values:
        params["steps_regular"] = values["steps_noisy"]
    return parse_strategy({"kind": sweep.kind, **params})


def _write_sensitivity_csv(path: Path, points: List[SweepPoint]) -> None:
    fieldnames = ["point", "group", "values", "status", "mean", "std", "cost", "n_seeds", "error"]
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.DictWriter(handle, fieldnames=fieldnames, lineterminator="\n")
        writer.writeheader()
        for p in points:
            r = p.report
            writer.writerow({
                "point": p.point_id,
                "group": p.group,
                "values": json.dumps(p.values, sort_keys=True),
                "status": p.status,
                "mean": "" if r is None else f"{r.mean:.6f}",
                "std": "" if r is None or r.std is None else f"{r.std:.6f}",
                "cost": "" if r is None or r.normalized_cost is None else f"{r.normalized_cost:.4f}",
                "n_seeds": "" if r is None else r.n_seeds,
                "error": p.error or "",
            })


def run_sensitivity(sweep: SweepSpec) -> List[SweepPoint]:
    """Izgara noktaları; DeniConfig kısıtlarını ihlal eden nokta geçersiz kaydedilir."""
    base = sweep.base
    out_dir = Path(base.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    # omurga bir kez hazırlanır, noktalar aynı dosyayı okur
    prepare_data(base, out_dir)
    seeds = list(base.seeds)[:sweep.repeats]

    points = sweep_points(sweep)
    for point in points:
        try:
            strategy = _point_strategy(sweep, point.values)
        except (ValidationError, ValueError) as e:
            point.status = "invalid"
            point.error = str(e).replace("\n", " ")
            logger.warning(f"Geçersiz ızgara noktası {point.point_id}: {point.error}")
            continue
        point_cfg = base.copy(update={
            "seeds": seeds,
            "strategies": [strategy],
            "output_dir": str(out_dir / "points" / point.point_id),
        })
        reports = run_experiment(point_cfg, backbone_dir=out_dir)
        point.report = reports[0] if reports else None
        if point.report is None or not point.report.results:
            point.status = "failed"
            point.error = "Tüm koşular başarısız"
    _write_sensitivity_csv(out_dir / SENSITIVITY_FILE, points)
    invalid = sum(1 for p in points if p.status == "invalid")
    logger.info(f"Duyarlılık taraması bitti: {len(points)} nokta, {invalid} geçersiz")
    return points
