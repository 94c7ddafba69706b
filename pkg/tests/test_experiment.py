import csv
import json
import math

import pytest

from app.database import get_db
from app.exceptions import ConfigurationError
from app.models.experiment import (
    ArchitectureConfig, BackboneConfig, DatasetSource, ExperimentConfig, SweepSpec, SynthAugmentSpec,
    SynthSpec,
)
from app.models.run_record import STATUS_FAILED
from app.models.strategy import AugmentNStrategy, DefaultStrategy, DENIStrategy, EnsembleStrategy
from app.models.training import TrainConfig
from app.repository import run_repository
from app.repository.result_repository import load_run_result, run_file
from app.services import experiment_service, report_service


def tiny_config(output_dir, **update):
    # 3 x 25 örnek -> havuz 60, test 15; bütçe 30 -> 10 örnek/sınıf, 8 adım
    cfg = ExperimentConfig(
        dataset=DatasetSource(synth=SynthSpec(
            num_classes=3, dim=6, n_per_class=25, center_scale=3.0, noise_std=0.5, label_flip_prob=0.0,
        )),
        budget=30,
        seeds=[0, 1],
        strategies=[DefaultStrategy(), EnsembleStrategy(size=2)],
        train=TrainConfig(epochs=2, batch_size=8),
        model=ArchitectureConfig(hidden_dims=[8], dropout_rate=0.1),
        backbone=BackboneConfig(source="random"),
        output_dir=str(output_dir),
    )
    return cfg.copy(update=update) if update else cfg


def test_experiment_writes_results_and_reports(tmp_path):
    out = tmp_path / "exp"
    reports = experiment_service.run_experiment(tiny_config(out))
    by_id = {r.strategy_id: r for r in reports}
    assert list(by_id) == ["default", "ensemble-2"]
    assert all(r.n_seeds == 2 and r.std is not None for r in reports)
    assert by_id["default"].normalized_cost == pytest.approx(1.0)
    assert by_id["ensemble-2"].normalized_cost == pytest.approx(2.0)

    for name in ("manifest.json", "summary.csv", "comparison.csv", "comparison.md", "boxplot.csv", "backbone.bin"):
        assert (out / name).exists(), name
    result = load_run_result(run_file(out, "ensemble-2", 1))
    assert len(result.predictions) == 15
    assert result.member_steps == 16

    manifest = json.loads((out / "manifest.json").read_text(encoding="utf-8"))
    assert manifest["n_train"] == 30 and manifest["n_all"] == 60 and manifest["n_test"] == 15

    with open(out / "comparison.csv", encoding="utf-8") as handle:
        rows = list(csv.DictReader(handle))
    assert [r["strategy"] for r in rows] == ["default", "ensemble-2"]
    assert rows[0]["baseline"] == "default"
    assert rows[1]["mw_p"] != ""


def test_resume_recomputes_only_missing_runs(tmp_path):
    out = tmp_path / "exp"
    cfg = tiny_config(out)
    experiment_service.run_experiment(cfg)
    missing = run_file(out, "default", 1)
    kept = run_file(out, "default", 0)
    original = missing.read_bytes()
    kept_mtime = kept.stat().st_mtime_ns
    missing.unlink()

    experiment_service.run_experiment(cfg)
    assert missing.read_bytes() == original
    assert kept.stat().st_mtime_ns == kept_mtime


def test_changed_data_config_is_rejected(tmp_path):
    out = tmp_path / "exp"
    experiment_service.run_experiment(tiny_config(out, seeds=[0]))
    with pytest.raises(ConfigurationError):
        experiment_service.run_experiment(tiny_config(out, seeds=[0], budget=15))


def test_single_seed_has_no_std(tmp_path):
    reports = experiment_service.run_experiment(
        tiny_config(tmp_path / "exp", seeds=[3], strategies=[DefaultStrategy()])
    )
    assert reports[0].std is None
    assert not reports[0].std_available
    assert not math.isnan(reports[0].mean)


def test_failed_runs_are_recorded_and_excluded(tmp_path):
    out = tmp_path / "exp"
    cfg = tiny_config(out, strategies=[DefaultStrategy(), AugmentNStrategy(n=1)])
    reports = experiment_service.run_experiment(cfg)
    augment = next(r for r in reports if r.strategy_id == "augment-1")
    assert augment.results == []
    assert [f.seed for f in augment.failed] == [0, 1]
    assert "ConfigurationError" in augment.failed[0].error
    assert math.isnan(augment.mean)

    with get_db(out) as db:
        failed = run_repository.get_failed_runs(db, "augment-1")
        assert [r.status for r in failed] == [STATUS_FAILED, STATUS_FAILED]


def test_synthetic_augmentations_enable_augment_strategy(tmp_path):
    cfg = tiny_config(tmp_path / "exp", strategies=[AugmentNStrategy(n=1)])
    cfg = cfg.copy(update={"dataset": cfg.dataset.copy(update={"synth_augment": SynthAugmentSpec(n=1)})})
    reports = experiment_service.run_experiment(cfg)
    assert reports[0].failed == []
    # 2 epok x (60 örnek / 8) = 16 adım, Default 8 adım
    assert reports[0].normalized_cost == pytest.approx(2.0)


def test_report_regenerates_files(tmp_path):
    out = tmp_path / "exp"
    experiment_service.run_experiment(tiny_config(out))
    (out / "summary.csv").unlink()
    paths = report_service.report(out, baseline="ensemble-2")
    assert paths["summary"].exists()
    with open(out / "comparison.csv", encoding="utf-8") as handle:
        assert {r["baseline"] for r in csv.DictReader(handle)} == {"ensemble-2"}


def test_report_on_missing_dir(tmp_path):
    with pytest.raises(ConfigurationError):
        report_service.report(tmp_path / "nothing")


def test_shot_sweep_skips_unsupported_k(tmp_path):
    sweeps = experiment_service.run_shot_sweep(
        tiny_config(tmp_path / "shots", seeds=[0], strategies=[DefaultStrategy()]), [2, 50]
    )
    assert list(sweeps) == [2]
    assert (tmp_path / "shots" / "shots_2" / "summary.csv").exists()


def test_vary_shots_per_seed_changes_training_subset(tmp_path):
    cfg = tiny_config(tmp_path / "exp", vary_shots_per_seed=True)
    data = experiment_service.prepare_data(cfg, tmp_path / "exp")
    assert data.vary_shots_per_seed and data.shots_per_class == 10


def test_sensitivity_sweep_records_invalid_points(tmp_path):
    sweep = SweepSpec(
        base=tiny_config(tmp_path / "sweep", seeds=[0, 1, 2]),
        kind="deni",
        params={"ensemble_size": 2},
        groups=[{"steps_noisy": [1, 2]}, {"noise_start_frac": [0.7]}],
        repeats=2,
    )
    points = experiment_service.run_sensitivity(sweep)
    assert [p.status for p in points] == ["ok", "ok", "invalid"]
    assert points[0].point_id == "g0_steps_noisy-1"
    assert points[0].report.n_seeds == 2
    with open(tmp_path / "sweep" / "sensitivity.csv", encoding="utf-8") as handle:
        rows = list(csv.DictReader(handle))
    assert len(rows) == 3
    assert rows[2]["status"] == "invalid"


def test_sweep_axes_must_be_deni_fields(tmp_path):
    with pytest.raises(ValueError):
        SweepSpec(base=tiny_config(tmp_path), grid={"learning_rate": [0.1]})


def test_interrupted_experiment_keeps_finished_runs(tmp_path, monkeypatch):
    out = tmp_path / "exp"
    cfg = tiny_config(out, seeds=[0, 1, 2], strategies=[DefaultStrategy()], workers=1)
    real_run = experiment_service.execute_run

    def interrupted(strategy, seed, data, train_cfg):
        if seed == 2:
            raise KeyboardInterrupt
        return real_run(strategy, seed, data, train_cfg)

    monkeypatch.setattr(experiment_service, "execute_run", interrupted)
    with pytest.raises(KeyboardInterrupt):
        experiment_service.run_experiment(cfg)
    assert run_file(out, "default", 0).exists()
    assert run_file(out, "default", 1).exists()
    assert not run_file(out, "default", 2).exists()
    with get_db(out) as db:
        assert run_repository.get_run(db, "default", 1) is not None

    calls = []

    def counted(strategy, seed, data, train_cfg):
        calls.append(seed)
        return real_run(strategy, seed, data, train_cfg)

    monkeypatch.setattr(experiment_service, "execute_run", counted)
    reports = experiment_service.run_experiment(cfg)
    assert calls == [2]
    assert reports[0].n_seeds == 3


def test_unplannable_strategy_is_reported_without_cost(tmp_path):
    out = tmp_path / "exp"
    # 8 adımlık eğitimde 250 adımlık mutlak DENI döngüsü sığmaz
    deni = DENIStrategy(ensemble_size=2, reference_steps=None)
    reports = experiment_service.run_experiment(
        tiny_config(out, strategies=[DefaultStrategy(), deni], workers=1)
    )
    by_id = {r.strategy_id: r for r in reports}
    assert by_id["default"].normalized_cost == pytest.approx(1.0)
    assert by_id[deni.strategy_id].normalized_cost is None
    assert [f.seed for f in by_id[deni.strategy_id].failed] == [0, 1]
    assert "PlanError" in by_id[deni.strategy_id].failed[0].error
    with open(out / "summary.csv", encoding="utf-8") as handle:
        rows = {r["strategy"]: r for r in csv.DictReader(handle)}
    assert rows[deni.strategy_id]["cost"] == ""
    assert rows[deni.strategy_id]["n_failed"] == "2"


def test_shot_counts_share_one_pretext_backbone(tmp_path):
    base = tmp_path / "shots"
    cfg = tiny_config(
        base, seeds=[0], strategies=[DefaultStrategy()], workers=1,
        backbone=BackboneConfig(source="pretext", pretext_epochs=1),
    )
    sweeps = experiment_service.run_shot_sweep(cfg, [2, 5])
    assert sorted(sweeps) == [2, 5]
    assert (base / "backbone.bin").exists()
    assert not (base / "shots_2" / "backbone.bin").exists()
    assert not (base / "shots_5" / "backbone.bin").exists()

    # havuz 60 örnek, pretext bölümü 4/sınıf; kalan 48 örnek bütçeden bağımsız
    small = experiment_service.prepare_data(cfg.copy(update={"shots_per_class": 2, "budget": None}), tmp_path / "a")
    large = experiment_service.prepare_data(cfg.copy(update={"shots_per_class": 16, "budget": None}), tmp_path / "b")
    assert small.backbone.bitwise_equal(large.backbone)
    assert len(small.pool) == len(large.pool) == 48
    assert len(large.train) == 48
    assert set(small.train.ids) <= set(large.pool.ids)
