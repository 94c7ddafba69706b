from typing import List

from app.cli import EXIT_OK, EXIT_PARTIAL_FAILURE
from app.config.logging import setup_logger
from app.models.experiment import ExperimentConfig, SweepSpec
from app.models.results import ExperimentReport
from app.services import experiment_service

logger = setup_logger(__name__)


def _parse_shots(value: str) -> List[int]:
    shots = [int(v) for v in value.split(",") if v.strip()]
    if not shots or any(k < 1 for k in shots):
        raise ValueError(f"Geçersiz örnek listesi: {value}")
    return shots


def _exit_code(reports: List[ExperimentReport]) -> int:
    return EXIT_PARTIAL_FAILURE if any(r.failed for r in reports) else EXIT_OK


def run_command(args) -> int:
    """
    Deney yapılandırmasındaki her strateji x tohum çiftini çalıştırır.

    Args:
        args.config: JSON yapılandırma dosyası
        args.output: Çıktı dizini (yapılandırmadakini geçersiz kılar)
        args.workers: Paralel süreç sayısı
    """
    cfg = ExperimentConfig.parse_file(args.config)
    cfg = _override(cfg, args)
    logger.info(f"Deney başlatılıyor: {len(cfg.strategies)} strateji, {len(cfg.seeds)} tohum")
    reports = experiment_service.run_experiment(cfg)
    for r in reports:
        std = "yok" if r.std is None else f"{r.std:.4f}"
        logger.info(f"{r.strategy_id}: F1 {r.mean:.4f} (std {std}), başarısız {len(r.failed)}")
    return _exit_code(reports)


def shots_command(args) -> int:
    cfg = _override(ExperimentConfig.parse_file(args.config), args)
    sweeps = experiment_service.run_shot_sweep(cfg, _parse_shots(args.shots))
    logger.info(f"Örnek sayısı taraması bitti: {sorted(sweeps)}")
    return _exit_code([r for reports in sweeps.values() for r in reports])


def sweep_command(args) -> int:
    sweep = SweepSpec.parse_file(args.sweep)
    if args.output:
        sweep = sweep.copy(update={"base": sweep.base.copy(update={"output_dir": args.output})})
    points = experiment_service.run_sensitivity(sweep)
    failed = [p for p in points if p.status == "failed" or (p.report is not None and p.report.failed)]
    return EXIT_PARTIAL_FAILURE if failed else EXIT_OK


def _override(cfg: ExperimentConfig, args) -> ExperimentConfig:
    update = {}
    if getattr(args, "output", None):
        update["output_dir"] = args.output
    if getattr(args, "workers", None):
        update["workers"] = args.workers
    return cfg.copy(update=update) if update else cfg


def register(subparsers) -> None:
    run = subparsers.add_parser("run", help="Strateji x tohum deneyi çalıştırır")
    run.add_argument("config")
    run.add_argument("-o", "--output")
    run.add_argument("--workers", type=int)
    run.set_defaults(handler=run_command)

    shots = subparsers.add_parser("shots", help="Sınıf başına örnek sayısı taraması")
    shots.add_argument("config")
    shots.add_argument("--shots", required=True, help="Virgülle ayrılmış liste, ör. 1,5,10")
    shots.add_argument("-o", "--output")
    shots.add_argument("--workers", type=int)
    shots.set_defaults(handler=shots_command)

    sweep = subparsers.add_parser("sweep", help="DeniConfig duyarlılık ızgarası")
    sweep.add_argument("sweep")
    sweep.add_argument("-o", "--output")
    sweep.set_defaults(handler=sweep_command)
