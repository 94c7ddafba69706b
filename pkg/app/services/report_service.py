"""Koşu dizininden özet, karşılaştırma ve kutu grafiği dosyaları üretir."""
import csv
import json
import math
from pathlib import Path
from typing import Dict, List, Optional, Union

from app.config.logging import setup_logger
from app.database import get_db
from app.exceptions import ConfigurationError, InsufficientRunsError, PlanError
from app.models.results import ExperimentReport, FailedRun
from app.models.strategy import parse_strategy
from app.models.training import TrainConfig
from app.repository import run_repository
from app.repository.result_repository import load_all_results
from app.services.cost_service import normalized_cost
from app.services.metrics_service import boxplot_stats, levene_test, mann_whitney_u, summarize

logger = setup_logger(__name__)

MANIFEST_FILE = "manifest.json"
SUMMARY_FILE = "summary.csv"
COMPARISON_FILE = "comparison.csv"
COMPARISON_MD_FILE = "comparison.md"
BOXPLOT_FILE = "boxplot.csv"


def load_manifest(run_dir: Union[str, Path]) -> Optional[dict]:
    path = Path(run_dir) / MANIFEST_FILE
    if not path.exists():
        return None
    return json.loads(path.read_text(encoding="utf-8"))


def _costs(manifest: Optional[dict]) -> Dict[str, Optional[float]]:
    """Strateji -> normalize maliyet; planı kurulamayan strateji için None."""
    if manifest is None:
        return {}
    config = manifest["config"]
    train_cfg = TrainConfig(**config["train"])
    costs: Dict[str, Optional[float]] = {}
    for raw in config["strategies"]:
        strategy = parse_strategy(raw)
        try:
            costs[strategy.strategy_id] = normalized_cost(
                strategy, train_cfg, manifest["n_train"], manifest["n_all"]
            )
        except PlanError as e:
            logger.warning(f"{strategy.strategy_id}: maliyet hesaplanamadı - {str(e)}")
            costs[strategy.strategy_id] = None
    return costs


def _failed_runs(run_dir: Path) -> Dict[str, List[FailedRun]]:
    with get_db(run_dir) as db:
        failed: Dict[str, List[FailedRun]] = {}
        for record in run_repository.get_failed_runs(db):
            failed.setdefault(record.strategy_id, []).append(
                FailedRun(seed=record.seed, strategy_id=record.strategy_id, error=record.error or "")
            )
        return failed


def build_reports(run_dir: Union[str, Path]) -> List[ExperimentReport]:
    """Disk üzerindeki sonuçlardan strateji raporları; başarısız koşular hariç tutulur."""
    run_dir = Path(run_dir)
    manifest = load_manifest(run_dir)
    grouped = load_all_results(run_dir)
    failed = _failed_runs(run_dir)
    costs = _costs(manifest)

    order = list(costs) if costs else sorted(set(grouped) | set(failed))
    order += sorted((set(grouped) | set(failed)) - set(order))
    reports = []
    for strategy_id in order:
        results = grouped.get(strategy_id, [])
        if not results and strategy_id not in failed:
            continue
        cost = costs.get(strategy_id)
        try:
            report = summarize(results, cost)
        except InsufficientRunsError:
            mean = results[0].f1_macro if results else math.nan
            if results:
                logger.warning(f"{strategy_id}: tek tohum, standart sapma hesaplanamıyor")
            report = ExperimentReport(
                strategy_id=strategy_id, results=results, mean=mean, std=None, normalized_cost=cost
            )
        report.failed = failed.get(strategy_id, [])
        reports.append(report)
    return reports


def _fmt(value: Optional[float], digits: int = 6) -> str:
    if value is None or (isinstance(value, float) and math.isnan(value)):
        return ""
    return f"{value:.{digits}f}"


def _write_csv(path: Path, fieldnames: List[str], rows: List[dict]) -> Path:
    tmp = path.with_suffix(path.suffix + ".tmp")
    with open(tmp, "w", encoding="utf-8", newline="") as handle:
        writer = csv.DictWriter(handle, fieldnames=fieldnames, lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)
    tmp.replace(path)
    return path


def comparison_rows(reports: List[ExperimentReport], baseline: str) -> List[dict]:
    base = next((r for r in reports if r.strategy_id == baseline), None)
    if base is None:
        logger.warning(f"Temel strateji '{baseline}' sonuçlarda yok, p-değerleri boş kalacak")
    rows = []
    for report in reports:
        row = {
            "strategy": report.strategy_id,
            "baseline": baseline,
            "mean": _fmt(report.mean),
            "std": _fmt(report.std),
            "cost": _fmt(report.normalized_cost, 4),
            "mw_u": "",
            "mw_p": "",
            "levene_w": "",
            "levene_p": "",
        }
        if base is not None and report.scores and base.scores:
            mw = mann_whitney_u(report.scores, base.scores)
            row["mw_u"], row["mw_p"] = _fmt(mw.U, 1), _fmt(mw.p)
            if len(report.scores) >= 3 and len(base.scores) >= 3:
                lev = levene_test(report.scores, base.scores)
                row["levene_w"], row["levene_p"] = _fmt(lev.W), _fmt(lev.p)
        rows.append(row)
    return rows


def _markdown_table(rows: List[dict]) -> str:
    lines = [
        "| Strateji | F1 (ortalama ± std) | Maliyet | Mann-Whitney p | Levene p |",
        "|---|---|---|---|---|",
    ]
    for row in rows:
        score = row["mean"] if not row["std"] else f"{row['mean']} ± {row['std']}"
        lines.append(
            f"| {row['strategy']} | {score} | {row['cost']} | {row['mw_p']} | {row['levene_p']} |"
        )
    return "\n".join(lines) + "\n"


def write_reports(
    run_dir: Union[str, Path], reports: List[ExperimentReport], baseline: str
) -> Dict[str, Path]:
    run_dir = Path(run_dir)
    try:
        summary = [
            {
                "strategy": r.strategy_id,
                "mean": _fmt(r.mean),
                "std": _fmt(r.std),
                "cost": _fmt(r.normalized_cost, 4),
                "n_seeds": r.n_seeds,
                "n_failed": len(r.failed),
            }
            for r in reports
        ]
        rows = comparison_rows(reports, baseline)
        boxes = []
        for r in reports:
            if not r.scores:
                continue
            stats = boxplot_stats(r.strategy_id, r.scores)
            boxes.append({
                "strategy": stats.strategy_id,
                "min": _fmt(stats.minimum),
                "q1": _fmt(stats.q1),
                "median": _fmt(stats.median),
                "q3": _fmt(stats.q3),
                "max": _fmt(stats.maximum),
                "outliers": ";".join(_fmt(v) for v in stats.outliers),
            })
        paths = {
            "summary": _write_csv(
                run_dir / SUMMARY_FILE, ["strategy", "mean", "std", "cost", "n_seeds", "n_failed"], summary
            ),
            "comparison": _write_csv(run_dir / COMPARISON_FILE, list(rows[0]) if rows else [], rows),
            "boxplot": _write_csv(
                run_dir / BOXPLOT_FILE, ["strategy", "min", "q1", "median", "q3", "max", "outliers"], boxes
            ),
        }
        md_path = run_dir / COMPARISON_MD_FILE
        md_path.write_text(_markdown_table(rows), encoding="utf-8")
        paths["markdown"] = md_path
        logger.info(f"Raporlar yazıldı: {run_dir} ({len(reports)} strateji)")
        return paths
    except Exception as e:
        logger.error(f"Rapor yazma hatası - {run_dir}: {str(e)}")
        raise


def report(run_dir: Union[str, Path], baseline: Optional[str] = None) -> Dict[str, Path]:
    """report <dir> komutu: sonuçları okuyup dosyaları yeniden üretir."""
    run_dir = Path(run_dir)
    if not run_dir.is_dir():
        raise ConfigurationError(f"Koşu dizini bulunamadı: {run_dir}")
    reports = build_reports(run_dir)
    if not reports:
        raise ConfigurationError(f"Rapor için sonuç bulunamadı: {run_dir}")
    if baseline is None:
        manifest = load_manifest(run_dir)
        baseline = manifest["config"]["baseline"] if manifest else reports[0].strategy_id
    return write_reports(run_dir, reports, baseline)
