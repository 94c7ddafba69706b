"""Koşu başına JSONL sonuç dosyaları: runs/<strateji>/seed_<tohum>.jsonl.

İlk satır koşu başlığıdır, ardından her test örneği için bir tahmin satırı
gelir. Anahtarlar sıralı yazılır, dosyalar atomik olarak değiştirilir.
"""
import json
import os
from pathlib import Path
from typing import Dict, List, Optional, Union

from app.config.logging import setup_logger
from app.models.results import RunResult

logger = setup_logger(__name__)

RUNS_DIR = "runs"


def run_file(run_dir: Union[str, Path], strategy_id: str, seed: int) -> Path:
    return Path(run_dir) / RUNS_DIR / strategy_id / f"seed_{seed}.jsonl"


def save_run_result(run_dir: Union[str, Path], result: RunResult) -> Path:
    path = run_file(run_dir, result.strategy_id, result.seed)
    try:
        header = {
            "type": "run",
            "seed": result.seed,
            "strategy_id": result.strategy_id,
            "f1_macro": result.f1_macro,
            "member_steps": result.member_steps,
            "n_test": len(result.gold),
        }
        lines = [json.dumps(header, sort_keys=True)]
        ids = result.test_ids or [str(i) for i in range(len(result.gold))]
        for sample_id, pred, gold in zip(ids, result.predictions, result.gold):
            lines.append(json.dumps({"type": "prediction", "id": sample_id, "pred": pred, "gold": gold}, sort_keys=True))
        path.parent.mkdir(parents=True, exist_ok=True)
        tmp = path.with_suffix(".jsonl.tmp")
        with open(tmp, "w", encoding="utf-8", newline="\n") as handle:
            handle.write("\n".join(lines) + "\n")
        os.replace(tmp, path)
        logger.debug(f"Sonuç dosyası yazıldı: {path}")
        return path
    except Exception as e:
        logger.error(f"Sonuç dosyası yazma hatası - {path}: {str(e)}")
        raise


def load_run_result(path: Union[str, Path]) -> RunResult:
    path = Path(path)
    try:
        with open(path, encoding="utf-8") as handle:
            records = [json.loads(line) for line in handle if line.strip()]
        if not records or records[0].get("type") != "run":
            raise ValueError(f"Koşu başlığı bulunamadı: {path}")
        header, predictions = records[0], records[1:]
        if len(predictions) != header["n_test"]:
            raise ValueError(f"Eksik tahmin satırları: {path}")
        return RunResult(
            seed=header["seed"],
            strategy_id=header["strategy_id"],
            predictions=[r["pred"] for r in predictions],
            gold=[r["gold"] for r in predictions],
            test_ids=[r["id"] for r in predictions],
            f1_macro=header["f1_macro"],
            member_steps=header["member_steps"],
        )
    except Exception as e:
        logger.error(f"Sonuç dosyası okuma hatası - {path}: {str(e)}")
        raise


def find_run_result(run_dir: Union[str, Path], strategy_id: str, seed: int) -> Optional[RunResult]:
    """Tamamlanmış koşunun sonucu; dosya yoksa veya bozuksa None."""
    path = run_file(run_dir, strategy_id, seed)
    if not path.exists():
        return None
    try:
        return load_run_result(path)
    except Exception:
        logger.warning(f"Bozuk sonuç dosyası yeniden hesaplanacak: {path}")
        return None


def load_all_results(run_dir: Union[str, Path]) -> Dict[str, List[RunResult]]:
    """Strateji kimliğine göre gruplanmış, tohuma göre sıralı sonuçlar."""
    root = Path(run_dir) / RUNS_DIR
    grouped: Dict[str, List[RunResult]] = {}
    if not root.exists():
        return grouped
    for strategy_dir in sorted(p for p in root.iterdir() if p.is_dir()):
        results = [load_run_result(f) for f in strategy_dir.glob("seed_*.jsonl")]
        if results:
            grouped[strategy_dir.name] = sorted(results, key=lambda r: r.seed)
    return grouped
