import csv
import json
import os
from enum import Enum
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

from app.config.logging import setup_logger
from app.exceptions import DatasetFormatError
from app.models.dataset import AugmentationMap, Dataset, Sample

logger = setup_logger(__name__)

DEFAULT_TEXT_DIM = 256


class DatasetFormat(str, Enum):
    JSONL = "jsonl"
    CSV = "csv"


def infer_format(path: Union[str, Path]) -> DatasetFormat:
    suffix = Path(path).suffix.lower().lstrip(".")
    if suffix in ("jsonl", "json"):
        return DatasetFormat.JSONL
    if suffix == "csv":
        return DatasetFormat.CSV
    raise DatasetFormatError(f"Dosya biçimi çıkarılamadı: {path}")


def _label_key(raw, line: int) -> str:
    if isinstance(raw, bool) or raw is None:
        raise DatasetFormatError(f"Bilinmeyen etiket türü: {raw!r}", line)
    if isinstance(raw, int):
        return str(raw)
    if isinstance(raw, float) and raw.is_integer():
        return str(int(raw))
    if isinstance(raw, str) and raw.strip():
        return raw.strip()
    raise DatasetFormatError(f"Bilinmeyen etiket türü: {raw!r}", line)


def _build_label_map(keys: Sequence[str], classes: Optional[Sequence]) -> Dict[str, int]:
    if classes is not None:
        return {_label_key(c, None): i for i, c in enumerate(classes)}
    unique = set(keys)
    if all(k.lstrip("-").isdigit() for k in unique):
        ordered = sorted(unique, key=int)
    else:
        ordered = sorted(unique)
    return {k: i for i, k in enumerate(ordered)}


def _parse_jsonl(path: Path) -> List[Tuple[int, str, object, str]]:
    rows = []
    with open(path, encoding="utf-8") as handle:
        for line_no, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as e:
                raise DatasetFormatError(f"Geçersiz JSON: {e.msg}", line_no)
            if not isinstance(obj, dict) or "id" not in obj or "label" not in obj:
                raise DatasetFormatError("'id' ve 'label' alanları zorunlu", line_no)
            if ("text" in obj) == ("features" in obj):
                raise DatasetFormatError("'text' veya 'features' alanlarından tam biri olmalı", line_no)
            if "text" in obj:
                if not isinstance(obj["text"], str):
                    raise DatasetFormatError("'text' bir dize olmalı", line_no)
                payload = obj["text"]
            else:
                try:
                    payload = tuple(float(v) for v in obj["features"])
                except (TypeError, ValueError):
                    raise DatasetFormatError("'features' sayı listesi olmalı", line_no)
            rows.append((line_no, str(obj["id"]), payload, _label_key(obj["label"], line_no)))
    return rows


def _parse_csv(path: Path) -> List[Tuple[int, str, object, str]]:
    rows = []
    with open(path, encoding="utf-8", newline="") as handle:
        reader = csv.reader(handle)
        header = next(reader, None)
        if not header or header[:2] != ["id", "label"]:
            raise DatasetFormatError("Başlık 'id,label,...' ile başlamalı", 1)
        is_text = header[2:] == ["text"]
        expected_features = [f"f{i}" for i in range(len(header) - 2)]
        if not is_text and (not expected_features or header[2:] != expected_features):
            raise DatasetFormatError("Başlık 'id,label,text' veya 'id,label,f0..f{d-1}' olmalı", 1)
        for line_no, record in enumerate(reader, start=2):
            if not record:
                continue
            if len(record) != len(header):
                raise DatasetFormatError(f"{len(header)} sütun bekleniyordu, {len(record)} geldi", line_no)
            if is_text:
                payload = record[2]
            else:
                try:
                    payload = tuple(float(v) for v in record[2:])
                except ValueError:
                    raise DatasetFormatError("Özellik sütunları sayısal olmalı", line_no)
            rows.append((line_no, record[0], payload, _label_key(record[1], line_no)))
    return rows


def load_dataset(
    path: Union[str, Path],
    format: Optional[DatasetFormat] = None,
    classes: Optional[Sequence] = None,
    text_dim: int = DEFAULT_TEXT_DIM,
) -> Dataset:
    """JSONL veya CSV veri kümesini okur, etiketleri yoğun indekslere çevirir."""
    path = Path(path)
    fmt = DatasetFormat(format) if format else infer_format(path)
    try:
        rows = _parse_jsonl(path) if fmt == DatasetFormat.JSONL else _parse_csv(path)
        if not rows:
            raise DatasetFormatError(f"Veri kümesi boş: {path}")
        label_map = _build_label_map([r[3] for r in rows], classes)
        kinds = {isinstance(r[2], str) for r in rows}
        if len(kinds) > 1:
            raise DatasetFormatError("Metin ve özellik satırları karışık olamaz")
        if kinds == {True}:
            feature_dim = text_dim
        else:
            dims = {len(r[2]) for r in rows}
            if len(dims) != 1:
                bad = next(r[0] for r in rows if len(r[2]) != len(rows[0][2]))
                raise DatasetFormatError("Özellik vektörleri aynı boyutta olmalı", bad)
            feature_dim = dims.pop()
        samples, seen = [], set()
        for line_no, sample_id, payload, key in rows:
            if key not in label_map:
                raise DatasetFormatError(f"Tanımlı sınıflarda olmayan etiket: {key}", line_no)
            if sample_id in seen:
                raise DatasetFormatError(f"Tekrarlanan kimlik: {sample_id}", line_no)
            seen.add(sample_id)
            samples.append(Sample(sample_id, payload, label_map[key]))
        ds = Dataset(tuple(samples), len(label_map), feature_dim, label_map)
        logger.info(f"Veri kümesi yüklendi: {path} ({len(ds)} örnek, {ds.num_classes} sınıf)")
        return ds
    except DatasetFormatError as e:
        logger.error(f"Veri kümesi okuma hatası - {path}: {str(e)}")
        raise


def load_augmentations(path: Union[str, Path], base: Dataset) -> AugmentationMap:
    """{"id": ..., "paraphrases": [...]} satırlarını okur."""
    path = Path(path)
    aug: AugmentationMap = {}
    known = set(base.ids)
    try:
        with open(path, encoding="utf-8") as handle:
            for line_no, line in enumerate(handle, start=1):
                if not line.strip():
                    continue
                try:
                    obj = json.loads(line)
                except json.JSONDecodeError as e:
                    raise DatasetFormatError(f"Geçersiz JSON: {e.msg}", line_no)
                sample_id = str(obj.get("id"))
                paraphrases = obj.get("paraphrases")
                if sample_id not in known:
                    raise DatasetFormatError(f"Temel veri kümesinde olmayan kimlik: {sample_id}", line_no)
                if not isinstance(paraphrases, list) or not 1 <= len(paraphrases) <= 10:
                    raise DatasetFormatError("'paraphrases' 1-10 elemanlı bir liste olmalı", line_no)
                aug[sample_id] = [
                    p if isinstance(p, str) else tuple(float(v) for v in p) for p in paraphrases
                ]
        logger.info(f"Artırma dosyası yüklendi: {path} ({len(aug)} örnek)")
        return aug
    except Exception as e:
        logger.error(f"Artırma dosyası okuma hatası - {path}: {str(e)}")
        raise


def _atomic_write_lines(path: Path, lines: List[str]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(path.suffix + ".tmp")
    with open(tmp, "w", encoding="utf-8", newline="\n") as handle:
        handle.writelines(line + "\n" for line in lines)
    os.replace(tmp, path)


def save_dataset(ds: Dataset, path: Union[str, Path]) -> Path:
    """Veri kümesini JSONL olarak yazar (etiketler yoğun indeks olarak)."""
    path = Path(path)
    lines = []
    for s in ds.samples:
        obj = {"id": s.id, "label": s.label}
        if s.is_text:
            obj["text"] = s.payload
        else:
            obj["features"] = list(s.payload)
        lines.append(json.dumps(obj, sort_keys=True))
    _atomic_write_lines(path, lines)
    logger.info(f"Veri kümesi yazıldı: {path} ({len(ds)} örnek)")
    return path


def save_augmentations(aug: AugmentationMap, path: Union[str, Path]) -> Path:
    path = Path(path)
    lines = [
        json.dumps({
            "id": sample_id,
            "paraphrases": [p if isinstance(p, str) else list(p) for p in payloads],
        }, sort_keys=True)
        for sample_id, payloads in aug.items()
    ]
    _atomic_write_lines(path, lines)
    logger.info(f"Artırma dosyası yazıldı: {path} ({len(aug)} örnek)")
    return path
