"""ParamSet için ikili kapsayıcı + JSON yan dosyası.

Kapsayıcı düzeni (tümü little-endian):
    b"PSET", uint32 sürüm, uint32 grup sayısı, ardından her grup için
    uint32 ad uzunluğu + UTF-8 ad, köken baytı, uint32 rank,
    int64 boyutlar, float64 veriler.
"""
import hashlib
import json
import os
import struct
from pathlib import Path
from typing import Union

import numpy as np

from app.config.logging import setup_logger
from app.exceptions import LabError
from app.models.params import ORIGIN_CODES, ParamGroup, ParamSet

logger = setup_logger(__name__)

MAGIC = b"PSET"
VERSION = 1
_CODE_TO_ORIGIN = {code: origin for origin, code in ORIGIN_CODES.items()}


class CheckpointFormatError(LabError, ValueError):
    pass


def encode_param_set(params: ParamSet) -> bytes:
    chunks = [MAGIC, struct.pack("<II", VERSION, len(params))]
    for group in params:
        name = group.name.encode("utf-8")
        chunks.append(struct.pack("<I", len(name)))
        chunks.append(name)
        chunks.append(struct.pack("<BI", ORIGIN_CODES[group.origin], len(group.shape)))
        chunks.append(np.asarray(group.shape, dtype="<i8").tobytes())
        chunks.append(np.ascontiguousarray(group.tensor, dtype="<f8").tobytes())
    return b"".join(chunks)


def decode_param_set(blob: bytes, trainable: dict = None) -> ParamSet:
    trainable = trainable or {}
    if blob[:4] != MAGIC:
        raise CheckpointFormatError("Geçersiz kapsayıcı imzası")
    version, count = struct.unpack_from("<II", blob, 4)
    if version != VERSION:
        raise CheckpointFormatError(f"Desteklenmeyen sürüm: {version}")
    offset = 12
    groups = []
    try:
        for _ in range(count):
            (name_len,) = struct.unpack_from("<I", blob, offset)
            offset += 4
            name = blob[offset:offset + name_len].decode("utf-8")
            offset += name_len
            origin_code, rank = struct.unpack_from("<BI", blob, offset)
            offset += 5
            dims = np.frombuffer(blob, dtype="<i8", count=rank, offset=offset)
            offset += 8 * rank
            size = int(np.prod(dims)) if rank else 1
            data = np.frombuffer(blob, dtype="<f8", count=size, offset=offset)
            offset += 8 * size
            groups.append(ParamGroup(
                name=name,
                tensor=data.reshape(tuple(int(d) for d in dims)),
                origin=_CODE_TO_ORIGIN[origin_code],
                trainable=trainable.get(name, True),
            ))
    except (struct.error, ValueError, KeyError) as e:
        raise CheckpointFormatError(f"Kapsayıcı çözümlenemedi: {e}")
    if offset != len(blob):
        raise CheckpointFormatError("Kapsayıcının sonunda fazladan bayt var")
    return ParamSet(tuple(groups))


def sidecar_path(path: Union[str, Path]) -> Path:
    return Path(f"{path}.json")


def save_param_set(params: ParamSet, path: Union[str, Path]) -> Path:
    """Kapsayıcıyı ve manifesti atomik olarak yazar."""
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        blob = encode_param_set(params)
        manifest = {
            "format": "PSET",
            "version": VERSION,
            "sha256": hashlib.sha256(blob).hexdigest(),
            "groups": [
                {
                    "name": g.name,
                    "origin": g.origin.value,
                    "shape": list(g.shape),
                    "trainable": g.trainable,
                }
                for g in params
            ],
        }
        tmp = path.with_suffix(path.suffix + ".tmp")
        tmp.write_bytes(blob)
        os.replace(tmp, path)
        sidecar_path(path).write_text(
            json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )
        logger.info(f"Kontrol noktası kaydedildi: {path} ({len(params)} grup)")
        return path
    except Exception as e:
        logger.error(f"Kontrol noktası kaydetme hatası - {path}: {str(e)}")
        raise


def load_param_set(path: Union[str, Path]) -> ParamSet:
    path = Path(path)
    try:
        blob = path.read_bytes()
        trainable = {}
        manifest_file = sidecar_path(path)
        if manifest_file.exists():
            manifest = json.loads(manifest_file.read_text(encoding="utf-8"))
            if manifest.get("sha256") != hashlib.sha256(blob).hexdigest():
                raise CheckpointFormatError(f"Manifest özeti uyuşmuyor: {path}")
            trainable = {g["name"]: g["trainable"] for g in manifest["groups"]}
        params = decode_param_set(blob, trainable)
        logger.info(f"Kontrol noktası yüklendi: {path}")
        return params
    except Exception as e:
        logger.error(f"Kontrol noktası yükleme hatası - {path}: {str(e)}")
        raise
