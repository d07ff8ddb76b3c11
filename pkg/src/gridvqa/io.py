"""Streaming JSONL I/O, run configuration and dataset manifests."""

from __future__ import annotations

import json
import os
import tempfile
from contextlib import contextmanager
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable, Iterator

DEFAULT_NOMENCLATURE = "clc_l3_nomenclature.tsv"
DEFAULT_TEMPLATES = "sample_templates.jsonl"


class JsonlError(ValueError):
    pass


def read_jsonl(path: str | Path, required: tuple[str, ...] = ()) -> Iterator[dict]:
    """Stream records from a JSONL file, naming the line on any violation."""
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as e:
                raise JsonlError(f"{path}: line {lineno}: invalid JSON ({e.msg})") from None
            if not isinstance(obj, dict):
                raise JsonlError(f"{path}: line {lineno}: expected an object")
            missing = [k for k in required if k not in obj]
            if missing:
                raise JsonlError(f"{path}: line {lineno}: missing fields {missing}")
            yield obj


@contextmanager
def atomic_write(path: str | Path, mode: str = "w"):
    """Write to a temp file in the target directory, rename on success."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        kwargs = {} if "b" in mode else {"encoding": "utf-8"}
        with os.fdopen(fd, mode, **kwargs) as fh:
            yield fh
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


def write_jsonl(path: str | Path, records: Iterable[dict]) -> int:
    n = 0
    with atomic_write(path) as fh:
        for rec in records:
            fh.write(json.dumps(rec, ensure_ascii=False, sort_keys=True))
            fh.write("\n")
            n += 1
    return n


def write_text(path: str | Path, text: str) -> None:
    with atomic_write(path) as fh:
        fh.write(text)


@dataclass(frozen=True)
class ImageEntry:
    image_id: str
    path: str
    split: str


SPLITS = ("train", "validation", "test")


def load_manifest(path: str | Path) -> list[ImageEntry]:
    obj = json.loads(Path(path).read_text(encoding="utf-8"))
    images = obj["images"] if isinstance(obj, dict) else obj
    entries = []
    seen = set()
    base = Path(path).parent
    for img in images:
        if img["image_id"] in seen:
            raise JsonlError(f"manifest: duplicate image_id {img['image_id']!r}")
        seen.add(img["image_id"])
        split = img.get("split", "train")
        if split not in SPLITS:
            raise JsonlError(f"manifest: unknown split {split!r} for {img['image_id']}")
        raster = Path(img["path"])
        if not raster.is_absolute():
            raster = base / raster
        entries.append(ImageEntry(img["image_id"], str(raster), split))
    return entries


def _data_path(name: str) -> Path:
    return Path(str(resources.files("gridvqa").joinpath("data", name)))


@dataclass
class RunConfig:
    """Pipeline configuration; the defaults reproduce the reference
    dataset-construction constants (4x4 grid, 30-pixel thresholds)."""

    nomenclature: str = str(_data_path(DEFAULT_NOMENCLATURE))
    templates: str = str(_data_path(DEFAULT_TEMPLATES))
    seed: int = 0
    grid: int = 4
    presence_threshold: int = 30
    cell_threshold: int = 30
    qtypes: tuple[str, ...] = ("presence", "landcover", "area", "comparison")
    direction_policy: str = "both"

    @classmethod
    def load(cls, path: str | Path | None) -> "RunConfig":
        cfg = cls()
        if path is None:
            return cfg
        obj = json.loads(Path(path).read_text(encoding="utf-8"))
        base = Path(path).parent
        for key, value in obj.items():
            if not hasattr(cfg, key):
                raise JsonlError(f"config: unknown key {key!r}")
            if key in ("nomenclature", "templates"):
                p = Path(value)
                value = str(p if p.is_absolute() else base / p)
            if key == "qtypes":
                value = tuple(value)
            setattr(cfg, key, value)
        return cfg
