"""Raster ingestion and per-cell land-cover statistics.

A segmentation raster is a single-channel categorical image (category ids
0..255, binary PGM on disk). The image is divided into a fixed square grid
of cells labelled like a chessboard: columns a..d left to right, rows 1..4
top to bottom. All downstream answers are derived from per-class pixel
totals over the image and over each cell.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np

DEFAULT_GRID = 4
DEFAULT_THRESHOLD = 30
DEFAULT_M2_PER_PIXEL = 100
AREA_BIN_M2 = 5000

_COLS = "abcdefghijklmnop"


class RasterError(ValueError):
    """Malformed raster input or out-of-contract raster query."""


@dataclass(frozen=True, order=True)
class CellId:
    """One cell of the grid; index is row-major (index = row*grid + col)."""

    index: int
    grid: int = DEFAULT_GRID

    def __post_init__(self):
        if not 0 <= self.index < self.grid * self.grid:
            raise ValueError(f"cell index {self.index} out of range for grid {self.grid}")

    @property
    def row(self) -> int:
        return self.index // self.grid

    @property
    def col(self) -> int:
        return self.index % self.grid

    @property
    def label(self) -> str:
        return f"{_COLS[self.col]}{self.row + 1}"

    @classmethod
    def from_row_col(cls, row: int, col: int, grid: int = DEFAULT_GRID) -> "CellId":
        return cls(row * grid + col, grid)

    @classmethod
    def parse(cls, label: str, grid: int = DEFAULT_GRID) -> "CellId":
        m = re.fullmatch(r"([a-p])([0-9]+)", label)
        if not m:
            raise RasterError(f"unknown cell label {label!r}")
        col = _COLS.index(m.group(1))
        row = int(m.group(2)) - 1
        if not (0 <= col < grid and 0 <= row < grid):
            raise RasterError(f"unknown cell label {label!r} for grid {grid}")
        return cls.from_row_col(row, col, grid)


def all_cells(grid: int = DEFAULT_GRID) -> list[CellId]:
    return [CellId(i, grid) for i in range(grid * grid)]


@dataclass(frozen=True)
class Nomenclature:
    """Category id -> class name mapping with a designated Unlabeled id."""

    names: dict[int, str]
    unlabeled: int

    def __post_init__(self):
        if self.unlabeled not in self.names:
            raise ValueError("unlabeled id missing from nomenclature")
        if len(set(self.names.values())) != len(self.names):
            raise ValueError("class names must be unique")

    @property
    def n_categories(self) -> int:
        return max(self.names) + 1

    @property
    def answerable(self) -> list[int]:
        """Category ids that may appear in questions/answers, sorted."""
        return sorted(c for c in self.names if c != self.unlabeled)

    def name(self, category: int) -> str:
        try:
            return self.names[category]
        except KeyError:
            raise RasterError(f"category {category} not in nomenclature") from None

    def id_of(self, name: str) -> int:
        for cid, n in self.names.items():
            if n == name:
                return cid
        raise RasterError(f"unknown class name {name!r}")

    @classmethod
    def parse(cls, text: str) -> "Nomenclature":
        """Parse the 'id<TAB>name' format with an 'unlabeled=<id>' header."""
        names: dict[int, str] = {}
        unlabeled = None
        for lineno, line in enumerate(text.splitlines(), 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if line.startswith("unlabeled="):
                unlabeled = int(line.split("=", 1)[1])
                continue
            try:
                cid_s, name = line.split("\t", 1)
                cid = int(cid_s)
            except ValueError:
                raise RasterError(f"nomenclature line {lineno}: expected 'id<TAB>name'") from None
            if cid in names:
                raise RasterError(f"nomenclature line {lineno}: duplicate id {cid}")
            names[cid] = name.strip()
        if unlabeled is None:
            raise RasterError("nomenclature is missing the 'unlabeled=<id>' header")
        return cls(names, unlabeled)

    @classmethod
    def load(cls, path: str | Path) -> "Nomenclature":
        return cls.parse(Path(path).read_text(encoding="utf-8"))


@dataclass(frozen=True)
class SegmentationMap:
    image_id: str
    data: np.ndarray  # (height, width) integer category ids

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]


def _pgm_tokens(data: bytes, n: int) -> tuple[list[bytes], int]:
    """Read n whitespace-separated header tokens, skipping '#' comments.

    Returns the tokens and the offset of the byte after the single
    whitespace character that terminates the last token.
    """
    tokens: list[bytes] = []
    i = 0
    while len(tokens) < n:
        while i < len(data) and data[i : i + 1].isspace():
            i += 1
        if i < len(data) and data[i : i + 1] == b"#":
            while i < len(data) and data[i : i + 1] != b"\n":
                i += 1
            continue
        start = i
        while i < len(data) and not data[i : i + 1].isspace():
            i += 1
        if i == start:
            raise RasterError("malformed PGM: truncated header")
        tokens.append(data[start:i])
        i += 1  # consume exactly one whitespace byte after the token
    return tokens, i


def load_map(
    source: bytes | str | Path,
    image_id: str,
    grid: int = DEFAULT_GRID,
    nomenclature: Nomenclature | None = None,
) -> SegmentationMap:
    """Load a binary PGM (P5, maxval <= 255) segmentation raster."""
    if isinstance(source, (str, Path)):
        raw = Path(source).read_bytes()
    else:
        raw = source
    (magic,), i = _pgm_tokens(raw, 1)
    if magic != b"P5":
        raise RasterError(f"malformed PGM: expected P5 magic, got {magic!r}")
    (w_s, h_s, maxval_s), rest = _pgm_tokens(raw[i:], 3)
    i += rest
    try:
        width, height, maxval = int(w_s), int(h_s), int(maxval_s)
    except ValueError:
        raise RasterError("malformed PGM: non-numeric header field") from None
    if width <= 0 or height <= 0:
        raise RasterError("malformed PGM: non-positive dimensions")
    if not 0 < maxval <= 255:
        raise RasterError(f"unsupported PGM maxval {maxval} (want 1..255)")
    if width % grid or height % grid:
        raise RasterError(f"dimensions {width}x{height} not divisible by grid size {grid}")
    payload = raw[i : i + width * height]
    if len(payload) < width * height:
        raise RasterError("malformed PGM: unexpected end of data")
    data = np.frombuffer(payload, dtype=np.uint8).reshape(height, width)
    if nomenclature is not None:
        bad = set(np.unique(data).tolist()) - set(nomenclature.names)
        if bad:
            raise RasterError(f"category identifiers outside nomenclature: {sorted(bad)}")
    return SegmentationMap(image_id, data)


def write_pgm(data: np.ndarray) -> bytes:
    """Serialize a (h, w) uint8 array as binary PGM."""
    h, w = data.shape
    return b"P5\n%d %d\n255\n" % (w, h) + np.ascontiguousarray(data, dtype=np.uint8).tobytes()


def save_pgm(data: np.ndarray, path: str | Path) -> None:
    Path(path).write_bytes(write_pgm(data))


def cell_id(x: int, y: int, width: int, height: int, grid: int = DEFAULT_GRID) -> CellId:
    """Cell containing pixel (x, y); x is the column, y the row."""
    if not (0 <= x < width and 0 <= y < height):
        raise RasterError(f"pixel ({x}, {y}) out of bounds for {width}x{height}")
    col = x // (width // grid)
    row = y // (height // grid)
    return CellId.from_row_col(row, col, grid)


@dataclass(frozen=True)
class ClassStats:
    """Per-category pixel totals and per-cell counts for one raster."""

    image_id: str
    totals: np.ndarray  # (n_categories,)
    cell_counts: np.ndarray  # (grid*grid, n_categories)
    grid: int

    @property
    def n_pixels(self) -> int:
        return int(self.totals.sum())


def class_stats(smap: SegmentationMap, n_categories: int = 256, grid: int = DEFAULT_GRID) -> ClassStats:
    data = smap.data
    h, w = data.shape
    ch, cw = h // grid, w // grid
    # one bincount over combined (cell, category) keys
    rows = np.arange(h) // ch
    cols = np.arange(w) // cw
    cell_idx = (rows[:, None] * grid + cols[None, :]).astype(np.int64)
    combined = cell_idx * n_categories + data.astype(np.int64)
    counts = np.bincount(combined.ravel(), minlength=grid * grid * n_categories)
    cell_counts = counts.reshape(grid * grid, n_categories)
    return ClassStats(smap.image_id, cell_counts.sum(axis=0), cell_counts, grid)


def present_classes(
    stats: ClassStats, nomenclature: Nomenclature, threshold: int = DEFAULT_THRESHOLD
) -> frozenset[int]:
    """Categories with at least `threshold` pixels image-wide; Unlabeled excluded."""
    return frozenset(
        c for c in nomenclature.answerable if int(stats.totals[c]) >= threshold
    )


def cells_of_class(
    stats: ClassStats, category: int, threshold: int = DEFAULT_THRESHOLD
) -> frozenset[CellId]:
    """Cells where `category` has at least `threshold` pixels."""
    col = stats.cell_counts[:, category]
    return frozenset(CellId(int(i), stats.grid) for i in np.nonzero(col >= threshold)[0])


@dataclass(frozen=True, order=True)
class AreaLabel:
    """One of the discrete area answer bins (290 for the default geometry)."""

    index: int
    text: str


def n_area_bins(total_pixels: int = 14400, m2_per_pixel: int = DEFAULT_M2_PER_PIXEL) -> int:
    return total_pixels * m2_per_pixel // AREA_BIN_M2 + 2


def area_label_text(
    index: int, total_pixels: int = 14400, m2_per_pixel: int = DEFAULT_M2_PER_PIXEL
) -> str:
    full = total_pixels * m2_per_pixel
    top = full // AREA_BIN_M2 + 1  # index of the full-image singleton
    if index == 0:
        return "0m²"
    if index == top:
        return f"{full}m²"
    if not 0 < index < top:
        raise RasterError(f"area bin index {index} out of range")
    return f"{AREA_BIN_M2 * (index - 1) + 1}-{AREA_BIN_M2 * index}m²"


def area_label(
    pixel_count: int, total_pixels: int = 14400, m2_per_pixel: int = DEFAULT_M2_PER_PIXEL
) -> AreaLabel:
    """Bin a pixel count into an area answer label.

    0 and the full image are singleton labels; everything else falls into
    5,000 m² ranges. A count one pixel short of full still maps to the top
    range, never to the singleton.
    """
    if not 0 <= pixel_count <= total_pixels:
        raise RasterError(f"pixel count {pixel_count} exceeds image size {total_pixels}")
    area = pixel_count * m2_per_pixel
    if pixel_count == 0:
        index = 0
    elif pixel_count == total_pixels:
        index = area // AREA_BIN_M2 + 1
    else:
        index = math.ceil(area / AREA_BIN_M2)
    return AreaLabel(index, area_label_text(index, total_pixels, m2_per_pixel))


_AREA_RANGE_RE = re.compile(r"^([0-9]+)-([0-9]+)m²$")


def parse_area_label(
    text: str, total_pixels: int = 14400, m2_per_pixel: int = DEFAULT_M2_PER_PIXEL
) -> AreaLabel:
    full = total_pixels * m2_per_pixel
    if text == "0m²":
        return AreaLabel(0, text)
    if text == f"{full}m²":
        return AreaLabel(full // AREA_BIN_M2 + 1, text)
    m = _AREA_RANGE_RE.match(text)
    if m:
        hi = int(m.group(2))
        if hi % AREA_BIN_M2 == 0 and int(m.group(1)) == hi - AREA_BIN_M2 + 1 and hi <= full:
            return AreaLabel(hi // AREA_BIN_M2, text)
    raise RasterError(f"not an area label: {text!r}")
