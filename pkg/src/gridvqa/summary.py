"""Cell-level textual summaries and final explanation strings.

Summary grammar (normative wire format):

    Table: (a1, name), (b1, other); Area: name: 45001-50000m²; other: 0m²

Cell/class pairs are ordered by (cell, category id) with cells in reading
order a1, b1, c1, d1, a2, ...; area entries are ordered by category id.
Unlabeled and sub-threshold classes never appear.

Explanation grammar:

    Based on <a1, b2 | all cells | the absence of a relevant area>, the answer is <labels>.
"""

from __future__ import annotations

from dataclasses import dataclass

from .raster import (
    DEFAULT_THRESHOLD,
    AreaLabel,
    CellId,
    ClassStats,
    Nomenclature,
    RasterError,
    area_label,
    cells_of_class,
    parse_area_label,
    present_classes,
)


@dataclass(frozen=True)
class SummaryView:
    """Structured content of a summary: (cell, category) and (category, area) pairs."""

    table: tuple[tuple[CellId, int], ...]
    areas: tuple[tuple[int, AreaLabel], ...]


def summary_view(
    stats: ClassStats,
    nomenclature: Nomenclature,
    presence_threshold: int = DEFAULT_THRESHOLD,
    cell_threshold: int = DEFAULT_THRESHOLD,
) -> SummaryView:
    present = sorted(present_classes(stats, nomenclature, presence_threshold))
    table = []
    for c in present:
        for cell in cells_of_class(stats, c, cell_threshold):
            table.append((cell, c))
    table.sort(key=lambda pair: (pair[0].index, pair[1]))
    areas = [(c, area_label(int(stats.totals[c]), stats.n_pixels)) for c in present]
    return SummaryView(tuple(table), tuple(areas))


def render_summary(
    stats: ClassStats,
    nomenclature: Nomenclature,
    presence_threshold: int = DEFAULT_THRESHOLD,
    cell_threshold: int = DEFAULT_THRESHOLD,
) -> str:
    view = summary_view(stats, nomenclature, presence_threshold, cell_threshold)
    table = ", ".join(f"({cell.label}, {nomenclature.name(c)})" for cell, c in view.table)
    areas = "; ".join(f"{nomenclature.name(c)}: {label.text}" for c, label in view.areas)
    return f"Table: {table}; Area: {areas}"


def parse_summary(text: str, nomenclature: Nomenclature, grid: int = 4, total_pixels: int = 14400) -> SummaryView:
    """Recover the structured view from a rendered summary."""
    if not text.startswith("Table: "):
        raise RasterError("malformed summary: missing 'Table: ' prefix")
    try:
        table_part, area_part = text[len("Table: "):].split("; Area: ", 1)
    except ValueError:
        raise RasterError("malformed summary: missing '; Area: ' separator") from None

    table = []
    if table_part:
        if not (table_part.startswith("(") and table_part.endswith(")")):
            raise RasterError("malformed summary: table pairs must be parenthesized")
        for pair in table_part[1:-1].split("), ("):
            # cell label first; class names may themselves contain commas
            try:
                cell_s, name = pair.split(", ", 1)
            except ValueError:
                raise RasterError(f"malformed summary: bad table pair {pair!r}") from None
            table.append((CellId.parse(cell_s, grid), nomenclature.id_of(name)))

    areas = []
    if area_part:
        for entry in area_part.split("; "):
            try:
                name, label_s = entry.rsplit(": ", 1)
            except ValueError:
                raise RasterError(f"malformed summary: bad area entry {entry!r}") from None
            areas.append((nomenclature.id_of(name), parse_area_label(label_s, total_pixels)))

    return SummaryView(tuple(table), tuple(areas))


def render_explanation(cells, answers, grid: int = 4) -> str:
    """Final user-facing sentence combining grounding cells and answers."""
    answers = list(answers)
    if not answers:
        raise ValueError("explanation needs at least one answer")
    cells = sorted(cells)
    answer_text = ", ".join(answers)
    if len(cells) == grid * grid:
        where = "all cells"
    elif not cells:
        where = "the absence of a relevant area"
    else:
        where = ", ".join(c.label for c in cells)
    return f"Based on {where}, the answer is {answer_text}."
