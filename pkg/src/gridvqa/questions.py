"""Question enumeration and the symbolic pixel-counting oracle.

For each image the generator emits, per answerable class, one presence and
one area question, exactly one land-cover question, one absolute-comparison
question per direction, and relative-comparison questions for every
unordered pair of present classes with unequal pixel totals. Ground-truth
answers and grounding cells come from exact pixel counting over the
segmentation raster.
"""

from __future__ import annotations

import hashlib
import itertools
from dataclasses import dataclass

from . import rng as _rng
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
from .templates import DIRECTIONS, Binding, TemplateRegistry, expand

SCHEMA_VERSION = 1

_KIND_ORDER = {"yes": 0, "no": 1, "class": 2, "area": 3}


@dataclass(frozen=True)
class AnswerLabel:
    """Tagged answer value: yes, no, a class, or an area bin."""

    kind: str  # yes | no | class | area
    category: int | None = None
    area: AreaLabel | None = None

    def sort_key(self):
        return (_KIND_ORDER[self.kind], self.category or 0, self.area.index if self.area else 0)

    def render(self, nomenclature: Nomenclature) -> str:
        if self.kind in ("yes", "no"):
            return self.kind
        if self.kind == "class":
            return nomenclature.name(self.category)
        return self.area.text


YES = AnswerLabel("yes")
NO = AnswerLabel("no")


def class_answer(category: int) -> AnswerLabel:
    return AnswerLabel("class", category=category)


def area_answer(label: AreaLabel) -> AnswerLabel:
    return AnswerLabel("area", area=label)


def parse_answer(text: str, nomenclature: Nomenclature, total_pixels: int = 14400) -> AnswerLabel:
    if text in ("yes", "no"):
        return AnswerLabel(text)
    try:
        return class_answer(nomenclature.id_of(text))
    except RasterError:
        pass
    return area_answer(parse_area_label(text, total_pixels))


def render_answers(answers, nomenclature: Nomenclature) -> list[str]:
    """Canonically ordered rendered labels (yes < no < classes by id < areas by bin)."""
    return [a.render(nomenclature) for a in sorted(answers, key=AnswerLabel.sort_key)]


@dataclass(frozen=True)
class StructuredQuestion:
    qtype: str
    class_a: int | None = None
    class_b: int | None = None
    direction: str | None = None
    template_id: str | None = None
    text: str | None = None


def _flip(direction: str) -> str:
    pairs = {"more": "less", "less": "more", "larger": "smaller", "smaller": "larger"}
    return pairs[direction]


def question_key(sq: StructuredQuestion) -> str:
    """Canonical key, injective over (qtype, classes as unordered pair, direction)."""
    if sq.qtype == "presence":
        return f"presence:{sq.class_a}"
    if sq.qtype == "area":
        return f"area:{sq.class_a}"
    if sq.qtype == "landcover":
        return "landcover"
    if sq.qtype == "comp_absolute":
        return f"absolute:{sq.direction}"
    a, b, d = sq.class_a, sq.class_b, sq.direction
    if sq.qtype == "comp_relative_class":
        lo, hi = min(a, b), max(a, b)
        return f"relclass:{lo}:{hi}:{d}"
    if sq.qtype == "comp_relative_yesno":
        if a <= b:
            return f"relyesno:{a}:{b}:{d}"
        return f"relyesno:{b}:{a}:{_flip(d)}"
    raise ValueError(f"unknown qtype {sq.qtype!r}")


def question_id(image_id: str, sq: StructuredQuestion) -> str:
    h = hashlib.blake2b(f"{image_id}|{question_key(sq)}".encode("utf-8"), digest_size=8)
    return h.hexdigest()


@dataclass(frozen=True)
class QAInstance:
    question_id: str
    image_id: str
    split: str
    sq: StructuredQuestion
    answers: frozenset[AnswerLabel]
    cells: frozenset[CellId]


# six-valued internal qtype <-> (serialized qtype, subtype)
_SERIAL = {
    "presence": ("presence", None),
    "landcover": ("landcover", None),
    "area": ("area", None),
    "comp_absolute": ("comparison", "absolute"),
    "comp_relative_class": ("comparison", "relative_class"),
    "comp_relative_yesno": ("comparison", "relative_yesno"),
}
_DESERIAL = {v: k for k, v in _SERIAL.items()}


def to_record(inst: QAInstance, nomenclature: Nomenclature) -> dict:
    qtype, subtype = _SERIAL[inst.sq.qtype]
    rec = {
        "schema_version": SCHEMA_VERSION,
        "question_id": inst.question_id,
        "image_id": inst.image_id,
        "split": inst.split,
        "qtype": qtype,
        "subtype": subtype,
        "template_id": inst.sq.template_id,
        "question": inst.sq.text,
        "class_a": nomenclature.name(inst.sq.class_a) if inst.sq.class_a is not None else None,
        "class_b": nomenclature.name(inst.sq.class_b) if inst.sq.class_b is not None else None,
        "direction": inst.sq.direction,
        "answers": render_answers(inst.answers, nomenclature),
        "cells": [c.label for c in sorted(inst.cells)],
    }
    return rec


def from_record(rec: dict, nomenclature: Nomenclature, grid: int = 4) -> QAInstance:
    sq = StructuredQuestion(
        qtype=_DESERIAL[(rec["qtype"], rec.get("subtype"))],
        class_a=nomenclature.id_of(rec["class_a"]) if rec.get("class_a") else None,
        class_b=nomenclature.id_of(rec["class_b"]) if rec.get("class_b") else None,
        direction=rec.get("direction"),
        template_id=rec.get("template_id"),
        text=rec.get("question"),
    )
    return QAInstance(
        question_id=rec["question_id"],
        image_id=rec["image_id"],
        split=rec.get("split", "train"),
        sq=sq,
        answers=frozenset(parse_answer(a, nomenclature) for a in rec["answers"]),
        cells=frozenset(CellId.parse(c, grid) for c in rec["cells"]),
    )


def oracle_answer(
    stats: ClassStats,
    sq: StructuredQuestion,
    nomenclature: Nomenclature,
    presence_threshold: int = DEFAULT_THRESHOLD,
    cell_threshold: int = DEFAULT_THRESHOLD,
) -> tuple[frozenset[AnswerLabel], frozenset[CellId]]:
    """Exact ground-truth answer and grounding cells by pixel counting."""
    for c in (sq.class_a, sq.class_b):
        if c is not None and c not in nomenclature.names:
            raise RasterError(f"category {c} not in nomenclature")
    present = present_classes(stats, nomenclature, presence_threshold)
    total_px = stats.n_pixels

    def cells(c):
        return cells_of_class(stats, c, cell_threshold)

    if sq.qtype == "presence":
        if sq.class_a in present:
            return frozenset([YES]), cells(sq.class_a)
        return frozenset([NO]), frozenset()

    if sq.qtype == "landcover":
        answers = frozenset(class_answer(c) for c in present)
        grounded = frozenset(itertools.chain.from_iterable(cells(c) for c in present))
        return answers, grounded

    if sq.qtype == "area":
        if sq.class_a not in present:
            # sub-threshold classes answer as absent, consistently with presence
            return frozenset([area_answer(area_label(0, total_px))]), frozenset()
        label = area_label(int(stats.totals[sq.class_a]), total_px)
        return frozenset([area_answer(label)]), cells(sq.class_a)

    if sq.qtype == "comp_absolute":
        if not present:
            raise RasterError("absolute comparison on an image with no present classes")
        sign = -1 if sq.direction == "dominant" else 1
        winner = min(present, key=lambda c: (sign * int(stats.totals[c]), c))
        return frozenset([class_answer(winner)]), cells(winner)

    if sq.qtype == "comp_relative_class":
        ta, tb = int(stats.totals[sq.class_a]), int(stats.totals[sq.class_b])
        if sq.direction == "larger":
            winner = sq.class_a if (ta, -sq.class_a) > (tb, -sq.class_b) else sq.class_b
        else:
            winner = sq.class_a if (ta, sq.class_a) < (tb, sq.class_b) else sq.class_b
        return frozenset([class_answer(winner)]), cells(sq.class_a) | cells(sq.class_b)

    if sq.qtype == "comp_relative_yesno":
        ta, tb = int(stats.totals[sq.class_a]), int(stats.totals[sq.class_b])
        holds = ta > tb if sq.direction == "more" else ta < tb
        return frozenset([YES if holds else NO]), cells(sq.class_a) | cells(sq.class_b)

    raise ValueError(f"unknown qtype {sq.qtype!r}")


def enumerate_candidates(
    stats: ClassStats,
    registry: TemplateRegistry,
    nomenclature: Nomenclature,
    seed: int,
    split: str = "train",
    presence_threshold: int = DEFAULT_THRESHOLD,
    cell_threshold: int = DEFAULT_THRESHOLD,
    qtypes: tuple[str, ...] = ("presence", "landcover", "area", "comparison"),
    direction_policy: str = "both",
) -> list[QAInstance]:
    """All candidate QA instances for one image, in canonical key order.

    direction_policy: "both" emits every direction of every relative pair;
    "random" draws a single direction per pair and subtype.
    """
    image_id = stats.image_id
    present = sorted(present_classes(stats, nomenclature, presence_threshold))
    sqs: list[StructuredQuestion] = []

    if "presence" in qtypes:
        sqs += [StructuredQuestion("presence", class_a=c) for c in nomenclature.answerable]
    if "area" in qtypes:
        sqs += [StructuredQuestion("area", class_a=c) for c in nomenclature.answerable]
    if "landcover" in qtypes:
        sqs.append(StructuredQuestion("landcover"))
    if "comparison" in qtypes:
        if present:
            for direction in DIRECTIONS["comp_absolute"]:
                sqs.append(StructuredQuestion("comp_absolute", direction=direction))
        for a, b in itertools.combinations(present, 2):
            if int(stats.totals[a]) == int(stats.totals[b]):
                continue
            for qtype in ("comp_relative_class", "comp_relative_yesno"):
                dirs = DIRECTIONS[qtype]
                if direction_policy == "random":
                    pick = _rng.derive_rng(seed, image_id, "pairdir", qtype, a, b)
                    dirs = (dirs[pick.randrange(2)],)
                for direction in dirs:
                    sqs.append(StructuredQuestion(qtype, class_a=a, class_b=b, direction=direction))

    instances = []
    for sq in sqs:
        key = question_key(sq)
        stream = _rng.derive_rng(seed, image_id, key)
        template = stream.choice(registry.for_qtype(sq.qtype))
        binding = Binding(
            class_a=nomenclature.name(sq.class_a) if sq.class_a is not None else None,
            class_b=nomenclature.name(sq.class_b) if sq.class_b is not None else None,
            direction=sq.direction,
        )
        text = expand(template, binding, stream)
        full = StructuredQuestion(sq.qtype, sq.class_a, sq.class_b, sq.direction, template.id, text)
        answers, cells = oracle_answer(stats, full, nomenclature, presence_threshold, cell_threshold)
        instances.append(
            QAInstance(question_id(image_id, full), image_id, split, full, answers, cells)
        )
    instances.sort(key=lambda i: question_key(i.sq))
    return instances
