"""Question-template grammar: parse, expand, count and reverse-match.

A template is an ordered list of at most 7 components. Each component is
either a set of interchangeable word options, a class placeholder (slot A
or B), or a direction slot (larger/smaller, more/less, dominant/minimal
depending on question type). Expansion joins one choice per component with
single spaces; all punctuation lives inside the options.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass
from pathlib import Path

from .raster import Nomenclature

QTYPES = (
    "presence",
    "landcover",
    "area",
    "comp_absolute",
    "comp_relative_class",
    "comp_relative_yesno",
)

DIRECTIONS = {
    "comp_absolute": ("dominant", "minimal"),
    "comp_relative_class": ("larger", "smaller"),
    "comp_relative_yesno": ("more", "less"),
}

MAX_COMPONENTS = 7


class TemplateError(ValueError):
    pass


@dataclass(frozen=True)
class OptionComponent:
    options: tuple[str, ...]


@dataclass(frozen=True)
class SlotComponent:
    slot: str  # "A", "B" or "direction"


Component = OptionComponent | SlotComponent


@dataclass(frozen=True)
class Template:
    id: str
    qtype: str
    components: tuple[Component, ...]


@dataclass(frozen=True)
class Binding:
    class_a: str | None = None
    class_b: str | None = None
    direction: str | None = None


# required class slots per question type
_SLOT_SPEC = {
    "presence": ("A",),
    "area": ("A",),
    "landcover": (),
    "comp_absolute": (),
    "comp_relative_class": ("A", "B"),
    "comp_relative_yesno": ("A", "B"),
}


def _validate(template: Template) -> None:
    n = len(template.components)
    if n == 0:
        raise TemplateError(f"template {template.id}: no components")
    if n > MAX_COMPONENTS:
        raise TemplateError(f"template {template.id}: component limit exceeded ({n} > {MAX_COMPONENTS})")
    if template.qtype not in QTYPES:
        raise TemplateError(f"template {template.id}: unknown qtype {template.qtype!r}")
    slots = [c.slot for c in template.components if isinstance(c, SlotComponent)]
    class_slots = tuple(s for s in slots if s in ("A", "B"))
    if class_slots != _SLOT_SPEC[template.qtype]:
        raise TemplateError(
            f"template {template.id}: placeholder-count mismatch for qtype {template.qtype} "
            f"(got {class_slots or '()'})"
        )
    n_dir = slots.count("direction")
    needs_dir = template.qtype in DIRECTIONS
    if needs_dir and n_dir != 1:
        raise TemplateError(f"template {template.id}: qtype {template.qtype} needs exactly one direction slot")
    if not needs_dir and n_dir:
        raise TemplateError(f"template {template.id}: direction slot not allowed for qtype {template.qtype}")
    for c in template.components:
        if isinstance(c, OptionComponent):
            if not c.options or any(not o for o in c.options):
                raise TemplateError(f"template {template.id}: empty option set or empty option")


class TemplateRegistry:
    def __init__(self, templates: list[Template]):
        self.templates: dict[str, Template] = {}
        self.by_qtype: dict[str, list[Template]] = {q: [] for q in QTYPES}
        for t in templates:
            if t.id in self.templates:
                raise TemplateError(f"duplicate template id {t.id!r}")
            self.templates[t.id] = t
            self.by_qtype[t.qtype].append(t)

    def __len__(self) -> int:
        return len(self.templates)

    def get(self, template_id: str) -> Template:
        return self.templates[template_id]

    def for_qtype(self, qtype: str) -> list[Template]:
        ts = self.by_qtype.get(qtype, [])
        if not ts:
            raise TemplateError(f"no templates registered for qtype {qtype!r}")
        return ts


def _parse_component(obj: dict, template_id: str) -> Component:
    if "options" in obj:
        return OptionComponent(tuple(obj["options"]))
    if "slot" in obj:
        slot = obj["slot"]
        if slot not in ("A", "B", "direction"):
            raise TemplateError(f"template {template_id}: unknown slot {slot!r}")
        return SlotComponent(slot)
    raise TemplateError(f"template {template_id}: component needs 'options' or 'slot'")


def parse_registry(text: str) -> TemplateRegistry:
    """Parse the JSON-lines template DSL."""
    templates = []
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line:
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as e:
            raise TemplateError(f"template line {lineno}: invalid JSON ({e})") from None
        t = Template(
            id=str(obj["id"]),
            qtype=obj["qtype"],
            components=tuple(_parse_component(c, obj["id"]) for c in obj["components"]),
        )
        _validate(t)
        templates.append(t)
    return TemplateRegistry(templates)


def load_registry(path: str | Path) -> TemplateRegistry:
    return parse_registry(Path(path).read_text(encoding="utf-8"))


def _bound(template: Template, comp: SlotComponent, binding: Binding) -> str:
    value = {"A": binding.class_a, "B": binding.class_b, "direction": binding.direction}[comp.slot]
    if value is None:
        raise TemplateError(f"template {template.id}: binding is missing slot {comp.slot}")
    return value


def expand(template: Template, binding: Binding, rng: random.Random) -> str:
    """Render one question text; one uniform option draw per option component."""
    parts = []
    for comp in template.components:
        if isinstance(comp, OptionComponent):
            parts.append(comp.options[rng.randrange(len(comp.options))])
        else:
            parts.append(_bound(template, comp, binding))
    return " ".join(parts)


def expansions(template: Template, binding: Binding):
    """Yield every distinct expansion (for exhaustive checks)."""

    def rec(i: int, acc: list[str]):
        if i == len(template.components):
            yield " ".join(acc)
            return
        comp = template.components[i]
        if isinstance(comp, OptionComponent):
            for opt in comp.options:
                yield from rec(i + 1, acc + [opt])
        else:
            yield from rec(i + 1, acc + [_bound(template, comp, binding)])

    yield from rec(0, [])


def variant_count(template: Template) -> int:
    n = 1
    for comp in template.components:
        if isinstance(comp, OptionComponent):
            n *= len(comp.options)
    return n


def match_question(
    registry: TemplateRegistry, text: str, nomenclature: Nomenclature
) -> list[tuple[str, Binding]]:
    """All (template id, binding) pairs whose expansions contain `text`.

    Placeholder positions are aligned longest-class-name-first; ambiguity
    (several matching templates or bindings) returns all of them, ordered
    by template id. No match is an empty list, not an error.
    """
    class_names = sorted(set(nomenclature.names.values()), key=len, reverse=True)
    results: list[tuple[str, Binding]] = []
    for tid in sorted(registry.templates):
        template = registry.templates[tid]
        for binding in _match_template(template, text, class_names):
            if (tid, binding) not in results:
                results.append((tid, binding))
    return results


def _match_template(template: Template, text: str, class_names: list[str]):
    directions = DIRECTIONS.get(template.qtype, ())

    def candidates(comp: Component) -> list[str]:
        if isinstance(comp, OptionComponent):
            return list(comp.options)
        if comp.slot == "direction":
            return list(directions)
        return class_names

    def rec(i: int, pos: int, bound: dict):
        if i == len(template.components):
            if pos == len(text):
                yield Binding(bound.get("A"), bound.get("B"), bound.get("direction"))
            return
        prefix = "" if i == 0 else " "
        for cand in candidates(template.components[i]):
            piece = prefix + cand
            if text.startswith(piece, pos):
                comp = template.components[i]
                if isinstance(comp, SlotComponent):
                    yield from rec(i + 1, pos + len(piece), {**bound, comp.slot: cand})
                else:
                    yield from rec(i + 1, pos + len(piece), bound)

    yield from rec(0, 0, {})
