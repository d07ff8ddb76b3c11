"""Per-question-type dataset balancing by deterministic subsampling.

Two streaming passes: the first counts answers per question type, the
second drops instances whose hash rank exceeds the per-label cap. Rules:

- presence: per class, keep min(#yes, #no) of each answer;
- area: cap the two endpoint labels at the lower median of the non-empty
  middle bins;
- comparison: cap every answer at the lower median of the non-empty
  answer counts (subtypes pooled by default);
- landcover: keep everything.

No cell-level balancing is applied. Selection keeps the smallest
hash(seed, question_id) ranks, so it is order- and worker-independent.
"""

from __future__ import annotations

from collections import Counter, defaultdict
from dataclasses import dataclass
from typing import Iterable, Iterator

from . import rng as _rng


def lower_median(values: list[int]) -> int:
    """Element at index floor((n-1)/2) of the sorted values; 0 for empty."""
    if not values:
        return 0
    s = sorted(values)
    return s[(len(s) - 1) // 2]


def _group_key(rec: dict, pool_subtypes: bool) -> tuple | None:
    """Balancing group of a record, or None for keep-always (landcover)."""
    qtype = rec["qtype"]
    if qtype == "landcover":
        return None
    if qtype == "presence":
        return ("presence", rec["class_a"], rec["answers"][0])
    if qtype == "area":
        return ("area", rec["answers"][0])
    if qtype == "comparison":
        if pool_subtypes:
            return ("comparison", rec["answers"][0])
        return ("comparison", rec["subtype"], rec["answers"][0])
    raise ValueError(f"unknown qtype {qtype!r}")


def _is_area_endpoint(label: str) -> bool:
    return "-" not in label  # "0m²" and the full-image singleton


@dataclass
class BalancePlan:
    """Frozen caps from pass 1; applying the plan is a pure filter."""

    seed: int
    pool_subtypes: bool
    caps: dict  # group key -> cap (groups absent from caps keep everything)
    thresholds: dict  # group key -> max rank kept (only for capped groups)
    before: dict  # group key -> input count

    def keeps(self, rec: dict) -> bool:
        group = _group_key(rec, self.pool_subtypes)
        if group is None or group not in self.thresholds:
            return True
        return _rng.rank(self.seed, rec["question_id"]) <= self.thresholds[group]


def answer_histogram(records: Iterable[dict], pool_subtypes: bool = True) -> dict:
    """Per-qtype answer counts, keyed like the balancing groups."""
    hist: dict = defaultdict(Counter)
    for rec in records:
        group = _group_key(rec, pool_subtypes)
        if group is None:
            hist["landcover"]["(all)"] += 1
        else:
            hist[group[0]][group[1:]] += 1
    return dict(hist)


def compute_plan(records: Iterable[dict], seed: int, pool_subtypes: bool = True) -> BalancePlan:
    counts: Counter = Counter()
    ranks: dict = defaultdict(list)
    n_landcover = 0
    for rec in records:
        group = _group_key(rec, pool_subtypes)
        if group is None:
            n_landcover += 1
            continue
        counts[group] += 1
        ranks[group].append(_rng.rank(seed, rec["question_id"]))

    caps: dict = {}

    # presence: per class, min of yes/no counts on both sides
    classes = {g[1] for g in counts if g[0] == "presence"}
    for cls in classes:
        n_yes = counts.get(("presence", cls, "yes"), 0)
        n_no = counts.get(("presence", cls, "no"), 0)
        cap = min(n_yes, n_no)
        caps[("presence", cls, "yes")] = cap
        caps[("presence", cls, "no")] = cap

    # area: endpoints capped at the lower median of the non-empty middle bins
    middle = [n for g, n in counts.items() if g[0] == "area" and not _is_area_endpoint(g[1]) and n > 0]
    area_cap = lower_median(middle)
    for g in counts:
        if g[0] == "area" and _is_area_endpoint(g[1]):
            caps[g] = area_cap

    # comparison: every answer capped at the lower median of non-empty counts
    comp_groups = [g for g in counts if g[0] == "comparison"]
    if pool_subtypes:
        pools = {None: comp_groups}
    else:
        pools = defaultdict(list)
        for g in comp_groups:
            pools[g[1]].append(g)
    for groups in pools.values():
        med = lower_median([counts[g] for g in groups if counts[g] > 0])
        for g in groups:
            caps[g] = med

    thresholds = {}
    for g, cap in caps.items():
        n = counts.get(g, 0)
        if cap >= n:
            continue  # cap not binding, keep all
        if cap == 0:
            thresholds[g] = b""  # ranks are non-empty digests, so nothing passes
        else:
            thresholds[g] = sorted(ranks[g])[cap - 1]
    before = dict(counts)
    if n_landcover:
        before[("landcover", "(all)")] = n_landcover
    return BalancePlan(seed, pool_subtypes, caps, thresholds, before)


def apply_plan(records: Iterable[dict], plan: BalancePlan) -> Iterator[dict]:
    for rec in records:
        if plan.keeps(rec):
            yield rec


def audit(plan: BalancePlan, kept_records: Iterable[dict] | None = None) -> dict:
    """Per-qtype per-label before/after counts (after = min(before, cap))."""
    out: dict = defaultdict(dict)
    for g, before in sorted(plan.before.items()):
        label = ":".join(str(p) for p in g[1:])
        cap = plan.caps.get(g)
        after = before if cap is None else min(before, cap)
        out[g[0]][label] = {"before": before, "after": after}
    return dict(out)


def balance_dataset(records: list[dict], seed: int, pool_subtypes: bool = True) -> tuple[list[dict], dict]:
    """Two-pass convenience wrapper for in-memory record lists."""
    plan = compute_plan(records, seed, pool_subtypes)
    kept = list(apply_plan(records, plan))
    return kept, audit(plan)
