"""Answer/cell distribution bias scores.

For a label histogram with N samples, A_unique distinct labels and the
most frequent label occurring A_common times:

    uniform = 1 / A_unique
    prior   = A_common / N
    bias    = (prior - uniform) / (1 - uniform)

All three lie in [0, 1]; lower bias means a flatter answer distribution.
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import asdict, dataclass
from typing import Iterable

QTYPE_ROWS = ("presence", "landcover", "area", "comparison")

TSV_COLUMNS = ("row", "N", "A_unique", "A_common", "most_common", "prior", "uniform", "lb_score")


class BiasError(ValueError):
    pass


def uniform(a_unique: int) -> float:
    if a_unique < 1:
        raise BiasError("need at least one distinct answer")
    return 1.0 / a_unique


def prior(a_common: int, n: int) -> float:
    if n == 0:
        raise BiasError("empty sample")
    if not 0 < a_common <= n:
        raise BiasError(f"invalid most-common count {a_common} for N={n}")
    return a_common / n


def lb_score(prior_: float, uniform_: float) -> float:
    if uniform_ >= 1.0:
        return 0.0  # a single possible answer cannot be biased
    return (prior_ - uniform_) / (1.0 - uniform_)


@dataclass(frozen=True)
class BiasRow:
    row: str
    n: int
    a_unique: int
    a_common: int
    most_common: str
    prior: float
    uniform: float
    lb_score: float


def row_from_counts(name: str, n: int, a_unique: int, a_common: int, most_common: str = "") -> BiasRow:
    p = prior(a_common, n)
    u = uniform(a_unique)
    return BiasRow(name, n, a_unique, a_common, most_common, p, u, lb_score(p, u))


def row_from_histogram(name: str, hist: Counter) -> BiasRow:
    if not hist:
        raise BiasError(f"empty histogram for row {name!r}")
    most_common, a_common = max(hist.items(), key=lambda kv: (kv[1], kv[0]))
    return row_from_counts(name, sum(hist.values()), len(hist), a_common, most_common)


@dataclass(frozen=True)
class BiasReport:
    rows: tuple[BiasRow, ...]

    def row(self, name: str) -> BiasRow:
        for r in self.rows:
            if r.row == name:
                return r
        raise KeyError(name)


def bias_report(records: Iterable[dict]) -> BiasReport:
    """Table-style bias report over a QA record stream.

    Rows: one per question type, pooled "All Answers", "All Cells" (one
    count per (instance, cell) membership), "Average" (mean of the
    per-qtype score columns) and "Overall" (answers and cells pooled).
    Multi-label answers count once per label.
    """
    per_qtype: dict[str, Counter] = {q: Counter() for q in QTYPE_ROWS}
    cell_hist: Counter = Counter()
    n = 0
    for rec in records:
        n += 1
        hist = per_qtype[rec["qtype"]]
        for a in rec["answers"]:
            hist[a] += 1
        for c in rec["cells"]:
            cell_hist[c] += 1
    if n == 0:
        raise BiasError("empty dataset")

    rows = []
    qtype_rows = []
    for q in QTYPE_ROWS:
        if per_qtype[q]:
            r = row_from_histogram(q, per_qtype[q])
            qtype_rows.append(r)
            rows.append(r)
    all_answers: Counter = Counter()
    for q in QTYPE_ROWS:
        all_answers.update(per_qtype[q])
    rows.append(row_from_histogram("All Answers", all_answers))
    if cell_hist:
        rows.append(row_from_histogram("All Cells", cell_hist))

    if qtype_rows:
        k = len(qtype_rows)
        rows.append(
            BiasRow(
                "Average", 0, 0, 0, "",
                sum(r.prior for r in qtype_rows) / k,
                sum(r.uniform for r in qtype_rows) / k,
                sum(r.lb_score for r in qtype_rows) / k,
            )
        )
    pooled = all_answers + cell_hist
    rows.append(row_from_histogram("Overall", pooled))
    return BiasReport(tuple(rows))


def to_tsv(report: BiasReport) -> str:
    lines = ["\t".join(TSV_COLUMNS)]
    for r in report.rows:
        lines.append(
            "\t".join(
                [r.row, str(r.n), str(r.a_unique), str(r.a_common), r.most_common,
                 f"{r.prior:.5f}", f"{r.uniform:.5f}", f"{r.lb_score:.5f}"]
            )
        )
    return "\n".join(lines) + "\n"


def to_json(report: BiasReport) -> str:
    return json.dumps({"rows": [asdict(r) for r in report.rows]}, indent=2, ensure_ascii=False)
