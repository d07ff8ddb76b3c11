"""Scoring of prediction files: answer metrics, cell grounding metrics,
cell self-correlation, and segmentation-map metrics."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass

import numpy as np

VQA_TYPES = ("presence", "comparison", "landcover", "area")


class EvalError(ValueError):
    pass


# ---------------------------------------------------------------- segmentation

def confusion_accumulate(cm: np.ndarray, gt_map: np.ndarray, pred_map: np.ndarray) -> np.ndarray:
    """Add pixel-wise (gt row, predicted column) counts of one image pair."""
    if gt_map.shape != pred_map.shape:
        raise EvalError(f"shape mismatch: {gt_map.shape} vs {pred_map.shape}")
    k = cm.shape[0]
    idx = gt_map.astype(np.int64).ravel() * k + pred_map.astype(np.int64).ravel()
    cm += np.bincount(idx, minlength=k * k).reshape(k, k)
    return cm


@dataclass(frozen=True)
class SegMetrics:
    micro_precision: float
    micro_recall: float
    micro_f1: float
    macro_precision: float
    macro_recall: float
    macro_f1: float
    pixel_accuracy: float
    mean_pixel_accuracy: float
    miou: float
    fwiou: float


def seg_metrics(cm: np.ndarray, include_absent: bool = False) -> SegMetrics:
    """Confusion-matrix metrics.

    Per-class averages (MPA, macro P/R/F1, mIoU) cover classes with
    ground-truth pixels; `include_absent` instead scores absent classes
    as 0 and averages over every class. Zero denominators yield 0.
    """
    cm = np.asarray(cm, dtype=np.float64)
    total = cm.sum()
    if total == 0:
        raise EvalError("empty confusion matrix")
    diag = np.diag(cm)
    rowsum = cm.sum(axis=1)  # ground-truth counts
    colsum = cm.sum(axis=0)  # predicted counts

    def safe(num, den):
        return np.divide(num, den, out=np.zeros_like(num, dtype=np.float64), where=den > 0)

    precision = safe(diag, colsum)
    recall = safe(diag, rowsum)
    f1 = safe(2 * precision * recall, precision + recall)
    iou = safe(diag, rowsum + colsum - diag)

    mask = np.ones(len(cm), dtype=bool) if include_absent else rowsum > 0
    pa = float(diag.sum() / total)
    fwiou = float(((rowsum / total) * iou).sum())

    # micro: pooled TP = trace, FP = FN = off-diagonal mass, so P = R = F1 = PA
    tp = diag.sum()
    micro_p = float(tp / colsum.sum())
    micro_r = float(tp / rowsum.sum())
    micro_f1 = float(2 * tp / (colsum.sum() + rowsum.sum()))

    return SegMetrics(
        micro_precision=micro_p,
        micro_recall=micro_r,
        micro_f1=micro_f1,
        macro_precision=float(precision[mask].mean()),
        macro_recall=float(recall[mask].mean()),
        macro_f1=float(f1[mask].mean()),
        pixel_accuracy=pa,
        mean_pixel_accuracy=float(recall[mask].mean()),
        miou=float(iou[mask].mean()),
        fwiou=fwiou,
    )


# ------------------------------------------------------------------------ VQA

@dataclass(frozen=True)
class VqaReport:
    per_type_accuracy: dict[str, float]
    per_type_counts: dict[str, int]
    overall_accuracy: float
    average_accuracy: float
    landcover_micro_f1: float


def _index_predictions(predictions: list[dict]) -> dict[str, dict]:
    by_id: dict[str, dict] = {}
    for p in predictions:
        qid = p["question_id"]
        if qid in by_id:
            raise EvalError(f"duplicate prediction for question_id {qid}")
        by_id[qid] = p
    return by_id


def _micro_prf(tp: int, fp: int, fn: int) -> tuple[float, float, float]:
    p = tp / (tp + fp) if tp + fp else 0.0
    r = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * p * r / (p + r) if p + r else 0.0
    return p, r, f1


def vqa_metrics(predictions: list[dict], ground_truth: list[dict]) -> VqaReport:
    """Answer accuracy per question type plus land-cover micro F1.

    Non-landcover samples are correct iff the predicted singleton equals
    the stored answer; landcover samples require exact set equality.
    """
    preds = _index_predictions(predictions)
    unknown = set(preds) - {g["question_id"] for g in ground_truth}
    if unknown:
        raise EvalError(f"predictions for unknown question_ids: {sorted(unknown)[:3]}")

    correct = {q: 0 for q in VQA_TYPES}
    counts = {q: 0 for q in VQA_TYPES}
    lc_tp = lc_fp = lc_fn = 0
    for gt in ground_truth:
        pred = preds.get(gt["question_id"])
        qtype = gt["qtype"]
        counts[qtype] += 1
        gt_set = set(gt["answers"])
        pred_set = set(pred["answers"]) if pred else set()
        if qtype == "landcover":
            if pred_set == gt_set:
                correct[qtype] += 1
            lc_tp += len(pred_set & gt_set)
            lc_fp += len(pred_set - gt_set)
            lc_fn += len(gt_set - pred_set)
        else:
            if len(pred_set) == 1 and pred_set == gt_set:
                correct[qtype] += 1

    scored = [q for q in VQA_TYPES if counts[q] > 0]
    per_type = {q: correct[q] / counts[q] for q in scored}
    total = sum(counts[q] for q in scored)
    overall = sum(correct[q] for q in scored) / total if total else 0.0
    average = sum(per_type.values()) / len(scored) if scored else 0.0
    _, _, lc_f1 = _micro_prf(lc_tp, lc_fp, lc_fn)
    return VqaReport(per_type, {q: counts[q] for q in scored}, overall, average, lc_f1)


# ----------------------------------------------------------------------- cells

@dataclass(frozen=True)
class CellReport:
    micro_f1: float
    precision: float
    recall: float
    correlation: float | None = None


def cell_metrics(predictions: list[dict], ground_truth: list[dict]) -> CellReport:
    """Micro P/R/F1 over pooled per-(sample, cell) binary decisions."""
    preds = _index_predictions(predictions)
    unknown = set(preds) - {g["question_id"] for g in ground_truth}
    if unknown:
        raise EvalError(f"predictions for unknown question_ids: {sorted(unknown)[:3]}")
    tp = fp = fn = 0
    for gt in ground_truth:
        pred = preds.get(gt["question_id"])
        gt_set = set(gt["cells"])
        pred_set = set(pred["cells"]) if pred else set()
        tp += len(pred_set & gt_set)
        fp += len(pred_set - gt_set)
        fn += len(gt_set - pred_set)
    p, r, f1 = _micro_prf(tp, fp, fn)
    return CellReport(f1, p, r)


def cell_correlation(cell_sets: list, grid: int = 4) -> float:
    """Mean pairwise Pearson correlation of the per-cell indicator columns.

    A pair of constant columns contributes 1, a constant/varying pair 0,
    so a predictor that always emits the same cell pattern scores exactly
    1 regardless of the pattern.
    """
    n_cells = grid * grid
    if len(cell_sets) < 2:
        raise EvalError("need at least 2 predictions for self-correlation")
    m = np.zeros((len(cell_sets), n_cells), dtype=np.float64)
    for i, cells in enumerate(cell_sets):
        for c in cells:
            idx = c if isinstance(c, int) else c.index
            m[i, idx] = 1.0
    centered = m - m.mean(axis=0)
    std = centered.std(axis=0)
    scores = []
    for i in range(n_cells):
        for j in range(i + 1, n_cells):
            if std[i] == 0.0 or std[j] == 0.0:
                scores.append(1.0 if std[i] == std[j] == 0.0 else 0.0)
            else:
                scores.append(float((centered[:, i] * centered[:, j]).mean() / (std[i] * std[j])))
    return float(np.mean(scores))


# -------------------------------------------------------------------- reports

def reports_to_json(vqa: VqaReport | None, cells: CellReport | None, seg: SegMetrics | None) -> str:
    out = {}
    if vqa is not None:
        out["vqa"] = asdict(vqa)
    if cells is not None:
        out["cells"] = asdict(cells)
    if seg is not None:
        out["segmentation"] = asdict(seg)
    return json.dumps(out, indent=2, ensure_ascii=False)


def reports_to_tsv(vqa: VqaReport | None, cells: CellReport | None, seg: SegMetrics | None) -> str:
    lines = ["section\tmetric\tvalue"]
    if vqa is not None:
        for q, acc in vqa.per_type_accuracy.items():
            lines.append(f"vqa\taccuracy_{q}\t{acc:.5f}")
        lines.append(f"vqa\toverall_accuracy\t{vqa.overall_accuracy:.5f}")
        lines.append(f"vqa\taverage_accuracy\t{vqa.average_accuracy:.5f}")
        lines.append(f"vqa\tlandcover_micro_f1\t{vqa.landcover_micro_f1:.5f}")
    if cells is not None:
        lines.append(f"cells\tmicro_f1\t{cells.micro_f1:.5f}")
        lines.append(f"cells\tprecision\t{cells.precision:.5f}")
        lines.append(f"cells\trecall\t{cells.recall:.5f}")
        if cells.correlation is not None:
            lines.append(f"cells\tcorrelation\t{cells.correlation:.5f}")
    if seg is not None:
        for name, value in asdict(seg).items():
            lines.append(f"segmentation\t{name}\t{value:.5f}")
    return "\n".join(lines) + "\n"
