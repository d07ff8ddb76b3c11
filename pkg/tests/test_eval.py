import numpy as np
import pytest

from gridvqa.evalmetrics import (
    EvalError,
    cell_correlation,
    cell_metrics,
    confusion_accumulate,
    seg_metrics,
    vqa_metrics,
)


class TestConfusion:
    def test_identical_maps_diagonal(self):
        cm = np.zeros((4, 4), dtype=np.int64)
        m = np.random.default_rng(0).integers(0, 4, (10, 10))
        confusion_accumulate(cm, m, m)
        assert cm.sum() == 100
        assert np.trace(cm) == 100

    def test_disjoint_constants(self):
        cm = np.zeros((4, 4), dtype=np.int64)
        confusion_accumulate(cm, np.full((5, 5), 1), np.full((5, 5), 2))
        assert cm[1, 2] == 25 and cm.sum() == 25

    def test_additivity(self):
        rng = np.random.default_rng(1)
        gt1, p1 = rng.integers(0, 3, (6, 6)), rng.integers(0, 3, (6, 6))
        gt2, p2 = rng.integers(0, 3, (6, 6)), rng.integers(0, 3, (6, 6))
        a = np.zeros((3, 3), dtype=np.int64)
        confusion_accumulate(a, gt1, p1)
        confusion_accumulate(a, gt2, p2)
        b = np.zeros((3, 3), dtype=np.int64)
        confusion_accumulate(b, np.concatenate([gt1, gt2]), np.concatenate([p1, p2]))
        np.testing.assert_array_equal(a, b)

    def test_shape_mismatch(self):
        with pytest.raises(EvalError):
            confusion_accumulate(np.zeros((2, 2)), np.zeros((3, 3)), np.zeros((2, 2)))


class TestSegMetrics:
    def test_perfect(self):
        m = seg_metrics(np.diag([5, 7, 9]))
        for v in vars(m).values():
            assert v == 1.0

    def test_hand_fixture(self):
        m = seg_metrics(np.array([[3, 1], [1, 3]]))
        assert m.pixel_accuracy == 0.75
        assert m.miou == pytest.approx(0.6)
        assert m.fwiou == pytest.approx(0.6)

    def test_micro_identity_random(self):
        rng = np.random.default_rng(2)
        for _ in range(100):
            k = int(rng.integers(2, 8))
            cm = rng.integers(0, 50, (k, k))
            if cm.sum() == 0:
                continue
            m = seg_metrics(cm)
            assert m.micro_precision == m.micro_recall == m.micro_f1 == m.pixel_accuracy

    def test_bounds(self):
        rng = np.random.default_rng(3)
        for _ in range(50):
            cm = rng.integers(0, 20, (5, 5))
            if cm.sum() == 0:
                continue
            m = seg_metrics(cm)
            diag = np.diag(cm).astype(float)
            rows, cols = cm.sum(1), cm.sum(0)
            iou = np.divide(diag, rows + cols - diag, out=np.zeros(5), where=(rows + cols - diag) > 0)
            present = rows > 0
            assert m.fwiou <= m.pixel_accuracy + 1e-12
            assert iou[present].min() - 1e-12 <= m.miou <= iou[present].max() + 1e-12

    def test_absent_class_conventions_differ(self):
        cm = np.array([[4, 0, 0], [0, 4, 0], [0, 0, 0]])  # class 2 absent from gt
        strict = seg_metrics(cm, include_absent=False)
        padded = seg_metrics(cm, include_absent=True)
        assert strict.mean_pixel_accuracy == 1.0
        assert padded.mean_pixel_accuracy == pytest.approx(2 / 3)

    def test_empty_matrix(self):
        with pytest.raises(EvalError):
            seg_metrics(np.zeros((3, 3)))


def gt(qid, qtype, answers, cells=()):
    return {"question_id": qid, "qtype": qtype, "answers": list(answers), "cells": list(cells)}


def pred(qid, answers, cells=()):
    return {"question_id": qid, "answers": list(answers), "cells": list(cells)}


class TestVqaMetrics:
    def test_perfect(self):
        g = [
            gt("1", "presence", ["yes"]),
            gt("2", "comparison", ["pastures"]),
            gt("3", "landcover", ["a", "b"]),
            gt("4", "area", ["0m²"]),
        ]
        p = [pred(x["question_id"], x["answers"]) for x in g]
        r = vqa_metrics(p, g)
        assert all(v == 1.0 for v in r.per_type_accuracy.values())
        assert r.overall_accuracy == 1.0 and r.landcover_micro_f1 == 1.0

    def test_published_average(self):
        accs = (0.999, 0.944, 0.999, 0.831)
        assert sum(accs) / 4 == pytest.approx(0.943, abs=5e-4)

    def test_overall_is_count_weighted(self):
        g = [gt(str(i), "presence", ["yes"]) for i in range(4)] + [gt("x", "area", ["0m²"])]
        p = [pred(str(i), ["yes"]) for i in range(3)] + [pred("3", ["no"]), pred("x", ["0m²"])]
        r = vqa_metrics(p, g)
        assert r.per_type_accuracy["presence"] == 0.75
        assert r.per_type_accuracy["area"] == 1.0
        assert r.overall_accuracy == pytest.approx((3 + 1) / 5)
        assert r.average_accuracy == pytest.approx((0.75 + 1.0) / 2)

    def test_landcover_partial_set(self):
        g = [gt("1", "landcover", ["a", "b"])]
        p = [pred("1", ["a"])]
        r = vqa_metrics(p, g)
        assert r.per_type_accuracy["landcover"] == 0.0
        # TP=1, FP=0, FN=1 -> precision 1, recall 0.5, F1 = 2/3
        assert r.landcover_micro_f1 == pytest.approx(2 / 3)

    def test_unknown_question_id(self):
        with pytest.raises(EvalError, match="unknown"):
            vqa_metrics([pred("ghost", ["yes"])], [gt("1", "presence", ["yes"])])

    def test_duplicate_prediction(self):
        with pytest.raises(EvalError, match="duplicate"):
            vqa_metrics([pred("1", ["yes"]), pred("1", ["no"])], [gt("1", "presence", ["yes"])])

    def test_permutation_invariance(self):
        g = [gt(str(i), "presence", ["yes"]) for i in range(6)]
        p = [pred(str(i), ["yes" if i % 2 else "no"]) for i in range(6)]
        a = vqa_metrics(p, g)
        b = vqa_metrics(list(reversed(p)), list(reversed(g)))
        assert a == b


class TestCellMetrics:
    def test_exact(self):
        g = [gt("1", "presence", ["yes"], ["a1", "b2"])]
        p = [pred("1", ["yes"], ["a1", "b2"])]
        r = cell_metrics(p, g)
        assert (r.micro_f1, r.precision, r.recall) == (1.0, 1.0, 1.0)

    def test_predict_everything(self):
        all_cells = [f"{c}{r}" for r in "1234" for c in "abcd"]
        g = [gt(str(i), "presence", ["yes"], ["a1"]) for i in range(8)]
        p = [pred(str(i), ["yes"], all_cells) for i in range(8)]
        r = cell_metrics(p, g)
        assert r.recall == 1.0
        assert r.precision == pytest.approx(1 / 16)  # gt density

    def test_empty_predictions(self):
        g = [gt("1", "presence", ["yes"], ["a1"])]
        p = [pred("1", ["yes"], [])]
        r = cell_metrics(p, g)
        assert (r.precision, r.recall, r.micro_f1) == (0.0, 0.0, 0.0)

    def test_f1_harmonic_mean(self):
        g = [gt("1", "presence", ["yes"], ["a1", "b1", "c1"])]
        p = [pred("1", ["yes"], ["a1", "d4"])]
        r = cell_metrics(p, g)
        assert r.micro_f1 == pytest.approx(2 * r.precision * r.recall / (r.precision + r.recall))


class TestCellCorrelation:
    def test_identical_nonconstant_pattern(self):
        sets = [{0, 3, 7}] * 50
        assert cell_correlation(sets) == 1.0

    def test_constant_all_ones(self):
        sets = [set(range(16))] * 50
        assert cell_correlation(sets) == 1.0

    def test_independent_coin_flips_near_zero(self):
        rng = np.random.default_rng(4)
        sets = [{i for i in range(16) if rng.random() < 0.5} for _ in range(10000)]
        assert abs(cell_correlation(sets)) < 0.05

    def test_too_few(self):
        with pytest.raises(EvalError):
            cell_correlation([{1}])

    def test_range(self):
        rng = np.random.default_rng(5)
        sets = [{i for i in range(16) if rng.random() < 0.3} for _ in range(200)]
        assert -1.0 <= cell_correlation(sets) <= 1.0
