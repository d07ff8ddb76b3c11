import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from gridvqa.raster import (
    AreaLabel,
    CellId,
    Nomenclature,
    RasterError,
    all_cells,
    area_label,
    cell_id,
    cells_of_class,
    class_stats,
    load_map,
    parse_area_label,
    present_classes,
    write_pgm,
)


def make_map(data, image_id="img", nomenclature=None):
    return load_map(write_pgm(np.asarray(data, dtype=np.uint8)), image_id, nomenclature=nomenclature)


class TestPgm:
    def test_uniform_raster(self, nomenclature):
        m = make_map(np.full((120, 120), 3), nomenclature=nomenclature)
        assert m.width == m.height == 120
        assert (m.data == 3).all()

    def test_dimensions_not_divisible(self):
        raw = b"P5\n121 120\n255\n" + bytes(121 * 120)
        with pytest.raises(RasterError, match="not divisible"):
            load_map(raw, "x")

    def test_truncated_payload(self):
        raw = b"P5\n120 120\n255\n" + bytes(100)
        with pytest.raises(RasterError, match="unexpected end of data"):
            load_map(raw, "x")

    def test_bad_magic(self):
        with pytest.raises(RasterError, match="P5"):
            load_map(b"P2\n2 2\n255\n0 0 0 0", "x")

    def test_comment_in_header(self):
        raw = b"P5\n# a comment\n4 4\n255\n" + bytes(16)
        m = load_map(raw, "x")
        assert m.width == 4

    def test_category_outside_nomenclature(self, nomenclature):
        with pytest.raises(RasterError, match="outside nomenclature"):
            make_map(np.full((120, 120), 200), nomenclature=nomenclature)

    def test_roundtrip(self):
        data = np.arange(16, dtype=np.uint8).reshape(4, 4)
        m = load_map(write_pgm(data), "x")
        assert (m.data == data).all()


class TestCellId:
    def test_corners(self):
        assert cell_id(0, 0, 120, 120).label == "a1"
        assert cell_id(119, 119, 120, 120).label == "d4"

    def test_interior(self):
        # floor(31/30)=1 -> b, floor(95/30)=3 -> row 4
        assert cell_id(31, 95, 120, 120).label == "b4"

    def test_out_of_bounds(self):
        with pytest.raises(RasterError):
            cell_id(120, 0, 120, 120)

    def test_parse_render_roundtrip(self):
        for c in all_cells():
            assert CellId.parse(c.label) == c

    def test_exactly_16_cells(self):
        assert len({c.label for c in all_cells()}) == 16

    def test_brute_force_pixel_table(self):
        # every pixel maps to exactly one cell; each cell holds 900 pixels
        from collections import Counter

        counts = Counter(cell_id(x, y, 120, 120) for x in range(120) for y in range(120))
        assert len(counts) == 16
        assert set(counts.values()) == {900}


class TestClassStats:
    def test_uniform(self):
        s = class_stats(make_map(np.full((120, 120), 3)))
        assert s.totals[3] == 14400
        assert (s.cell_counts[:, 3] == 900).all()

    def test_one_cell_filled(self):
        data = np.full((120, 120), 3)
        data[:30, :30] = 7
        s = class_stats(make_map(data))
        assert s.totals[7] == 900
        assert s.cell_counts[0, 7] == 900
        assert s.cell_counts[1:, 7].sum() == 0
        assert s.totals[3] == 13500

    def test_absent_class(self):
        s = class_stats(make_map(np.full((120, 120), 3)))
        assert s.totals[5] == 0

    def test_conservation_random(self):
        rng = np.random.default_rng(1)
        for _ in range(20):
            data = rng.integers(0, 44, size=(120, 120)).astype(np.uint8)
            s = class_stats(make_map(data))
            assert s.totals.sum() == 14400
            np.testing.assert_array_equal(s.cell_counts.sum(axis=0), s.totals)


class TestPresence:
    def test_threshold_boundary(self):
        data = np.full((120, 120), 3)
        data.ravel()[:29] = 5
        nomen = Nomenclature({0: "unlabeled", 3: "three", 5: "five"}, 0)
        s = class_stats(make_map(data))
        assert 5 not in present_classes(s, nomen)
        data.ravel()[:30] = 5
        s = class_stats(make_map(data))
        assert 5 in present_classes(s, nomen)

    def test_unlabeled_always_excluded(self, nomenclature):
        s = class_stats(make_map(np.zeros((120, 120))))
        assert present_classes(s, nomenclature) == frozenset()

    def test_cell_threshold(self):
        data = np.full((120, 120), 3)
        data[0, :29] = 7
        s = class_stats(make_map(data))
        assert cells_of_class(s, 7) == frozenset()
        data[0, :30] = 7
        s = class_stats(make_map(data))
        assert {c.label for c in cells_of_class(s, 7)} == {"a1"}

    def test_full_cell(self):
        data = np.full((120, 120), 3)
        data[:30, :30] = 7
        s = class_stats(make_map(data))
        assert {c.label for c in cells_of_class(s, 7)} == {"a1"}

    def test_threshold_one_union_covers_labeled_cells(self):
        rng = np.random.default_rng(7)
        data = rng.integers(1, 44, size=(120, 120)).astype(np.uint8)
        s = class_stats(make_map(data))
        union = set()
        for c in range(1, 44):
            union |= cells_of_class(s, c, threshold=1)
        assert union == set(all_cells())


class TestAreaLabel:
    def test_paper_examples(self):
        assert area_label(458).text == "45001-50000m²"
        assert area_label(0).text == "0m²"
        assert area_label(14400).text == "1440000m²"
        assert area_label(13501).text == "1350001-1355000m²"

    def test_exactly_290_labels(self):
        labels = {area_label(n).text for n in range(14401)}
        assert len(labels) == 290

    def test_singletons(self):
        hits0 = [n for n in range(14401) if area_label(n).index == 0]
        hits_top = [n for n in range(14401) if area_label(n).index == 289]
        assert hits0 == [0]
        assert hits_top == [14400]

    def test_near_full_maps_to_top_range(self):
        assert area_label(14399).text == "1435001-1440000m²"

    @given(st.integers(0, 14399), st.integers(1, 14400))
    def test_monotone(self, a, b):
        lo, hi = sorted((a, b))
        assert area_label(lo).index <= area_label(hi).index

    def test_out_of_range(self):
        with pytest.raises(RasterError):
            area_label(14401)

    def test_parse_roundtrip(self):
        for n in (0, 1, 458, 9999, 13501, 14399, 14400):
            lab = area_label(n)
            assert parse_area_label(lab.text) == lab

    def test_parse_rejects_garbage(self):
        for bad in ("m²", "45000-45001m²", "45001-50000", "5000000-5005000m²"):
            with pytest.raises(RasterError):
                parse_area_label(bad)


class TestNomenclature:
    def test_default(self, nomenclature):
        assert len(nomenclature.answerable) == 43
        assert nomenclature.unlabeled == 0
        assert nomenclature.name(40) == "water courses"
        assert nomenclature.id_of("pastures") == 18

    def test_missing_header(self):
        with pytest.raises(RasterError, match="unlabeled"):
            Nomenclature.parse("0\tzero\n1\tone\n")

    def test_duplicate_names_rejected(self):
        with pytest.raises(ValueError):
            Nomenclature({0: "a", 1: "a"}, 0)
