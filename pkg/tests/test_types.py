import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from docforge.types import (
    BUILTIN_FIELDS,
    COMPLAINANT_NAME,
    POLICE_STATION,
    STATUTE,
    YEAR,
    BoundingBox,
    DatasetManifest,
    DetectedField,
    DocumentAnnotation,
    FieldAnnotation,
    FieldKind,
    ManifestEntry,
    RecognizedField,
    iou,
    split_dataset,
    validate_annotation,
    with_paths,
)

boxes = st.tuples(
    st.floats(0, 100, allow_nan=False), st.floats(0, 100, allow_nan=False),
    st.floats(1, 100, allow_nan=False), st.floats(1, 100, allow_nan=False),
).map(lambda t: BoundingBox(t[0], t[1], t[0] + t[2], t[1] + t[3]))


class TestBoundingBox:
    def test_dimensions(self):
        box = BoundingBox(10.0, 20.0, 110.0, 60.0)
        assert box.width == 100.0
        assert box.height == 40.0
        assert box.area == 4000.0
        assert box.is_valid()

    def test_degenerate_not_valid(self):
        assert not BoundingBox(5.0, 5.0, 5.0, 9.0).is_valid()
        assert not BoundingBox(5.0, 5.0, 1.0, 9.0).is_valid()

    def test_from_corner_size_warns_on_degenerate(self):
        with pytest.warns(UserWarning):
            box = BoundingBox.from_corner_size(4.0, 4.0, 0.0, 3.0)
        assert not box.is_valid()

    def test_from_points_takes_envelope(self):
        box = BoundingBox.from_points([(9.0, 2.0), (1.0, 8.0), (4.0, 4.0)])
        assert box == BoundingBox(1.0, 2.0, 9.0, 8.0)

    def test_within(self):
        box = BoundingBox(0.0, 0.0, 10.0, 10.0)
        assert box.within(10.0, 10.0)
        assert not box.within(9.0, 10.0)


class TestIou:
    def test_half_overlap_is_one_third(self):
        a = BoundingBox(0.0, 0.0, 2.0, 2.0)
        b = BoundingBox(1.0, 0.0, 3.0, 2.0)
        assert iou(a, b) == pytest.approx(1 / 3)

    def test_identical_is_one(self):
        a = BoundingBox(3.0, 4.0, 9.0, 11.0)
        assert iou(a, a) == 1.0

    def test_disjoint_is_zero(self):
        assert iou(BoundingBox(0.0, 0.0, 1.0, 1.0),
                   BoundingBox(5.0, 5.0, 6.0, 6.0)) == 0.0

    def test_touching_edges_is_zero(self):
        assert iou(BoundingBox(0.0, 0.0, 1.0, 1.0),
                   BoundingBox(1.0, 0.0, 2.0, 1.0)) == 0.0

    def test_invalid_box_raises(self):
        with pytest.raises(ValueError):
            iou(BoundingBox(0.0, 0.0, 0.0, 1.0),
                BoundingBox(0.0, 0.0, 1.0, 1.0))

    @given(a=boxes, b=boxes)
    @settings(max_examples=200, deadline=None)
    def test_symmetric_and_bounded(self, a, b):
        value = iou(a, b)
        assert 0.0 <= value <= 1.0
        assert value == iou(b, a)
        assert iou(a, a) == pytest.approx(1.0)


class TestFieldKind:
    def test_label_normalization(self):
        assert FieldKind.from_label("Police Station") == POLICE_STATION
        assert FieldKind.from_label("police-station") == POLICE_STATION
        assert FieldKind.from_label("PoliceStation") == POLICE_STATION
        assert FieldKind.from_label("  YEAR ") == YEAR
        assert FieldKind.from_label("ComplainantName") == COMPLAINANT_NAME

    def test_custom_labels_survive(self):
        kind = FieldKind.from_label("Case Number")
        assert kind.label == "case_number"
        assert not kind.is_builtin

    def test_display_names(self):
        assert YEAR.display_name == "Year"
        assert POLICE_STATION.display_name == "Police Station"
        assert COMPLAINANT_NAME.display_name == "Complainant Name"

    def test_report_order(self):
        kinds = [COMPLAINANT_NAME, FieldKind.from_label("case_number"),
                 YEAR, POLICE_STATION, STATUTE]
        ordered = sorted(kinds, key=FieldKind.sort_key)
        assert ordered[:4] == [YEAR, STATUTE, POLICE_STATION,
                               COMPLAINANT_NAME]
        assert ordered[4].label == "case_number"

    def test_empty_label_rejected(self):
        with pytest.raises(ValueError):
            FieldKind.from_label("   ")


class TestRecognizedField:
    def test_original_text_defaults_to_text(self):
        rec = RecognizedField(YEAR, "2019", 0.9)
        assert rec.original_text == "2019"

    def test_corrected_requires_changed_text(self):
        with pytest.raises(ValueError):
            RecognizedField(YEAR, "2019", 0.9, corrected=True,
                            original_text="2019")
        rec = RecognizedField(COMPLAINANT_NAME, "Amar Prakash", 0.63,
                              corrected=True, original_text="Amar Prakesh")
        assert rec.corrected

    def test_confidence_range(self):
        with pytest.raises(ValueError):
            RecognizedField(YEAR, "2019", 1.2)


class TestDetectedField:
    def test_score_range(self):
        box = BoundingBox(0.0, 0.0, 1.0, 1.0)
        with pytest.raises(ValueError):
            DetectedField(YEAR, box, -0.1)
        assert DetectedField(YEAR, box, 0.0).score == 0.0


class TestManifest:
    def test_duplicate_doc_ids_rejected(self):
        with pytest.raises(ValueError):
            DatasetManifest(entries=(ManifestEntry("a", "train"),
                                     ManifestEntry("a", "test")))

    def test_unknown_split_rejected(self):
        with pytest.raises(ValueError):
            ManifestEntry("a", "holdout")

    def test_counts_and_doc_ids(self):
        manifest = DatasetManifest(entries=(
            ManifestEntry("a", "train"), ManifestEntry("b", "test"),
            ManifestEntry("c", "train")))
        assert manifest.counts() == {"train": 2, "validation": 0, "test": 1}
        assert manifest.doc_ids("train") == ["a", "c"]
        assert manifest.doc_ids() == ["a", "b", "c"]

    def test_with_paths(self):
        manifest = DatasetManifest(entries=(ManifestEntry("a", "train"),))
        updated = with_paths(manifest, {"a": "x/a.json"}, {"a": "x/a.png"})
        assert updated.entries[0].annotation_path == "x/a.json"
        assert updated.entries[0].image_path == "x/a.png"


class TestValidateAnnotation:
    def _doc(self, fields):
        return DocumentAnnotation("d1", (100.0, 100.0), tuple(fields))

    def test_clean_document_has_no_violations(self):
        doc = self._doc([FieldAnnotation(
            YEAR, BoundingBox(1.0, 1.0, 20.0, 10.0), "2019")])
        assert validate_annotation(doc) == []

    def test_rules_fire(self):
        doc = self._doc([
            FieldAnnotation(YEAR, BoundingBox(5.0, 5.0, 5.0, 9.0), "2019"),
            FieldAnnotation(STATUTE, BoundingBox(-1.0, 1.0, 9.0, 9.0), "x"),
            FieldAnnotation(POLICE_STATION,
                            BoundingBox(1.0, 1.0, 120.0, 9.0), "x"),
            FieldAnnotation(COMPLAINANT_NAME,
                            BoundingBox(1.0, 1.0, 9.0, 9.0), "   "),
            FieldAnnotation(COMPLAINANT_NAME,
                            BoundingBox(1.0, 20.0, 9.0, 29.0), "Amar"),
        ])
        rules = {v.rule for v in validate_annotation(doc)}
        assert rules == {"degenerate-box", "negative-coordinates",
                         "out-of-extent", "blank-value", "duplicate-field"}


class TestSplitDataset:
    def test_fractions_are_floor_rounded(self):
        docs = [f"d{i:03d}" for i in range(375)]
        manifest = split_dataset(docs, 0.2, 0.3, seed=7)
        assert manifest.counts() == {"train": 210, "validation": 90,
                                     "test": 75}

    def test_deterministic_under_seed(self):
        docs = [f"d{i}" for i in range(50)]
        first = split_dataset(docs, 0.2, 0.25, seed=3)
        second = split_dataset(docs, 0.2, 0.25, seed=3)
        assert first == second

    def test_seed_changes_assignment(self):
        docs = [f"d{i}" for i in range(50)]
        by_seed = {seed: split_dataset(docs, 0.5, 0.5, seed=seed)
                   for seed in range(5)}
        assert len({tuple(m.doc_ids("test")) for m in by_seed.values()}) > 1

    def test_input_order_independent_of_output_order(self):
        docs = [f"d{i}" for i in range(20)]
        manifest = split_dataset(docs, 0.25, 0.2, seed=11)
        assert [e.doc_id for e in manifest.entries] == sorted(docs)

    @given(n=st.integers(1, 120), seed=st.integers(0, 2**32 - 1),
           test_fraction=st.floats(0.01, 0.99),
           val_fraction=st.floats(0.01, 0.99))
    @settings(max_examples=100, deadline=None)
    def test_partition_property(self, n, seed, test_fraction, val_fraction):
        docs = [f"d{i}" for i in range(n)]
        manifest = split_dataset(docs, test_fraction, val_fraction, seed)
        assert sorted(e.doc_id for e in manifest.entries) == sorted(docs)
        counts = manifest.counts()
        assert counts["test"] == math.floor(n * test_fraction)
        assert sum(counts.values()) == n

    def test_fraction_bounds_rejected(self):
        with pytest.raises(ValueError):
            split_dataset(["a", "b"], 0.0, 0.5, seed=1)
        with pytest.raises(ValueError):
            split_dataset(["a", "b"], 0.5, 1.0, seed=1)

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            split_dataset([], 0.2, 0.3, seed=1)

    def test_duplicates_rejected(self):
        with pytest.raises(ValueError):
            split_dataset(["a", "a"], 0.2, 0.3, seed=1)


def test_builtin_fields_cover_form_layout():
    assert [kind.label for kind in BUILTIN_FIELDS] == [
        "year", "statute", "police_station", "complainant_name"]
