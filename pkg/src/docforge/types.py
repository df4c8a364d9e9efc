"""Core domain types and geometric primitives shared by all pipeline stages.

All types are immutable after construction and safe to share across worker
threads. Parsing may construct geometrically invalid values on purpose so
that :func:`validate_annotation` can report them instead of raising.
"""

from __future__ import annotations

import math
import random
import re
import warnings
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

from .validation import check_fraction, check_unit_interval

_LABEL_SEP_RE = re.compile(r"[\s\-]+")

SPLIT_TAGS = ("train", "validation", "test")


@dataclass(frozen=True, slots=True)
class BoundingBox:
    """Axis-aligned box in image coordinates, origin at the top-left corner."""

    x_min: float
    y_min: float
    x_max: float
    y_max: float

    def is_valid(self) -> bool:
        """True when the box has positive extent and no negative coordinate."""
        return (
            self.x_min < self.x_max
            and self.y_min < self.y_max
            and self.x_min >= 0
            and self.y_min >= 0
        )

    @property
    def width(self) -> float:
        return self.x_max - self.x_min

    @property
    def height(self) -> float:
        return self.y_max - self.y_min

    @property
    def area(self) -> float:
        return self.width * self.height

    def within(self, image_width: float, image_height: float) -> bool:
        return self.x_max <= image_width and self.y_max <= image_height

    @classmethod
    def from_corner_size(cls, left: float, top: float, width: float,
                         height: float) -> "BoundingBox":
        """Build a box from a (left, top, width, height) tuple.

        Source annotation tuples are corner-plus-size; a tuple whose size
        components are not positive yields an invalid box, which is kept
        (for validation reporting) but loudly flagged here.
        """
        box = cls(left, top, left + width, top + height)
        if not box.is_valid():
            warnings.warn(
                f"corner-size tuple ({left}, {top}, {width}, {height}) "
                f"produced an invalid box {box}; check the source coordinate "
                "convention",
                stacklevel=2,
            )
        return box

    @classmethod
    def from_points(cls, points: Iterable[tuple[float, float]]) -> "BoundingBox":
        """Bounding rectangle of a point list (LabelMe rectangles store two
        opposite corners in arbitrary order)."""
        xs, ys = zip(*points)
        return cls(min(xs), min(ys), max(xs), max(ys))


def iou(a: BoundingBox, b: BoundingBox) -> float:
    """Intersection-over-union of two valid boxes; 0.0 when disjoint."""
    if not a.is_valid() or not b.is_valid():
        raise ValueError(f"iou requires valid boxes, got {a} and {b}")
    inter_w = min(a.x_max, b.x_max) - max(a.x_min, b.x_min)
    inter_h = min(a.y_max, b.y_max) - max(a.y_min, b.y_min)
    if inter_w <= 0 or inter_h <= 0:
        return 0.0
    inter = inter_w * inter_h
    return inter / (a.area + b.area - inter)


@dataclass(frozen=True, slots=True)
class FieldKind:
    """A form field class.

    Four built-in kinds cover the standard form fields; any other label is
    preserved as a user-defined kind so the toolkit extends to other
    document families. Labels are normalized (casefolded, separators
    collapsed to underscores), so ``FieldKind("Police Station")`` equals
    ``FieldKind("police_station")``.
    """

    label: str

    def __post_init__(self):
        normalized = _LABEL_SEP_RE.sub("_", self.label.strip().casefold())
        normalized = re.sub(r"_+", "_", normalized).strip("_")
        if not normalized:
            raise ValueError("field label must be non-empty")
        normalized = _SQUASHED_ALIASES.get(normalized, normalized)
        object.__setattr__(self, "label", normalized)

    @classmethod
    def from_label(cls, raw: str) -> "FieldKind":
        return cls(raw)

    @property
    def is_builtin(self) -> bool:
        return self.label in _BUILTIN_DISPLAY

    @property
    def display_name(self) -> str:
        display = _BUILTIN_DISPLAY.get(self.label)
        if display is None:
            display = self.label.replace("_", " ").title()
        return display

    def sort_key(self) -> tuple[int, str]:
        """Report ordering: built-in kinds first in canonical order, then
        user-defined kinds alphabetically."""
        try:
            return (_BUILTIN_ORDER.index(self.label), self.label)
        except ValueError:
            return (len(_BUILTIN_ORDER), self.label)

    def __str__(self) -> str:
        return self.label


_BUILTIN_DISPLAY = {
    "year": "Year",
    "statute": "Statute",
    "police_station": "Police Station",
    "complainant_name": "Complainant Name",
}
_BUILTIN_ORDER = ["year", "statute", "police_station", "complainant_name"]
# TitleCase-without-space spellings seen in label exports
_SQUASHED_ALIASES = {
    "policestation": "police_station",
    "complainantname": "complainant_name",
}

YEAR = FieldKind("year")
STATUTE = FieldKind("statute")
POLICE_STATION = FieldKind("police_station")
COMPLAINANT_NAME = FieldKind("complainant_name")
BUILTIN_FIELDS = (YEAR, STATUTE, POLICE_STATION, COMPLAINANT_NAME)


@dataclass(frozen=True, slots=True)
class FieldAnnotation:
    """Ground truth for one form field: kind, location, and (optionally) the
    reference transcription."""

    kind: FieldKind
    box: BoundingBox
    value: str | None = None


@dataclass(frozen=True, slots=True)
class DocumentAnnotation:
    """All ground-truth fields of one document image."""

    doc_id: str
    image_extent: tuple[float, float]
    fields: tuple[FieldAnnotation, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "fields", tuple(self.fields))

    def field_of_kind(self, kind: FieldKind) -> FieldAnnotation | None:
        for ann in self.fields:
            if ann.kind == kind:
                return ann
        return None


@dataclass(frozen=True, slots=True)
class ManifestEntry:
    doc_id: str
    split: str
    annotation_path: str | None = None
    image_path: str | None = None

    def __post_init__(self):
        if self.split not in SPLIT_TAGS:
            raise ValueError(f"unknown split tag {self.split!r}")


@dataclass(frozen=True, slots=True)
class DatasetManifest:
    """Document-to-split assignment. Splits partition the doc ids."""

    entries: tuple[ManifestEntry, ...]

    def __post_init__(self):
        object.__setattr__(self, "entries", tuple(self.entries))
        seen = set()
        for entry in self.entries:
            if entry.doc_id in seen:
                raise ValueError(f"duplicate doc_id {entry.doc_id!r} in manifest")
            seen.add(entry.doc_id)

    def doc_ids(self, split: str | None = None) -> list[str]:
        return [e.doc_id for e in self.entries if split is None or e.split == split]

    def counts(self) -> dict[str, int]:
        out = {tag: 0 for tag in SPLIT_TAGS}
        for entry in self.entries:
            out[entry.split] += 1
        return out


@dataclass(frozen=True, slots=True)
class DetectedField:
    """One raw or post-processed detector proposal."""

    kind: FieldKind
    box: BoundingBox
    score: float

    def __post_init__(self):
        check_unit_interval(self.score, "score")


@dataclass(frozen=True, slots=True)
class RecognizedField:
    """Recognizer output for one field, possibly after post-correction.

    ``original_text`` always holds the text before correction and equals
    ``text`` while ``corrected`` is False.
    """

    kind: FieldKind
    text: str
    confidence: float
    corrected: bool = False
    original_text: str | None = None

    def __post_init__(self):
        check_unit_interval(self.confidence, "confidence")
        if self.original_text is None:
            object.__setattr__(self, "original_text", self.text)
        if self.corrected and self.original_text == self.text:
            raise ValueError("corrected=True requires original_text != text")


@dataclass(frozen=True, slots=True)
class Violation:
    """One invariant violation found by :func:`validate_annotation`."""

    doc_id: str
    field: str | None
    rule: str
    detail: str


def validate_annotation(doc: DocumentAnnotation) -> list[Violation]:
    """Check every document invariant and report violations (never raises).

    Rules: ``degenerate-box``, ``negative-coordinates``, ``out-of-extent``,
    ``blank-value``, ``duplicate-field``.
    """
    violations: list[Violation] = []
    width, height = doc.image_extent
    kind_counts: dict[FieldKind, int] = {}
    for ann in doc.fields:
        label = ann.kind.label
        box = ann.box
        if box.x_min >= box.x_max or box.y_min >= box.y_max:
            violations.append(Violation(
                doc.doc_id, label, "degenerate-box",
                f"box {box} has non-positive extent"))
        if box.x_min < 0 or box.y_min < 0:
            violations.append(Violation(
                doc.doc_id, label, "negative-coordinates",
                f"box {box} has negative coordinates"))
        elif box.is_valid() and not box.within(width, height):
            violations.append(Violation(
                doc.doc_id, label, "out-of-extent",
                f"box {box} exceeds image extent {doc.image_extent}"))
        if ann.value is not None and not ann.value.strip():
            violations.append(Violation(
                doc.doc_id, label, "blank-value",
                "transcription value is blank after trimming"))
        if ann.kind.is_builtin:
            kind_counts[ann.kind] = kind_counts.get(ann.kind, 0) + 1
    for kind, count in kind_counts.items():
        if count > 1:
            violations.append(Violation(
                doc.doc_id, kind.label, "duplicate-field",
                f"{count} annotations for built-in field {kind.label}"))
    return violations


def split_dataset(docs: Sequence[str], test_fraction: float,
                  validation_fraction_of_train: float,
                  seed: int) -> DatasetManifest:
    """Deterministically partition documents into train/validation/test.

    The shuffle is a pure function of (docs, fractions, seed). Split sizes
    are floor-rounded, with the remainder staying in the training split:
    test takes floor(n * test_fraction), validation takes
    floor(train_side * validation_fraction_of_train).
    """
    if not docs:
        raise ValueError("cannot split an empty document list")
    if len(set(docs)) != len(docs):
        raise ValueError("doc ids must be unique")
    check_fraction(test_fraction, "test_fraction")
    check_fraction(validation_fraction_of_train, "validation_fraction_of_train")

    shuffled = list(docs)
    random.Random(seed).shuffle(shuffled)

    n_test = math.floor(len(shuffled) * test_fraction)
    test = set(shuffled[:n_test])
    train_side = shuffled[n_test:]
    n_val = math.floor(len(train_side) * validation_fraction_of_train)
    validation = set(train_side[:n_val])

    entries = []
    for doc_id in sorted(shuffled):
        split = "test" if doc_id in test else (
            "validation" if doc_id in validation else "train")
        entries.append(ManifestEntry(doc_id=doc_id, split=split))
    return DatasetManifest(entries=tuple(entries))


def with_paths(manifest: DatasetManifest,
               annotation_paths: dict[str, str],
               image_paths: dict[str, str] | None = None) -> DatasetManifest:
    """Return a copy of the manifest with per-document file paths attached."""
    image_paths = image_paths or {}
    return DatasetManifest(entries=tuple(
        replace(entry,
                annotation_path=annotation_paths.get(entry.doc_id),
                image_path=image_paths.get(entry.doc_id))
        for entry in manifest.entries))
