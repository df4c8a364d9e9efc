"""Annotation, gazetteer, and patch-metadata file handling.

Supported formats:

* annotation files: LabelMe-shaped JSON; only image dimensions, shape
  labels, shape points, and the optional per-shape description (used as the
  reference transcription) are read, everything else is ignored.
* gazetteers: line-oriented UTF-8, one entry per line; a two-column
  ``field<TAB>entry`` variant is accepted for combined files.
* patch metadata: tab-separated ``path<TAB>field<TAB>transcription`` lines,
  no header, LF endings.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass
from pathlib import PurePosixPath
from typing import Iterable, Sequence

from .errors import (
    AnnotationParseError,
    EmptyGazetteerError,
    MetadataError,
    ShapeError,
)
from .types import BoundingBox, DocumentAnnotation, FieldAnnotation, FieldKind


@dataclass(frozen=True, slots=True)
class GazetteerRecord:
    """One known-good value for a field."""

    field: FieldKind
    entry: str

    def __post_init__(self):
        if not self.entry.strip():
            raise ValueError("gazetteer entry must be non-empty")


@dataclass(frozen=True, slots=True)
class PatchMetadataRow:
    """Maps one cropped field image to its transcription."""

    patch_path: str
    transcription: str
    field: FieldKind
    doc_id: str


def _byte_offset(content: str, char_pos: int) -> int:
    return len(content[:char_pos].encode("utf-8"))


def parse_labelme(content: str, doc_id: str | None = None) -> DocumentAnnotation:
    """Parse a LabelMe-shaped annotation document.

    Rectangle shapes become field annotations (corner math over the point
    list); labels map to field kinds case-insensitively, unknown labels are
    preserved as user-defined kinds. Non-rectangle shapes are skipped with
    a warning. Raises :class:`AnnotationParseError` (with byte offset) on
    malformed JSON and :class:`ShapeError` for rectangles with fewer than
    two points.
    """
    try:
        data = json.loads(content)
    except json.JSONDecodeError as exc:
        raise AnnotationParseError(
            f"malformed annotation JSON: {exc.msg}",
            byte_offset=_byte_offset(content, exc.pos)) from exc
    if not isinstance(data, dict):
        raise AnnotationParseError("annotation root must be a JSON object")

    try:
        width = float(data["imageWidth"])
        height = float(data["imageHeight"])
    except (KeyError, TypeError, ValueError) as exc:
        raise AnnotationParseError(
            "annotation is missing numeric imageWidth/imageHeight") from exc

    shapes = data.get("shapes", [])
    if not isinstance(shapes, list):
        raise AnnotationParseError("'shapes' must be a list")

    if doc_id is None:
        image_path = data.get("imagePath") or ""
        doc_id = PurePosixPath(str(image_path)).stem or "unknown"

    fields = []
    for index, shape in enumerate(shapes):
        if not isinstance(shape, dict):
            raise ShapeError(f"shape {index} is not an object", index)
        shape_type = shape.get("shape_type", "rectangle")
        if shape_type != "rectangle":
            warnings.warn(
                f"skipping unsupported shape_type {shape_type!r} "
                f"at index {index}", stacklevel=2)
            continue
        points = shape.get("points") or []
        if len(points) < 2:
            raise ShapeError(
                f"shape {index} has {len(points)} point(s), need at least 2",
                index)
        try:
            box = BoundingBox.from_points((float(x), float(y))
                                          for x, y in points)
        except (TypeError, ValueError) as exc:
            raise ShapeError(
                f"shape {index} has non-numeric points", index) from exc
        label = shape.get("label")
        if not isinstance(label, str) or not label.strip():
            raise ShapeError(f"shape {index} has no label", index)
        value = (shape.get("description") or "").strip() or None
        fields.append(FieldAnnotation(kind=FieldKind.from_label(label),
                                      box=box, value=value))

    return DocumentAnnotation(doc_id=doc_id, image_extent=(width, height),
                              fields=tuple(fields))


def load_gazetteer(content: str,
                   field: FieldKind | None = None) -> list[GazetteerRecord]:
    """Load gazetteer entries from line-oriented text.

    Entries are trimmed with case preserved (matching casefolds later, at
    index build). Blank lines are skipped and duplicates dropped keeping
    the first occurrence. Lines containing a tab are read as
    ``field<TAB>entry``; other lines take the ``field`` argument.
    """
    records: list[GazetteerRecord] = []
    seen: set[tuple[FieldKind, str]] = set()
    for line in content.splitlines():
        if not line.strip():
            continue
        if "\t" in line:
            field_label, _, entry = line.partition("\t")
            record_field = FieldKind.from_label(field_label)
        else:
            if field is None:
                raise ValueError(
                    "single-column gazetteer line requires an explicit field")
            record_field = field
            entry = line
        entry = entry.strip()
        if not entry:
            continue
        key = (record_field, entry)
        if key in seen:
            continue
        seen.add(key)
        records.append(GazetteerRecord(field=record_field, entry=entry))
    if not records:
        raise EmptyGazetteerError("gazetteer contains no usable entries")
    return records


def dump_gazetteer(records: Iterable[GazetteerRecord],
                   include_field: bool = False) -> str:
    """Serialize records back to the line format accepted by
    :func:`load_gazetteer`."""
    lines = []
    for record in records:
        if include_field:
            lines.append(f"{record.field.label}\t{record.entry}")
        else:
            lines.append(record.entry)
    return "\n".join(lines) + "\n"


def write_patch_metadata(rows: Sequence[PatchMetadataRow]) -> str:
    """Emit the patch-transcription metadata file.

    One tab-separated line per row (path, field label, transcription),
    sorted by (doc_id, field, path), LF endings. Duplicate patch paths are
    an error.
    """
    seen: set[str] = set()
    for row in rows:
        if row.patch_path in seen:
            raise MetadataError(f"duplicate patch path {row.patch_path!r}")
        seen.add(row.patch_path)
    ordered = sorted(rows, key=lambda r: (r.doc_id, r.field.sort_key(),
                                          r.patch_path))
    lines = [f"{row.patch_path}\t{row.field.label}\t{row.transcription}"
             for row in ordered]
    return "\n".join(lines) + ("\n" if lines else "")
