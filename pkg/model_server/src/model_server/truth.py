"""File-backed ground-truth store.

Layout matches the toolkit's fixture backend: one JSON record per
(document, field) at ``<root>/<doc_id>/<field>.json`` holding ``text``,
``confidence``, and an optional ``proposals`` list of scored boxes.
Records are re-read per request; the store is treated as read-only.
"""

from __future__ import annotations

import json
from pathlib import Path


class RecordNotFound(LookupError):
    """No record exists for the requested document or field."""


class TruthFormatError(ValueError):
    """A record exists but does not match the expected shape."""


PROPOSAL_KEYS = ("field", "x_min", "y_min", "x_max", "y_max", "score")


def check_name(name: str, what: str) -> str:
    """Reject identifiers that could escape the store directory."""
    if not name or name != Path(name).name or name.startswith("."):
        raise ValueError(f"invalid {what}: {name!r}")
    return name


def _check_proposal(item: object, where: str) -> dict:
    if not isinstance(item, dict):
        raise TruthFormatError(f"{where}: proposal is not an object")
    try:
        out = {"field": str(item["field"])}
        for key in PROPOSAL_KEYS[1:]:
            out[key] = float(item[key])
    except (KeyError, TypeError, ValueError) as exc:
        raise TruthFormatError(f"{where}: invalid proposal: {exc}") from exc
    if not out["field"]:
        raise TruthFormatError(f"{where}: proposal field label is empty")
    if not 0.0 <= out["score"] <= 1.0:
        raise TruthFormatError(f"{where}: proposal score out of range")
    return out


def load_record(root: Path, doc_id: str, field: str) -> dict:
    """Read and validate one (document, field) record."""
    path = root / check_name(doc_id, "doc_id") / \
        f"{check_name(field, 'field')}.json"
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise RecordNotFound(
            f"no record for document {doc_id}, field {field}") from None
    except (OSError, json.JSONDecodeError) as exc:
        raise TruthFormatError(f"{path.name}: unreadable record: {exc}") \
            from exc
    if not isinstance(raw, dict) or not isinstance(raw.get("text"), str):
        raise TruthFormatError(f"{path.name}: record must carry a 'text' "
                               "string")
    confidence = raw.get("confidence")
    if not isinstance(confidence, (int, float)) or isinstance(
            confidence, bool) or not 0.0 <= confidence <= 1.0:
        raise TruthFormatError(f"{path.name}: 'confidence' must be a "
                               "number in [0, 1]")
    proposals = raw.get("proposals", [])
    if not isinstance(proposals, list):
        raise TruthFormatError(f"{path.name}: 'proposals' must be a list")
    return {
        "text": raw["text"],
        "confidence": float(confidence),
        "proposals": [_check_proposal(item, path.name)
                      for item in proposals],
    }


def doc_proposals(root: Path, doc_id: str) -> list[dict]:
    """All proposals recorded for a document, in field-name order."""
    doc_dir = root / check_name(doc_id, "doc_id")
    if not doc_dir.is_dir():
        raise RecordNotFound(f"no records for document {doc_id}")
    proposals: list[dict] = []
    for path in sorted(doc_dir.glob("*.json")):
        record = load_record(root, doc_id, path.stem)
        proposals.extend(record["proposals"])
    return proposals
