"""Uniform interface to detection and recognition backends.

Two backend kinds are supported:

* ``fixture``: a directory tree holding one JSON record per (document,
  field) at ``<root>/<doc_id>/<field_label>.json`` with keys ``text``,
  ``confidence``, and optional ``proposals``. Deterministic; lets the
  whole toolkit run without a model or images.
* ``remote``: an HTTP client for a model server exposing ``POST
  /recognize``, ``POST /detect``, and ``GET /healthz`` with JSON bodies.

Every value returned by either backend is validated here; malformed
payloads surface as protocol errors instead of leaking into reports.
"""

from __future__ import annotations

import base64
import json
from dataclasses import dataclass, field as dataclass_field
from pathlib import Path

import requests

from .errors import (
    BackendError,
    BackendTimeoutError,
    FixtureNotFoundError,
    ProtocolError,
)
from .types import BoundingBox, DetectedField, FieldKind
from .validation import check_positive_int, check_score

PatchRef = str | Path | bytes | None

DEFAULT_MAX_LENGTH = 32
DEFAULT_BEAM_COUNT = 4
DEFAULT_NO_REPEAT_NGRAM = 3
DEFAULT_LENGTH_PENALTY = 2.0
DEFAULT_PATCH_SIDE = 384


@dataclass(frozen=True, slots=True)
class RecognitionRequest:
    """One field patch to transcribe, with decoding settings.

    The generation settings are carried to the backend verbatim and never
    interpreted locally.
    """

    doc_id: str
    field: FieldKind
    patch: PatchRef = None
    max_length: int = DEFAULT_MAX_LENGTH
    beam_count: int = DEFAULT_BEAM_COUNT
    no_repeat_ngram: int = DEFAULT_NO_REPEAT_NGRAM
    length_penalty: float = DEFAULT_LENGTH_PENALTY

    def __post_init__(self):
        check_positive_int(self.max_length, "max_length")
        check_positive_int(self.beam_count, "beam_count")


@dataclass(frozen=True, slots=True)
class RecognitionResponse:
    """Backend transcription with its confidence."""

    text: str
    confidence: float

    def __post_init__(self):
        check_score(self.confidence, "confidence")


@dataclass(frozen=True, slots=True)
class BackendDescriptor:
    """Where and how to reach a backend."""

    kind: str
    location: str
    timeout: float = 10.0
    patch_side: int = DEFAULT_PATCH_SIDE

    def __post_init__(self):
        if self.kind not in ("fixture", "remote"):
            raise ValueError(f"unknown backend kind {self.kind!r}")
        if self.patch_side <= 0:
            raise ValueError("patch_side must be positive")
        if self.timeout <= 0:
            raise ValueError("timeout must be positive")


def _excerpt(payload) -> str:
    if isinstance(payload, (bytes, bytearray)):
        payload = payload.decode("utf-8", errors="replace")
    elif not isinstance(payload, str):
        payload = json.dumps(payload, sort_keys=True, default=str)
    return payload[:200]


def _parse_recognition(payload) -> RecognitionResponse:
    if not isinstance(payload, dict):
        raise ProtocolError("recognition payload is not an object",
                            _excerpt(payload))
    text = payload.get("text")
    confidence = payload.get("confidence")
    if not isinstance(text, str):
        raise ProtocolError("recognition payload lacks string 'text'",
                            _excerpt(payload))
    if isinstance(confidence, bool) or \
            not isinstance(confidence, (int, float)):
        raise ProtocolError("recognition payload lacks numeric 'confidence'",
                            _excerpt(payload))
    try:
        return RecognitionResponse(text=text.rstrip(),
                                   confidence=float(confidence))
    except ValueError as exc:
        raise ProtocolError(str(exc), _excerpt(payload)) from exc


def _parse_proposals(payload) -> list[DetectedField]:
    if not isinstance(payload, dict) or \
            not isinstance(payload.get("proposals"), list):
        raise ProtocolError("detection payload lacks 'proposals' list",
                            _excerpt(payload))
    detected: list[DetectedField] = []
    for item in payload["proposals"]:
        if not isinstance(item, dict):
            raise ProtocolError("proposal is not an object", _excerpt(item))
        try:
            box = BoundingBox(float(item["x_min"]), float(item["y_min"]),
                              float(item["x_max"]), float(item["y_max"]))
            if not box.is_valid():
                raise ValueError(f"degenerate proposal box {box}")
            detected.append(DetectedField(
                kind=FieldKind.from_label(str(item["field"])),
                box=box, score=float(item["score"])))
        except (KeyError, TypeError, ValueError) as exc:
            raise ProtocolError(f"invalid proposal: {exc}",
                                _excerpt(item)) from exc
    return detected


@dataclass(frozen=True, slots=True)
class FixtureBackend:
    """File-backed backend reading per-field JSON records."""

    root: Path

    def _record_path(self, doc_id: str, field: FieldKind) -> Path:
        return self.root / doc_id / f"{field.label}.json"

    def _load(self, path: Path):
        try:
            content = path.read_text(encoding="utf-8")
        except OSError as exc:
            raise BackendError(f"unreadable fixture {path}: {exc}") from exc
        try:
            return json.loads(content)
        except json.JSONDecodeError as exc:
            raise ProtocolError(f"malformed fixture {path}: {exc.msg}",
                                _excerpt(content)) from exc

    def recognize(self, req: RecognitionRequest) -> RecognitionResponse:
        path = self._record_path(req.doc_id, req.field)
        if not path.is_file():
            raise FixtureNotFoundError(req.doc_id, req.field.label)
        return _parse_recognition(self._load(path))

    def detect(self, doc_id: str,
               image_ref: PatchRef = None) -> list[DetectedField]:
        doc_dir = self.root / doc_id
        if not doc_dir.is_dir():
            raise FixtureNotFoundError(doc_id)
        detected: list[DetectedField] = []
        for path in sorted(doc_dir.glob("*.json")):
            record = self._load(path)
            if isinstance(record, dict) and "proposals" in record:
                detected.extend(_parse_proposals(
                    {"proposals": record["proposals"]}))
        return detected

    def healthy(self) -> bool:
        return self.root.is_dir()


def _encode_ref(ref: PatchRef) -> str:
    if ref is None:
        return ""
    if isinstance(ref, (str, Path)):
        try:
            data = Path(ref).read_bytes()
        except OSError as exc:
            raise BackendError(f"unreadable patch {ref}: {exc}") from exc
    else:
        data = bytes(ref)
    return base64.b64encode(data).decode("ascii")


@dataclass(frozen=True, slots=True)
class RemoteBackend:
    """HTTP client for a model server. Never retries on its own."""

    base_url: str
    timeout: float = 10.0
    session: requests.Session | None = dataclass_field(
        default=None, compare=False)

    def _post(self, endpoint: str, body: dict):
        url = self.base_url.rstrip("/") + endpoint
        poster = self.session.post if self.session is not None \
            else requests.post
        try:
            response = poster(url, json=body, timeout=self.timeout)
        except requests.Timeout as exc:
            raise BackendTimeoutError(
                f"backend timed out after {self.timeout}s: {url}") from exc
        except requests.RequestException as exc:
            raise BackendError(f"backend unreachable: {exc}") from exc
        try:
            payload = response.json()
        except ValueError as exc:
            raise ProtocolError(f"non-JSON response (HTTP "
                                f"{response.status_code})",
                                _excerpt(response.text)) from exc
        if response.status_code != 200:
            detail = payload.get("detail", "") if isinstance(payload, dict) \
                else ""
            error = payload.get("error", "backend error") \
                if isinstance(payload, dict) else "backend error"
            raise BackendError(
                f"{error} (HTTP {response.status_code}): {detail}")
        return payload

    def recognize(self, req: RecognitionRequest) -> RecognitionResponse:
        body = {
            "doc_id": req.doc_id,
            "field": req.field.label,
            "patch_b64": _encode_ref(req.patch),
            "max_length": req.max_length,
            "beam_count": req.beam_count,
            "no_repeat_ngram": req.no_repeat_ngram,
            "length_penalty": req.length_penalty,
        }
        return _parse_recognition(self._post("/recognize", body))

    def detect(self, doc_id: str,
               image_ref: PatchRef = None) -> list[DetectedField]:
        body = {"doc_id": doc_id, "image_b64": _encode_ref(image_ref)}
        return _parse_proposals(self._post("/detect", body))

    def healthy(self) -> bool:
        url = self.base_url.rstrip("/") + "/healthz"
        getter = self.session.get if self.session is not None \
            else requests.get
        try:
            response = getter(url, timeout=self.timeout)
            return response.status_code == 200 and \
                response.json().get("status") == "ok"
        except (requests.RequestException, ValueError):
            return False


def open_backend(descriptor: BackendDescriptor) -> FixtureBackend | RemoteBackend:
    """Instantiate the client matching a descriptor."""
    if descriptor.kind == "fixture":
        return FixtureBackend(root=Path(descriptor.location))
    return RemoteBackend(base_url=descriptor.location,
                         timeout=descriptor.timeout)


def recognize_patch(req: RecognitionRequest,
                    backend: BackendDescriptor) -> RecognitionResponse:
    """Transcribe one field patch through the described backend."""
    return open_backend(backend).recognize(req)


def detect_fields(doc_id: str, image_ref: PatchRef,
                  backend: BackendDescriptor) -> list[DetectedField]:
    """Fetch raw field proposals for a document; no NMS or top-k here."""
    return open_backend(backend).detect(doc_id, image_ref)


def check_health(backend: BackendDescriptor) -> bool:
    """True when the described backend is ready to serve."""
    return open_backend(backend).healthy()
