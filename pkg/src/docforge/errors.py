"""Exception taxonomy shared across the toolkit.

Operational errors map to CLI exit codes: configuration problems exit 1,
backend failures exit 2, partial per-document failures exit 3.
"""

from __future__ import annotations


class DocforgeError(Exception):
    """Base class for all toolkit errors."""


class ConfigurationError(DocforgeError):
    """Invalid or incomplete configuration (missing paths, bad thresholds,
    correction requested for a field with no gazetteer index)."""


class AnnotationError(DocforgeError):
    """Problem in an annotation document."""


class AnnotationParseError(AnnotationError):
    """Malformed annotation file. ``byte_offset`` locates the failure."""

    def __init__(self, message: str, byte_offset: int | None = None):
        super().__init__(message)
        self.byte_offset = byte_offset


class ShapeError(AnnotationError):
    """A labeled shape that cannot be converted to a box. ``shape_index``
    is the position of the offending shape in the file."""

    def __init__(self, message: str, shape_index: int):
        super().__init__(message)
        self.shape_index = shape_index


class EmptyGazetteerError(DocforgeError):
    """A gazetteer file contained no usable entries."""


class MetadataError(DocforgeError):
    """Invalid patch-transcription metadata (e.g. duplicate patch path)."""


class EmptyReferenceError(DocforgeError):
    """Error rate requested against an empty reference (rate undefined)."""


class BackendError(DocforgeError):
    """Base class for recognition/detection backend failures."""


class FixtureNotFoundError(BackendError):
    """No fixture record for the requested (doc_id, field)."""

    def __init__(self, doc_id: str, field: str | None = None):
        target = doc_id if field is None else f"{doc_id}/{field}"
        super().__init__(f"no fixture record for {target}")
        self.doc_id = doc_id
        self.field = field


class BackendTimeoutError(BackendError):
    """Remote backend did not answer within the configured timeout."""


class ProtocolError(BackendError):
    """Backend answered with a payload violating the wire contract.
    ``payload_excerpt`` carries the start of the offending body."""

    def __init__(self, message: str, payload_excerpt: str = ""):
        super().__init__(message)
        self.payload_excerpt = payload_excerpt
