"""docforge: batch toolkit for handwritten-form field extraction.

Ingests box annotations, post-processes and scores detector proposals,
transcribes field patches through pluggable backends, corrects
low-confidence readings against field gazetteers with TF-IDF trigram KNN
retrieval, and reports CER/WER/BLEU plus detection metrics.
"""

from .annotations import (
    GazetteerRecord,
    PatchMetadataRow,
    dump_gazetteer,
    load_gazetteer,
    parse_labelme,
    write_patch_metadata,
)
from .backends import (
    BackendDescriptor,
    FixtureBackend,
    RecognitionRequest,
    RecognitionResponse,
    RemoteBackend,
    check_health,
    detect_fields,
    recognize_patch,
)
from .correction import (
    CorrectionPolicy,
    GazetteerKnnCorrector,
    KnnMatch,
    TfIdfIndex,
    apply_correction,
    build_index,
    correct_field,
    extract_ngrams,
    jaro_winkler,
    knn_search,
    load_index,
    needs_correction,
    plausible_year,
    replacement_confidence,
    save_index,
)
from .detection import (
    DetectionReport,
    FieldDetectionMetrics,
    MatchResult,
    detection_metrics,
    match_predictions,
    nms,
    top_k_per_field,
)
from .errors import (
    AnnotationError,
    AnnotationParseError,
    BackendError,
    BackendTimeoutError,
    ConfigurationError,
    DocforgeError,
    EmptyGazetteerError,
    EmptyReferenceError,
    FixtureNotFoundError,
    MetadataError,
    ProtocolError,
    ShapeError,
)
from .metrics import (
    EditOps,
    OcrEvaluation,
    TextScore,
    bleu,
    cer,
    edit_ops,
    evaluate_ocr,
    levenshtein,
    wer,
)
from .pipeline import PipelineConfig, load_config
from .reports import CorrectionLogRow, RunReport
from .types import (
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
    Violation,
    iou,
    split_dataset,
    validate_annotation,
    with_paths,
)

__version__ = "0.1.0"

__all__ = [
    "AnnotationError",
    "AnnotationParseError",
    "BackendDescriptor",
    "BackendError",
    "BackendTimeoutError",
    "BoundingBox",
    "BUILTIN_FIELDS",
    "COMPLAINANT_NAME",
    "ConfigurationError",
    "CorrectionLogRow",
    "CorrectionPolicy",
    "DatasetManifest",
    "DetectedField",
    "DetectionReport",
    "DocforgeError",
    "DocumentAnnotation",
    "EditOps",
    "EmptyGazetteerError",
    "EmptyReferenceError",
    "FieldAnnotation",
    "FieldDetectionMetrics",
    "FieldKind",
    "FixtureBackend",
    "FixtureNotFoundError",
    "GazetteerKnnCorrector",
    "GazetteerRecord",
    "KnnMatch",
    "ManifestEntry",
    "MatchResult",
    "MetadataError",
    "OcrEvaluation",
    "PatchMetadataRow",
    "PipelineConfig",
    "POLICE_STATION",
    "ProtocolError",
    "RecognitionRequest",
    "RecognitionResponse",
    "RecognizedField",
    "RemoteBackend",
    "RunReport",
    "STATUTE",
    "ShapeError",
    "TextScore",
    "TfIdfIndex",
    "Violation",
    "YEAR",
    "apply_correction",
    "bleu",
    "build_index",
    "cer",
    "check_health",
    "correct_field",
    "detect_fields",
    "detection_metrics",
    "dump_gazetteer",
    "edit_ops",
    "evaluate_ocr",
    "extract_ngrams",
    "iou",
    "jaro_winkler",
    "knn_search",
    "levenshtein",
    "load_config",
    "load_gazetteer",
    "load_index",
    "match_predictions",
    "needs_correction",
    "nms",
    "parse_labelme",
    "plausible_year",
    "recognize_patch",
    "replacement_confidence",
    "save_index",
    "split_dataset",
    "top_k_per_field",
    "validate_annotation",
    "wer",
    "with_paths",
    "write_patch_metadata",
]
