"""Configuration loading and command orchestration.

A single JSON configuration file names the backend, thresholds, gazetteer
files, and dataset locations; every threshold has a default so a minimal
config lists only paths. Commands process documents independently under a
bounded worker pool and reduce results in manifest order, so reports are
byte-stable regardless of completion order. A failing document never
aborts the corpus; failures are collected and reflected in the exit code.

Exit codes: 0 success, 1 configuration error, 2 backend unreachable (or
every document failed on a backend error), 3 some documents failed.
"""

from __future__ import annotations

import json
import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field as dataclass_field, replace
from pathlib import Path
from typing import Callable, Mapping, Sequence

from .annotations import GazetteerRecord, load_gazetteer, parse_labelme
from .backends import (
    BackendDescriptor,
    RecognitionRequest,
    check_health,
    detect_fields,
    recognize_patch,
)
from .correction import (
    CorrectionPolicy,
    TfIdfIndex,
    apply_correction,
    build_index,
    plausible_year,
    save_index,
)
from .detection import (
    MatchResult,
    detection_metrics,
    match_predictions,
    nms,
    top_k_per_field,
)
from .errors import (
    AnnotationError,
    BackendError,
    ConfigurationError,
    DocforgeError,
    EmptyGazetteerError,
)
from .metrics import OcrEvaluation, evaluate_ocr
from .reports import (
    CorrectionLogRow,
    RunReport,
    render_detection_json,
    render_detection_markdown,
    render_ocr_run_json,
    render_ocr_run_markdown,
    render_run_json,
    render_run_markdown,
)
from .types import (
    YEAR,
    DatasetManifest,
    DetectedField,
    DocumentAnnotation,
    FieldAnnotation,
    FieldKind,
    ManifestEntry,
    RecognizedField,
    split_dataset,
    with_paths,
)

log = logging.getLogger("docforge")

ENV_BACKEND_URL = "DOCFORGE_BACKEND_URL"
EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_BACKEND = 2
EXIT_PARTIAL = 3
FORMATS = ("json", "markdown")


@dataclass(frozen=True, slots=True)
class DetectionSettings:
    """Thresholds for proposal selection and matching."""

    iou_threshold: float = 0.5
    score_threshold: float = 0.5
    nms_iou: float = 0.5
    k: int = 1


@dataclass(frozen=True, slots=True)
class SplitSettings:
    """Dataset partition fractions and shuffle seed."""

    test_fraction: float = 0.2
    validation_fraction_of_train: float = 0.3
    seed: int = 13


@dataclass(frozen=True)
class PipelineConfig:
    """Resolved, validated pipeline configuration.

    All paths are absolute (resolved against the config file's directory
    at load time).
    """

    base_dir: Path
    backend: BackendDescriptor
    policy: CorrectionPolicy
    detection: DetectionSettings = DetectionSettings()
    split: SplitSettings = SplitSettings()
    gazetteers: Mapping[FieldKind, tuple[Path, ...]] = \
        dataclass_field(default_factory=dict)
    ngram_size: int = 3
    manifest_path: Path | None = None
    annotations_dir: Path | None = None
    images_dir: Path | None = None
    out_dir: Path = Path("reports")
    formats: tuple[str, ...] = FORMATS
    workers: int = 4
    run_split: str = "test"


def _resolve(base: Path, value: str) -> Path:
    path = Path(value)
    return path if path.is_absolute() else (base / path)


def _require(path: Path, what: str) -> Path:
    if not path.exists():
        raise ConfigurationError(f"{what} does not exist: {path}")
    return path


def _parse_policy(raw: dict) -> CorrectionPolicy:
    defaults = CorrectionPolicy()
    granularity = dict(defaults.granularity)
    for label, value in (raw.get("granularity") or {}).items():
        granularity[FieldKind.from_label(label)] = value
    no_correction = raw.get("no_correction")
    if no_correction is None:
        frozen = defaults.no_correction
    else:
        frozen = frozenset(FieldKind.from_label(label)
                           for label in no_correction)
    return CorrectionPolicy(
        ocr_confidence_threshold=raw.get("ocr_confidence_threshold",
                                         defaults.ocr_confidence_threshold),
        knn_accept_threshold=raw.get("knn_accept_threshold",
                                     defaults.knn_accept_threshold),
        k=raw.get("k", defaults.k),
        granularity=granularity,
        no_correction=frozen)


def load_config(path: str | Path, *, backend_kind: str | None = None,
                out_dir: str | None = None, workers: int | None = None,
                seed: int | None = None) -> PipelineConfig:
    """Load, resolve, and validate a pipeline configuration file.

    Keyword overrides come from command-line flags. When the backend kind
    is ``remote``, the environment variable ``DOCFORGE_BACKEND_URL``
    overrides the configured location. Every referenced input path must
    exist; violations raise :class:`ConfigurationError`.
    """
    config_path = Path(path)
    try:
        raw = json.loads(config_path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigurationError(f"cannot read config: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigurationError(
            f"config is not valid JSON: {exc.msg} (line {exc.lineno})") \
            from exc
    if not isinstance(raw, dict):
        raise ConfigurationError("config root must be a JSON object")
    base = config_path.resolve().parent

    try:
        backend_raw = dict(raw.get("backend") or {})
        kind = backend_kind or backend_raw.get("kind", "fixture")
        location = backend_raw.get("location", "")
        if kind == "remote" and os.environ.get(ENV_BACKEND_URL):
            location = os.environ[ENV_BACKEND_URL]
        if kind == "fixture":
            if not location:
                raise ConfigurationError(
                    "fixture backend requires a location directory")
            location = str(_require(_resolve(base, location),
                                    "backend location"))
        elif not location:
            raise ConfigurationError(
                "remote backend requires a URL (config or "
                f"{ENV_BACKEND_URL})")
        backend = BackendDescriptor(
            kind=kind, location=location,
            timeout=float(backend_raw.get("timeout", 10.0)),
            patch_side=int(backend_raw.get("patch_side", 384)))

        policy = _parse_policy(dict(raw.get("policy") or {}))

        detection_raw = dict(raw.get("detection") or {})
        detection = DetectionSettings(
            iou_threshold=detection_raw.get("iou_threshold", 0.5),
            score_threshold=detection_raw.get("score_threshold", 0.5),
            nms_iou=detection_raw.get("nms_iou", 0.5),
            k=detection_raw.get("k", 1))
        # touch validated constructors early so errors surface here
        top_k_per_field([], detection.k, detection.score_threshold)
        nms([], detection.nms_iou)
        match_predictions([], [], detection.iou_threshold,
                          detection.score_threshold)

        split_raw = dict(raw.get("split") or {})
        split = SplitSettings(
            test_fraction=split_raw.get("test_fraction", 0.2),
            validation_fraction_of_train=split_raw.get(
                "validation_fraction_of_train", 0.3),
            seed=seed if seed is not None else split_raw.get("seed", 13))

        gazetteers: dict[FieldKind, tuple[Path, ...]] = {}
        for label, paths in dict(raw.get("gazetteers") or {}).items():
            if isinstance(paths, str):
                paths = [paths]
            kind_key = FieldKind.from_label(label)
            gazetteers[kind_key] = tuple(
                _require(_resolve(base, p), f"gazetteer for {label}")
                for p in paths)

        manifest_path = raw.get("manifest")
        if manifest_path is not None:
            manifest_path = _require(_resolve(base, manifest_path),
                                     "manifest")
        annotations_dir = raw.get("annotations_dir")
        if annotations_dir is not None:
            annotations_dir = _require(_resolve(base, annotations_dir),
                                       "annotations_dir")
        images_dir = raw.get("images_dir")
        if images_dir is not None:
            images_dir = _require(_resolve(base, images_dir), "images_dir")

        formats = tuple(raw.get("formats") or FORMATS)
        for fmt in formats:
            if fmt not in FORMATS:
                raise ConfigurationError(f"unknown report format {fmt!r}")

        resolved_out = _resolve(base, out_dir if out_dir is not None
                                else raw.get("out_dir", "reports"))
        worker_count = workers if workers is not None \
            else int(raw.get("workers", 4))
        if worker_count < 1:
            raise ConfigurationError("workers must be >= 1")
        run_split = raw.get("run_split", "test")
        if run_split not in ("train", "validation", "test", "all"):
            raise ConfigurationError(f"unknown run_split {run_split!r}")
        ngram_size = int(raw.get("ngram_size", 3))
    except ConfigurationError:
        raise
    except (TypeError, ValueError, KeyError) as exc:
        raise ConfigurationError(f"invalid config value: {exc}") from exc

    # A correctable field with no gazetteer cannot be corrected; treat it
    # as no-correction instead of failing mid-run.
    uncovered = {kind for kind in policy.granularity
                 if kind not in gazetteers and
                 kind not in policy.no_correction}
    if uncovered:
        labels = sorted(kind.label for kind in uncovered)
        log.warning("no gazetteer configured for %s; disabling correction "
                    "for them", ", ".join(labels))
        policy = replace(policy,
                         no_correction=policy.no_correction | uncovered)

    return PipelineConfig(
        base_dir=base, backend=backend, policy=policy, detection=detection,
        split=split, gazetteers=gazetteers, ngram_size=ngram_size,
        manifest_path=manifest_path, annotations_dir=annotations_dir,
        images_dir=images_dir, out_dir=resolved_out, formats=formats,
        workers=worker_count, run_split=run_split)


def manifest_to_json(manifest: DatasetManifest,
                     relative_to: Path | None = None) -> str:
    """Serialize a manifest; paths become relative to ``relative_to``."""
    entries = []
    for entry in manifest.entries:
        def rel(value: str | None) -> str | None:
            if value is None or relative_to is None:
                return value
            return os.path.relpath(value, relative_to)
        entries.append({
            "doc_id": entry.doc_id,
            "split": entry.split,
            "annotation_path": rel(entry.annotation_path),
            "image_path": rel(entry.image_path),
        })
    return json.dumps({"entries": entries}, sort_keys=True, indent=2,
                      ensure_ascii=False) + "\n"


def load_manifest(path: Path) -> DatasetManifest:
    """Read a manifest file, resolving stored paths against its directory."""
    try:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
        base = Path(path).resolve().parent
        entries = []
        for item in raw["entries"]:
            annotation_path = item.get("annotation_path")
            image_path = item.get("image_path")
            entries.append(ManifestEntry(
                doc_id=str(item["doc_id"]), split=str(item["split"]),
                annotation_path=str(_resolve(base, annotation_path))
                if annotation_path else None,
                image_path=str(_resolve(base, image_path))
                if image_path else None))
        return DatasetManifest(entries=tuple(entries))
    except (OSError, json.JSONDecodeError, KeyError, TypeError,
            ValueError) as exc:
        raise ConfigurationError(f"unreadable manifest {path}: {exc}") \
            from exc


def load_indexes(config: PipelineConfig) -> dict[FieldKind, TfIdfIndex]:
    """Build one TF-IDF index per configured gazetteer field.

    Multiple files for the same field are concatenated with first-seen
    deduplication, so names and surnames can share one index.
    """
    indexes: dict[FieldKind, TfIdfIndex] = {}
    for kind, paths in config.gazetteers.items():
        records: list[GazetteerRecord] = []
        seen: set[str] = set()
        for path in paths:
            try:
                content = path.read_text(encoding="utf-8")
            except OSError as exc:
                raise ConfigurationError(
                    f"cannot read gazetteer {path}: {exc}") from exc
            try:
                loaded = load_gazetteer(content, kind)
            except EmptyGazetteerError as exc:
                raise ConfigurationError(
                    f"gazetteer {path} has no entries") from exc
            for record in loaded:
                if record.entry not in seen:
                    seen.add(record.entry)
                    records.append(record)
        indexes[kind] = build_index(records, config.ngram_size)
    return indexes


@dataclass(frozen=True, slots=True)
class DocumentResult:
    """Everything one document contributed to a run."""

    doc_id: str
    kept: tuple[DetectedField, ...] = ()
    truth: tuple[FieldAnnotation, ...] = ()
    match: MatchResult | None = None
    before: tuple[RecognizedField, ...] = ()
    after: tuple[RecognizedField, ...] = ()
    log_rows: tuple[CorrectionLogRow, ...] = ()
    implausible_years: tuple[tuple[str, str], ...] = ()
    error: str | None = None
    backend_failure: bool = False


def _load_annotation(entry: ManifestEntry,
                     config: PipelineConfig) -> DocumentAnnotation:
    if entry.annotation_path:
        path = Path(entry.annotation_path)
    elif config.annotations_dir is not None:
        path = config.annotations_dir / f"{entry.doc_id}.json"
    else:
        raise AnnotationError(
            f"no annotation source for document {entry.doc_id}")
    try:
        content = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise AnnotationError(
            f"cannot read annotation {path}: {exc}") from exc
    return parse_labelme(content, doc_id=entry.doc_id)


def select_proposals(proposals: Sequence[DetectedField],
                     settings: DetectionSettings) -> list[DetectedField]:
    """NMS followed by the per-field top-k cut with the score floor."""
    return top_k_per_field(nms(proposals, settings.nms_iou),
                           settings.k, settings.score_threshold)


def _recognize_fields(
        entry: ManifestEntry, kinds: Sequence[FieldKind],
        config: PipelineConfig,
        indexes: Mapping[FieldKind, TfIdfIndex]) -> tuple[
            tuple[RecognizedField, ...], tuple[RecognizedField, ...],
            tuple[CorrectionLogRow, ...], tuple[tuple[str, str], ...]]:
    before: list[RecognizedField] = []
    after: list[RecognizedField] = []
    rows: list[CorrectionLogRow] = []
    flagged: list[tuple[str, str]] = []
    for kind in sorted(set(kinds), key=FieldKind.sort_key):
        request = RecognitionRequest(doc_id=entry.doc_id, field=kind,
                                     patch=entry.image_path)
        response = recognize_patch(request, config.backend)
        raw = RecognizedField(kind=kind, text=response.text,
                              confidence=response.confidence)
        corrected, events = apply_correction(raw, indexes, config.policy)
        before.append(raw)
        after.append(corrected)
        if events:
            rows.append(CorrectionLogRow(
                doc_id=entry.doc_id, field=kind.label,
                original=raw.text, corrected=corrected.text,
                ocr_confidence=raw.confidence,
                knn_similarity=min(event.similarity for event in events)))
        if kind == YEAR and not plausible_year(corrected.text):
            flagged.append((entry.doc_id, corrected.text))
    return tuple(before), tuple(after), tuple(rows), tuple(flagged)


def process_document(entry: ManifestEntry, config: PipelineConfig,
                     indexes: Mapping[FieldKind, TfIdfIndex],
                     recognize: bool = True) -> DocumentResult:
    """Run detection selection, matching, recognition, and correction for
    one document, capturing any failure instead of raising."""
    try:
        annotation = _load_annotation(entry, config)
        proposals = detect_fields(entry.doc_id, entry.image_path,
                                  config.backend)
        kept = select_proposals(proposals, config.detection)
        match = match_predictions(kept, annotation.fields,
                                  config.detection.iou_threshold,
                                  config.detection.score_threshold)
        if not recognize:
            return DocumentResult(doc_id=entry.doc_id, kept=tuple(kept),
                                  truth=annotation.fields, match=match)
        before, after, rows, flagged = _recognize_fields(
            entry, [detection.kind for detection in kept], config, indexes)
        return DocumentResult(doc_id=entry.doc_id, kept=tuple(kept),
                              truth=annotation.fields, match=match,
                              before=before, after=after, log_rows=rows,
                              implausible_years=flagged)
    except DocforgeError as exc:
        return DocumentResult(doc_id=entry.doc_id, error=str(exc),
                              backend_failure=isinstance(exc, BackendError))


def process_annotated_fields(entry: ManifestEntry, config: PipelineConfig,
                             indexes: Mapping[FieldKind, TfIdfIndex]
                             ) -> DocumentResult:
    """Recognize every annotated field with a reference value, skipping
    detection entirely (used by evaluate-ocr)."""
    try:
        annotation = _load_annotation(entry, config)
        kinds = [ann.kind for ann in annotation.fields
                 if ann.value is not None and ann.value.strip()]
        before, after, rows, flagged = _recognize_fields(
            entry, kinds, config, indexes)
        return DocumentResult(doc_id=entry.doc_id, truth=annotation.fields,
                              before=before, after=after, log_rows=rows,
                              implausible_years=flagged)
    except DocforgeError as exc:
        return DocumentResult(doc_id=entry.doc_id, error=str(exc),
                              backend_failure=isinstance(exc, BackendError))


def _target_entries(config: PipelineConfig) -> list[ManifestEntry]:
    if config.manifest_path is not None:
        manifest = load_manifest(config.manifest_path)
        entries = [entry for entry in manifest.entries
                   if config.run_split == "all"
                   or entry.split == config.run_split]
    elif config.annotations_dir is not None:
        entries = [ManifestEntry(doc_id=path.stem, split="test",
                                 annotation_path=str(path))
                   for path in sorted(config.annotations_dir.glob("*.json"))]
    else:
        raise ConfigurationError(
            "config needs either a manifest or an annotations_dir")
    if not entries:
        raise ConfigurationError(
            f"no documents selected for split {config.run_split!r}")
    return entries


def _map_documents(entries: Sequence[ManifestEntry],
                   config: PipelineConfig,
                   worker: Callable[[ManifestEntry], DocumentResult]
                   ) -> list[DocumentResult]:
    if config.workers == 1 or len(entries) == 1:
        return [worker(entry) for entry in entries]
    with ThreadPoolExecutor(max_workers=config.workers) as pool:
        return list(pool.map(worker, entries))


def _reference_pairs(results: Sequence[DocumentResult], corrected: bool
                     ) -> list[tuple[FieldKind, str, str]]:
    pairs = []
    for result in results:
        values = {ann.kind: ann.value for ann in result.truth
                  if ann.value is not None and ann.value.strip()}
        for rec in (result.after if corrected else result.before):
            reference = values.get(rec.kind)
            if reference is not None:
                pairs.append((rec.kind, reference, rec.text))
    return pairs


def _evaluate_pairs(results: Sequence[DocumentResult]
                    ) -> tuple[OcrEvaluation | None, OcrEvaluation | None]:
    before_pairs = _reference_pairs(results, corrected=False)
    if not before_pairs:
        return None, None
    return (evaluate_ocr(before_pairs),
            evaluate_ocr(_reference_pairs(results, corrected=True)))


def _collect_log(results: Sequence[DocumentResult]
                 ) -> tuple[CorrectionLogRow, ...]:
    rows = [row for result in results for row in result.log_rows]
    return tuple(sorted(rows, key=lambda row: (row.doc_id, row.field,
                                               row.original)))


def _collect_failures(results: Sequence[DocumentResult]
                      ) -> tuple[tuple[str, str], ...]:
    return tuple((result.doc_id, result.error) for result in results
                 if result.error is not None)


def _exit_code(results: Sequence[DocumentResult]) -> int:
    failed = [result for result in results if result.error is not None]
    if not failed:
        return EXIT_OK
    if len(failed) == len(results) and \
            all(result.backend_failure for result in failed):
        return EXIT_BACKEND
    return EXIT_PARTIAL


def _write(config: PipelineConfig, name: str, content: str) -> Path:
    config.out_dir.mkdir(parents=True, exist_ok=True)
    path = config.out_dir / name
    path.write_text(content, encoding="utf-8")
    log.info("wrote %s", path)
    return path


def _gate_backend(config: PipelineConfig) -> bool:
    if config.backend.kind == "remote" and not check_health(config.backend):
        log.error("backend %s is not healthy", config.backend.location)
        return False
    return True


def _log_failures(failures: Sequence[tuple[str, str]]) -> None:
    for doc_id, error in failures:
        log.error("document %s failed: %s", doc_id, error)


def cmd_split(config: PipelineConfig) -> int:
    """Partition the annotated corpus and write a manifest file."""
    if config.annotations_dir is None:
        raise ConfigurationError("split requires annotations_dir")
    paths = sorted(config.annotations_dir.glob("*.json"))
    if not paths:
        raise ConfigurationError(
            f"no annotation files under {config.annotations_dir}")
    doc_ids = [path.stem for path in paths]
    manifest = split_dataset(doc_ids, config.split.test_fraction,
                             config.split.validation_fraction_of_train,
                             config.split.seed)
    annotation_paths = {path.stem: str(path) for path in paths}
    image_paths: dict[str, str] = {}
    if config.images_dir is not None:
        for doc_id in doc_ids:
            candidates = sorted(config.images_dir.glob(f"{doc_id}.*"))
            if candidates:
                image_paths[doc_id] = str(candidates[0])
    manifest = with_paths(manifest, annotation_paths, image_paths)
    _write(config, "manifest.json",
           manifest_to_json(manifest, relative_to=config.out_dir))
    counts = manifest.counts()
    log.info("split %d documents: train=%d validation=%d test=%d",
             len(doc_ids), counts.get("train", 0),
             counts.get("validation", 0), counts.get("test", 0))
    return EXIT_OK


def cmd_build_gazetteer(config: PipelineConfig, field_label: str,
                        ngram_size: int | None = None) -> int:
    """Build and persist the TF-IDF index for one configured field."""
    kind = FieldKind.from_label(field_label)
    if kind not in config.gazetteers:
        raise ConfigurationError(
            f"no gazetteer files configured for field {kind.label!r}")
    effective = config if ngram_size is None else \
        replace(config, ngram_size=ngram_size)
    index = load_indexes(replace(
        effective, gazetteers={kind: config.gazetteers[kind]}))[kind]
    _write(config, f"{kind.label}_index.json", save_index(index))
    log.info("indexed %d entries for %s (%d unreachable)",
             len(index.entries), kind.label, len(index.unreachable_entries))
    return EXIT_OK


def cmd_evaluate_detection(config: PipelineConfig) -> int:
    """Detect, select, match, and score localization over the corpus."""
    if not _gate_backend(config):
        return EXIT_BACKEND
    entries = _target_entries(config)
    results = _map_documents(
        entries, config,
        lambda entry: process_document(entry, config, {}, recognize=False))
    succeeded = [result for result in results if result.error is None]
    report = detection_metrics([(result.kept, result.truth, result.match)
                                for result in succeeded])
    if "json" in config.formats:
        _write(config, "detection_report.json", render_detection_json(report))
    if "markdown" in config.formats:
        _write(config, "detection_report.md",
               render_detection_markdown(report))
    _log_failures(_collect_failures(results))
    return _exit_code(results)


def cmd_run(config: PipelineConfig) -> int:
    """Full pipeline: detect, select, recognize, correct, evaluate."""
    if not _gate_backend(config):
        return EXIT_BACKEND
    indexes = load_indexes(config)
    entries = _target_entries(config)
    results = _map_documents(
        entries, config,
        lambda entry: process_document(entry, config, indexes))
    succeeded = [result for result in results if result.error is None]
    detection = detection_metrics([(result.kept, result.truth, result.match)
                                   for result in succeeded])
    before, after = _evaluate_pairs(succeeded)
    run = RunReport(
        document_count=len(succeeded),
        detection=detection,
        ocr_before=before,
        ocr_after=after,
        correction_log=_collect_log(succeeded),
        implausible_years=tuple(sorted(
            flag for result in succeeded
            for flag in result.implausible_years)),
        failures=_collect_failures(results))
    if "json" in config.formats:
        _write(config, "run_report.json", render_run_json(run))
    if "markdown" in config.formats:
        _write(config, "run_report.md", render_run_markdown(run))
    _log_failures(run.failures)
    log.info("processed %d document(s), %d correction(s) applied",
             run.document_count, len(run.correction_log))
    return _exit_code(results)


def cmd_evaluate_ocr(config: PipelineConfig) -> int:
    """Recognize annotated fields directly and score raw vs corrected."""
    if not _gate_backend(config):
        return EXIT_BACKEND
    indexes = load_indexes(config)
    entries = _target_entries(config)
    results = _map_documents(
        entries, config,
        lambda entry: process_annotated_fields(entry, config, indexes))
    succeeded = [result for result in results if result.error is None]
    before, after = _evaluate_pairs(succeeded)
    correction_log = _collect_log(succeeded)
    failures = _collect_failures(results)
    if "json" in config.formats:
        _write(config, "ocr_report.json",
               render_ocr_run_json(before, after, correction_log, failures))
    if "markdown" in config.formats:
        _write(config, "ocr_report.md",
               render_ocr_run_markdown(before, after, correction_log,
                                       failures))
    _log_failures(failures)
    return _exit_code(results)
