"""Report assembly and rendering.

Every command emits machine-readable JSON and a human-readable markdown
table over the same data. Rendering is deliberately deterministic: fixed
field order, fixed float formatting ("{:.4f}" in markdown, full precision
in JSON), no timestamps, sorted keys. Missing values render as "n/a" in
markdown and null in JSON.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from .detection import DetectionReport, FieldDetectionMetrics
from .metrics import OcrEvaluation

_DETECTION_NOTES = (
    "Overall recall/precision/F1 are micro-averages over every field; "
    "the Overall mAP cell is the mean of per-field average precision.",
    "Per-field mAP cells hold that field's all-point interpolated average "
    "precision over score-ranked detections at the configured IoU "
    "threshold.",
)
_OCR_NOTE = ("Overall scores pool edit operations and n-gram counts over "
             "every (document, field) pair (micro-average).")


@dataclass(frozen=True, slots=True)
class CorrectionLogRow:
    """One applied correction, as surfaced in the run report."""

    doc_id: str
    field: str
    original: str
    corrected: str
    ocr_confidence: float
    knn_similarity: float


@dataclass(frozen=True, slots=True)
class RunReport:
    """Combined output of a full pipeline run."""

    document_count: int
    detection: DetectionReport
    ocr_before: OcrEvaluation | None
    ocr_after: OcrEvaluation | None
    correction_log: tuple[CorrectionLogRow, ...]
    implausible_years: tuple[tuple[str, str], ...] = ()
    failures: tuple[tuple[str, str], ...] = ()


def _fmt(value: float | None) -> str:
    return "n/a" if value is None else f"{value:.4f}"


def _cell(text: str) -> str:
    return text.replace("|", "\\|")


def _metrics_payload(metrics: FieldDetectionMetrics) -> dict:
    return {
        "true_positives": metrics.true_positives,
        "false_positives": metrics.false_positives,
        "false_negatives": metrics.false_negatives,
        "recall": metrics.recall,
        "precision": metrics.precision,
        "f1": metrics.f1,
        "average_precision": metrics.average_precision,
    }


def detection_payload(report: DetectionReport) -> dict:
    return {
        "per_field": {kind.label: _metrics_payload(report.per_field[kind])
                      for kind in report.fields()},
        "micro": _metrics_payload(report.micro),
        "mean_average_precision": report.mean_average_precision,
    }


def render_detection_json(report: DetectionReport) -> str:
    return json.dumps(detection_payload(report), sort_keys=True,
                      indent=2, ensure_ascii=False) + "\n"


def _detection_table(report: DetectionReport) -> list[str]:
    lines = ["| Target field | Re | Pr | F1 | mAP |",
             "| --- | --- | --- | --- | --- |"]
    for kind in report.fields():
        metrics = report.per_field[kind]
        lines.append(f"| {_cell(kind.display_name)} | "
                     f"{_fmt(metrics.recall)} | {_fmt(metrics.precision)} | "
                     f"{_fmt(metrics.f1)} | "
                     f"{_fmt(metrics.average_precision)} |")
    micro = report.micro
    lines.append(f"| Overall | {_fmt(micro.recall)} | "
                 f"{_fmt(micro.precision)} | {_fmt(micro.f1)} | "
                 f"{_fmt(report.mean_average_precision)} |")
    return lines


def _detection_section(report: DetectionReport) -> list[str]:
    micro = report.micro
    return [*_detection_table(report), "",
            f"Counts (micro): TP={micro.true_positives}, "
            f"FP={micro.false_positives}, FN={micro.false_negatives}.",
            *_DETECTION_NOTES]


def render_detection_markdown(report: DetectionReport) -> str:
    return "\n".join(["# Field detection", "",
                      *_detection_section(report)]) + "\n"


def ocr_payload(evaluation: OcrEvaluation) -> dict:
    return {
        "per_field": {
            kind.label: {
                "cer": evaluation.per_field[kind].cer,
                "wer": evaluation.per_field[kind].wer,
                "bleu": evaluation.per_field[kind].bleu,
                "pairs": evaluation.pair_counts[kind],
            }
            for kind in evaluation.fields()
        },
        "overall": {
            "cer": evaluation.overall.cer,
            "wer": evaluation.overall.wer,
            "bleu": evaluation.overall.bleu,
            "pairs": sum(evaluation.pair_counts.values()),
        },
    }


def render_ocr_json(evaluation: OcrEvaluation) -> str:
    return json.dumps(ocr_payload(evaluation), sort_keys=True,
                      indent=2, ensure_ascii=False) + "\n"


def _ocr_table(evaluation: OcrEvaluation) -> list[str]:
    lines = ["| Target field | CER | WER | BLEU |",
             "| --- | --- | --- | --- |"]
    for kind in evaluation.fields():
        score = evaluation.per_field[kind]
        lines.append(f"| {_cell(kind.display_name)} | {_fmt(score.cer)} | "
                     f"{_fmt(score.wer)} | {_fmt(score.bleu)} |")
    overall = evaluation.overall
    lines.append(f"| Overall | {_fmt(overall.cer)} | {_fmt(overall.wer)} | "
                 f"{_fmt(overall.bleu)} |")
    return lines


def render_ocr_markdown(evaluation: OcrEvaluation,
                        title: str = "Text recognition") -> str:
    counts = ", ".join(f"{kind.display_name}={evaluation.pair_counts[kind]}"
                       for kind in evaluation.fields())
    return "\n".join([f"# {title}", "", *_ocr_table(evaluation), "",
                      f"Pairs: {counts}.", _OCR_NOTE]) + "\n"


def _before_after_table(before: OcrEvaluation,
                        after: OcrEvaluation) -> list[str]:
    lines = ["| Target field | CER (raw) | CER (corrected) | WER (raw) | "
             "WER (corrected) | BLEU (raw) | BLEU (corrected) |",
             "| --- | --- | --- | --- | --- | --- | --- |"]
    for kind in before.fields():
        raw = before.per_field[kind]
        fixed = after.per_field.get(kind, raw)
        lines.append(f"| {_cell(kind.display_name)} | {_fmt(raw.cer)} | "
                     f"{_fmt(fixed.cer)} | {_fmt(raw.wer)} | "
                     f"{_fmt(fixed.wer)} | {_fmt(raw.bleu)} | "
                     f"{_fmt(fixed.bleu)} |")
    lines.append(f"| Overall | {_fmt(before.overall.cer)} | "
                 f"{_fmt(after.overall.cer)} | {_fmt(before.overall.wer)} | "
                 f"{_fmt(after.overall.wer)} | {_fmt(before.overall.bleu)} | "
                 f"{_fmt(after.overall.bleu)} |")
    return lines


def _log_payload(rows: tuple[CorrectionLogRow, ...]) -> list[dict]:
    return [
        {
            "doc_id": row.doc_id,
            "field": row.field,
            "original": row.original,
            "corrected": row.corrected,
            "ocr_confidence": row.ocr_confidence,
            "knn_similarity": row.knn_similarity,
        }
        for row in rows
    ]


def _log_table(rows: tuple[CorrectionLogRow, ...]) -> list[str]:
    if not rows:
        return ["No corrections were applied."]
    lines = ["| Document | Field | Original | Corrected | OCR confidence | "
             "KNN similarity |",
             "| --- | --- | --- | --- | --- | --- |"]
    for row in rows:
        lines.append(f"| {_cell(row.doc_id)} | {_cell(row.field)} | "
                     f"{_cell(row.original)} | {_cell(row.corrected)} | "
                     f"{_fmt(row.ocr_confidence)} | "
                     f"{_fmt(row.knn_similarity)} |")
    return lines


def render_ocr_run_json(before: OcrEvaluation | None,
                        after: OcrEvaluation | None,
                        correction_log: tuple[CorrectionLogRow, ...],
                        failures: tuple[tuple[str, str], ...] = ()) -> str:
    payload = {
        "before": None if before is None else ocr_payload(before),
        "after": None if after is None else ocr_payload(after),
        "correction_log": _log_payload(correction_log),
        "failures": [{"doc_id": doc_id, "error": error}
                     for doc_id, error in failures],
    }
    return json.dumps(payload, sort_keys=True, indent=2,
                      ensure_ascii=False) + "\n"


def render_ocr_run_markdown(
        before: OcrEvaluation | None, after: OcrEvaluation | None,
        correction_log: tuple[CorrectionLogRow, ...],
        failures: tuple[tuple[str, str], ...] = ()) -> str:
    lines = ["# Text recognition (raw vs corrected)", ""]
    if before is None or after is None:
        lines.append("No reference transcriptions available.")
    else:
        counts = ", ".join(f"{kind.display_name}={before.pair_counts[kind]}"
                           for kind in before.fields())
        lines.extend([*_before_after_table(before, after), "",
                      f"Pairs: {counts}.", _OCR_NOTE])
    lines.extend(["", "## Corrections", "", *_log_table(correction_log)])
    if failures:
        lines.extend(["", "## Failures", "",
                      "| Document | Error |", "| --- | --- |"])
        for doc_id, error in failures:
            lines.append(f"| {_cell(doc_id)} | {_cell(error)} |")
    return "\n".join(lines) + "\n"


def run_payload(run: RunReport) -> dict:
    return {
        "document_count": run.document_count,
        "detection": detection_payload(run.detection),
        "ocr": {
            "before": None if run.ocr_before is None
            else ocr_payload(run.ocr_before),
            "after": None if run.ocr_after is None
            else ocr_payload(run.ocr_after),
        },
        "correction_log": _log_payload(run.correction_log),
        "implausible_years": [{"doc_id": doc_id, "text": text}
                              for doc_id, text in run.implausible_years],
        "failures": [{"doc_id": doc_id, "error": error}
                     for doc_id, error in run.failures],
    }


def render_run_json(run: RunReport) -> str:
    return json.dumps(run_payload(run), sort_keys=True, indent=2,
                      ensure_ascii=False) + "\n"


def render_run_markdown(run: RunReport) -> str:
    lines = ["# Pipeline run report", "",
             f"Documents processed: {run.document_count}.", "",
             "## Field detection", "",
             *_detection_section(run.detection), "",
             "## Text recognition (raw vs corrected)", ""]
    if run.ocr_before is None or run.ocr_after is None:
        lines.append("No reference transcriptions available.")
    else:
        counts = ", ".join(
            f"{kind.display_name}={run.ocr_before.pair_counts[kind]}"
            for kind in run.ocr_before.fields())
        lines.extend([*_before_after_table(run.ocr_before, run.ocr_after),
                      "", f"Pairs: {counts}.", _OCR_NOTE])
    lines.extend(["", "## Corrections", "", *_log_table(run.correction_log)])
    if run.implausible_years:
        lines.extend(["", "## Flagged year values", "",
                      "| Document | Value |", "| --- | --- |"])
        for doc_id, text in run.implausible_years:
            lines.append(f"| {_cell(doc_id)} | {_cell(text)} |")
    if run.failures:
        lines.extend(["", "## Failures", "",
                      "| Document | Error |", "| --- | --- |"])
        for doc_id, error in run.failures:
            lines.append(f"| {_cell(doc_id)} | {_cell(error)} |")
    return "\n".join(lines) + "\n"
