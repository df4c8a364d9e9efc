"""Detector post-processing and localization scoring.

Proposals are cleaned in two steps (greedy per-field NMS, then a top-k
cut with a score floor) and matched greedily against ground-truth boxes.
Per-field recall, precision, F1, and all-point interpolated average
precision are aggregated over a document collection, together with
micro-averaged totals and the mean of per-field AP.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

from .types import (
    BUILTIN_FIELDS,
    DetectedField,
    FieldAnnotation,
    FieldKind,
    iou,
)
from .validation import check_positive_int, check_unit_interval


def _nms_order(detections: Sequence[DetectedField]) -> list[int]:
    return sorted(range(len(detections)),
                  key=lambda i: (-detections[i].score,
                                 detections[i].box.x_min,
                                 detections[i].box.y_min))


def nms(proposals: Sequence[DetectedField],
        suppression_iou: float = 0.5) -> list[DetectedField]:
    """Greedy per-field non-maximum suppression.

    Boxes are visited by descending score (ties broken toward smaller
    x_min, then y_min); a box is dropped when it overlaps an already kept
    box of the same field kind with iou strictly above ``suppression_iou``.
    Output preserves the visiting order.
    """
    check_unit_interval(suppression_iou, "suppression_iou", open_low=True)
    kept: list[DetectedField] = []
    for index in _nms_order(proposals):
        candidate = proposals[index]
        crowded = any(survivor.kind == candidate.kind
                      and iou(survivor.box, candidate.box) > suppression_iou
                      for survivor in kept)
        if not crowded:
            kept.append(candidate)
    return kept


def top_k_per_field(proposals: Sequence[DetectedField], k: int = 1,
                    min_score: float = 0.5) -> list[DetectedField]:
    """Keep at most ``k`` highest-score proposals per field kind, all with
    score at least ``min_score``."""
    check_positive_int(k, "k")
    check_unit_interval(min_score, "min_score")
    taken: dict[FieldKind, int] = {}
    kept: list[DetectedField] = []
    for index in _nms_order(proposals):
        proposal = proposals[index]
        if proposal.score < min_score:
            continue
        if taken.get(proposal.kind, 0) >= k:
            continue
        taken[proposal.kind] = taken.get(proposal.kind, 0) + 1
        kept.append(proposal)
    return kept


@dataclass(frozen=True, slots=True)
class MatchResult:
    """Assignment of predictions to ground truth for one document.

    Indices refer to the sequences passed to :func:`match_predictions`.
    ``unmatched_predictions`` lists predictions that survived the score
    cut but matched nothing (false positives); predictions discarded by
    the score cut appear nowhere.
    """

    pairs: tuple[tuple[int, int, float], ...]
    unmatched_predictions: tuple[int, ...]
    unmatched_ground_truth: tuple[int, ...]

    def matched_prediction_indices(self) -> set[int]:
        return {pred for pred, _, _ in self.pairs}


def match_predictions(preds: Sequence[DetectedField],
                      truth: Sequence[FieldAnnotation],
                      iou_threshold: float = 0.5,
                      score_threshold: float = 0.5) -> MatchResult:
    """Greedy score-descending matching of predictions to ground truth.

    Predictions with score below ``score_threshold`` are discarded first.
    Each surviving prediction, highest score first, claims the unmatched
    same-kind truth box with the highest iou, provided that iou is at
    least ``iou_threshold``. Iou ties go to the truth box with smaller
    x_min, then y_min, then input position.
    """
    check_unit_interval(iou_threshold, "iou_threshold", open_low=True)
    check_unit_interval(score_threshold, "score_threshold", open_low=True)
    retained = [i for i in _nms_order(preds)
                if preds[i].score >= score_threshold]
    claimed: set[int] = set()
    pairs: list[tuple[int, int, float]] = []
    false_positives: list[int] = []
    for pred_index in retained:
        prediction = preds[pred_index]
        best: tuple[float, float, float, int] | None = None
        for truth_index, annotation in enumerate(truth):
            if truth_index in claimed or annotation.kind != prediction.kind:
                continue
            overlap = iou(prediction.box, annotation.box)
            if overlap < iou_threshold:
                continue
            key = (-overlap, annotation.box.x_min, annotation.box.y_min,
                   truth_index)
            if best is None or key < best:
                best = key
        if best is None:
            false_positives.append(pred_index)
        else:
            truth_index = best[3]
            claimed.add(truth_index)
            pairs.append((pred_index, truth_index, -best[0]))
    missing = tuple(i for i in range(len(truth)) if i not in claimed)
    return MatchResult(pairs=tuple(pairs),
                       unmatched_predictions=tuple(sorted(false_positives)),
                       unmatched_ground_truth=missing)


@dataclass(frozen=True, slots=True)
class FieldDetectionMetrics:
    """Localization scores for one field kind (or the micro pool)."""

    field: FieldKind | None
    true_positives: int
    false_positives: int
    false_negatives: int
    recall: float | None
    precision: float | None
    f1: float | None
    average_precision: float | None

    @property
    def ground_truth_count(self) -> int:
        return self.true_positives + self.false_negatives

    @property
    def retained_predictions(self) -> int:
        return self.true_positives + self.false_positives


@dataclass(frozen=True, slots=True)
class DetectionReport:
    """Per-field and pooled localization scores over a document set."""

    per_field: dict[FieldKind, FieldDetectionMetrics]
    micro: FieldDetectionMetrics
    mean_average_precision: float | None

    def fields(self) -> list[FieldKind]:
        return sorted(self.per_field, key=FieldKind.sort_key)


def _interpolated_ap(flags: list[bool], ground_truth: int) -> float:
    """All-point interpolated area under the precision-recall curve.

    ``flags`` marks each ranked retained prediction as a true positive or
    not. Precision at every recall step is replaced by the best precision
    at that recall or beyond before integrating.
    """
    if ground_truth == 0:
        return 0.0
    recalls: list[float] = []
    precisions: list[float] = []
    tp = 0
    for rank, is_tp in enumerate(flags, start=1):
        if is_tp:
            tp += 1
        recalls.append(tp / ground_truth)
        precisions.append(tp / rank)
    area = 0.0
    best_future = 0.0
    previous_recall = None
    for recall, precision in zip(reversed(recalls), reversed(precisions)):
        if previous_recall is not None:
            area += (previous_recall - recall) * best_future
        best_future = max(best_future, precision)
        previous_recall = recall
    if previous_recall is not None:
        area += previous_recall * best_future
    return area


def _summarize(field: FieldKind | None, tp: int, fp: int, fn: int,
               average_precision: float | None) -> FieldDetectionMetrics:
    if tp + fp + fn == 0:
        return FieldDetectionMetrics(field, 0, 0, 0, None, None, None, None)
    recall = tp / (tp + fn) if tp + fn else 0.0
    precision = tp / (tp + fp) if tp + fp else 0.0
    f1 = (0.0 if precision + recall == 0
          else 2 * precision * recall / (precision + recall))
    return FieldDetectionMetrics(field, tp, fp, fn, recall, precision, f1,
                                 average_precision)


def detection_metrics(
        per_doc: Sequence[tuple[Sequence[DetectedField],
                                Sequence[FieldAnnotation],
                                MatchResult]],
        fields: Iterable[FieldKind] | None = None) -> DetectionReport:
    """Aggregate per-document match results into a detection report.

    ``per_doc`` holds, for each document, the predictions and truth boxes
    given to the matcher plus its result. The report covers the union of
    the built-in field kinds, any kinds seen in the inputs, and an
    explicit ``fields`` iterable if given. A field with no truth boxes and
    no retained predictions anywhere scores not-applicable (``None``) and
    is excluded from the mAP mean.
    """
    covered: set[FieldKind] = set(BUILTIN_FIELDS if fields is None else fields)
    # (field) -> ranked [( -score, doc_seq, pred_index, is_tp )]
    ranked: dict[FieldKind, list[tuple[float, int, int, bool]]] = {}
    truth_counts: dict[FieldKind, int] = {}
    fn_counts: dict[FieldKind, int] = {}
    for doc_seq, (preds, truth, match) in enumerate(per_doc):
        matched = match.matched_prediction_indices()
        retained = sorted(matched | set(match.unmatched_predictions))
        for pred_index in retained:
            prediction = preds[pred_index]
            covered.add(prediction.kind)
            ranked.setdefault(prediction.kind, []).append(
                (-prediction.score, doc_seq, pred_index,
                 pred_index in matched))
        for annotation in truth:
            covered.add(annotation.kind)
            truth_counts[annotation.kind] = \
                truth_counts.get(annotation.kind, 0) + 1
        for truth_index in match.unmatched_ground_truth:
            kind = truth[truth_index].kind
            fn_counts[kind] = fn_counts.get(kind, 0) + 1

    per_field: dict[FieldKind, FieldDetectionMetrics] = {}
    ap_values: list[float] = []
    totals = {"tp": 0, "fp": 0, "fn": 0}
    for kind in sorted(covered, key=FieldKind.sort_key):
        entries = sorted(ranked.get(kind, []))
        flags = [is_tp for _, _, _, is_tp in entries]
        tp = sum(flags)
        fp = len(flags) - tp
        fn = fn_counts.get(kind, 0)
        ground_truth = truth_counts.get(kind, 0)
        if tp + fp + ground_truth == 0:
            per_field[kind] = _summarize(kind, 0, 0, 0, None)
        else:
            ap = _interpolated_ap(flags, ground_truth)
            per_field[kind] = _summarize(kind, tp, fp, fn, ap)
            ap_values.append(ap)
        totals["tp"] += tp
        totals["fp"] += fp
        totals["fn"] += fn

    micro = _summarize(None, totals["tp"], totals["fp"], totals["fn"], None)
    mean_ap = sum(ap_values) / len(ap_values) if ap_values else None
    return DetectionReport(per_field=per_field, micro=micro,
                           mean_average_precision=mean_ap)
