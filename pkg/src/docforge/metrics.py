"""Character- and word-level error rates plus corpus BLEU.

Strings are compared at Unicode scalar granularity after NFC normalization.
Comparison is case-sensitive unless a caller opts into the case-insensitive
report mode. Corpus CER/WER are micro-averaged: total edit operations over
total reference length, not the mean of per-item rates.
"""

from __future__ import annotations

import math
import unicodedata
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Sequence

from .errors import EmptyReferenceError
from .types import FieldKind

Unit = str  # "character" | "word"

_BLEU_MAX_ORDER = 4


def _units(text: str, unit: Unit) -> list[str]:
    text = unicodedata.normalize("NFC", text)
    if unit == "character":
        return list(text)
    if unit == "word":
        return text.split()
    raise ValueError(f"unknown unit {unit!r}")


def levenshtein(a: Sequence[str], b: Sequence[str]) -> int:
    """Plain minimal edit distance between two unit sequences."""
    if len(a) < len(b):
        a, b = b, a
    previous = list(range(len(b) + 1))
    for i, ca in enumerate(a, start=1):
        current = [i]
        for j, cb in enumerate(b, start=1):
            cost = 0 if ca == cb else 1
            current.append(min(previous[j - 1] + cost,
                               previous[j] + 1,
                               current[-1] + 1))
        previous = current
    return previous[-1]


@dataclass(frozen=True, slots=True)
class EditOps:
    """Minimal edit-script decomposition against a reference of length N."""

    substitutions: int
    deletions: int
    insertions: int
    reference_length: int

    @property
    def total(self) -> int:
        return self.substitutions + self.deletions + self.insertions

    @property
    def rate(self) -> float:
        return self.total / self.reference_length


def edit_ops(reference: str, hypothesis: str, unit: Unit = "character") -> EditOps:
    """Minimal edit script turning ``reference`` into ``hypothesis``.

    Among minimal scripts the decomposition prefers substitutions over
    insert+delete pairs (equivalently: deletions+insertions are minimized),
    which makes (S, D, I) unique. Raises :class:`EmptyReferenceError` when
    the reference has no units, since rates against it are undefined.
    """
    ref = _units(reference, unit)
    hyp = _units(hypothesis, unit)
    if not ref:
        raise EmptyReferenceError(f"empty reference at unit {unit!r}")

    # cell = (distance, subs, dels, ins); ranked by (distance, dels + ins)
    previous = [(j, 0, 0, j) for j in range(len(hyp) + 1)]
    for i in range(1, len(ref) + 1):
        current = [(i, 0, i, 0)]
        for j in range(1, len(hyp) + 1):
            d_diag, s_diag, del_diag, ins_diag = previous[j - 1]
            if ref[i - 1] == hyp[j - 1]:
                diag = (d_diag, s_diag, del_diag, ins_diag)
            else:
                diag = (d_diag + 1, s_diag + 1, del_diag, ins_diag)
            d_up, s_up, del_up, ins_up = previous[j]
            up = (d_up + 1, s_up, del_up + 1, ins_up)
            d_left, s_left, del_left, ins_left = current[j - 1]
            left = (d_left + 1, s_left, del_left, ins_left + 1)
            current.append(min(diag, up, left,
                               key=lambda c: (c[0], c[2] + c[3])))
        previous = current

    distance, subs, dels, ins = previous[-1]
    assert distance == subs + dels + ins
    return EditOps(substitutions=subs, deletions=dels, insertions=ins,
                   reference_length=len(ref))


def cer(reference: str, hypothesis: str) -> float:
    """Character error rate (S+D+I)/N; may exceed 1 for long hypotheses."""
    return edit_ops(reference, hypothesis, "character").rate


def wer(reference: str, hypothesis: str) -> float:
    """Word error rate over whitespace tokens."""
    return edit_ops(reference, hypothesis, "word").rate


def _ngram_counts(tokens: Sequence[str], order: int) -> Counter:
    return Counter(tuple(tokens[i:i + order])
                   for i in range(len(tokens) - order + 1))


def bleu(references: Sequence[str], hypotheses: Sequence[str]) -> float:
    """Corpus BLEU over whitespace tokens, orders 1..4, uniform weights.

    Counts are pooled over the corpus before computing precisions. Orders
    above the longest order with at least one n-gram match get add-one
    smoothing, which keeps short field values from collapsing to zero. An
    empty hypothesis corpus scores 0.0 through the brevity penalty.
    """
    if len(references) != len(hypotheses):
        raise ValueError("references and hypotheses must have equal length")
    if not references:
        raise ValueError("cannot score an empty corpus")

    matches = [0] * _BLEU_MAX_ORDER
    totals = [0] * _BLEU_MAX_ORDER
    ref_len = 0
    hyp_len = 0
    for ref_text, hyp_text in zip(references, hypotheses):
        ref_tokens = _units(ref_text, "word")
        hyp_tokens = _units(hyp_text, "word")
        ref_len += len(ref_tokens)
        hyp_len += len(hyp_tokens)
        for order in range(1, _BLEU_MAX_ORDER + 1):
            hyp_counts = _ngram_counts(hyp_tokens, order)
            if not hyp_counts:
                continue
            ref_counts = _ngram_counts(ref_tokens, order)
            totals[order - 1] += sum(hyp_counts.values())
            matches[order - 1] += sum(min(count, ref_counts[gram])
                                      for gram, count in hyp_counts.items())

    if hyp_len == 0:
        return 0.0

    longest_matched = 0
    for order in range(_BLEU_MAX_ORDER, 0, -1):
        if matches[order - 1] > 0:
            longest_matched = order
            break

    log_precision_sum = 0.0
    for order in range(1, _BLEU_MAX_ORDER + 1):
        m, t = matches[order - 1], totals[order - 1]
        if order <= longest_matched:
            precision = m / t
        else:
            precision = (m + 1) / (t + 1)
        log_precision_sum += math.log(precision)

    brevity = 1.0 if hyp_len > ref_len else math.exp(1 - ref_len / hyp_len)
    return brevity * math.exp(log_precision_sum / _BLEU_MAX_ORDER)


@dataclass(frozen=True, slots=True)
class TextScore:
    cer: float
    wer: float
    bleu: float


@dataclass(frozen=True, slots=True)
class OcrEvaluation:
    """Per-field and pooled text scores for a recognition run."""

    per_field: dict[FieldKind, TextScore]
    overall: TextScore
    pair_counts: dict[FieldKind, int]

    def fields(self) -> list[FieldKind]:
        return sorted(self.per_field, key=lambda k: k.sort_key())


def _corpus_scores(pairs: list[tuple[str, str]]) -> TextScore:
    char_edits = char_total = 0
    word_edits = word_total = 0
    for reference, hypothesis in pairs:
        ops_c = edit_ops(reference, hypothesis, "character")
        char_edits += ops_c.total
        char_total += ops_c.reference_length
        ops_w = edit_ops(reference, hypothesis, "word")
        word_edits += ops_w.total
        word_total += ops_w.reference_length
    return TextScore(
        cer=char_edits / char_total,
        wer=word_edits / word_total,
        bleu=bleu([r for r, _ in pairs], [h for _, h in pairs]),
    )


def evaluate_ocr(pairs: Iterable[tuple[FieldKind, str, str]],
                 case_insensitive: bool = False) -> OcrEvaluation:
    """Score (field, reference, hypothesis) triples per field and overall.

    Every reference must be non-empty. CER/WER are micro-averaged over the
    corpus; BLEU is corpus-level per field.
    """
    by_field: dict[FieldKind, list[tuple[str, str]]] = {}
    pooled: list[tuple[str, str]] = []
    for kind, reference, hypothesis in pairs:
        if case_insensitive:
            reference = reference.casefold()
            hypothesis = hypothesis.casefold()
        if not reference.strip():
            raise EmptyReferenceError(
                f"empty reference for field {kind.label!r}")
        by_field.setdefault(kind, []).append((reference, hypothesis))
        pooled.append((reference, hypothesis))
    if not pooled:
        raise ValueError("no pairs to evaluate")

    per_field = {kind: _corpus_scores(items)
                 for kind, items in by_field.items()}
    return OcrEvaluation(
        per_field=per_field,
        overall=_corpus_scores(pooled),
        pair_counts={kind: len(items) for kind, items in by_field.items()},
    )
