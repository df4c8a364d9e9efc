"""Gazetteer-based post-correction of low-confidence recognitions.

Each field kind gets a TF-IDF index over character n-grams (trigrams by
default) of its gazetteer entries. A recognition whose confidence falls
below the policy threshold is looked up unit by unit (whole field, or
token by token for person names); the top neighbour replaces the unit
when the replacement confidence clears the acceptance threshold.

Retrieval ranks entries by cosine similarity in the TF-IDF space, with
edit distance and then entry text as tie-breaks. The acceptance gate uses
a blended replacement confidence: the maximum of that cosine and the
Jaro-Winkler similarity of the strings. Trigram overlap alone undervalues
single-letter slips in short words (one substitution can wipe out three
of five trigrams), while Jaro-Winkler stays high for exactly those
near-misses; taking the maximum lets both long multi-word entries and
short names pass the same gate.

Year fields are never gazetteer-corrected; :func:`plausible_year` offers
a range check instead.
"""

from __future__ import annotations

import json
import math
import re
import warnings
from collections import Counter
from dataclasses import dataclass, field as dataclass_field
from typing import Iterable, Mapping, Sequence

from sklearn.base import BaseEstimator, TransformerMixin

from .annotations import GazetteerRecord
from .errors import ConfigurationError, EmptyGazetteerError
from .metrics import levenshtein
from .types import (
    COMPLAINANT_NAME,
    POLICE_STATION,
    STATUTE,
    YEAR,
    FieldKind,
    RecognizedField,
)
from .validation import check_positive_int, check_unit_interval

DEFAULT_NGRAM_SIZE = 3
GRANULARITIES = ("token", "whole_field")
DEFAULT_GRANULARITY = {
    COMPLAINANT_NAME: "token",
    POLICE_STATION: "whole_field",
    STATUTE: "whole_field",
}

_YEAR_RE = re.compile(r"(19|20)\d\d")


def extract_ngrams(text: str, n: int = DEFAULT_NGRAM_SIZE) -> Counter:
    """Multiset of case-folded character n-grams of ``text``.

    The window slides over the raw string, interior spaces included.
    Strings shorter than ``n`` yield an empty multiset.
    """
    check_positive_int(n, "n")
    folded = text.casefold()
    return Counter(folded[i:i + n] for i in range(len(folded) - n + 1))


def _normalize(vector: dict[str, float]) -> dict[str, float]:
    norm = math.sqrt(sum(weight * weight for weight in vector.values()))
    if norm == 0.0:
        return {}
    return {gram: weight / norm for gram, weight in vector.items()}


def _cosine(u: Mapping[str, float], v: Mapping[str, float]) -> float:
    if len(v) < len(u):
        u, v = v, u
    dot = sum(weight * v.get(gram, 0.0) for gram, weight in u.items())
    return min(1.0, max(0.0, dot))


@dataclass(frozen=True, slots=True)
class TfIdfIndex:
    """Immutable TF-IDF vector index over one field's gazetteer.

    ``entries`` holds (original text, L2-normalized sparse vector) pairs;
    entries shorter than ``ngram_size`` carry the zero vector and are
    listed in ``unreachable_entries`` because no query can retrieve them.
    """

    field: FieldKind
    ngram_size: int
    vocabulary: dict[str, int]
    idf: dict[str, float]
    entries: tuple[tuple[str, dict[str, float]], ...]
    unreachable_entries: tuple[str, ...] = ()

    def __len__(self) -> int:
        return len(self.entries)


def build_index(records: Sequence[GazetteerRecord],
                n: int = DEFAULT_NGRAM_SIZE) -> TfIdfIndex:
    """Build a TF-IDF character n-gram index from gazetteer records.

    Each entry is one document: tf is the n-gram count within the entry,
    idf is ln((1+N)/(1+df)) + 1 over the N entries, and vectors are
    L2-normalized. All records must target the same field. Entries too
    short to produce any n-gram are kept but flagged unreachable (with a
    warning).
    """
    check_positive_int(n, "n")
    if not records:
        raise EmptyGazetteerError("cannot build an index from zero records")
    fields = {record.field for record in records}
    if len(fields) > 1:
        labels = sorted(kind.label for kind in fields)
        raise ValueError(f"records span multiple fields: {labels}")

    counts = [extract_ngrams(record.entry, n) for record in records]
    df: Counter = Counter()
    for grams in counts:
        df.update(set(grams))
    total = len(records)
    idf = {gram: math.log((1 + total) / (1 + seen)) + 1
           for gram, seen in df.items()}
    vocabulary = {gram: dim for dim, gram in enumerate(sorted(idf))}

    entries = []
    unreachable = []
    for record, grams in zip(records, counts):
        vector = _normalize({gram: count * idf[gram]
                             for gram, count in grams.items()})
        if not vector:
            unreachable.append(record.entry)
        entries.append((record.entry, vector))
    if unreachable:
        warnings.warn(
            f"{len(unreachable)} gazetteer entr(y/ies) shorter than "
            f"{n} characters can never be retrieved: {unreachable}",
            stacklevel=2)
    return TfIdfIndex(field=next(iter(fields)), ngram_size=n,
                      vocabulary=vocabulary, idf=idf,
                      entries=tuple(entries),
                      unreachable_entries=tuple(unreachable))


def jaro(a: str, b: str) -> float:
    """Jaro similarity of two strings in [0,1]."""
    if a == b:
        return 1.0
    if not a or not b:
        return 0.0
    window = max(max(len(a), len(b)) // 2 - 1, 0)
    a_taken = [False] * len(a)
    b_taken = [False] * len(b)
    matches = 0
    for i, char in enumerate(a):
        low = max(0, i - window)
        high = min(len(b), i + window + 1)
        for j in range(low, high):
            if not b_taken[j] and b[j] == char:
                a_taken[i] = b_taken[j] = True
                matches += 1
                break
    if matches == 0:
        return 0.0
    a_run = [char for char, taken in zip(a, a_taken) if taken]
    b_run = [char for char, taken in zip(b, b_taken) if taken]
    transpositions = sum(x != y for x, y in zip(a_run, b_run)) // 2
    return (matches / len(a) + matches / len(b)
            + (matches - transpositions) / matches) / 3


def jaro_winkler(a: str, b: str, prefix_weight: float = 0.1) -> float:
    """Jaro similarity boosted for a shared prefix (up to 4 chars).

    The boost only applies when the base similarity exceeds 0.7.
    """
    base = jaro(a, b)
    if base <= 0.7:
        return base
    prefix = 0
    for char_a, char_b in zip(a, b):
        if char_a != char_b or prefix == 4:
            break
        prefix += 1
    return base + prefix * prefix_weight * (1 - base)


@dataclass(frozen=True, slots=True)
class KnnMatch:
    """One retrieved gazetteer entry.

    ``similarity`` is the cosine between query and entry vectors;
    ``edit_distance`` is the character-level edit distance used as the
    first tie-break.
    """

    entry: str
    similarity: float
    edit_distance: int

    def __post_init__(self):
        check_unit_interval(self.similarity, "similarity")


def knn_search(index: TfIdfIndex, query: str, k: int = 1) -> list[KnnMatch]:
    """Nearest gazetteer entries by TF-IDF cosine, best first.

    The query is vectorized with the index idf weights; n-grams outside
    the vocabulary are dropped, and a query with no known n-gram returns
    an empty list. Ranking ties break toward lower edit distance, then
    lexicographic entry text. Unreachable (zero-vector) entries never
    appear. At most min(k, reachable entry count) matches are returned.
    """
    check_positive_int(k, "k")
    grams = extract_ngrams(query, index.ngram_size)
    weighted = {gram: count * index.idf[gram]
                for gram, count in grams.items() if gram in index.idf}
    query_vector = _normalize(weighted)
    if not query_vector:
        return []
    folded_query = query.casefold()
    scored = []
    for text, vector in index.entries:
        if not vector:
            continue
        similarity = _cosine(query_vector, vector)
        distance = levenshtein(folded_query, text.casefold())
        scored.append((-similarity, distance, text))
    scored.sort()
    return [KnnMatch(entry=text, similarity=-neg, edit_distance=distance)
            for neg, distance, text in scored[:k]]


def replacement_confidence(query: str, match: KnnMatch) -> float:
    """Confidence that ``match`` is the intended value behind ``query``.

    Maximum of the vector-space similarity and the Jaro-Winkler string
    similarity (case-folded); see the module docstring for why both
    signals are needed.
    """
    return max(match.similarity,
               jaro_winkler(query.casefold(), match.entry.casefold()))


@dataclass(frozen=True, slots=True)
class CorrectionPolicy:
    """Thresholds and per-field behaviour of the correction pass."""

    ocr_confidence_threshold: float = 0.7
    knn_accept_threshold: float = 0.9
    k: int = 1
    granularity: Mapping[FieldKind, str] = dataclass_field(
        default_factory=lambda: dict(DEFAULT_GRANULARITY))
    no_correction: frozenset[FieldKind] = frozenset({YEAR})

    def __post_init__(self):
        check_unit_interval(self.ocr_confidence_threshold,
                            "ocr_confidence_threshold")
        check_unit_interval(self.knn_accept_threshold, "knn_accept_threshold")
        check_positive_int(self.k, "k")
        for kind, granularity in self.granularity.items():
            if granularity not in GRANULARITIES:
                raise ValueError(
                    f"unknown granularity {granularity!r} for {kind.label}")

    def granularity_for(self, kind: FieldKind) -> str:
        return self.granularity.get(kind, "whole_field")


def needs_correction(rec: RecognizedField, policy: CorrectionPolicy) -> bool:
    """True when a recognition is eligible for the correction pass."""
    if rec.kind in policy.no_correction:
        return False
    return rec.confidence < policy.ocr_confidence_threshold


@dataclass(frozen=True, slots=True)
class CorrectionEvent:
    """One accepted unit replacement inside a field."""

    unit_index: int
    original: str
    replacement: str
    similarity: float
    cosine: float


def apply_correction(
        rec: RecognizedField,
        indexes: Mapping[FieldKind, TfIdfIndex],
        policy: CorrectionPolicy) -> tuple[RecognizedField,
                                           list[CorrectionEvent]]:
    """Correct one recognition, reporting every replacement made.

    Fields marked no-correction or at/above the confidence threshold pass
    through untouched. Otherwise each unit (the whole field, or each
    whitespace token for token granularity) is looked up; the top
    neighbour replaces the unit iff its replacement confidence is
    strictly above the acceptance threshold. A correctable field without
    an index is a configuration error.
    """
    if not needs_correction(rec, policy):
        return rec, []
    index = indexes.get(rec.kind)
    if index is None:
        raise ConfigurationError(
            f"no gazetteer index configured for field {rec.kind.label!r}")
    if policy.granularity_for(rec.kind) == "token":
        units = rec.text.split()
    else:
        units = [rec.text]

    events: list[CorrectionEvent] = []
    output: list[str] = []
    for unit_index, unit in enumerate(units):
        matches = knn_search(index, unit, policy.k)
        replaced = unit
        if matches:
            top = matches[0]
            confidence = replacement_confidence(unit, top)
            if confidence > policy.knn_accept_threshold and top.entry != unit:
                replaced = top.entry
                events.append(CorrectionEvent(
                    unit_index=unit_index, original=unit,
                    replacement=top.entry, similarity=confidence,
                    cosine=top.similarity))
        output.append(replaced)
    if not events:
        return rec, []
    if policy.granularity_for(rec.kind) == "token":
        new_text = " ".join(output)
    else:
        new_text = output[0]
    corrected = RecognizedField(kind=rec.kind, text=new_text,
                                confidence=rec.confidence, corrected=True,
                                original_text=rec.text)
    return corrected, events


def correct_field(rec: RecognizedField,
                  indexes: Mapping[FieldKind, TfIdfIndex],
                  policy: CorrectionPolicy) -> RecognizedField:
    """Correct one recognition (see :func:`apply_correction`)."""
    corrected, _ = apply_correction(rec, indexes, policy)
    return corrected


def plausible_year(text: str) -> bool:
    """True when the text is a four-digit year in 1900-2099."""
    return _YEAR_RE.fullmatch(text.strip()) is not None


def save_index(index: TfIdfIndex) -> str:
    """Serialize an index to JSON; :func:`load_index` restores it with
    bit-identical search behaviour."""
    payload = {
        "field": index.field.label,
        "ngram_size": index.ngram_size,
        "idf": dict(sorted(index.idf.items())),
        "entries": [{"text": text, "vector": dict(sorted(vector.items()))}
                    for text, vector in index.entries],
    }
    return json.dumps(payload, sort_keys=True, indent=2, ensure_ascii=False) \
        + "\n"


def load_index(content: str) -> TfIdfIndex:
    """Rebuild an index from :func:`save_index` output."""
    try:
        payload = json.loads(content)
        field = FieldKind.from_label(payload["field"])
        ngram_size = int(payload["ngram_size"])
        idf = {str(gram): float(weight)
               for gram, weight in payload["idf"].items()}
        entries = tuple(
            (str(item["text"]),
             {str(gram): float(weight)
              for gram, weight in item["vector"].items()})
            for item in payload["entries"])
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise ConfigurationError(f"unreadable index file: {exc}") from exc
    vocabulary = {gram: dim for dim, gram in enumerate(sorted(idf))}
    unreachable = tuple(text for text, vector in entries if not vector)
    return TfIdfIndex(field=field, ngram_size=ngram_size,
                      vocabulary=vocabulary, idf=idf, entries=entries,
                      unreachable_entries=unreachable)


class GazetteerKnnCorrector(BaseEstimator, TransformerMixin):
    """Estimator-style wrapper over the correction pass.

    ``fit`` consumes gazetteer records (any mix of fields) and builds one
    index per field; ``transform`` maps recognitions to their corrected
    forms under the configured policy.
    """

    def __init__(self, ngram_size: int = DEFAULT_NGRAM_SIZE, k: int = 1,
                 ocr_confidence_threshold: float = 0.7,
                 knn_accept_threshold: float = 0.9):
        self.ngram_size = ngram_size
        self.k = k
        self.ocr_confidence_threshold = ocr_confidence_threshold
        self.knn_accept_threshold = knn_accept_threshold

    def fit(self, X: Iterable[GazetteerRecord], y=None):
        grouped: dict[FieldKind, list[GazetteerRecord]] = {}
        for record in X:
            grouped.setdefault(record.field, []).append(record)
        if not grouped:
            raise EmptyGazetteerError("fit requires at least one record")
        self.indexes_ = {kind: build_index(records, self.ngram_size)
                         for kind, records in grouped.items()}
        self.policy_ = CorrectionPolicy(
            ocr_confidence_threshold=self.ocr_confidence_threshold,
            knn_accept_threshold=self.knn_accept_threshold,
            k=self.k)
        return self

    def _check_fitted(self):
        if not hasattr(self, "indexes_"):
            raise ConfigurationError("corrector is not fitted")

    def transform(self, X: Iterable[RecognizedField]) -> list[RecognizedField]:
        self._check_fitted()
        return [correct_field(rec, self.indexes_, self.policy_) for rec in X]

    def kneighbors(self, queries: Iterable[str], field: FieldKind,
                   n_neighbors: int | None = None) -> list[list[KnnMatch]]:
        self._check_fitted()
        if field not in self.indexes_:
            raise ConfigurationError(
                f"no index fitted for field {field.label!r}")
        k = self.k if n_neighbors is None else n_neighbors
        return [knn_search(self.indexes_[field], query, k)
                for query in queries]
