"""Seeded character-level degradation of ground-truth text.

Each character is independently deleted, substituted, or kept, and may
then be followed by an inserted character. The reported confidence is
1 minus the realized error fraction (errors over source length), clamped
to [0, 1], so zero noise yields the input verbatim at confidence 1.0.
"""

from __future__ import annotations

import random
from zlib import crc32

from .config import NoiseParams

ALPHABET = "abcdefghijklmnopqrstuvwxyz0123456789"


def derive_seed(base_seed: int, doc_id: str, field: str) -> int:
    """Stable per-(document, field) seed, independent of request order."""
    return base_seed ^ crc32(f"{doc_id}/{field}".encode("utf-8"))


def degrade(text: str, params: NoiseParams, seed: int) -> tuple[str, float]:
    """Return a noisy copy of ``text`` and its synthetic confidence."""
    rng = random.Random(seed)
    pieces: list[str] = []
    errors = 0
    for char in text:
        roll = rng.random()
        if roll < params.deletion_rate:
            errors += 1
        elif roll < params.deletion_rate + params.substitution_rate:
            pieces.append(rng.choice(
                [other for other in ALPHABET if other != char.lower()]))
            errors += 1
        else:
            pieces.append(char)
        if rng.random() < params.insertion_rate:
            pieces.append(rng.choice(ALPHABET))
            errors += 1
    if not text:
        return "", 1.0
    confidence = 1.0 - errors / len(text)
    return "".join(pieces), max(0.0, min(1.0, confidence))
