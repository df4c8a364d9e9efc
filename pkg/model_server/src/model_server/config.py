"""Server configuration types.

Two modes: ``synthetic`` serves seeded degradations of a ground-truth
directory (no models, no GPU); ``neural`` wraps injected model callables
and reports not-ready until both are supplied.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

MODES = ("synthetic", "neural")
DEFAULT_PATCH_SIDE = 384


def _check_rate(value: float, name: str) -> None:
    if not 0.0 <= value <= 1.0:
        raise ValueError(f"{name} must be within [0, 1], got {value!r}")


@dataclass(frozen=True, slots=True)
class NoiseParams:
    """Per-character degradation rates and the base random seed.

    Substitution and deletion are mutually exclusive per character, so
    their rates must not sum above 1.
    """

    substitution_rate: float = 0.0
    deletion_rate: float = 0.0
    insertion_rate: float = 0.0
    seed: int = 0

    def __post_init__(self) -> None:
        _check_rate(self.substitution_rate, "substitution_rate")
        _check_rate(self.deletion_rate, "deletion_rate")
        _check_rate(self.insertion_rate, "insertion_rate")
        if self.substitution_rate + self.deletion_rate > 1.0:
            raise ValueError("substitution_rate + deletion_rate must not "
                             "exceed 1")


@dataclass(frozen=True, slots=True)
class ServerConfig:
    """Resolved server settings.

    ``truth_dir`` holds one JSON record per (document, field) at
    ``<truth_dir>/<doc_id>/<field>.json`` — the same layout the toolkit's
    fixture backend reads. Model identifiers are opaque strings recorded
    for neural deployments; this reference build loads no checkpoints
    itself.
    """

    mode: str = "synthetic"
    truth_dir: Path | None = None
    noise: NoiseParams = NoiseParams()
    patch_side: int = DEFAULT_PATCH_SIDE
    recognizer_model: str = ""
    detector_model: str = ""

    def __post_init__(self) -> None:
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got "
                             f"{self.mode!r}")
        if self.patch_side < 1:
            raise ValueError("patch_side must be >= 1")
        if self.mode == "synthetic" and self.truth_dir is None:
            raise ValueError("synthetic mode requires a truth_dir")
