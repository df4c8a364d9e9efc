"""Input validation helpers used by the operation entry points."""

from __future__ import annotations


def check_unit_interval(value: float, name: str, *, open_low: bool = False,
                        open_high: bool = False) -> float:
    """Validate that ``value`` lies in [0,1] (or half-open variants)."""
    low_ok = value > 0.0 if open_low else value >= 0.0
    high_ok = value < 1.0 if open_high else value <= 1.0
    if not (low_ok and high_ok):
        lo = "(" if open_low else "["
        hi = ")" if open_high else "]"
        raise ValueError(f"{name} must be in {lo}0, 1{hi}, got {value!r}")
    return float(value)


def check_fraction(value: float, name: str) -> float:
    """Validate a split fraction, which must be strictly inside (0, 1)."""
    return check_unit_interval(value, name, open_low=True, open_high=True)


def check_positive_int(value: int, name: str) -> int:
    if not isinstance(value, int) or isinstance(value, bool) or value < 1:
        raise ValueError(f"{name} must be a positive integer, got {value!r}")
    return value


def check_box(box) -> None:
    """Validate box geometry: positive extent, non-negative coordinates."""
    if not box.is_valid():
        raise ValueError(f"invalid bounding box {box}")


def check_score(value: float, name: str = "score") -> float:
    return check_unit_interval(value, name)
