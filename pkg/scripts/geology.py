#!/usr/bin/env python3
"""
Geological suitability of salt deposits.

This module:
- Classifies deposits as guaranteed suitable, partially suitable or unsuitable
- Selects the deposit set for a geology case (lower / upper bound)
- Derives the admissible depth window of a deposit

Thresholds: depth window [500 m, 2000 m] (inclusive), thickness > 200 m,
insoluble minerals < 25 %, deposit area > 15 km².
"""

import logging
from dataclasses import dataclass, replace
from typing import Dict, List, Optional, Sequence, Tuple

from scripts.errors import ValidationError
from scripts.load_data import SaltDeposit

logger = logging.getLogger(__name__)

GUARANTEED = "guaranteed"
PARTIAL = "partial"
UNSUITABLE = "unsuitable"

# Lower rank = more conservative
_RANK = {UNSUITABLE: 0, PARTIAL: 1, GUARANTEED: 2}

GEOLOGY_CASES = ("guaranteed_only", "guaranteed_and_partial")


@dataclass(frozen=True)
class SuitabilityCriteria:
    """
    Geological thresholds for cavern construction.

    Attributes:
        depth_window_m (tuple): Admissible depth of the cavern zone (inclusive)
        min_thickness_m (float): Thickness must exceed this
        max_insoluble_fraction (float): Insolubles must stay below this
        min_area_km2 (float): Deposit area must exceed this
    """

    depth_window_m: Tuple[float, float] = (500.0, 2000.0)
    min_thickness_m: float = 200.0
    max_insoluble_fraction: float = 0.25
    min_area_km2: float = 15.0

    def validate(self) -> "SuitabilityCriteria":
        w_min, w_max = self.depth_window_m
        if not 0 < w_min < w_max:
            raise ValidationError(f"depth window must satisfy 0 < min < max, got {self.depth_window_m}")
        if self.min_thickness_m <= 0 or self.min_area_km2 <= 0:
            raise ValidationError("thickness and area thresholds must be positive")
        if not 0 < self.max_insoluble_fraction < 1:
            raise ValidationError("max_insoluble_fraction must lie in (0, 1)")
        return self

    @classmethod
    def from_dict(cls, data: Optional[Dict]) -> "SuitabilityCriteria":
        data = dict(data or {})
        if "depth_window_m" in data:
            data["depth_window_m"] = tuple(float(v) for v in data["depth_window_m"])
        return cls(**data).validate()

    def to_dict(self) -> Dict:
        return {
            "depth_window_m": list(self.depth_window_m),
            "min_thickness_m": self.min_thickness_m,
            "max_insoluble_fraction": self.max_insoluble_fraction,
            "min_area_km2": self.min_area_km2,
        }


def _depth_status(depth: Optional[Tuple[float, float]], window: Tuple[float, float]) -> str:
    if depth is None:
        return "uncertain"
    d_min, d_max = depth
    w_min, w_max = window
    if w_min <= d_min and d_max <= w_max:
        return "met"
    if d_max < w_min or d_min > w_max:
        return "violated"
    return "uncertain"


def _threshold_status(value: Optional[float], ok: bool) -> str:
    if value is None:
        return "uncertain"
    return "met" if ok else "violated"


def classify_deposit(d: SaltDeposit, c: SuitabilityCriteria = SuitabilityCriteria()) -> str:
    """
    Classify a deposit against the suitability criteria.

    A deposit is guaranteed suitable when every criterion holds over the
    whole deposit, unsuitable when any criterion fails over the whole
    deposit, and partially suitable otherwise (depth interval straddling
    the window, or unknown attributes). An input suitability hint can only
    lower the result.

    Args:
        d: Deposit
        c: Criteria

    Returns:
        "guaranteed", "partial" or "unsuitable"
    """
    statuses = [
        _depth_status(d.depth_top_m, c.depth_window_m),
        _threshold_status(d.thickness_m, d.thickness_m is not None and d.thickness_m > c.min_thickness_m),
        _threshold_status(
            d.insoluble_fraction,
            d.insoluble_fraction is not None and d.insoluble_fraction < c.max_insoluble_fraction,
        ),
        _threshold_status(d.area_km2, d.area_km2 > c.min_area_km2),
    ]

    if "violated" in statuses:
        result = UNSUITABLE
    elif all(s == "met" for s in statuses):
        result = GUARANTEED
    else:
        result = PARTIAL

    hint = d.suitability_hint
    if hint in _RANK and _RANK[hint] < _RANK[result]:
        result = hint
    return result


def classify_deposits(deposits: Sequence[SaltDeposit], c: SuitabilityCriteria = SuitabilityCriteria()) -> List[SaltDeposit]:
    """Return copies of the deposits with `suitability` set."""
    classified = [replace(d, suitability=classify_deposit(d, c)) for d in deposits]
    counts = {k: 0 for k in _RANK}
    for d in classified:
        counts[d.suitability] += 1
    logger.info(
        f"✓ Classified {len(classified)} deposits: {counts[GUARANTEED]} guaranteed, "
        f"{counts[PARTIAL]} partial, {counts[UNSUITABLE]} unsuitable"
    )
    return classified


def suitable_depth_window(d: SaltDeposit, c: SuitabilityCriteria = SuitabilityCriteria()) -> Optional[Tuple[float, float]]:
    """
    Depth interval where the deposit meets the depth criterion.

    Returns the criteria window for deposits of unknown depth (upper
    bound) and None when the deposit lies entirely outside the window.
    """
    w_min, w_max = c.depth_window_m
    if d.depth_top_m is None:
        return (w_min, w_max)
    lo = max(w_min, d.depth_top_m[0])
    hi = min(w_max, d.depth_top_m[1])
    if lo > hi:
        return None
    return (lo, hi)


def select_case(
    deposits: Sequence[SaltDeposit],
    case: str,
    c: SuitabilityCriteria = SuitabilityCriteria(),
) -> List[SaltDeposit]:
    """
    Select the deposits used by a geology case.

    Args:
        deposits: Classified deposits
        case: "guaranteed_only" (lower bound) or "guaranteed_and_partial" (upper bound)
        c: Criteria used to clip partial deposits to their suitable depth

    Returns:
        Selected deposits; partial deposits clipped to their suitable
        depth sub-interval where one exists

    Raises:
        ValidationError: Unknown case or unclassified deposit
    """
    if case not in GEOLOGY_CASES:
        raise ValidationError(f"geology case must be one of {GEOLOGY_CASES}, got {case!r}")

    selected = []
    for d in deposits:
        if d.suitability is None:
            raise ValidationError(f"deposit {d.id} has not been classified")
        if d.suitability == GUARANTEED:
            selected.append(d)
        elif d.suitability == PARTIAL and case == "guaranteed_and_partial":
            if d.depth_top_m is not None:
                window = suitable_depth_window(d, c)
                if window is not None:
                    d = replace(d, depth_top_m=window)
            selected.append(d)

    logger.info(f"Case {case}: {len(selected)} of {len(deposits)} deposits selected")
    return selected


def suitability_summary(deposits: Sequence[SaltDeposit]) -> Dict:
    """Deposit counts and areas (km²) per suitability class."""
    summary = {k: {"deposits": 0, "area_km2": 0.0} for k in (GUARANTEED, PARTIAL, UNSUITABLE)}
    for d in deposits:
        if d.suitability is None:
            continue
        summary[d.suitability]["deposits"] += 1
        summary[d.suitability]["area_km2"] += d.area_km2
    return summary
