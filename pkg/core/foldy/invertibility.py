#!/usr/bin/env python3
"""
Invertibility Diagnostics for the Foldy-Lax matrix

Two conditions are reported side by side:
- raw:        min Re(+-C_m) / max|C_m|^2  >  sqrt(26 M_max) / (pi a^{2-beta})
- sufficient: lambda_- / lambda_+^2       >  sqrt(26 M_max) / pi

The sign branch follows Re lambda_{m,0}: negative impedances use Re C_m,
positive ones Re(-C_m). Sets with mixed signs are out of scope; they are
still solved, without a guarantee.

When the raw condition holds, the charges obey
    sum |Q_m|^2 <= 4 (value - threshold)^-2 sum |V_m|^2
    sum |Q_m|   <= 2 (value' - threshold')^-1 M max|C| sum |V_m|
"""

import math
from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np

from core.domain.types import AsymptoticRegime
from core.geometry.placement import ScattererSet
from core.utils.logger import get_logger

logger = get_logger('solver')

SQRT26_OVER_PI = math.sqrt(26.0) / math.pi
"""sqrt(26) / pi = 1.623068...; the often quoted 1.62295 is a rounding slip"""


class Side:
    NEGATIVE = "negative"
    POSITIVE = "positive"
    MIXED = "mixed"


@dataclass(frozen=True)
class InvertibilityReport:
    """Outcome of the invertibility check for one placement"""
    side: str
    holes: int
    m_max: float
    a: float
    beta: float
    raw_value: float
    raw_threshold: float
    raw_margin: float
    passed: bool
    sufficient_value: float
    sufficient_threshold: float
    sufficient_margin: float
    sufficient_passed: bool
    l2_factor: Optional[float]
    l1_factor: Optional[float]

    @property
    def in_scope(self) -> bool:
        return self.side != Side.MIXED

    def to_dict(self) -> dict:
        data = asdict(self)
        data['in_scope'] = self.in_scope
        return data


def _side(lambda0: np.ndarray) -> str:
    re = np.real(lambda0)
    if len(re) and np.all(re < 0):
        return Side.NEGATIVE
    if len(re) and np.all(re > 0):
        return Side.POSITIVE
    return Side.MIXED


def invertibility_check(holes: ScattererSet, regime: AsymptoticRegime) -> InvertibilityReport:
    """
    Evaluate the raw and the sufficient invertibility conditions

    Args:
        holes: Placed holes (C_m, lambda_{m,0})
        regime: Regime (a, beta, M_max, lambda_-, lambda_+)

    Returns:
        InvertibilityReport (never raises)
    """
    side = _side(holes.lambda0)
    C = holes.C
    max_c = float(np.max(np.abs(C))) if len(C) else 0.0
    root = math.sqrt(26.0 * regime.m_max)
    scale = regime.a ** (2.0 - regime.beta)

    raw_threshold = root / (math.pi * scale)
    if side == Side.MIXED or max_c == 0.0:
        raw_value = float('nan')
        re_part = np.zeros(0)
    else:
        re_part = np.real(C) if side == Side.NEGATIVE else np.real(-C)
        raw_value = float(re_part.min() / max_c ** 2)
    passed = bool(side != Side.MIXED and raw_value > raw_threshold)
    raw_margin = raw_value - raw_threshold

    sufficient_threshold = root / math.pi
    if regime.lambda_plus > 0 and math.isfinite(regime.lambda_plus):
        sufficient_value = regime.lambda_minus / regime.lambda_plus ** 2
    else:
        # fall back on the placement's own impedance range
        lam = holes.lambda0
        sufficient_value = (float(np.min(np.abs(lam.real)) / np.max(np.abs(lam)) ** 2)
                            if len(lam) and np.max(np.abs(lam)) > 0 else 0.0)
    sufficient_passed = bool(sufficient_value > sufficient_threshold)

    l2_factor = l1_factor = None
    if passed:
        l2_factor = 4.0 / raw_margin ** 2
        l1_gap = float(re_part.min() / max_c) - max_c * root / (math.pi * scale)
        if l1_gap > 0:
            l1_factor = 2.0 * len(holes) * max_c / l1_gap

    if side == Side.MIXED:
        logger.warning("⚠️  Impedances on both sides of the imaginary axis: "
                       "no invertibility guarantee")

    report = InvertibilityReport(
        side=side, holes=len(holes), m_max=regime.m_max, a=regime.a, beta=regime.beta,
        raw_value=raw_value, raw_threshold=raw_threshold, raw_margin=raw_margin,
        passed=passed, sufficient_value=sufficient_value,
        sufficient_threshold=sufficient_threshold,
        sufficient_margin=sufficient_value - sufficient_threshold,
        sufficient_passed=sufficient_passed, l2_factor=l2_factor, l1_factor=l1_factor,
    )
    logger.debug(f"Invertibility: side={side} raw={raw_value:.4g} vs {raw_threshold:.4g} "
                 f"sufficient={sufficient_value:.4g} vs {sufficient_threshold:.4g}")
    return report
