#!/usr/bin/env python3
"""
Rate Estimates - Expected and fitted convergence exponents

The far-field gap between the perforated medium and its equivalent model
behaves like a^r with

    r = min{gamma, (2 - beta)/3, 1 - 3 beta, 2 - beta - t}

The estimate carried through the error analysis has an extra 1/3 inside the
minimum; both candidates are reported.

Usage:
    estimate = expected_rate(regime, gamma=1.0)
    slope = fit_rate([(0.1, 2e-2), (0.05, 1.3e-2), (0.025, 8e-3)])
"""

import math
from dataclasses import dataclass, field
from typing import Dict, Iterable, Tuple

import numpy as np

from core.domain.types import AsymptoticRegime
from core.utils.logger import get_logger

logger = get_logger('system')

PIECEWISE_SPLIT = 1.0 / 8.0


@dataclass(frozen=True)
class RateEstimate:
    """Expected exponent and the term that sets it"""
    exponent: float
    binding: str
    converges: bool
    proof_exponent: float
    piecewise_exponent: float
    terms: Dict[str, float] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            'exponent': self.exponent,
            'binding': self.binding,
            'converges': self.converges,
            'proof_exponent': self.proof_exponent,
            'piecewise_exponent': self.piecewise_exponent,
            'terms': dict(self.terms),
        }


def expected_rate(regime: AsymptoticRegime, gamma: float) -> RateEstimate:
    """
    Expected exponent of the equivalent-medium approximation

    Args:
        regime: Regime (beta, t)
        gamma: Hoelder exponent of n, K and lambda0

    Returns:
        RateEstimate; converges is False when the exponent is <= 0
    """
    beta, t = regime.beta, regime.t
    terms = {
        'gamma': float(gamma),
        '(2-beta)/3': (2.0 - beta) / 3.0,
        '1-3beta': 1.0 - 3.0 * beta,
        '2-beta-t': 2.0 - beta - t,
    }
    binding = min(terms, key=terms.get)
    exponent = terms[binding]

    if beta <= PIECEWISE_SPLIT:
        piecewise = min(terms['gamma'], terms['(2-beta)/3'], terms['2-beta-t'])
    else:
        piecewise = min(terms['gamma'], terms['1-3beta'], terms['2-beta-t'])

    estimate = RateEstimate(
        exponent=exponent,
        binding=binding,
        converges=exponent > 0,
        proof_exponent=min(exponent, 1.0 / 3.0),
        piecewise_exponent=piecewise,
        terms=terms,
    )
    if not estimate.converges:
        logger.warning(f"⚠️  Expected exponent {exponent:.4g} <= 0 (beta = {beta:g}): "
                       f"the remainder does not tend to zero")
    return estimate


def fit_rate(pairs: Iterable[Tuple[float, float]]) -> float:
    """
    Least-squares slope of log(err) against log(a)

    Args:
        pairs: (a, err) pairs

    Returns:
        Fitted slope

    Raises:
        ValueError: fewer than 2 usable pairs
    """
    usable = []
    for a, err in pairs:
        if not (err > 0 and math.isfinite(err)):
            logger.warning(f"⚠️  Dropping rate row a = {a:g}: err = {err!r} is not positive")
            continue
        if not a > 0:
            raise ValueError(f"Hole diameter must be positive: {a}")
        usable.append((a, err))

    if len(usable) < 2:
        raise ValueError(f"Rate fit needs at least 2 pairs with err > 0, got {len(usable)}")

    log_a = np.log([a for a, _ in usable])
    log_err = np.log([err for _, err in usable])
    slope, _ = np.polyfit(log_a, log_err, 1)
    return float(slope)
