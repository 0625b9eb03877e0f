#!/usr/bin/env python3
"""
Domain Types - Medium, asymptotic regime and wavenumber

MediumSpec describes the background index n(x) on a bounded domain Omega,
the local hole-density K(x), the impedance profile lambda0(x) and the
Hoelder exponent gamma. AsymptoticRegime carries the scaling exponents
(a, beta, s, t) and the a-priori bounds.

Usage:
    medium = MediumSpec.unit_cube(n=ScalarField.constant(1.0))
    regime = AsymptoticRegime(a=0.1, beta=0.0, s=2.0, t=2/3)
    problems = validate_regime(regime)
"""

import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import List, Optional, Tuple

import numpy as np

from core.domain.fields import ScalarField


class DomainShape(Enum):
    """Supported shapes for Omega"""
    BOX = "box"
    BALL = "ball"


@dataclass(frozen=True)
class MediumSpec:
    """
    Background medium and homogenization profiles on Omega

    n, K and lambda0 are only meaningful on Omega: the *_at accessors return
    n = 1, K = 0 and lambda0 = 0 outside.
    """
    box_lo: Tuple[float, float, float]
    box_lengths: Tuple[float, float, float]
    shape: DomainShape = DomainShape.BOX
    ball_center: Tuple[float, float, float] = (0.5, 0.5, 0.5)
    ball_radius: float = 0.5
    n: ScalarField = field(default_factory=lambda: ScalarField.constant(1.0))
    K: ScalarField = field(default_factory=lambda: ScalarField.constant(0.0))
    lambda0: ScalarField = field(default_factory=lambda: ScalarField.constant(1.0))
    gamma: float = 1.0

    def __post_init__(self):
        if any(length <= 0 for length in self.box_lengths):
            raise ValueError(f"Box lengths must be positive: {self.box_lengths}")
        if not 0.0 < self.gamma <= 1.0:
            raise ValueError(f"Hoelder exponent gamma must lie in (0, 1]: {self.gamma}")
        if self.shape is DomainShape.BALL and self.ball_radius <= 0:
            raise ValueError(f"Ball radius must be positive: {self.ball_radius}")

    @classmethod
    def unit_cube(cls, **kwargs) -> 'MediumSpec':
        """Omega = [0, 1]^3 (the default of unit volume)"""
        return cls(box_lo=(0.0, 0.0, 0.0), box_lengths=(1.0, 1.0, 1.0), **kwargs)

    @classmethod
    def ball(cls, center=(0.0, 0.0, 0.0), radius: float = 0.5, **kwargs) -> 'MediumSpec':
        """Omega = ball, boxed by its bounding cube"""
        lo = tuple(float(c) - radius for c in center)
        return cls(box_lo=lo, box_lengths=(2 * radius,) * 3, shape=DomainShape.BALL,
                   ball_center=tuple(float(c) for c in center), ball_radius=float(radius),
                   **kwargs)

    # ===== GEOMETRY =====

    @property
    def box_hi(self) -> np.ndarray:
        return np.asarray(self.box_lo) + np.asarray(self.box_lengths)

    @property
    def volume(self) -> float:
        """Analytic |Omega|"""
        if self.shape is DomainShape.BALL:
            return 4.0 / 3.0 * math.pi * self.ball_radius ** 3
        return float(np.prod(self.box_lengths))

    def contains(self, points) -> np.ndarray:
        """Omega membership predicate"""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        if self.shape is DomainShape.BALL:
            r = np.linalg.norm(pts - np.asarray(self.ball_center), axis=1)
            return r <= self.ball_radius
        lo = np.asarray(self.box_lo)
        return np.all((pts >= lo) & (pts <= self.box_hi), axis=1)

    # ===== FIELDS (indicator applied) =====

    def n_at(self, points) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        return np.where(self.contains(pts), self.n(pts), 1.0)

    def K_at(self, points) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        return np.where(self.contains(pts), np.real(self.K(pts)), 0.0)

    def lambda0_at(self, points) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        return np.where(self.contains(pts), self.lambda0(pts), 0.0).astype(complex)

    def contrast_at(self, points, kappa: float) -> np.ndarray:
        """kappa^2 (n^2 - 1), zero outside Omega"""
        n = self.n_at(points)
        return (kappa ** 2 * (n.astype(complex) ** 2 - 1.0)).astype(complex)

    @property
    def is_homogeneous(self) -> bool:
        """True when n == 1 everywhere (the free-space fast path applies)"""
        return self.n.is_identically(1.0)

    def k_max(self) -> float:
        """K_max = sup(K + 1) over a coarse sample of Omega"""
        if self.K.is_constant:
            return float(np.real(self.K.value)) + 1.0
        axes = [np.linspace(lo, lo + length, 33) for lo, length in zip(self.box_lo, self.box_lengths)]
        pts = np.stack(np.meshgrid(*axes, indexing='ij'), axis=-1).reshape(-1, 3)
        return float(np.max(self.K_at(pts))) + 1.0

    def describe(self) -> dict:
        info = {
            'shape': self.shape.value,
            'box_lo': list(self.box_lo),
            'box_lengths': list(self.box_lengths),
            'volume': self.volume,
            'n': self.n.describe(),
            'K': self.K.describe(),
            'lambda0': self.lambda0.describe(),
            'gamma': self.gamma,
        }
        if self.shape is DomainShape.BALL:
            info.update(ball_center=list(self.ball_center), ball_radius=self.ball_radius)
        return info


@dataclass(frozen=True)
class AsymptoticRegime:
    """
    Scaling parameters and a-priori bounds of the many-hole regime

    M <= m_max a^{-s}, d_min a^t <= d <= d_max a^t, lambda_m = lambda_{m,0} a^{-beta}.
    """
    a: float
    beta: float = 0.0
    s: Optional[float] = None
    t: float = 2.0 / 3.0
    m_max: float = 1.0
    d_min: float = 0.5
    d_max: float = 2.0
    kappa_max: float = 10.0
    lambda_minus: float = 0.0
    lambda_plus: float = math.inf

    def __post_init__(self):
        if self.s is None:
            object.__setattr__(self, 's', 2.0 - self.beta)

    def with_a(self, a: float) -> 'AsymptoticRegime':
        return replace(self, a=a)

    def with_beta(self, beta: float, couple_s: bool = True) -> 'AsymptoticRegime':
        """Copy with a new beta; s follows 2 - beta when couple_s"""
        return replace(self, beta=beta, s=(2.0 - beta) if couple_s else self.s)

    @property
    def is_equivalent_regime(self) -> bool:
        """s = 2 - beta: the equivalent-medium study"""
        return abs(self.s - (2.0 - self.beta)) < 1e-12

    @property
    def cell_side(self) -> float:
        """Side a^{s/3} of the partition cubes"""
        return self.a ** (self.s / 3.0)

    @property
    def min_distance_bounds(self) -> Tuple[float, float]:
        """(d_min a^t, d_max a^t)"""
        scale = self.a ** self.t
        return self.d_min * scale, self.d_max * scale

    def describe(self) -> dict:
        return {k: getattr(self, k) for k in
                ('a', 'beta', 's', 't', 'm_max', 'd_min', 'd_max', 'kappa_max',
                 'lambda_minus', 'lambda_plus')}


@dataclass(frozen=True)
class Wavenumber:
    """Wavenumber kappa >= 0"""
    kappa: float

    def __post_init__(self):
        if self.kappa < 0 or not math.isfinite(self.kappa):
            raise ValueError(f"Wavenumber must be finite and non-negative: {self.kappa}")

    def check(self, regime: AsymptoticRegime) -> List[str]:
        if self.kappa > regime.kappa_max:
            return [f"kappa <= kappa_max violated ({self.kappa:g} > {regime.kappa_max:g})"]
        return []


def validate_regime(regime: AsymptoticRegime,
                    kappa: Optional[Wavenumber] = None) -> List[str]:
    """
    Check the regime inequalities

    Args:
        regime: Regime to check
        kappa: Optional wavenumber, checked against kappa_max

    Returns:
        List of violations (empty iff all constraints hold)
    """
    violations = []
    two_minus_beta = 2.0 - regime.beta

    if not regime.a > 0:
        violations.append("a > 0 violated")
    if regime.beta < 0:
        violations.append("β ≥ 0 violated")
    if not regime.beta < 1:
        violations.append("β<1 violated")
    if regime.s < 0:
        violations.append("s ≥ 0 violated")
    if regime.s > two_minus_beta + 1e-12:
        violations.append("s ≤ 2−β violated")

    # s/3 <= t coincides with (2-beta)/3 <= t when s = 2 - beta
    if regime.t < regime.s / 3.0 - 1e-12:
        if regime.is_equivalent_regime:
            violations.append("t ≥ (2−β)/3 violated")
        else:
            violations.append("t ≥ s/3 violated")
    if regime.t > two_minus_beta + 1e-12:
        violations.append("t ≤ 2−β violated")

    if regime.d_min > regime.d_max:
        violations.append("d_min ≤ d_max violated")
    if regime.lambda_minus > regime.lambda_plus:
        violations.append("λ₋ ≤ λ₊ violated")

    if kappa is not None:
        violations.extend(kappa.check(regime))

    return violations
