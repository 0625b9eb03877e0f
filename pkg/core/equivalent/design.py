#!/usr/bin/env python3
"""
Design Calculators - Effective index, cloaking and impedance schedules

    n_eff^2 = n^2 + (K + 1) P0 lambda_tilde0

The root is taken with Im n_eff >= 0 (passive branch): principal root,
negated when its imaginary part is negative. On the real axis the root is
negated when Im lambda_tilde0 < 0, the limit of the metamaterial branch.

Cloaking uses lambda_tilde0 = (1 - n^2) / ((K + 1) P0), so that n_eff == 1,
with the frequency-dependent impedance lambda0 = kappa^2 lambda_tilde0 and
per-hole lambda_m = lambda_tilde_{m,0} kappa^2 a^{-beta}.
"""

import math
from dataclasses import dataclass, replace
from typing import List, Tuple

import numpy as np

from core.domain.fields import ScalarField
from core.domain.types import MediumSpec
from core.geometry.placement import ScattererSet
from core.utils.logger import get_logger

logger = get_logger('system')


@dataclass(frozen=True)
class EffectiveIndex:
    """Effective index sampled at points"""
    points: np.ndarray
    values: np.ndarray      # n_eff
    squared: np.ndarray     # n^2 + (K+1) P0 lambda_tilde0
    undefined: np.ndarray   # n_eff^2 == 0

    @property
    def passive(self) -> bool:
        return bool(np.all(self.values.imag >= 0))

    @property
    def re_sign(self) -> np.ndarray:
        return np.sign(self.values.real)

    def describe(self) -> dict:
        return {
            'points': len(self.values),
            'passive': self.passive,
            'undefined': int(self.undefined.sum()),
            'negative_real_part': int(np.sum(self.values.real < 0)),
            'min_re': float(self.values.real.min()) if len(self.values) else None,
            'max_re': float(self.values.real.max()) if len(self.values) else None,
        }


def index_from_samples(n, K, p0, lambda_tilde, pi_factor: bool = False,
                       points=None) -> EffectiveIndex:
    """
    Pointwise passive-branch square root

    Args:
        n, K, p0, lambda_tilde: Samples (scalars or arrays, broadcast)
        pi_factor: Scale the hole term by 2 pi
        points: Optional sample locations carried into the result

    Returns:
        EffectiveIndex
    """
    n = np.asarray(n, dtype=complex)
    lam = np.asarray(lambda_tilde, dtype=complex)
    factor = 2.0 * math.pi if pi_factor else 1.0
    squared = np.atleast_1d(n ** 2 + (np.asarray(K, dtype=float) + 1.0) * np.asarray(p0) * lam * factor)
    lam = np.broadcast_to(np.atleast_1d(lam), squared.shape)

    root = np.sqrt(squared)
    flip = (root.imag < 0) | ((root.imag == 0) & (lam.imag < 0))
    values = np.where(flip, -root, root)

    undefined = squared == 0
    if undefined.any():
        logger.warning(f"⚠️  Effective index undefined at {int(undefined.sum())} point(s) (n_eff^2 = 0)")

    pts = np.zeros((len(values), 0)) if points is None else np.atleast_2d(points)
    return EffectiveIndex(points=pts, values=values, squared=squared, undefined=undefined)


def effective_index(medium: MediumSpec, p0: float, lambda_tilde0: ScalarField, points,
                    pi_factor: bool = False) -> EffectiveIndex:
    """n_eff at points of Omega (outside Omega the index is n = 1)"""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    inside = medium.contains(pts)
    lam = np.where(inside, np.asarray(lambda_tilde0(pts), dtype=complex), 0.0)
    p = np.where(inside, p0, 0.0)
    return index_from_samples(medium.n_at(pts), medium.K_at(pts), p, lam,
                              pi_factor=pi_factor, points=pts)


def cloak_coefficient(medium: MediumSpec, p0: float) -> ScalarField:
    """
    lambda_tilde0 = (1 - n^2) / ((K + 1) P0), zero outside Omega

    Raises:
        ValueError: P0 <= 0
    """
    if p0 <= 0:
        raise ValueError(f"Cloak coefficient needs P0 > 0: {p0}")
    if medium.n.is_constant and medium.K.is_constant:
        n = complex(medium.n.value)
        k = float(np.real(medium.K.value))
        value = (1.0 - n ** 2) / ((k + 1.0) * p0)
        return ScalarField.constant(value.real if value.imag == 0 else value)

    def coefficient(pts: np.ndarray) -> np.ndarray:
        n = np.asarray(medium.n_at(pts), dtype=complex)
        return np.where(medium.contains(pts),
                        (1.0 - n ** 2) / ((medium.K_at(pts) + 1.0) * p0), 0.0)

    return ScalarField.derived(coefficient, gamma=min(medium.n.gamma, medium.K.gamma))


def cloak_medium(medium: MediumSpec, p0: float, kappa: float) -> MediumSpec:
    """Medium whose impedance profile is the cloak lambda0 = kappa^2 lambda_tilde0"""
    return replace(medium, lambda0=cloak_coefficient(medium, p0).scaled(kappa ** 2))


@dataclass(frozen=True)
class ImpedanceSchedule:
    """Per-hole impedances for a lambda_tilde0 design"""
    centers: np.ndarray
    lambda_tilde: np.ndarray   # lambda_tilde_{m,0}
    lambda0: np.ndarray        # kappa^2 lambda_tilde_{m,0}
    lambda_m: np.ndarray       # kappa^2 lambda_tilde_{m,0} a^{-beta}

    def apply(self, holes: ScattererSet) -> ScattererSet:
        return holes.with_lambda0(self.lambda0)


def impedance_schedule(holes: ScattererSet, lambda_tilde0: ScalarField, kappa: float,
                       beta: float = None) -> ImpedanceSchedule:
    """
    lambda_m = lambda_tilde_{m,0} kappa^2 a^{-beta} for every hole

    Args:
        holes: Placed holes (centers, a, beta)
        lambda_tilde0: Design field
        kappa: Wavenumber
        beta: Override of the holes' beta
    """
    beta = holes.beta if beta is None else beta
    lam_tilde = np.asarray(lambda_tilde0(holes.centers), dtype=complex).reshape(-1)
    lam0 = kappa ** 2 * lam_tilde
    return ImpedanceSchedule(centers=holes.centers, lambda_tilde=lam_tilde, lambda0=lam0,
                             lambda_m=lam0 * holes.a ** (-beta))


def passivity_check(lambda_tilde0: ScalarField, points) -> Tuple[bool, List[str]]:
    """
    Static sign check Re lambda_tilde0 >= 0

    Returns:
        (is_passive, violations)
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    values = np.asarray(lambda_tilde0(pts), dtype=complex).reshape(-1)
    bad = np.flatnonzero(values.real < 0)
    violations = [f"point {i} {pts[i].round(4).tolist()}: Re λ̃₀ = {values[i].real:.4g} < 0"
                  for i in bad[:20]]
    if len(bad) > 20:
        violations.append(f"... and {len(bad) - 20} more")
    return len(bad) == 0, violations
