#!/usr/bin/env python3
"""
Mie Series Oracle - Penetrable homogeneous ball

Exterior wavenumber kappa, interior kappa sqrt(1 + contrast), so that the
LS potential is q = kappa^2 contrast inside the ball. The ball is centered
at `center`; the far field picks up exp(i kappa (theta - xhat) . center).

    a_l = [k1 j_l'(x1) j_l(x) - kappa j_l(x1) j_l'(x)]
          / [kappa j_l(x1) h_l'(x) - k1 j_l'(x1) h_l(x)]
    F(xhat, theta) = 4 pi / (i kappa) sum_l (2l + 1) a_l P_l(xhat . theta)

with x = kappa R, x1 = k1 R and h_l = j_l + i y_l.
"""

import math
from typing import Sequence

import numpy as np
from scipy.special import eval_legendre, spherical_jn, spherical_yn

from core.background.far_field import FarField
from core.domain.sampling import SphereGrid
from core.utils.errors import SeriesConvergenceError
from core.utils.logger import get_logger

logger = get_logger('solver')

SERIES_TOL = 1e-12


def _spherical_jn_complex(order: int, z: complex, derivative: bool = False) -> complex:
    """j_l at a possibly complex argument (real routine when Im z == 0)"""
    if abs(np.imag(z)) == 0.0:
        return complex(spherical_jn(order, float(np.real(z)), derivative=derivative))
    return complex(spherical_jn(order, z, derivative=derivative))


def mie_coefficients(radius: float, contrast: complex, kappa: float,
                     max_order: int = 200) -> np.ndarray:
    """
    Partial-wave coefficients a_0..a_L, stopping at (2l + 1)|a_l| < 1e-12

    Raises:
        ValueError: non-positive radius or kappa
        SeriesConvergenceError: when the tail is still above tolerance at max_order
    """
    if radius <= 0:
        raise ValueError(f"Ball radius must be positive: {radius}")
    if kappa <= 0:
        raise ValueError(f"Mie series needs kappa > 0: {kappa}")

    k1 = kappa * np.sqrt(1.0 + complex(contrast))
    x = kappa * radius
    x1 = k1 * radius

    coefficients = []
    for order in range(max_order + 1):
        j = spherical_jn(order, x)
        jp = spherical_jn(order, x, derivative=True)
        hn = j + 1j * spherical_yn(order, x)
        hp = jp + 1j * spherical_yn(order, x, derivative=True)
        j1 = _spherical_jn_complex(order, x1)
        j1p = _spherical_jn_complex(order, x1, derivative=True)

        numerator = k1 * j1p * j - kappa * j1 * jp
        denominator = kappa * j1 * hp - k1 * j1p * hn
        a_l = numerator / denominator if numerator != 0 else 0j
        coefficients.append(a_l)

        if (2 * order + 1) * abs(a_l) < SERIES_TOL and order >= 1:
            return np.asarray(coefficients, dtype=complex)

    suggested = int(math.ceil(max(2 * max_order, x + 4 * x ** (1.0 / 3.0) + 10)))
    raise SeriesConvergenceError(
        f"Mie series did not converge by order {max_order} (kappa R = {x:.3g})",
        suggested_order=suggested)


def mie_ball_oracle(radius: float, contrast: complex, kappa: float, sphere: SphereGrid,
                    max_order: int = 200, center: Sequence[float] = (0.0, 0.0, 0.0)) -> FarField:
    """
    Far field of a homogeneous penetrable ball on the sphere grid

    Args:
        radius: Ball radius R
        contrast: n^2 - 1 inside the ball (q = kappa^2 contrast)
        kappa: Exterior wavenumber
        sphere: Direction grid (both xhat and theta)
        max_order: Largest partial-wave order tried
        center: Ball center (phase shift)

    Returns:
        FarField
    """
    if contrast == 0:
        return FarField.zeros(sphere, kappa, label='mie')

    coefficients = mie_coefficients(radius, contrast, kappa, max_order=max_order)
    cosines = np.clip(sphere.directions @ sphere.directions.T, -1.0, 1.0)

    total = np.zeros_like(cosines, dtype=complex)
    for order, a_l in enumerate(coefficients):
        total += (2 * order + 1) * a_l * eval_legendre(order, cosines)
    values = 4.0 * math.pi / (1j * kappa) * total

    c = np.asarray(center, dtype=float)
    if np.any(c):
        phase_x = np.exp(-1j * kappa * sphere.directions @ c)
        phase_t = np.exp(1j * kappa * sphere.directions @ c)
        values = phase_x[:, None] * values * phase_t[None, :]

    logger.debug(f"Mie series: {len(coefficients)} terms (kappa R = {kappa * radius:.3g})")
    return FarField(values=values, sphere=sphere, kappa=kappa, label='mie')
