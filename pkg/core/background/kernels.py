#!/usr/bin/env python3
"""
Helmholtz Kernels

Phi_kappa(x, y) = exp(i kappa |x - y|) / (4 pi |x - y|), its self-cell
integral over the equal-volume ball, plane waves, and the fixed-block
thread pool used for dense assembly and multi-RHS solves.
"""

import cmath
import math
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, List, Union

import numpy as np
from scipy import integrate
from scipy.spatial.distance import cdist

from core.domain.types import Wavenumber

FOUR_PI = 4.0 * math.pi
SERIES_SWITCH = 0.1


def as_kappa(kappa: Union[float, Wavenumber]) -> float:
    return float(kappa.kappa) if isinstance(kappa, Wavenumber) else float(kappa)


def free_green(x, y, kappa: Union[float, Wavenumber]) -> complex:
    """
    Free-space outgoing kernel Phi_kappa(x, y)

    Raises:
        ValueError: when x == y
    """
    k = as_kappa(kappa)
    r = float(np.linalg.norm(np.asarray(x, dtype=float) - np.asarray(y, dtype=float)))
    if r == 0.0:
        raise ValueError("free_green is singular at x == y")
    return cmath.exp(1j * k * r) / (FOUR_PI * r)


def equal_volume_radius(h: float) -> float:
    """Radius of the ball with volume h^3"""
    return (3.0 * h ** 3 / FOUR_PI) ** (1.0 / 3.0)


def self_cell_weight(kappa: Union[float, Wavenumber], h: float) -> complex:
    """
    Integral of Phi_kappa over the ball of volume h^3 centered at the pole

    Closed form (exp(i k r)(1 - i k r) - 1) / k^2; the power series
    sum_n (i k)^n r^{n+2} / (n! (n+2)) is used for k r < 0.1.
    """
    k = as_kappa(kappa)
    r = equal_volume_radius(h)
    kr = k * r
    if kr < SERIES_SWITCH:
        total = 0j
        term = r * r  # (i k)^n r^{n+2} / n!
        for n in range(12):
            total += term / (n + 2)
            term *= 1j * kr / (n + 1)
        return total
    return (cmath.exp(1j * kr) * (1.0 - 1j * kr) - 1.0) / k ** 2


def validate_self_cell_weight(kappa: Union[float, Wavenumber], h: float) -> float:
    """
    Compare self_cell_weight with adaptive quadrature of rho exp(i k rho) on [0, r]

    Returns:
        Absolute difference
    """
    k = as_kappa(kappa)
    r = equal_volume_radius(h)
    re, _ = integrate.quad(lambda rho: rho * math.cos(k * rho), 0.0, r, epsabs=1e-15, epsrel=1e-13)
    im, _ = integrate.quad(lambda rho: rho * math.sin(k * rho), 0.0, r, epsabs=1e-15, epsrel=1e-13)
    return abs(self_cell_weight(k, h) - complex(re, im))


def kernel_matrix(targets: np.ndarray, sources: np.ndarray, kappa: float) -> np.ndarray:
    """
    Phi_kappa between two point sets; coincident pairs are set to 0

    Returns:
        (len(targets), len(sources)) complex matrix
    """
    r = cdist(np.atleast_2d(targets), np.atleast_2d(sources))
    out = np.zeros(r.shape, dtype=complex)
    nonzero = r > 0
    rn = r[nonzero]
    out[nonzero] = np.exp(1j * kappa * rn) / (FOUR_PI * rn)
    return out


def plane_waves(points: np.ndarray, directions: np.ndarray, kappa: float) -> np.ndarray:
    """exp(i kappa x . theta) as a (points, directions) matrix"""
    return np.exp(1j * kappa * (np.atleast_2d(points) @ np.atleast_2d(directions).T))


def far_field_kernel(directions: np.ndarray, points: np.ndarray, kappa: float) -> np.ndarray:
    """exp(-i kappa xhat . y) as a (directions, points) matrix"""
    return np.exp(-1j * kappa * (np.atleast_2d(directions) @ np.atleast_2d(points).T))


def run_blocks(total: int, block_size: int, threads: int,
               task: Callable[[int, int], np.ndarray]) -> List[np.ndarray]:
    """
    Run task(start, stop) over fixed blocks of range(total)

    Block boundaries depend only on block_size, so results do not depend on
    the number of threads.

    Returns:
        Block results in order
    """
    starts = list(range(0, total, max(1, block_size)))
    if threads <= 1 or len(starts) <= 1:
        return [task(s, min(s + block_size, total)) for s in starts]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(lambda s: task(s, min(s + block_size, total)), starts))
