#!/usr/bin/env python3
"""
Equivalent Medium - Homogenized potential and its far field

The perforated medium is replaced by

    (Delta + kappa^2 n^2 + (K + 1) P0 lambda0) U0 = 0

which the LS solver sees as the potential

    q_total = kappa^2 (n^2 - 1) + (K + 1) P0 lambda0      (zero outside Omega)

The far field is assembled through the background's plane-wave fields
(mixed reciprocity):

    U0^inf(xhat, theta) = V_n^inf(xhat, theta)
                          + sum_j V_n(y_j, -xhat) q_holes(y_j) U0(y_j, theta) h^3

Usage:
    potential = build_equivalent_potential(medium, shape_factor(body), kappa, grid)
    field, far = solve_equivalent(potential, background)
"""

import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from core.background.far_field import FarField
from core.background.kernels import as_kappa
from core.background.lippmann_schwinger import FieldOnGrid, assemble_ls, solve_plane_waves
from core.domain.fields import ScalarField
from core.domain.sampling import VolumeGrid
from core.domain.types import MediumSpec
from core.equivalent.design import cloak_coefficient
from core.geometry.placement import ReferenceBody
from core.utils.logger import get_logger

logger = get_logger('solver')


def shape_factor(body: ReferenceBody) -> float:
    """P = |dB| / diam(B); pi for the unit-diameter ball"""
    if body.diameter != 1.0:
        logger.warning(f"⚠️  Reference diameter {body.diameter:g} != 1: P = |dB|/diam differs "
                       f"from the Foldy-Lax strength |dB|/diam^2")
    return body.perimeter / body.diameter


@dataclass(frozen=True)
class EquivalentPotential:
    """Cell-averaged potentials of the homogenized model"""
    grid: VolumeGrid
    kappa: float
    p0: float
    background: np.ndarray   # kappa^2 (n^2 - 1)
    holes: np.ndarray        # (K + 1) P0 lambda0 (times 2 pi with pi_factor)
    total: np.ndarray
    cloak: bool = False
    pi_factor: bool = False

    @property
    def is_zero(self) -> bool:
        return not np.any(self.total)

    def describe(self) -> dict:
        return {
            'kappa': self.kappa,
            'p0': self.p0,
            'cloak': self.cloak,
            'pi_factor': self.pi_factor,
            'max_abs_background': float(np.max(np.abs(self.background))) if len(self.total) else 0.0,
            'max_abs_holes': float(np.max(np.abs(self.holes))) if len(self.total) else 0.0,
            'max_abs_total': float(np.max(np.abs(self.total))) if len(self.total) else 0.0,
        }


def build_equivalent_potential(medium: MediumSpec, p0: float, kappa, grid: VolumeGrid,
                               cloak: bool = False, pi_factor: bool = False,
                               lambda_tilde0: Optional[ScalarField] = None) -> EquivalentPotential:
    """
    Sample the homogenized potential on a grid

    Args:
        medium: Medium (n, K, lambda0 on Omega)
        p0: Shape factor P on Omega
        kappa: Wavenumber
        grid: Volume grid covering Omega
        cloak: Replace lambda0 by kappa^2 lambda_tilde0 from cloak_coefficient
        pi_factor: Scale the hole term by 2 pi
        lambda_tilde0: Explicit lambda_tilde0 (lambda0 = kappa^2 lambda_tilde0)

    Returns:
        EquivalentPotential

    Raises:
        ValueError: P0 == 0 in cloak mode
    """
    k = as_kappa(kappa)

    if cloak:
        if p0 == 0:
            raise ValueError("Cloak mode needs P0 > 0 (the coefficient divides by (K+1) P0)")
        lambda_tilde0 = cloak_coefficient(medium, p0)

    if lambda_tilde0 is not None:
        impedance = lambda_tilde0.scaled(k ** 2)
    else:
        impedance = medium.lambda0

    factor = 2.0 * math.pi if pi_factor else 1.0

    def hole_term(pts: np.ndarray) -> np.ndarray:
        inside = medium.contains(pts)
        values = (medium.K_at(pts) + 1.0) * p0 * np.asarray(impedance(pts), dtype=complex) * factor
        return np.where(inside, values, 0.0)

    def total_term(pts: np.ndarray) -> np.ndarray:
        return medium.contrast_at(pts, k) + hole_term(pts)

    background = grid.cell_average(lambda pts: medium.contrast_at(pts, k)).astype(complex)
    holes = grid.cell_average(hole_term).astype(complex)
    total = grid.cell_average(total_term).astype(complex)

    potential = EquivalentPotential(grid=grid, kappa=k, p0=float(p0), background=background,
                                    holes=holes, total=total, cloak=cloak, pi_factor=pi_factor)
    logger.info(f"🧪 Equivalent potential on {len(grid)} cells | max |q| = "
                f"{potential.describe()['max_abs_total']:.4g}" + (" (cloak)" if cloak else ""))
    return potential


def solve_equivalent(potential: EquivalentPotential, background,
                     threads: int = 1, block_size: int = 256) -> Tuple[FieldOnGrid, FarField]:
    """
    Solve the total-potential LS system for every incident direction

    Args:
        potential: Homogenized potential (its grid must be the background grid
                   when the background is not free space)
        background: FreeSpaceBackground or BackgroundSolver

    Returns:
        (U0 on the grid, one column per direction; U0^inf)
    """
    sphere = background.sphere
    op = assemble_ls(potential.grid, potential.total, potential.kappa,
                     threads=threads, block_size=block_size)
    field = solve_plane_waves(op, sphere)

    v_grid = background.grid_fields(potential.grid)          # (N, D) V_n(y, theta)
    v_minus_xhat = v_grid[:, sphere.antipode]                 # V_n(y, -xhat_i)
    density = potential.holes[:, None] * field.values * potential.grid.cell_volume
    values = background.far_field().values + v_minus_xhat.T @ density

    far = FarField(values=values, sphere=sphere, kappa=potential.kappa, label='equivalent')
    logger.info(f"🧪 Equivalent far field: sup|U0^inf| = {far.sup_norm():.4e}")
    return field, far
