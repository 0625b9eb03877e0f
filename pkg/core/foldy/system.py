#!/usr/bin/env python3
"""
Foldy-Lax System - Point-interaction model of the perforated medium

For holes z_1..z_M with coefficients C_m the charges Q_m(theta) solve

    Q_m + sum_{j != m} C_m G(z_m, z_j) Q_j = -C_m V_n^t(z_m, theta)

written as B Q = V with B_mm = -1/C_m and B_mj = -G(z_m, z_j). The far
field is

    U^inf(xhat, theta) = V_n^inf(xhat, theta) + sum_m V_n^t(z_m, -xhat) Q_m(theta)

Features:
- One factorization of B for all incident directions
- Relative residual and pivot-ratio checks
- l2 / l1 charge bounds checked against an InvertibilityReport

Usage:
    far, solution = simulate_foldy(holes, background, report=report)
"""

import time
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from scipy.linalg import lu_factor, lu_solve

from core.background.far_field import FarField
from core.background.kernels import as_kappa, run_blocks
from core.domain.sampling import SphereGrid
from core.foldy.invertibility import InvertibilityReport
from core.geometry.placement import ScattererSet
from core.utils.errors import BoundViolationError, GeometryError, NumericalError, SingularSystemError
from core.utils.logger import HolesLogger, get_logger

logger = get_logger('solver')

MAX_HOLES = 20000
PIVOT_RATIO_FLOOR = 1e-14
RESIDUAL_TOL = 1e-10
BOUND_SLACK = 1e-9


@dataclass
class FoldySystem:
    """Assembled Foldy-Lax matrix B for one placement"""
    holes: ScattererSet
    matrix: np.ndarray
    kappa: float

    @property
    def size(self) -> int:
        return len(self.matrix)

    def symmetry_defect(self) -> float:
        """max |B - B^T| relative to max |B|"""
        if self.size == 0:
            return 0.0
        return float(np.max(np.abs(self.matrix - self.matrix.T)) / np.max(np.abs(self.matrix)))


@dataclass
class ChargeSolution:
    """Charges for every incident direction plus solve diagnostics"""
    charges: np.ndarray        # (M, D)
    residual: float
    condition_estimate: float
    l2_ratio: float            # max_theta sum|Q|^2 / sum|V|^2
    l1_ratio: float            # max_theta sum|Q| / sum|V|
    l2_bound: Optional[float] = None
    l1_bound: Optional[float] = None

    @property
    def l2_holds(self) -> Optional[bool]:
        return None if self.l2_bound is None else self.l2_ratio <= self.l2_bound * (1 + BOUND_SLACK)

    @property
    def l1_holds(self) -> Optional[bool]:
        return None if self.l1_bound is None else self.l1_ratio <= self.l1_bound * (1 + BOUND_SLACK)

    def max_charge(self) -> float:
        return float(np.max(np.abs(self.charges))) if self.charges.size else 0.0

    def describe(self) -> dict:
        return {
            'residual': self.residual,
            'condition_estimate': self.condition_estimate,
            'max_charge': self.max_charge(),
            'l2_ratio': self.l2_ratio,
            'l2_bound': self.l2_bound,
            'l2_holds': self.l2_holds,
            'l1_ratio': self.l1_ratio,
            'l1_bound': self.l1_bound,
            'l1_holds': self.l1_holds,
        }


def assemble_system(holes: ScattererSet, green, kappa) -> FoldySystem:
    """
    Build B from the hole coefficients and a Green table

    Args:
        holes: Placed holes
        green: Object with green_table(points) or a precomputed (M, M) table
        kappa: Wavenumber

    Returns:
        FoldySystem

    Raises:
        GeometryError: coincident centers
        ValueError: C_m == 0 (zero impedance) or too many holes
    """
    m = len(holes)
    if m > MAX_HOLES:
        raise ValueError(f"Dense Foldy-Lax solve capped at {MAX_HOLES} holes, got {m}")
    if m >= 2 and holes.min_distance() == 0.0:
        raise GeometryError("Coincident hole centers: Foldy-Lax matrix undefined")

    C = holes.C
    if np.any(C == 0):
        zero = int(np.flatnonzero(C == 0)[0])
        raise ValueError(f"degenerate: zero impedance (C_m = 0 at hole {zero})")

    table = green if isinstance(green, np.ndarray) else green.green_table(holes.centers)
    table = np.asarray(table, dtype=complex)
    if table.shape != (m, m):
        raise ValueError(f"Green table has shape {table.shape}, expected ({m}, {m})")

    matrix = -table.copy()
    np.fill_diagonal(matrix, -1.0 / C)
    if not np.all(np.isfinite(matrix)):
        raise NumericalError("Foldy-Lax matrix has non-finite entries")
    return FoldySystem(holes=holes, matrix=matrix, kappa=as_kappa(kappa))


def solve_charges(system: FoldySystem, rhs: np.ndarray,
                  report: Optional[InvertibilityReport] = None,
                  threads: int = 1, block_size: int = 256) -> ChargeSolution:
    """
    Solve B Q = V for all incident directions

    Args:
        system: Assembled system
        rhs: (M,) or (M, D) samples V_n^t(z_m, theta)
        report: Optional invertibility report; when it passes, the l2 bound
                is enforced
        threads: Worker threads for column blocks
        block_size: Columns per block

    Returns:
        ChargeSolution

    Raises:
        SingularSystemError: pivot ratio below 1e-14
        NumericalError: residual above 1e-10
        BoundViolationError: l2 bound broken although the report passed
    """
    rhs = np.asarray(rhs, dtype=complex)
    if rhs.ndim == 1:
        rhs = rhs[:, None]
    m = system.size
    if rhs.shape[0] != m:
        raise ValueError(f"Right-hand side has {rhs.shape[0]} rows for {m} holes")
    if m == 0:
        return ChargeSolution(charges=np.zeros((0, rhs.shape[1]), dtype=complex),
                              residual=0.0, condition_estimate=1.0, l2_ratio=0.0, l1_ratio=0.0)

    start = time.perf_counter()
    lu, piv = lu_factor(system.matrix, check_finite=False)
    pivots = np.abs(np.diag(lu))
    ratio = float(pivots.min() / pivots.max())
    condition = 1.0 / ratio if ratio > 0 else float('inf')
    if ratio < PIVOT_RATIO_FLOOR:
        logger.error(f"❌ Singular Foldy-Lax matrix: pivot ratio {ratio:.2e}")
        raise SingularSystemError("Foldy-Lax matrix is numerically singular",
                                  condition_estimate=condition)

    blocks = run_blocks(rhs.shape[1], block_size, threads,
                        lambda s, e: lu_solve((lu, piv), rhs[:, s:e], check_finite=False))
    charges = np.concatenate(blocks, axis=1)

    residual = float(np.linalg.norm(system.matrix @ charges - rhs) / max(np.linalg.norm(rhs), 1e-300))
    if residual > RESIDUAL_TOL:
        raise NumericalError(f"Foldy-Lax residual {residual:.2e} exceeds {RESIDUAL_TOL:.0e}")

    v2 = np.sum(np.abs(rhs) ** 2, axis=0)
    v1 = np.sum(np.abs(rhs), axis=0)
    nonzero = v2 > 0
    l2_ratio = float(np.max(np.sum(np.abs(charges) ** 2, axis=0)[nonzero] / v2[nonzero])) if nonzero.any() else 0.0
    l1_ratio = float(np.max(np.sum(np.abs(charges), axis=0)[nonzero] / v1[nonzero])) if nonzero.any() else 0.0

    solution = ChargeSolution(
        charges=charges, residual=residual, condition_estimate=condition,
        l2_ratio=l2_ratio, l1_ratio=l1_ratio,
        l2_bound=report.l2_factor if report is not None and report.passed else None,
        l1_bound=report.l1_factor if report is not None and report.passed else None,
    )

    HolesLogger.log_solve('FOLDY', m, rhs.shape[1], time.perf_counter() - start,
                          residual=residual, cond=condition, kappa=system.kappa)

    if solution.l2_holds is False:
        raise BoundViolationError(
            f"Charge l2 bound violated: {l2_ratio:.4g} > {solution.l2_bound:.4g}")
    if solution.l1_holds is False:
        logger.warning(f"⚠️  Charge l1 bound exceeded: {l1_ratio:.4g} > {solution.l1_bound:.4g}")
    return solution


def far_field_foldy(holes: ScattererSet, charges: np.ndarray, v_minus_xhat: np.ndarray,
                    v_inf: FarField, sphere: SphereGrid) -> FarField:
    """
    U^inf(xhat_i, theta_j) = V_n^inf[i, j] + sum_m v_minus_xhat[m, i] Q[m, j]

    Args:
        holes: Placed holes
        charges: (M, D) charges, one column per sphere direction theta
        v_minus_xhat: (M, D) V_n^t(z_m, -xhat_i)
        v_inf: Background far field
        sphere: Direction grid

    Raises:
        ValueError: when the charges were not solved on the sphere grid
    """
    charges = np.asarray(charges, dtype=complex).reshape(len(holes), -1)
    d = len(sphere)
    if charges.shape[1] != d:
        raise ValueError(f"Charges cover {charges.shape[1]} directions, sphere grid has {d}")
    if v_minus_xhat.shape != (len(holes), d):
        raise ValueError(f"V_n^t(z, -xhat) has shape {v_minus_xhat.shape}, expected ({len(holes)}, {d})")
    values = v_inf.values + v_minus_xhat.T @ charges
    return FarField(values=values, sphere=sphere, kappa=v_inf.kappa, label='foldy')


def simulate_foldy(holes: ScattererSet, background,
                   report: Optional[InvertibilityReport] = None,
                   threads: int = 1, block_size: int = 256) -> Tuple[FarField, ChargeSolution]:
    """
    Full Foldy-Lax pipeline against a background

    Args:
        holes: Placed holes
        background: FreeSpaceBackground or BackgroundSolver
        report: Optional invertibility report for the bound check

    Returns:
        (far field, charge solution)
    """
    sphere = background.sphere
    v_inf = background.far_field()
    if len(holes) == 0:
        empty = np.zeros((0, len(sphere)), dtype=complex)
        return v_inf.relabel('foldy'), ChargeSolution(charges=empty, residual=0.0,
                                                      condition_estimate=1.0,
                                                      l2_ratio=0.0, l1_ratio=0.0)

    v_theta = background.incident_at(holes.centers)
    v_minus_xhat = v_theta[:, sphere.antipode]
    system = assemble_system(holes, background, background.kappa)
    solution = solve_charges(system, v_theta, report=report, threads=threads, block_size=block_size)
    far = far_field_foldy(holes, solution.charges, v_minus_xhat, v_inf, sphere)
    return far, solution
