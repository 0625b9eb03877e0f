#!/usr/bin/env python3
"""
Lippmann-Schwinger Volume Solver

Solves  u(x) - int_Omega Phi_kappa(x, y) q(y) u(y) dy = u_inc(x)
on a VolumeGrid with the midpoint rule:

    A = I - W diag(q),  W_ij = Phi_kappa(x_i, x_j) h^3,  W_ii = self-cell weight

A is factorized once with scipy.linalg.lu_factor and reused for every
right-hand side (plane waves, point sources). The scattered field has far
field F(xhat) = sum_j exp(-i kappa xhat . y_j) q_j u_j h^3.

Features:
- Fixed row blocks for assembly, fixed column blocks for multi-RHS solves
- A is factorized in place; only the LU factors are kept
- Pivot-ratio condition estimate, SingularSystemError below 1e-13
- Relative residual check on every solve
- Off-grid evaluation through the integral representation

Usage:
    op = assemble_ls(grid, q, kappa)
    field = solve_total_field(op, plane_waves(grid.centers, sphere.directions, kappa))
    far = far_field_background(field, q, sphere)
"""

import time
from dataclasses import dataclass, field
from typing import Callable, Optional, Union

import numpy as np
from scipy.linalg import lu_factor, lu_solve

from core.background.far_field import FarField
from core.background.kernels import (
    as_kappa, far_field_kernel, kernel_matrix, plane_waves, run_blocks,
    self_cell_weight,
)
from core.domain.sampling import SphereGrid, VolumeGrid
from core.domain.types import Wavenumber
from core.utils.errors import NumericalError, SingularSystemError
from core.utils.logger import HolesLogger, get_logger

logger = get_logger('solver')

SIGN_CONVENTION = "u - int Phi_kappa q u = u_inc ; F(xhat) = int exp(-i kappa xhat.y) q u dy"
PIVOT_RATIO_FLOOR = 1e-13
RESIDUAL_TOL = 1e-10


@dataclass
class LSOperator:
    """
    Factorized LS operator on a grid

    Only the LU factors are stored; A is factorized in place. Products with A
    are rebuilt row block by row block.

    Attributes:
        grid: Volume grid (flagged cells carry unknowns)
        q: Potential samples per flagged cell
        kappa: Wavenumber
        lu: lu_factor handle (None when q == 0)
        condition_estimate: 1 / (min |U_ii| / max |U_ii|)
    """
    grid: VolumeGrid
    q: np.ndarray
    kappa: float
    lu: Optional[tuple] = None
    condition_estimate: float = 1.0
    threads: int = 1
    block_size: int = 256
    residual_tol: float = RESIDUAL_TOL
    self_weight: complex = field(default=0j)

    @property
    def size(self) -> int:
        return len(self.q)

    @property
    def is_identity(self) -> bool:
        return self.lu is None

    def matrix_rows(self, s: int, e: int) -> np.ndarray:
        """Rows s:e of A = I - W diag(q)"""
        block = kernel_matrix(self.grid.centers[s:e], self.grid.centers, self.kappa)
        block *= self.grid.cell_volume
        rows = np.arange(e - s)
        block[rows, np.arange(s, e)] = self.self_weight
        block *= -self.q[None, :]
        block[rows, np.arange(s, e)] += 1.0
        return block

    def apply(self, u: np.ndarray) -> np.ndarray:
        """A u for (N,) or (N, k) u"""
        u = np.asarray(u, dtype=complex)
        if self.is_identity:
            return u.copy()
        blocks = run_blocks(self.size, self.block_size, self.threads,
                            lambda s, e: self.matrix_rows(s, e) @ u)
        return np.concatenate(blocks, axis=0)

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        """Solve A u = rhs for (N,) or (N, k) right-hand sides"""
        rhs = np.asarray(rhs, dtype=complex)
        if self.is_identity:
            return rhs.copy()
        if rhs.ndim == 1:
            return lu_solve(self.lu, rhs, check_finite=False)

        blocks = run_blocks(rhs.shape[1], self.block_size, self.threads,
                            lambda s, e: lu_solve(self.lu, rhs[:, s:e], check_finite=False))
        return np.concatenate(blocks, axis=1) if blocks else rhs.copy()

    def residual(self, u: np.ndarray, rhs: np.ndarray) -> float:
        """Relative residual ||A u - rhs|| / ||rhs||"""
        denom = np.linalg.norm(rhs)
        if denom == 0.0:
            return float(np.linalg.norm(u))
        return float(np.linalg.norm(self.apply(u) - rhs) / denom)

    def representation_weights(self, points: np.ndarray) -> np.ndarray:
        """
        Quadrature weights of int Phi(x, y) f(y) dy at arbitrary points x

        Phi(x, y_j) h^3, replaced by the self-cell weight for the cell
        containing x.

        Returns:
            (P, N) matrix
        """
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        w = kernel_matrix(pts, self.grid.centers, self.kappa) * self.grid.cell_volume
        owner = self.grid.locate(pts)
        hits = np.flatnonzero(owner >= 0)
        w[hits, owner[hits]] = self.self_weight
        return w

    def describe(self) -> dict:
        return {
            'cells': self.size,
            'h': self.grid.h,
            'kappa': self.kappa,
            'self_weight': self.self_weight,
            'condition_estimate': self.condition_estimate,
            'identity': self.is_identity,
        }


def assemble_ls(grid: VolumeGrid, q: np.ndarray, kappa: Union[float, Wavenumber],
                threads: int = 1, block_size: int = 256,
                residual_tol: float = RESIDUAL_TOL) -> LSOperator:
    """
    Assemble and factorize A = I - W diag(q)

    Args:
        grid: Volume grid (must have flagged cells)
        q: Potential per flagged cell
        kappa: Wavenumber
        threads: Worker threads for row-block assembly
        block_size: Rows (and RHS columns) per block

    Returns:
        LSOperator

    Raises:
        ValueError: empty grid or non-finite q
        SingularSystemError: pivot ratio below 1e-13
    """
    k = as_kappa(kappa)
    q = np.asarray(q, dtype=complex).reshape(-1)
    n = len(grid)
    if n == 0:
        raise ValueError("Cannot assemble an LS operator on an empty grid")
    if len(q) != n:
        raise ValueError(f"Potential has {len(q)} samples for {n} grid cells")
    if not np.all(np.isfinite(q)):
        raise ValueError("Potential samples must be finite")

    start = time.perf_counter()
    op = LSOperator(grid=grid, q=q, kappa=k, threads=threads, block_size=block_size,
                    residual_tol=residual_tol, self_weight=self_cell_weight(k, grid.h))

    if not np.any(q):
        logger.debug(f"LS operator with zero potential on {n} cells is the identity")
        return op

    # Fortran order so lu_factor can overwrite it without a copy
    matrix = np.empty((n, n), dtype=complex, order='F')

    def fill_rows(s: int, e: int):
        matrix[s:e] = op.matrix_rows(s, e)

    run_blocks(n, block_size, threads, fill_rows)
    lu, piv = lu_factor(matrix, overwrite_a=True, check_finite=False)
    del matrix
    pivots = np.abs(np.diag(lu))
    ratio = float(pivots.min() / pivots.max())
    op.condition_estimate = 1.0 / ratio if ratio > 0 else float('inf')
    if ratio < PIVOT_RATIO_FLOOR:
        logger.error(f"❌ Singular LS operator: pivot ratio {ratio:.2e}")
        raise SingularSystemError(
            "LS operator is numerically singular (discrete interior resonance); "
            "perturb grid_h or kappa", condition_estimate=op.condition_estimate)
    op.lu = (lu, piv)

    HolesLogger.log_solve('LS-FACTOR', n, 0, time.perf_counter() - start,
                          cond=op.condition_estimate, kappa=k)
    return op


@dataclass
class FieldOnGrid:
    """
    Field samples on the flagged cells of an LS operator's grid

    values has shape (N,) or (N, k). `incident` maps (P, 3) points to the
    incident samples with the same trailing shape.
    """
    op: LSOperator
    values: np.ndarray
    incident: Callable[[np.ndarray], np.ndarray]
    residual: float = 0.0

    @property
    def grid(self) -> VolumeGrid:
        return self.op.grid

    def evaluate(self, points) -> np.ndarray:
        """u(x) = u_inc(x) + int Phi(x, y) q(y) u(y) dy at arbitrary points"""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        density = self.op.q.reshape((-1,) + (1,) * (self.values.ndim - 1)) * self.values
        return np.asarray(self.incident(pts)) + self.op.representation_weights(pts) @ density

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.values))) if self.values.size else 0.0

    def sobolev_proxy_norm(self) -> float:
        """
        Discrete H^2 proxy: l2 norms of the field, its central-difference
        gradient and its 7-point Laplacian on the full box lattice
        (unflagged cells carry the incident field)
        """
        grid = self.grid
        columns = self.values.reshape(len(grid), -1)
        inc = np.asarray(self.incident(grid.all_centers)).reshape(-1, columns.shape[1])
        h = grid.h
        total = 0.0
        for col in range(columns.shape[1]):
            full = inc[:, col].reshape(grid.shape).copy()
            full[tuple(grid.lattice_index.T)] = columns[:, col]
            grads = np.gradient(full, h)
            lap = sum(np.gradient(g, h, axis=d) for d, g in enumerate(grads))
            total += np.sum(np.abs(full) ** 2) + sum(np.sum(np.abs(g) ** 2) for g in grads) \
                + np.sum(np.abs(lap) ** 2)
        return float(np.sqrt(total * grid.cell_volume))


def solve_total_field(op: LSOperator, incident: np.ndarray,
                      incident_fn: Optional[Callable[[np.ndarray], np.ndarray]] = None) -> FieldOnGrid:
    """
    Solve A u = incident

    Args:
        op: Factorized operator
        incident: Incident samples on the flagged cells, (N,) or (N, k)
        incident_fn: Off-grid incident evaluator (defaults to zero)

    Returns:
        FieldOnGrid

    Raises:
        NumericalError: relative residual above the operator tolerance
    """
    incident = np.asarray(incident, dtype=complex)
    if incident.shape[0] != op.size:
        raise ValueError(f"Incident has {incident.shape[0]} samples for {op.size} cells")

    start = time.perf_counter()
    u = op.solve(incident)
    residual = 0.0 if op.is_identity else op.residual(u, incident)
    if residual > op.residual_tol:
        raise NumericalError(f"LS solve residual {residual:.2e} exceeds {op.residual_tol:.0e}")

    rhs = 1 if incident.ndim == 1 else incident.shape[1]
    HolesLogger.log_solve('LS', op.size, rhs, time.perf_counter() - start, residual=residual)

    if incident_fn is None:
        trailing = incident.shape[1:]
        incident_fn = lambda pts: np.zeros((len(pts),) + trailing, dtype=complex)  # noqa: E731
    return FieldOnGrid(op=op, values=u, incident=incident_fn, residual=residual)


def solve_plane_waves(op: LSOperator, sphere: SphereGrid) -> FieldOnGrid:
    """Total fields for every incident direction of the sphere grid"""
    k, dirs = op.kappa, sphere.directions
    return solve_total_field(op, plane_waves(op.grid.centers, dirs, k),
                             incident_fn=lambda pts: plane_waves(pts, dirs, k))


def source_vectors(op: LSOperator, sources: np.ndarray) -> np.ndarray:
    """
    Phi(., y) sampled on the grid for each source y, (N, S)

    The node of the cell containing y gets the cell average of the kernel
    (self weight / h^3).
    """
    return op.representation_weights(sources).T / op.grid.cell_volume


def green_variable(op: LSOperator, y) -> FieldOnGrid:
    """
    G_kappa(., y) on the grid

    G = Phi(., y) + H with A G = Phi(., y). For q == 0 this returns Phi
    (cell-averaged at y's own cell).
    """
    y = np.asarray(y, dtype=float).reshape(1, 3)
    owner = op.grid.locate(y)[0]
    if owner >= 0:
        logger.warning(f"⚠️  Green source {y[0].tolist()} lies in grid cell {owner}; "
                       f"using the cell-averaged kernel there")
    rhs = source_vectors(op, y)[:, 0]
    k = op.kappa
    return solve_total_field(op, rhs,
                             incident_fn=lambda pts: kernel_matrix(pts, y, k)[:, 0])


def green_table(op: LSOperator, points: np.ndarray) -> np.ndarray:
    """
    Symmetric M x M table G_kappa(z_m, z_j) from one factorization

    G = Phi_zz + R diag(q) A^{-1} R^T / h^3 with R the representation
    weights at the points. The diagonal is left at zero.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    phi = kernel_matrix(pts, pts, op.kappa)
    if op.is_identity or len(pts) == 0:
        return phi
    start = time.perf_counter()
    reps = op.representation_weights(pts)             # (M, N)
    solved = op.solve(reps.T / op.grid.cell_volume)   # (N, M)
    table = phi + reps @ (op.q[:, None] * solved)
    np.fill_diagonal(table, 0.0)
    HolesLogger.log_solve('GREEN', op.size, len(pts), time.perf_counter() - start)
    return table


def far_field_background(field: FieldOnGrid, q: np.ndarray, sphere: SphereGrid) -> FarField:
    """
    F(xhat_i, theta_j) = sum_cells exp(-i kappa xhat_i . y) q(y) u_j(y) h^3

    field.values must hold one column per sphere direction.
    """
    q = np.asarray(q, dtype=complex).reshape(-1)
    u = field.values.reshape(len(q), -1)
    if u.shape[1] != len(sphere):
        raise ValueError(f"Field has {u.shape[1]} incident directions, sphere grid has {len(sphere)}")
    kernel = far_field_kernel(sphere.directions, field.grid.centers, field.op.kappa)
    values = kernel @ (q[:, None] * u) * field.grid.cell_volume
    return FarField(values=values, sphere=sphere, kappa=field.op.kappa, label='background')


def born_far_field(grid: VolumeGrid, q: np.ndarray, kappa: float, sphere: SphereGrid) -> FarField:
    """First Born approximation sum exp(i kappa (theta - xhat) . y) q h^3"""
    q = np.asarray(q, dtype=complex).reshape(-1)
    kernel = far_field_kernel(sphere.directions, grid.centers, kappa)
    inc = plane_waves(grid.centers, sphere.directions, kappa)
    values = kernel @ (q[:, None] * inc) * grid.cell_volume
    return FarField(values=values, sphere=sphere, kappa=kappa, label='born')
