#!/usr/bin/env python3
"""
Background Medium Solver

Everything the holes see of the background index n(x):
- V_n^t(z, theta): total plane-wave fields at arbitrary points
- G_kappa(z_m, z_j): the Green table between hole centers
- V_n^inf(xhat, theta): the background far field

BackgroundSolver discretizes Omega once, factorizes the LS operator once and
serves every request as extra right-hand sides. FreeSpaceBackground is the
exact n == 1 path with the same interface.

Usage:
    background = build_background(medium, kappa, sphere, solver_settings)
    v_theta = background.incident_at(holes.centers)
    table = background.green_table(holes.centers)
"""

from functools import cached_property
from typing import Optional

import numpy as np

from core.background.far_field import FarField
from core.background.kernels import as_kappa, kernel_matrix, plane_waves
from core.background.lippmann_schwinger import (
    SIGN_CONVENTION, FieldOnGrid, LSOperator, assemble_ls, far_field_background,
    green_table, green_variable, solve_plane_waves,
)
from core.domain.config_loader import SolverSettings
from core.domain.sampling import SphereGrid, VolumeGrid, make_volume_grid
from core.domain.types import MediumSpec
from core.utils.logger import get_logger

logger = get_logger('solver')


class FreeSpaceBackground:
    """n == 1: V_n^t is the plane wave, G is Phi, V_n^inf vanishes"""

    is_free = True

    def __init__(self, kappa, sphere: SphereGrid):
        self.kappa = as_kappa(kappa)
        self.sphere = sphere

    def incident_at(self, points) -> np.ndarray:
        """(P, D) plane waves exp(i kappa z . theta)"""
        return plane_waves(np.atleast_2d(points), self.sphere.directions, self.kappa)

    def green_table(self, points) -> np.ndarray:
        """Phi_kappa(z_m, z_j) with a zero diagonal"""
        return kernel_matrix(points, points, self.kappa)

    def far_field(self) -> FarField:
        return FarField.zeros(self.sphere, self.kappa, label='background')

    def grid_fields(self, grid: VolumeGrid) -> np.ndarray:
        """(N, D) total fields on a grid's flagged cells"""
        return plane_waves(grid.centers, self.sphere.directions, self.kappa)

    def describe(self) -> dict:
        return {'kind': 'free_space', 'kappa': self.kappa, 'sign_convention': SIGN_CONVENTION}


class BackgroundSolver:
    """
    Variable-index background on a VolumeGrid

    One factorization per (grid, q, kappa); plane-wave fields for every
    sphere direction are solved once and cached.
    """

    is_free = False

    def __init__(self, medium: MediumSpec, kappa, sphere: SphereGrid,
                 settings: Optional[SolverSettings] = None, grid: Optional[VolumeGrid] = None):
        """
        Initialize background solver

        Args:
            medium: Background medium (n profile on Omega)
            kappa: Wavenumber
            sphere: Direction grid for incidence and observation
            settings: Grid spacing, subsamples, threads, block size
            grid: Optional prebuilt grid (must cover Omega)
        """
        self.medium = medium
        self.kappa = as_kappa(kappa)
        self.sphere = sphere
        self.settings = settings or SolverSettings()
        self.grid = grid or make_volume_grid(medium, self.settings.grid_h, self.settings.subsamples)
        self.q = self.grid.cell_average(lambda pts: medium.contrast_at(pts, self.kappa))
        logger.info(f"🌊 Background grid: {len(self.grid)} cells (h = {self.grid.h:g}), "
                    f"max |q| = {np.max(np.abs(self.q)) if len(self.q) else 0.0:.4g}")

    @cached_property
    def operator(self) -> LSOperator:
        return assemble_ls(self.grid, self.q, self.kappa,
                           threads=self.settings.threads, block_size=self.settings.block_size,
                           residual_tol=self.settings.residual_tol)

    @cached_property
    def plane_wave_field(self) -> FieldOnGrid:
        """Total fields on the grid, one column per sphere direction"""
        return solve_plane_waves(self.operator, self.sphere)

    def incident_at(self, points) -> np.ndarray:
        """(P, D) V_n^t(z, theta) through the integral representation"""
        return self.plane_wave_field.evaluate(points)

    def green_table(self, points) -> np.ndarray:
        return green_table(self.operator, points)

    def green_at(self, y) -> FieldOnGrid:
        return green_variable(self.operator, y)

    def far_field(self) -> FarField:
        return far_field_background(self.plane_wave_field, self.q, self.sphere)

    def grid_fields(self, grid: VolumeGrid) -> np.ndarray:
        if grid is not self.grid and (grid.h != self.grid.h or len(grid) != len(self.grid)
                                      or not np.array_equal(grid.centers, self.grid.centers)):
            raise ValueError("Grid fields requested on a grid other than the background grid")
        return self.plane_wave_field.values

    def green_correction(self, y) -> float:
        """
        max over grid nodes outside y's cell of |G(x, y) - Phi_{kappa n(y)}(x, y)|

        Phi with the index frozen at y; bounded uniformly in y.
        """
        y = np.asarray(y, dtype=float).reshape(1, 3)
        g = self.green_at(y).values
        kappa_frozen = self.kappa * np.real(self.medium.n_at(y)[0])
        frozen = kernel_matrix(self.grid.centers, y, kappa_frozen)[:, 0]
        mask = np.ones(len(g), dtype=bool)
        owner = self.grid.locate(y)[0]
        if owner >= 0:
            mask[owner] = False
        return float(np.max(np.abs(g[mask] - frozen[mask])))

    def describe(self) -> dict:
        info = {'kind': 'lippmann_schwinger', 'kappa': self.kappa,
                'sign_convention': SIGN_CONVENTION, 'grid': self.grid.describe()}
        if 'operator' in self.__dict__:
            info['operator'] = self.operator.describe()
        return info


def build_background(medium: MediumSpec, kappa, sphere: SphereGrid,
                     settings: Optional[SolverSettings] = None):
    """FreeSpaceBackground for n == 1, BackgroundSolver otherwise"""
    if medium.is_homogeneous:
        return FreeSpaceBackground(kappa, sphere)
    return BackgroundSolver(medium, kappa, sphere, settings)
