#!/usr/bin/env python3
"""
Direction and Volume Sampling

SphereGrid: Gauss-Legendre nodes in cos(polar) x uniform azimuth on S^2.
            order p gives 2 p^2 directions, integrates polynomials of degree
            <= 2p - 1 exactly, and is closed under x -> -x.
VolumeGrid: uniform voxelization of the box around Omega. Cells whose
            sub-points hit Omega are flagged; fields are cell-averaged over
            the sub-points.

Usage:
    sphere = make_sphere_grid(4)
    grid = make_volume_grid(medium, h=0.05)
    q = grid.cell_average(lambda pts: medium.contrast_at(pts, kappa))
"""

import math
from dataclasses import dataclass
from typing import Callable, Tuple

import numpy as np
from numpy.polynomial.legendre import leggauss


@dataclass(frozen=True)
class SphereGrid:
    """Quadrature grid on the unit sphere"""
    order: int
    directions: np.ndarray   # (D, 3) unit vectors
    weights: np.ndarray      # (D,) positive, sum 4 pi
    antipode: np.ndarray     # (D,) index of -direction

    def __len__(self) -> int:
        return len(self.directions)

    def integrate(self, values: np.ndarray) -> complex:
        """Quadrature of samples over S^2 (first axis = directions)"""
        return np.tensordot(self.weights, values, axes=(0, 0))


def make_sphere_grid(order: int) -> SphereGrid:
    """
    Build the product quadrature grid

    Args:
        order: Number of Gauss-Legendre polar nodes (>= 1)

    Returns:
        SphereGrid with 2 * order^2 directions
    """
    if int(order) != order or order < 1:
        raise ValueError(f"Sphere grid order must be a positive integer: {order}")
    order = int(order)

    cos_theta, gl_weights = leggauss(order)
    n_phi = 2 * order
    phi = (np.arange(n_phi) + 0.5) * math.pi / order

    sin_theta = np.sqrt(1.0 - cos_theta ** 2)
    ct, cp = np.meshgrid(cos_theta, phi, indexing='ij')
    st, _ = np.meshgrid(sin_theta, phi, indexing='ij')
    directions = np.stack([st * np.cos(cp), st * np.sin(cp), ct], axis=-1).reshape(-1, 3)
    directions /= np.linalg.norm(directions, axis=1, keepdims=True)

    weights = np.repeat(gl_weights * (math.pi / order), n_phi)

    # cos nodes are symmetric (i -> order-1-i); azimuth shifts by pi (k -> k+order)
    i_idx, k_idx = np.meshgrid(np.arange(order), np.arange(n_phi), indexing='ij')
    antipode = ((order - 1 - i_idx) * n_phi + (k_idx + order) % n_phi).reshape(-1)

    return SphereGrid(order=order, directions=directions, weights=weights,
                      antipode=antipode)


@dataclass(frozen=True)
class VolumeGrid:
    """
    Uniform voxel grid over the box containing Omega

    Only flagged cells (those meeting Omega) carry unknowns; `centers`,
    `fraction` and `lattice_index` are indexed by flagged cell.
    """
    box_lo: np.ndarray
    shape: Tuple[int, int, int]
    h: float
    subsamples: int
    flags: np.ndarray          # (nx, ny, nz) bool
    centers: np.ndarray        # (N, 3)
    fraction: np.ndarray       # (N,) share of sub-points inside Omega
    lattice_index: np.ndarray  # (N, 3)

    def __len__(self) -> int:
        return len(self.centers)

    @property
    def cell_volume(self) -> float:
        return self.h ** 3

    @property
    def flagged_volume(self) -> float:
        """Volume of Omega as seen by the grid (fraction-weighted)"""
        return float(np.sum(self.fraction)) * self.cell_volume

    @property
    def all_centers(self) -> np.ndarray:
        """Centers of every box cell, C-ordered over shape"""
        axes = [self.box_lo[d] + (np.arange(self.shape[d]) + 0.5) * self.h for d in range(3)]
        return np.stack(np.meshgrid(*axes, indexing='ij'), axis=-1).reshape(-1, 3)

    def _sub_offsets(self) -> np.ndarray:
        s = self.subsamples
        ticks = ((np.arange(s) + 0.5) / s - 0.5) * self.h
        return np.stack(np.meshgrid(ticks, ticks, ticks, indexing='ij'), axis=-1).reshape(-1, 3)

    def cell_average(self, fn: Callable[[np.ndarray], np.ndarray],
                     chunk: int = 4096) -> np.ndarray:
        """
        Average fn over each flagged cell's sub-points

        Args:
            fn: Field over (P, 3) points (indicator already applied)
            chunk: Cells per evaluation batch

        Returns:
            (N,) cell averages
        """
        offsets = self._sub_offsets()
        out = []
        for start in range(0, len(self.centers), chunk):
            block = self.centers[start:start + chunk]
            pts = (block[:, None, :] + offsets[None, :, :]).reshape(-1, 3)
            vals = np.asarray(fn(pts)).reshape(len(block), len(offsets))
            out.append(vals.mean(axis=1))
        if not out:
            return np.zeros(0, dtype=complex)
        return np.concatenate(out)

    def locate(self, points) -> np.ndarray:
        """
        Flagged-cell index containing each point (-1 when none)

        Points on a shared face go to the cell with the larger lattice index.
        """
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        ijk = np.floor((pts - self.box_lo) / self.h).astype(int)
        inside = np.all((ijk >= 0) & (ijk < np.asarray(self.shape)), axis=1)
        lookup = np.full(self.shape, -1, dtype=int)
        lookup[tuple(self.lattice_index.T)] = np.arange(len(self))
        out = np.full(len(pts), -1, dtype=int)
        out[inside] = lookup[tuple(ijk[inside].T)]
        return out

    def embed(self, values: np.ndarray, fill: complex = 0.0) -> np.ndarray:
        """Scatter flagged-cell values into a full (nx, ny, nz) array"""
        full = np.full(self.shape, fill, dtype=np.result_type(values, complex))
        full[tuple(self.lattice_index.T)] = values
        return full

    def describe(self) -> dict:
        return {
            'box_lo': self.box_lo.tolist(),
            'shape': list(self.shape),
            'h': self.h,
            'subsamples': self.subsamples,
            'flagged_cells': len(self),
            'flagged_volume': self.flagged_volume,
        }


def make_volume_grid(medium, h: float, subsamples: int = 3) -> VolumeGrid:
    """
    Voxelize the box around Omega

    Args:
        medium: MediumSpec (box and membership predicate)
        h: Cell spacing
        subsamples: Sub-points per axis used for membership and averaging

    Returns:
        VolumeGrid with flagged cells in C order of the lattice
    """
    if h <= 0:
        raise ValueError(f"Grid spacing must be positive: {h}")
    if subsamples < 1:
        raise ValueError(f"Subsamples must be >= 1: {subsamples}")

    lo = np.asarray(medium.box_lo, dtype=float)
    lengths = np.asarray(medium.box_lengths, dtype=float)
    shape = tuple(int(math.ceil(length / h - 1e-9)) for length in lengths)

    axes = [lo[d] + (np.arange(shape[d]) + 0.5) * h for d in range(3)]
    all_centers = np.stack(np.meshgrid(*axes, indexing='ij'), axis=-1).reshape(-1, 3)
    all_index = np.stack(np.meshgrid(*[np.arange(n) for n in shape], indexing='ij'),
                         axis=-1).reshape(-1, 3)

    ticks = ((np.arange(subsamples) + 0.5) / subsamples - 0.5) * h
    offsets = np.stack(np.meshgrid(ticks, ticks, ticks, indexing='ij'), axis=-1).reshape(-1, 3)

    fraction = np.empty(len(all_centers))
    chunk = 4096
    for start in range(0, len(all_centers), chunk):
        block = all_centers[start:start + chunk]
        pts = (block[:, None, :] + offsets[None, :, :]).reshape(-1, 3)
        inside = medium.contains(pts).reshape(len(block), len(offsets))
        fraction[start:start + chunk] = inside.mean(axis=1)

    flagged = fraction > 0
    flags = flagged.reshape(shape)

    return VolumeGrid(box_lo=lo, shape=shape, h=float(h), subsamples=int(subsamples),
                      flags=flags, centers=all_centers[flagged],
                      fraction=fraction[flagged], lattice_index=all_index[flagged])
