#!/usr/bin/env python3
"""
Hole Placement - Centers, reference bodies and point-interaction strengths

Each cell Omega_m receives [K(z_m) + 1] holes. The first sits at the cell
center. The extra holes are drawn from a seeded sub-lattice inside the cell
and rejected when they come closer than d_min a^t to a hole already placed
(in the same or a neighboring cell).

Derived per hole:
- lambda_m = lambda_{m,0} a^{-beta}
- |dD_m|   = a^2 |dB_m| / (max diam B)^2
- C_m      = -lambda_m |dD_m| = -Cbar_m a^{2-beta}
- Cbar_m   = lambda_{m,0} |dB_m| / (max diam B)^2

Usage:
    holes = place_holes(partition, regime, medium, seed=7)
    print(holes.C[:3], holes.min_distance())
"""

import math
from dataclasses import dataclass, replace
from typing import Dict, List, Optional, Tuple

import numpy as np
from scipy.spatial import cKDTree

from core.domain.types import AsymptoticRegime, MediumSpec
from core.geometry.partition import CellPartition
from core.utils.errors import GeometryError
from core.utils.logger import get_logger

logger = get_logger('geometry')

MAX_SUBLATTICE_REFINEMENTS = 4


@dataclass(frozen=True)
class ReferenceBody:
    """
    Reference shape B of the holes

    Args:
        diameter: diam B (the largest reference diameter; D_m = eps B + z_m
                  with eps = a / diameter)
        perimeters: Optional bounded list of surface areas |dB| to draw from
                    (heterogeneous mode). Defaults to the ball, pi diam^2.
    """
    diameter: float = 1.0
    perimeters: Optional[Tuple[float, ...]] = None

    def __post_init__(self):
        if self.diameter <= 0:
            raise ValueError(f"Reference diameter must be positive: {self.diameter}")
        if self.perimeters is not None:
            if len(self.perimeters) == 0 or min(self.perimeters) <= 0:
                raise ValueError(f"Perimeters must be a non-empty list of positive values: {self.perimeters}")
            object.__setattr__(self, 'perimeters', tuple(float(p) for p in self.perimeters))

    @property
    def is_ball(self) -> bool:
        return self.perimeters is None

    @property
    def perimeter(self) -> float:
        """|dB| (mean over the list in heterogeneous mode)"""
        if self.perimeters is None:
            return math.pi * self.diameter ** 2
        return float(np.mean(self.perimeters))

    def draw(self, count: int, rng: np.random.Generator) -> np.ndarray:
        """Per-hole |dB_m|"""
        if self.perimeters is None:
            return np.full(count, self.perimeter)
        return rng.choice(np.asarray(self.perimeters), size=count)


@dataclass(frozen=True)
class ScattererSet:
    """
    Placed holes and their point-interaction coefficients

    Arrays are indexed by hole m, in placement order (cell order, then
    center hole first).
    """
    centers: np.ndarray        # (M, 3)
    cell_ids: np.ndarray       # (M,)
    lattice: np.ndarray        # (M, 3) lattice index of the owning cell
    lambda0: np.ndarray        # (M,) complex lambda_{m,0}
    perimeters: np.ndarray     # (M,) |dB_m|
    diameter: float            # max diam B
    a: float
    beta: float
    cell_side: float
    seed: int = 0

    def __len__(self) -> int:
        return len(self.centers)

    # ===== DERIVED COEFFICIENTS =====

    @property
    def scale(self) -> float:
        """eps = a / max diam B"""
        return self.a / self.diameter

    @property
    def impedances(self) -> np.ndarray:
        """lambda_m = lambda_{m,0} a^{-beta}"""
        return self.lambda0 * self.a ** (-self.beta)

    @property
    def surface_areas(self) -> np.ndarray:
        """|dD_m| = eps^2 |dB_m|"""
        return self.scale ** 2 * self.perimeters

    @property
    def C(self) -> np.ndarray:
        """C_m = -lambda_m |dD_m|"""
        return -self.impedances * self.surface_areas

    @property
    def C_bar(self) -> np.ndarray:
        """Cbar_m = lambda_{m,0} |dB_m| / (max diam B)^2"""
        return self.lambda0 * self.perimeters / self.diameter ** 2

    @property
    def capacity_bound(self) -> float:
        """max_m |Cbar_m|"""
        return float(np.max(np.abs(self.C_bar))) if len(self) else 0.0

    # ===== DIAGNOSTICS =====

    def min_distance(self) -> float:
        """Smallest pairwise center distance (inf for M < 2)"""
        if len(self) < 2:
            return math.inf
        distances, _ = cKDTree(self.centers).query(self.centers, k=2)
        return float(distances[:, 1].min())

    def impedance_violations(self, regime: AsymptoticRegime) -> List[str]:
        """Holes whose lambda_{m,0} breaks |Re| >= lambda_- or |.| <= lambda_+"""
        violations = []
        re_abs = np.abs(self.lambda0.real)
        mod = np.abs(self.lambda0)
        for m in np.flatnonzero(re_abs < regime.lambda_minus):
            violations.append(f"hole {m}: |Re λ| = {re_abs[m]:.4g} < λ₋ = {regime.lambda_minus:g}")
        for m in np.flatnonzero(mod > regime.lambda_plus):
            violations.append(f"hole {m}: |λ| = {mod[m]:.4g} > λ₊ = {regime.lambda_plus:g}")
        return violations

    def with_lambda0(self, lambda0: np.ndarray) -> 'ScattererSet':
        """Copy with a new impedance base (e.g. a cloaking schedule)"""
        values = np.asarray(lambda0, dtype=complex).reshape(-1)
        if len(values) != len(self):
            raise ValueError(f"Expected {len(self)} impedance values, got {len(values)}")
        return replace(self, lambda0=values)

    def describe(self) -> dict:
        return {
            'holes': len(self),
            'a': self.a,
            'beta': self.beta,
            'seed': self.seed,
            'cell_side': self.cell_side,
            'diameter': self.diameter,
            'min_distance': self.min_distance(),
            'capacity_bound': self.capacity_bound,
        }


def _sublattice(cell_lo: np.ndarray, side: float, g: int) -> np.ndarray:
    ticks = (np.arange(g) + 0.5) / g * side
    offsets = np.stack(np.meshgrid(ticks, ticks, ticks, indexing='ij'), axis=-1).reshape(-1, 3)
    return cell_lo + offsets


def _neighbors(lattice: Tuple[int, int, int]):
    i, j, k = lattice
    for di in (-1, 0, 1):
        for dj in (-1, 0, 1):
            for dk in (-1, 0, 1):
                yield (i + di, j + dj, k + dk)


def place_holes(partition: CellPartition, regime: AsymptoticRegime, medium: MediumSpec,
                seed: int = 0, body: Optional[ReferenceBody] = None) -> 'ScattererSet':
    """
    Place [K(z_m) + 1] holes per cell

    Args:
        partition: Retained cells
        regime: Regime (a, beta, t, d_min, d_max)
        medium: Medium (Omega membership and lambda0 profile)
        seed: Seed for the sub-lattice order and perimeter draws
        body: Reference body (defaults to the unit-diameter ball)

    Returns:
        ScattererSet

    Raises:
        GeometryError: when a cell cannot host its holes at distance d_min a^t
    """
    body = body or ReferenceBody()
    rng = np.random.default_rng(seed)
    d_low, d_high = regime.min_distance_bounds
    side = partition.side

    placed: Dict[Tuple[int, int, int], List[np.ndarray]] = {}
    centers: List[np.ndarray] = []
    cell_ids: List[int] = []
    lattice: List[Tuple[int, int, int]] = []

    for cell in partition.cells:
        center = np.asarray(cell.center)
        own = placed.setdefault(cell.lattice, [])
        own.append(center)
        centers.append(center)
        cell_ids.append(cell.index)
        lattice.append(cell.lattice)

        extra = cell.target_count - 1
        if extra <= 0:
            continue

        cell_lo = np.asarray(cell.lattice) * side + np.asarray(medium.box_lo)
        g = max(3, int(math.ceil(cell.target_count ** (1.0 / 3.0))) + 1)
        accepted = 0
        for _ in range(MAX_SUBLATTICE_REFINEMENTS):
            candidates = _sublattice(cell_lo, side, g)
            candidates = candidates[medium.contains(candidates)]
            for idx in rng.permutation(len(candidates)):
                point = candidates[idx]
                nearby = [p for key in _neighbors(cell.lattice) for p in placed.get(key, [])]
                if nearby and np.min(np.linalg.norm(np.asarray(nearby) - point, axis=1)) < d_low:
                    continue
                own.append(point)
                centers.append(point)
                cell_ids.append(cell.index)
                lattice.append(cell.lattice)
                accepted += 1
                if accepted == extra:
                    break
            if accepted == extra:
                break
            g += 1

        if accepted < extra:
            raise GeometryError(
                f"Cell {cell.index} at {tuple(round(c, 4) for c in cell.center)} cannot host "
                f"{cell.target_count} holes at distance >= {d_low:.4g} (placed {accepted + 1})",
                cell=cell.index)

    centers_arr = np.asarray(centers, dtype=float).reshape(-1, 3)
    holes = ScattererSet(
        centers=centers_arr,
        cell_ids=np.asarray(cell_ids, dtype=int),
        lattice=np.asarray(lattice, dtype=int).reshape(-1, 3),
        lambda0=np.asarray(medium.lambda0_at(centers_arr), dtype=complex).reshape(-1),
        perimeters=body.draw(len(centers_arr), rng),
        diameter=body.diameter,
        a=regime.a,
        beta=regime.beta,
        cell_side=side,
        seed=seed,
    )

    d = holes.min_distance()
    if d < d_low * (1.0 - 1e-12):
        raise GeometryError(f"Minimum hole distance {d:.4g} below d_min a^t = {d_low:.4g}")
    if math.isfinite(d) and d > d_high:
        logger.warning(f"⚠️  Minimum hole distance {d:.4g} above d_max a^t = {d_high:.4g}")

    if np.any(holes.lambda0 == 0):
        logger.warning("⚠️  Some holes have zero impedance (C_m = 0)")

    logger.info(f"🕳️  Placed {len(holes)} holes (seed {seed}) | min distance: {d:.4g}")
    return holes
