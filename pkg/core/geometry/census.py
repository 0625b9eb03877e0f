#!/usr/bin/env python3
"""
Layer Census - Neighbor accounting around a reference hole

Holes are grouped into layers by the Chebyshev offset of their cell from
the reference cell: layer n holds the cells of the (2n+1)^3 cube that are
not in the (2n-1)^3 cube, 24 n^2 + 2 of them for an interior reference.

For every layer the census records the hole count, the cell count and the
smallest distance between D_m and a layer hole (center distance minus a).
"""

from dataclasses import dataclass
from typing import List, Tuple

import numpy as np

from core.domain.types import AsymptoticRegime
from core.geometry.placement import ScattererSet
from core.utils.logger import get_logger

logger = get_logger('geometry')


def interior_layer_size(n: int) -> int:
    """(2n+1)^3 - (2n-1)^3 = 24 n^2 + 2 cells for n >= 1"""
    return 1 if n == 0 else 24 * n * n + 2


@dataclass(frozen=True)
class LayerRow:
    n: int
    holes: int
    cells: int
    min_distance: float

    @property
    def complete(self) -> bool:
        """All 24 n^2 + 2 cells of the layer are present"""
        return self.cells == interior_layer_size(self.n)


@dataclass(frozen=True)
class LayerCensus:
    """Per-layer counts and distances around hole `reference`"""
    reference: int
    cell_side: float
    layers: Tuple[LayerRow, ...]

    def row(self, n: int) -> LayerRow:
        for layer in self.layers:
            if layer.n == n:
                return layer
        raise KeyError(f"No layer {n} in census of hole {self.reference}")

    def to_rows(self) -> List[dict]:
        return [{'n': r.n, 'holes': r.holes, 'cells': r.cells,
                 'min_distance': r.min_distance, 'complete': r.complete}
                for r in self.layers]


def layer_census(holes: ScattererSet, m: int, regime: AsymptoticRegime) -> LayerCensus:
    """
    Count holes per layer around hole m

    Args:
        holes: Placed holes
        m: Reference hole index
        regime: Regime (a)

    Returns:
        LayerCensus (layer 0 holds the other holes of m's own cell)
    """
    if not 0 <= m < len(holes):
        raise IndexError(f"Hole index {m} out of range for {len(holes)} holes")

    offsets = np.max(np.abs(holes.lattice - holes.lattice[m]), axis=1)
    distances = np.linalg.norm(holes.centers - holes.centers[m], axis=1) - regime.a

    others = np.arange(len(holes)) != m
    rows = []
    for n in np.unique(offsets[others]):
        in_layer = others & (offsets == n)
        cells = len({tuple(c) for c in holes.lattice[in_layer]})
        rows.append(LayerRow(n=int(n), holes=int(in_layer.sum()), cells=cells,
                             min_distance=float(distances[in_layer].min())))

    return LayerCensus(reference=m, cell_side=holes.cell_side, layers=tuple(rows))


def census_violations(census: LayerCensus, regime: AsymptoticRegime) -> List[str]:
    """
    Check the layer bounds

    - holes in layer n <= 2 (24 n^2 + 2) = 48 n^2 + 4
    - distance from D_m to layer n >= n l / 2 with l the cell side

    Returns:
        List of violations (empty when both bounds hold for every layer)
    """
    violations = []
    for row in census.layers:
        if row.n == 0:
            continue
        cap = 2 * interior_layer_size(row.n)
        if row.holes > cap:
            violations.append(f"layer {row.n}: {row.holes} holes > 48n²+4 = {cap}")
        floor = row.n * census.cell_side / 2.0
        if row.min_distance < floor - 1e-12:
            violations.append(f"layer {row.n}: distance {row.min_distance:.4g} < n·l/2 = {floor:.4g}")
    return violations


def cell_side_bound_holds(regime: AsymptoticRegime, a0: float,
                          samples: int = 64) -> Tuple[bool, float]:
    """
    Check l/2 <= l - a/2 <= l for every a in (0, a0], l = a^{(2-beta)/3}

    This is the side inequality the layer distance bound n l / 2 rests on.
    Sampled on a log grid over [a0 * 1e-4, a0].

    Returns:
        (holds, worst_a): worst_a is the first failing a, or a0 when all pass
    """
    exponent = (2.0 - regime.beta) / 3.0
    for a in np.geomspace(a0 * 1e-4, a0, samples)[::-1]:
        side = a ** exponent
        middle = side - a / 2.0
        if not (side / 2.0 <= middle <= side):
            return False, float(a)
    return True, float(a0)
