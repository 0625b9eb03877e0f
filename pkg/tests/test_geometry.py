import math

import numpy as np
import pytest

from core.domain.fields import ScalarField
from core.domain.types import AsymptoticRegime, MediumSpec
from core.geometry.census import (
    LayerCensus, LayerRow, cell_side_bound_holds, census_violations, interior_layer_size,
    layer_census,
)
from core.geometry.partition import integer_part, partition_domain
from core.geometry.placement import ReferenceBody, place_holes
from core.utils.errors import GeometryError


def _place(medium, regime, seed=0, body=None):
    return place_holes(partition_domain(medium, regime), regime, medium, seed=seed, body=body)


# ===== PARTITION =====

def test_integer_part_tolerates_rounding():
    assert integer_part(2.9999999999) == 3
    assert integer_part(2.5) == 2


def test_unit_cube_lattice(unit_cube):
    regime = AsymptoticRegime(a=125 ** -0.5)
    partition = partition_domain(unit_cube, regime)
    assert len(partition) == 125
    assert partition.lattice_shape == (5, 5, 5)
    assert partition.side == pytest.approx(0.2)
    assert partition.dropped == 0
    np.testing.assert_allclose(partition.volume_defects(), 0.0, atol=1e-9)


def test_density_sets_hole_count():
    medium = MediumSpec.unit_cube(K=ScalarField.constant(1.5))
    partition = partition_domain(medium, AsymptoticRegime(a=0.1))
    assert set(partition.target_counts) == {2}
    assert partition.total_holes == 2 * len(partition)


def test_partial_cells_dropped_to_target(unit_cube):
    partition = partition_domain(unit_cube, AsymptoticRegime(a=0.1))
    assert len(partition) == 100
    assert partition.dropped == 25
    centers = partition.centers
    assert np.all(unit_cube.contains(centers))
    assert list(map(tuple, centers)) == sorted(map(tuple, centers))


def test_ball_partition(ball_medium):
    partition = partition_domain(ball_medium, AsymptoticRegime(a=0.1))
    assert len(partition) == integer_part(ball_medium.volume * 100)
    assert partition.dropped > 0


def test_a_too_large(unit_cube):
    with pytest.raises(GeometryError, match="too large"):
        partition_domain(unit_cube, AsymptoticRegime(a=2.0))


# ===== PLACEMENT =====

def test_point_interaction_strength(unit_cube, regime):
    holes = _place(unit_cube, regime)
    np.testing.assert_allclose(holes.C, -math.pi * regime.a ** 2)
    np.testing.assert_allclose(holes.C_bar, math.pi)
    assert holes.capacity_bound == pytest.approx(math.pi)


def test_impedance_scaling_with_beta(unit_cube):
    regime = AsymptoticRegime(a=0.1, beta=0.5)
    holes = _place(unit_cube, regime)
    np.testing.assert_allclose(holes.impedances, 0.1 ** -0.5)
    np.testing.assert_allclose(holes.C, -(0.1 ** 1.5) * math.pi)


def test_min_distance_within_bounds(unit_cube, regime):
    holes = _place(unit_cube, regime)
    low, high = regime.min_distance_bounds
    assert low <= holes.min_distance() <= high


def test_placement_is_deterministic(unit_cube, regime):
    body = ReferenceBody(diameter=1.0, perimeters=(2.0, 3.0))
    first = _place(unit_cube, regime, seed=11, body=body)
    second = _place(unit_cube, regime, seed=11, body=body)
    np.testing.assert_array_equal(first.centers, second.centers)
    np.testing.assert_array_equal(first.perimeters, second.perimeters)
    assert set(np.unique(first.perimeters)) <= {2.0, 3.0}


def test_crowded_cells_raise():
    medium = MediumSpec.unit_cube(K=ScalarField.constant(1.0))
    regime = AsymptoticRegime(a=0.1, d_min=2.0, d_max=4.0)
    with pytest.raises(GeometryError, match="cannot host"):
        _place(medium, regime)


def test_with_lambda0_checks_length(unit_cube, regime):
    holes = _place(unit_cube, regime)
    swapped = holes.with_lambda0(np.full(len(holes), 2.0 - 1.0j))
    np.testing.assert_allclose(swapped.C, 2 * holes.C * (1.0 - 0.5j))
    with pytest.raises(ValueError):
        holes.with_lambda0([1.0])


def test_impedance_bounds_reported(unit_cube, regime):
    holes = _place(unit_cube, regime)
    bounded = AsymptoticRegime(a=0.1, lambda_minus=2.0, lambda_plus=3.0)
    violations = holes.impedance_violations(bounded)
    assert len(violations) == len(holes)
    assert holes.impedance_violations(AsymptoticRegime(a=0.1, lambda_minus=1.0, lambda_plus=1.0)) == []


def test_reference_body_validation():
    assert ReferenceBody().perimeter == pytest.approx(math.pi)
    with pytest.raises(ValueError):
        ReferenceBody(diameter=0.0)
    with pytest.raises(ValueError):
        ReferenceBody(perimeters=(1.0, -1.0))


# ===== CENSUS =====

def test_interior_layer_sizes():
    assert interior_layer_size(0) == 1
    assert interior_layer_size(1) == 26
    assert interior_layer_size(2) == 98


def test_layer_census_interior_reference(unit_cube):
    regime = AsymptoticRegime(a=0.05)
    holes = _place(unit_cube, regime)
    m = int(np.flatnonzero(np.all(holes.lattice == (3, 3, 3), axis=1))[0])
    census = layer_census(holes, m, regime)

    assert census.row(1).holes == 26 and census.row(1).complete
    assert census.row(2).holes == 98 and census.row(2).complete
    assert census_violations(census, regime) == []
    with pytest.raises(KeyError):
        census.row(99)
    with pytest.raises(IndexError):
        layer_census(holes, len(holes), regime)


@pytest.mark.parametrize("K", [
    ScalarField.constant(1.5),
    ScalarField.gaussian_bump(0.0, 1.5, center=(0.5, 0.5, 0.5), width=0.3),
])
def test_layer_census_with_extra_holes(K):
    medium = MediumSpec.unit_cube(K=K)
    regime = AsymptoticRegime(a=0.05)
    holes = _place(medium, regime, seed=4)
    assert len(holes) > len(np.unique(holes.cell_ids))

    for m in range(0, len(holes), 7):
        census = layer_census(holes, m, regime)
        for row in census.layers:
            if row.n == 0:
                continue
            assert row.holes <= 48 * row.n ** 2 + 4
            assert row.holes <= 2 * row.cells
        assert not [v for v in census_violations(census, regime) if 'holes >' in v]


def test_census_flags_crowded_layer():
    census = LayerCensus(reference=0, cell_side=0.2,
                         layers=(LayerRow(n=1, holes=60, cells=26, min_distance=0.01),))
    violations = census_violations(census, AsymptoticRegime(a=0.1))
    assert len(violations) == 2


def test_cell_side_bound():
    holds, _ = cell_side_bound_holds(AsymptoticRegime(a=0.1), a0=0.1)
    assert holds
    holds, worst = cell_side_bound_holds(AsymptoticRegime(a=0.1), a0=2.0)
    assert not holds
    assert worst > 1.0
