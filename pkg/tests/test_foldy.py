import math
from dataclasses import replace

import numpy as np
import pytest

from core.background.kernels import free_green
from core.background.medium_solver import BackgroundSolver, FreeSpaceBackground
from core.domain.config_loader import SolverSettings
from core.domain.fields import ScalarField
from core.domain.types import AsymptoticRegime, MediumSpec
from core.foldy.invertibility import SQRT26_OVER_PI, Side, invertibility_check
from core.foldy.system import assemble_system, simulate_foldy, solve_charges
from core.geometry.partition import partition_domain
from core.geometry.placement import ReferenceBody, ScattererSet, place_holes
from core.harness.rates import fit_rate
from core.harness.validation import (
    check_foldy_m1, check_foldy_m2, check_invertibility, check_reciprocity,
)
from core.utils.errors import BoundViolationError, GeometryError


def _holes(centers, lambda0, a=0.05, beta=0.0):
    centers = np.atleast_2d(np.asarray(centers, dtype=float))
    m = len(centers)
    return ScattererSet(
        centers=centers, cell_ids=np.arange(m), lattice=np.zeros((m, 3), dtype=int),
        lambda0=np.broadcast_to(np.asarray(lambda0, dtype=complex), (m,)).copy(),
        perimeters=np.full(m, math.pi), diameter=1.0, a=a, beta=beta, cell_side=1.0,
    )


def _lattice_holes(lambda0, a=0.1):
    medium = MediumSpec.unit_cube(lambda0=ScalarField.constant(lambda0))
    regime = AsymptoticRegime(a=a)
    return place_holes(partition_domain(medium, regime), regime, medium), regime


# ===== CLOSED FORMS =====

def test_single_hole_charge(sphere):
    background = FreeSpaceBackground(1.0, sphere)
    holes = _holes([0.3, -0.2, 0.1], 0.7 + 0.2j)
    far, solution = simulate_foldy(holes, background)
    v = background.incident_at(holes.centers)[0]
    np.testing.assert_allclose(solution.charges[0], -holes.C[0] * v, rtol=1e-12)
    # one hole: U(xhat, theta) = -C exp(i kappa z . (theta - xhat))
    expected = -holes.C[0] * np.outer(v[sphere.antipode], v)
    np.testing.assert_allclose(far.values, expected, rtol=1e-12)


def test_two_hole_elimination(sphere):
    background = FreeSpaceBackground(2.0, sphere)
    holes = _holes([[0.0, 0.0, 0.0], [0.2, 0.1, -0.1]], [0.5, 0.9 - 0.1j])
    _, solution = simulate_foldy(holes, background)

    c1, c2 = holes.C
    phi = free_green(holes.centers[0], holes.centers[1], 2.0)
    v1, v2 = background.incident_at(holes.centers)
    det = 1.0 / (c1 * c2) - phi ** 2
    np.testing.assert_allclose(solution.charges[0], (-v1 / c2 + phi * v2) / det, rtol=1e-10)
    np.testing.assert_allclose(solution.charges[1], (-v2 / c1 + phi * v1) / det, rtol=1e-10)


@pytest.mark.parametrize("check", [check_foldy_m1, check_foldy_m2])
def test_closed_form_oracles(check):
    result = check(1.0)
    assert result.passed, result


def test_no_holes_returns_background(sphere):
    far, solution = simulate_foldy(_holes(np.zeros((0, 3)), 1.0), FreeSpaceBackground(1.0, sphere))
    assert far.sup_norm() == 0.0
    assert solution.charges.shape == (0, len(sphere))


# ===== SYSTEM =====

def test_matrix_layout_and_symmetry(sphere):
    holes = _holes([[0.0, 0.0, 0.0], [0.3, 0.0, 0.0], [0.0, 0.4, 0.1]], 1.0)
    system = assemble_system(holes, FreeSpaceBackground(1.0, sphere), 1.0)
    np.testing.assert_allclose(np.diag(system.matrix), -1.0 / holes.C)
    assert system.matrix[0, 1] == pytest.approx(-free_green(holes.centers[0], holes.centers[1], 1.0))
    assert system.symmetry_defect() == 0.0


def test_zero_impedance_is_degenerate(sphere):
    holes = _holes([[0.0, 0.0, 0.0], [0.3, 0.0, 0.0]], [1.0, 0.0])
    with pytest.raises(ValueError, match="degenerate: zero impedance"):
        simulate_foldy(holes, FreeSpaceBackground(1.0, sphere))


def test_coincident_centers_rejected(sphere):
    holes = _holes([[0.1, 0.1, 0.1], [0.1, 0.1, 0.1]], 1.0)
    with pytest.raises(GeometryError):
        simulate_foldy(holes, FreeSpaceBackground(1.0, sphere))


def test_green_table_shape_checked():
    holes = _holes([[0.0, 0.0, 0.0], [0.3, 0.0, 0.0]], 1.0)
    with pytest.raises(ValueError):
        assemble_system(holes, np.zeros((3, 3)), 1.0)


def test_rhs_rows_checked(sphere):
    holes = _holes([[0.0, 0.0, 0.0], [0.3, 0.0, 0.0]], 1.0)
    system = assemble_system(holes, FreeSpaceBackground(1.0, sphere), 1.0)
    with pytest.raises(ValueError):
        solve_charges(system, np.ones(3))


def test_threads_do_not_change_charges(sphere):
    holes, _ = _lattice_holes(1.0)
    background = FreeSpaceBackground(1.0, sphere)
    _, serial = simulate_foldy(holes, background)
    _, threaded = simulate_foldy(holes, background, threads=3, block_size=3)
    np.testing.assert_allclose(serial.charges, threaded.charges, rtol=1e-12, atol=1e-15)


def test_free_space_reciprocity():
    result = check_reciprocity(1.0)
    assert result.passed, result
    assert result.detail == "M=400"


def test_reciprocity_over_variable_background(ball_medium, sphere):
    background = BackgroundSolver(ball_medium, 1.0, sphere, SolverSettings(grid_h=0.25, subsamples=2))
    holes = _holes([[0.0, 0.0, 0.0], [0.2, -0.1, 0.1], [-0.2, 0.2, 0.0], [0.7, 0.0, 0.0]],
                   0.8, a=0.05)
    far, solution = simulate_foldy(holes, background)
    assert solution.residual < 1e-10
    assert far.reciprocity_defect() <= 1e-9 * far.sup_norm()


# ===== INVERTIBILITY =====

@pytest.mark.parametrize("lambda0,passes", [(0.1, True), (-0.1, True), (0.5, False)])
def test_raw_condition_for_balls(lambda0, passes):
    holes, regime = _lattice_holes(lambda0)
    report = invertibility_check(holes, regime)
    assert report.passed is passes
    assert report.in_scope
    # for balls the condition reduces to |lambda0| < 1/sqrt(26)
    assert report.raw_value * regime.a ** 2 == pytest.approx(1.0 / (math.pi * abs(lambda0)))


def test_mixed_signs_out_of_scope():
    holes = _holes([[0.0, 0.0, 0.0], [0.3, 0.0, 0.0]], [0.1, -0.1])
    report = invertibility_check(holes, AsymptoticRegime(a=0.05))
    assert report.side == Side.MIXED
    assert not report.in_scope
    assert not report.passed
    assert report.l2_factor is None


def test_sufficient_condition_margin():
    holes, _ = _lattice_holes(0.1)
    regime = AsymptoticRegime(a=0.1, lambda_minus=1.0, lambda_plus=1.0)
    report = invertibility_check(holes, regime)
    assert SQRT26_OVER_PI == pytest.approx(1.623068, abs=1e-6)
    assert SQRT26_OVER_PI != pytest.approx(1.62295, abs=5e-5)
    assert not report.sufficient_passed
    assert report.sufficient_margin == pytest.approx(1.0 - math.sqrt(26.0) / math.pi)


def test_charge_bound_enforced(sphere):
    holes, regime = _lattice_holes(0.1)
    report = invertibility_check(holes, regime)
    _, solution = simulate_foldy(holes, FreeSpaceBackground(1.0, sphere), report=report)
    assert solution.l2_bound == pytest.approx(report.l2_factor)
    assert solution.l2_holds
    assert check_invertibility(1.0).passed


@pytest.mark.parametrize("seed", range(20))
def test_l2_bound_over_placements(seed, sphere):
    # |dB| / diam^2 = 1 turns lambda0 = 0.5 into raw value 2 / a^2
    a = (0.1, 0.07, 0.05)[seed % 3]
    medium = MediumSpec.unit_cube(lambda0=ScalarField.constant(0.5))
    regime = AsymptoticRegime(a=a, lambda_minus=0.5, lambda_plus=0.5)
    holes = place_holes(partition_domain(medium, regime), regime, medium, seed=seed,
                        body=ReferenceBody(perimeters=(1.0,)))
    assert len(holes) == int(a ** -2 + 1e-9)
    assert len(holes) <= 400

    report = invertibility_check(holes, regime)
    assert report.raw_value * a ** 2 == pytest.approx(2.0)
    assert report.passed and report.sufficient_passed
    _, solution = simulate_foldy(holes, FreeSpaceBackground(1.0, sphere), report=report)
    assert solution.l2_holds


def test_broken_bound_raises(sphere):
    holes, regime = _lattice_holes(0.1)
    report = replace(invertibility_check(holes, regime), l2_factor=1e-12)
    with pytest.raises(BoundViolationError, match="l2 bound violated"):
        simulate_foldy(holes, FreeSpaceBackground(1.0, sphere), report=report)


@pytest.mark.parametrize("beta", [0.0, 0.2])
def test_charges_scale_like_capacity(beta, sphere):
    medium = MediumSpec.unit_cube(lambda0=ScalarField.constant(0.1))
    background = FreeSpaceBackground(1.0, sphere)
    pairs = []
    for a in [0.2, 0.15, 0.1, 0.07, 0.05]:
        regime = AsymptoticRegime(a=a, beta=beta)
        holes = place_holes(partition_domain(medium, regime), regime, medium)
        _, solution = simulate_foldy(holes, background)
        pairs.append((a, solution.max_charge()))
    assert fit_rate(pairs) == pytest.approx(2.0 - beta, abs=0.15)
