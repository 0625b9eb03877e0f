#!/usr/bin/env python3
"""
Oracle Suite - Closed forms and cross-checks run by `holes.py validate`

Checks:
- self_cell:        self-cell weight vs adaptive quadrature
- foldy_m1:         Q_1 = -C_1 V(z_1, theta)
- foldy_m2:         2x2 elimination
- reciprocity:      F(xhat, theta) = F(-theta, -xhat) for n == 1
- invertibility:    l2 charge bound under the raw condition
- census:           interior layers hold 24 n^2 + 2 holes for K == 0
- mie:              LS far field of a ball vs the Mie series (coarse grid)
- index_branch:     Re n_eff -> -n with Im n_eff >= 0 as lambda_tilde0 -> 0 along 1 - i
- cloak_cancel:     cloak coefficient gives n_eff == 1
"""

import math
import time
from dataclasses import asdict, dataclass
from typing import Callable, List, Optional, Tuple

import numpy as np

from core.background.kernels import free_green, self_cell_weight, validate_self_cell_weight
from core.background.medium_solver import BackgroundSolver, FreeSpaceBackground
from core.background.mie import mie_ball_oracle
from core.domain.config_loader import RunConfig, SolverSettings
from core.domain.fields import ScalarField
from core.domain.sampling import make_sphere_grid
from core.domain.types import AsymptoticRegime, MediumSpec
from core.equivalent.design import cloak_coefficient, effective_index, index_from_samples
from core.equivalent.potential import shape_factor
from core.foldy.invertibility import invertibility_check
from core.foldy.system import simulate_foldy
from core.geometry.census import census_violations, interior_layer_size, layer_census
from core.geometry.partition import partition_domain
from core.geometry.placement import ReferenceBody, ScattererSet, place_holes
from core.utils.errors import HolesError
from core.utils.logger import get_logger

logger = get_logger('system')

MIE_RADIUS = 0.5
MIE_KAPPA_R = 0.5
MIE_CONTRAST = 0.3
MIE_SMALL_GRID_TOL = 0.1
RECIPROCITY_TOL = 1e-8
INDEX_DELTAS = (1e-2, 1e-3, 1e-4)


@dataclass(frozen=True)
class OracleCheck:
    """One oracle outcome"""
    name: str
    passed: bool
    value: float
    tolerance: float
    detail: str = ""
    seconds: float = 0.0

    def to_dict(self) -> dict:
        return asdict(self)


def _single_hole(center, lambda0: complex, a: float, beta: float = 0.0) -> ScattererSet:
    centers = np.atleast_2d(np.asarray(center, dtype=float))
    m = len(centers)
    return ScattererSet(
        centers=centers, cell_ids=np.arange(m), lattice=np.zeros((m, 3), dtype=int),
        lambda0=np.full(m, lambda0, dtype=complex), perimeters=np.full(m, math.pi),
        diameter=1.0, a=a, beta=beta, cell_side=1.0, seed=0,
    )


def check_self_cell(kappa: float) -> OracleCheck:
    h = 0.05
    error = validate_self_cell_weight(kappa, h) / abs(self_cell_weight(kappa, h))
    return OracleCheck('self_cell', error <= 1e-10, error, 1e-10, f"kappa={kappa:g}, h={h:g}")


def check_foldy_m1(kappa: float) -> OracleCheck:
    sphere = make_sphere_grid(2)
    background = FreeSpaceBackground(kappa, sphere)
    holes = _single_hole([0.3, -0.2, 0.1], 0.7 + 0.2j, a=0.05)
    _, solution = simulate_foldy(holes, background)
    expected = -holes.C[0] * background.incident_at(holes.centers)[0]
    error = float(np.max(np.abs(solution.charges[0] - expected)) / np.max(np.abs(expected)))
    return OracleCheck('foldy_m1', error <= 1e-12, error, 1e-12)


def check_foldy_m2(kappa: float) -> OracleCheck:
    sphere = make_sphere_grid(2)
    background = FreeSpaceBackground(kappa, sphere)
    holes = _single_hole([[0.0, 0.0, 0.0], [0.2, 0.1, -0.1]], 0.5, a=0.05)
    holes = holes.with_lambda0(np.array([0.5, 0.9 - 0.1j]))
    _, solution = simulate_foldy(holes, background)

    c1, c2 = holes.C
    phi = free_green(holes.centers[0], holes.centers[1], kappa)
    v1, v2 = background.incident_at(holes.centers)
    det = 1.0 / (c1 * c2) - phi ** 2
    q1 = (-v1 / c2 + phi * v2) / det
    q2 = (-v2 / c1 + phi * v1) / det
    expected = np.vstack([q1, q2])
    error = float(np.max(np.abs(solution.charges - expected)) / np.max(np.abs(expected)))
    return OracleCheck('foldy_m2', error <= 1e-10, error, 1e-10)


def _unit_cube_holes(a: float, lambda0: float, seed: int = 0) -> Tuple[ScattererSet, AsymptoticRegime]:
    medium = MediumSpec.unit_cube(lambda0=ScalarField.constant(lambda0))
    regime = AsymptoticRegime(a=a)
    holes = place_holes(partition_domain(medium, regime), regime, medium, seed=seed)
    return holes, regime


def check_reciprocity(kappa: float) -> OracleCheck:
    sphere = make_sphere_grid(3)
    holes, _ = _unit_cube_holes(0.05, 1.0)
    far, _ = simulate_foldy(holes, FreeSpaceBackground(kappa, sphere))
    defect = far.reciprocity_defect() / far.sup_norm()
    return OracleCheck('reciprocity', defect <= RECIPROCITY_TOL, defect, RECIPROCITY_TOL,
                       f"M={len(holes)}")


def check_invertibility(kappa: float) -> OracleCheck:
    sphere = make_sphere_grid(2)
    holes, regime = _unit_cube_holes(0.1, 0.1)
    report = invertibility_check(holes, regime)
    _, solution = simulate_foldy(holes, FreeSpaceBackground(kappa, sphere), report=report)
    passed = bool(report.passed and solution.l2_holds)
    return OracleCheck('invertibility', passed, solution.l2_ratio, report.l2_factor or math.nan,
                       f"raw margin {report.raw_margin:.4g}")


def check_census() -> OracleCheck:
    holes, regime = _unit_cube_holes(0.05, 1.0)
    lattice = holes.lattice
    middle = np.round(np.median(lattice, axis=0)).astype(int)
    reference = int(np.argmin(np.max(np.abs(lattice - middle), axis=1)))
    census = layer_census(holes, reference, regime)
    problems = census_violations(census, regime)
    complete = [r for r in census.layers if r.n >= 1 and r.complete]
    problems += [f"layer {r.n}: {r.holes} holes != {interior_layer_size(r.n)}"
                 for r in complete if r.holes != interior_layer_size(r.n)]
    if not complete:
        problems.append("no complete interior layer")
    return OracleCheck('census', not problems, float(len(problems)), 0.0,
                       "; ".join(problems) or f"{len(complete)} complete layers")


def check_mie(settings: Optional[SolverSettings] = None) -> OracleCheck:
    kappa = MIE_KAPPA_R / MIE_RADIUS
    sphere = make_sphere_grid(3)
    medium = MediumSpec.ball(center=(0.0, 0.0, 0.0), radius=MIE_RADIUS,
                             n=ScalarField.constant(math.sqrt(1.0 + MIE_CONTRAST)))
    base = settings or SolverSettings()
    solver = BackgroundSolver(medium, kappa, sphere,
                              SolverSettings(grid_h=2 * MIE_RADIUS / 10, subsamples=3,
                                             threads=base.threads, block_size=base.block_size))
    reference = mie_ball_oracle(MIE_RADIUS, MIE_CONTRAST, kappa, sphere)
    error = solver.far_field().relative_l2_error(reference)
    return OracleCheck('mie', error <= MIE_SMALL_GRID_TOL, error, MIE_SMALL_GRID_TOL,
                       f"{len(solver.grid)} cells")


def check_index_branch(n: float = 1.5) -> OracleCheck:
    worst = 0.0
    passive = True
    for delta in INDEX_DELTAS:
        index = index_from_samples(n, 0.0, math.pi, delta * (1 - 1j))
        value = index.values[0]
        worst = max(worst, abs(value.real + n) / delta)
        passive = passive and value.imag >= 0
    return OracleCheck('index_branch', passive and worst <= 5.0, worst, 5.0,
                       f"max |Re n_eff + n| / delta, n={n:g}")


def check_cloak_cancel() -> OracleCheck:
    medium = MediumSpec.ball(center=(0.5, 0.5, 0.5), radius=0.5, n=ScalarField.constant(2.0),
                             K=ScalarField.gaussian_bump(0.0, 1.0, center=(0.5, 0.5, 0.5), width=0.2))
    p0 = shape_factor(ReferenceBody())
    points = np.random.default_rng(0).uniform(0.2, 0.8, size=(64, 3))
    index = effective_index(medium, p0, cloak_coefficient(medium, p0), points)
    error = float(np.max(np.abs(index.values - 1.0)))
    return OracleCheck('cloak_cancel', error <= 1e-12, error, 1e-12)


def run_oracle_suite(config: RunConfig) -> List[OracleCheck]:
    """
    Run every oracle

    Returns:
        OracleCheck rows; an oracle that raises is recorded as failed
    """
    kappa = max(config.wavenumber().kappa, 1e-3)
    settings = config.solver()
    checks: List[Tuple[str, Callable[[], OracleCheck]]] = [
        ('self_cell', lambda: check_self_cell(kappa)),
        ('foldy_m1', lambda: check_foldy_m1(kappa)),
        ('foldy_m2', lambda: check_foldy_m2(kappa)),
        ('reciprocity', lambda: check_reciprocity(kappa)),
        ('invertibility', lambda: check_invertibility(kappa)),
        ('census', check_census),
        ('mie', lambda: check_mie(settings)),
        ('index_branch', check_index_branch),
        ('cloak_cancel', check_cloak_cancel),
    ]

    results = []
    for name, check in checks:
        start = time.perf_counter()
        try:
            result = check()
        except (HolesError, ValueError, ArithmeticError) as e:
            result = OracleCheck(name, False, math.nan, math.nan, f"raised: {e}")
        result = OracleCheck(**{**result.to_dict(), 'seconds': time.perf_counter() - start})
        status = "✅" if result.passed else "❌"
        logger.info(f"{status} Oracle {name}: {result.value:.3e} (tol {result.tolerance:.1e}) {result.detail}")
        results.append(result)
    return results
