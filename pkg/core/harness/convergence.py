#!/usr/bin/env python3
"""
Convergence Studies - a-sweeps of the Foldy-Lax far field

Studies:
- convergence: sup |U^inf - U0^inf| against the equivalent medium, slope fit
- dilute:      s < 2 - beta, sup |U^inf - V_n^inf| per a
- cloak:       cloaked holes vs the bare background, sup |U^inf| per a
- beta_trend:  discrepancy across beta at fixed a

Every per-a stage failure is recorded on its row (status 'failed' plus a
reason); the report still covers the rows that completed.

Usage:
    config = load_config("config/base.json")
    report = run_convergence(config)
    print(report.rows_frame())
    print(report.slope, report.expected.exponent)
"""

import math
import platform
import time
from dataclasses import dataclass, field, replace
from datetime import datetime
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
import pandas as pd
import scipy

import core
from core.background.far_field import FarField
from core.background.lippmann_schwinger import SIGN_CONVENTION
from core.background.lippmann_schwinger import PIVOT_RATIO_FLOOR as LS_PIVOT_FLOOR
from core.background.medium_solver import BackgroundSolver, FreeSpaceBackground, build_background
from core.domain.config_loader import RunConfig
from core.domain.sampling import SphereGrid, make_sphere_grid, make_volume_grid
from core.domain.types import AsymptoticRegime, MediumSpec, validate_regime
from core.equivalent.design import cloak_coefficient, cloak_medium, impedance_schedule
from core.equivalent.potential import build_equivalent_potential, shape_factor, solve_equivalent
from core.foldy import system as foldy
from core.foldy.invertibility import invertibility_check
from core.foldy.system import simulate_foldy
from core.geometry.partition import partition_domain
from core.geometry.placement import ReferenceBody, ScattererSet, place_holes
from core.harness.rates import RateEstimate, expected_rate, fit_rate
from core.utils.errors import ConfigError, HolesError
from core.utils.logger import HolesLogger, get_logger

logger = get_logger('system')

CLOAK_RATIO_TOL = 0.25


@dataclass
class RunManifest:
    """Everything needed to reproduce a run"""
    command: str
    config: Dict[str, Any]
    seed: int
    sign_convention: str = SIGN_CONVENTION
    tolerances: Dict[str, float] = field(default_factory=dict)
    versions: Dict[str, str] = field(default_factory=dict)
    extras: Dict[str, Any] = field(default_factory=dict)
    created_at: str = ""

    def to_dict(self) -> dict:
        return {
            'command': self.command,
            'config': self.config,
            'seed': self.seed,
            'sign_convention': self.sign_convention,
            'tolerances': self.tolerances,
            'versions': self.versions,
            'extras': self.extras,
            'created_at': self.created_at,
        }


def build_manifest(config: RunConfig, command: str, **extras) -> RunManifest:
    """Manifest for one CLI or library run"""
    return RunManifest(
        command=command,
        config=config.as_dict(),
        seed=config['run.seed'],
        tolerances={
            'ls_residual': config['solver.residual_tol'],
            'ls_pivot_ratio_floor': LS_PIVOT_FLOOR,
            'foldy_residual': foldy.RESIDUAL_TOL,
            'foldy_pivot_ratio_floor': foldy.PIVOT_RATIO_FLOOR,
            'bound_slack': foldy.BOUND_SLACK,
        },
        versions={
            'holes': core.__version__,
            'python': platform.python_version(),
            'numpy': np.__version__,
            'scipy': scipy.__version__,
            'pandas': pd.__version__,
        },
        extras=extras,
        created_at=datetime.now().isoformat(timespec='seconds'),
    )


@dataclass
class ConvergenceReport:
    """Rows of an a-sweep (or beta-sweep) plus the fitted rate"""
    study: str
    rows: List[Dict[str, Any]]
    slope: float
    expected: Optional[RateEstimate]
    regime: Dict[str, Any]
    runtime: Dict[str, float] = field(default_factory=dict)
    extras: Dict[str, Any] = field(default_factory=dict)

    def ok_rows(self) -> List[Dict[str, Any]]:
        return [r for r in self.rows if r['status'] == 'ok']

    def rows_frame(self) -> pd.DataFrame:
        """Rows without timings (reproducible byte for byte)"""
        return pd.DataFrame(self.rows)

    def slope_vs(self) -> Dict[str, float]:
        """Fitted slope minus each candidate exponent"""
        if self.expected is None:
            return {}
        return {
            'exponent': self.slope - self.expected.exponent,
            'proof_exponent': self.slope - self.expected.proof_exponent,
        }

    def column(self, name: str) -> np.ndarray:
        return np.asarray([r[name] for r in self.ok_rows()], dtype=float)

    def to_dict(self) -> dict:
        return {
            'study': self.study,
            'rows': self.rows,
            'slope': self.slope,
            'expected': self.expected.to_dict() if self.expected else None,
            'slope_vs': self.slope_vs(),
            'regime': self.regime,
            'runtime': self.runtime,
            'extras': self.extras,
        }


# ===== SHARED STAGES =====

def _check_a_list(a_list: Sequence[float], minimum: int = 3) -> List[float]:
    values = [float(a) for a in a_list]
    if len(values) < minimum:
        raise ConfigError(f"a-sweep needs at least {minimum} values, got {values}")
    if any(b >= a for a, b in zip(values, values[1:])):
        raise ConfigError(f"a-sweep must be strictly decreasing: {values}")
    if values[-1] <= 0:
        raise ConfigError(f"Hole diameters must be positive: {values}")
    return values


def _warn_regime(regime: AsymptoticRegime, config: RunConfig):
    for problem in validate_regime(regime, config.wavenumber()):
        logger.warning(f"⚠️  Regime: {problem}")


def _gamma(medium: MediumSpec) -> float:
    return min(medium.gamma, medium.n.gamma, medium.K.gamma, medium.lambda0.gamma)


def place(config: RunConfig, medium: MediumSpec, regime: AsymptoticRegime,
          body: Optional[ReferenceBody] = None) -> ScattererSet:
    """Partition Omega and place the holes for one a"""
    partition = partition_domain(medium, regime)
    return place_holes(partition, regime, medium, seed=config['run.seed'],
                       body=body or config.body())


def foldy_far_field(holes: ScattererSet, regime: AsymptoticRegime, background, config: RunConfig):
    """Invertibility check plus Foldy-Lax solve; returns (far field, solution, report)"""
    settings = config.solver()
    report = invertibility_check(holes, regime)
    far, solution = simulate_foldy(holes, background, report=report,
                                   threads=settings.threads, block_size=settings.block_size)
    return far, solution, report


def _row(a: float, holes: Optional[ScattererSet] = None) -> Dict[str, Any]:
    return {
        'a': a,
        'holes': len(holes) if holes is not None else 0,
        'min_distance': holes.min_distance() if holes is not None else math.nan,
        'discrepancy': math.nan,
        'status': 'ok',
        'reason': '',
    }


def _fail(row: Dict[str, Any], error: Exception, study: str) -> Dict[str, Any]:
    row.update(status='failed', reason=str(error))
    logger.error(f"❌ {study} a = {row['a']:g}: {error}")
    return row


def _fit(rows: List[Dict[str, Any]]) -> float:
    pairs = [(r['a'], r['discrepancy']) for r in rows if r['status'] == 'ok']
    if len(pairs) < 2:
        return math.nan
    try:
        return fit_rate(pairs)
    except ValueError as e:
        logger.warning(f"⚠️  Rate fit skipped: {e}")
        return math.nan


def _decreasing(values: Sequence[float]) -> bool:
    return bool(len(values) >= 2 and all(b < a for a, b in zip(values, values[1:])))


def _plateau(rows: List[Dict[str, Any]]) -> Optional[float]:
    """First a whose discrepancy did not drop below the previous row's"""
    for previous, current in zip(rows, rows[1:]):
        if not current['discrepancy'] < previous['discrepancy']:
            return current['a']
    return None


def background_on_grid(config: RunConfig, medium: MediumSpec, sphere: SphereGrid,
                       h_bound: Optional[float] = None):
    """Background on a grid with h = min(solver.grid_h, h_bound); returns (background, grid)"""
    settings = config.solver()
    kappa = config.wavenumber().kappa
    h = settings.grid_h if h_bound is None else min(settings.grid_h, h_bound)
    grid = make_volume_grid(medium, h, settings.subsamples)
    if medium.is_homogeneous:
        return FreeSpaceBackground(kappa, sphere), grid
    return BackgroundSolver(medium, kappa, sphere, settings, grid=grid), grid


def sweep_h_bound(a: float, beta: float) -> float:
    """Half the partition cell side a^{(2-beta)/3}"""
    return a ** ((2.0 - beta) / 3.0) / 2.0


@dataclass
class EquivalentRun:
    """Equivalent-medium far field and the background it was computed against"""
    far: FarField
    background: Any
    grid_h: float
    cells: int


def equivalent_far_field(config: RunConfig, medium: MediumSpec, sphere: SphereGrid,
                         h_bound: Optional[float] = None) -> EquivalentRun:
    """
    Solve the equivalent medium once

    The background shares the equivalent grid so that the mixed-reciprocity
    fields are exact on that grid.

    Args:
        config: Run configuration (kappa, body, solver, equivalent.*)
        medium: Medium (n, K, lambda0)
        sphere: Direction grid
        h_bound: Upper bound on the grid spacing
    """
    settings = config.solver()
    background, grid = background_on_grid(config, medium, sphere, h_bound)

    potential = build_equivalent_potential(
        medium, shape_factor(config.body()), config.wavenumber().kappa, grid,
        cloak=config['equivalent.cloak'], pi_factor=config['equivalent.pi_factor'])
    _, far = solve_equivalent(potential, background,
                              threads=settings.threads, block_size=settings.block_size)
    return EquivalentRun(far=far, background=background, grid_h=grid.h, cells=len(grid))


def hole_medium(config: RunConfig, medium: MediumSpec) -> MediumSpec:
    if config['equivalent.cloak']:
        return cloak_medium(medium, shape_factor(config.body()), config.wavenumber().kappa)
    return medium


# ===== STUDIES =====

def run_convergence(config: RunConfig, a_list: Optional[Sequence[float]] = None,
                    sphere: Optional[SphereGrid] = None) -> ConvergenceReport:
    """
    Foldy-Lax vs equivalent medium over an a-sweep

    Args:
        config: Run configuration
        a_list: Strictly decreasing hole diameters (default run.a_list)
        sphere: Direction grid (default from sphere.order)

    Returns:
        ConvergenceReport with rows sorted by decreasing a
    """
    a_values = _check_a_list(config.a_list if a_list is None else a_list)
    sphere = sphere or make_sphere_grid(config['sphere.order'])
    medium = config.medium()
    regime0 = config.regime(a_values[0])
    _warn_regime(regime0, config)

    start = time.perf_counter()
    h_bound = sweep_h_bound(a_values[-1], regime0.beta)
    equivalent = equivalent_far_field(config, medium, sphere, h_bound=h_bound)
    timings = {'equivalent': time.perf_counter() - start}

    holes_medium = hole_medium(config, medium)
    rows = []
    for a in a_values:
        tick = time.perf_counter()
        regime = regime0.with_a(a)
        row = _row(a)
        try:
            holes = place(config, holes_medium, regime)
            row = _row(a, holes)
            far, solution, report = foldy_far_field(holes, regime, equivalent.background, config)
            row.update(discrepancy=far.sup_distance(equivalent.far),
                       raw_passed=report.passed, l2_ratio=solution.l2_ratio,
                       condition=solution.condition_estimate)
        except (HolesError, ValueError) as e:
            _fail(row, e, 'convergence')
        rows.append(row)
        timings[f"a={a:g}"] = time.perf_counter() - tick
        HolesLogger.log_sweep_row(a, row['holes'], row['discrepancy'], study='convergence',
                                  distance=row['min_distance'], status=row['status'])

    expected = expected_rate(regime0, _gamma(medium))
    report = ConvergenceReport(
        study='convergence',
        rows=rows,
        slope=_fit(rows),
        expected=expected,
        regime=regime0.describe(),
        runtime={**timings, 'total': time.perf_counter() - start},
        extras={'equivalent_grid_h': equivalent.grid_h, 'equivalent_cells': equivalent.cells,
                'equivalent_sup_norm': equivalent.far.sup_norm(),
                'cloak': config['equivalent.cloak'], 'pi_factor': config['equivalent.pi_factor']},
    )
    logger.info(f"📈 Convergence: slope {report.slope:.4f} vs expected {expected.exponent:.4f} "
                f"({expected.binding}), proof variant {expected.proof_exponent:.4f}")
    return report


def run_dilute(config: RunConfig, a_list: Optional[Sequence[float]] = None,
               sphere: Optional[SphereGrid] = None) -> ConvergenceReport:
    """
    Dilute regime s < 2 - beta: the holes fade out of the far field

    Rows record sup |U^inf - V_n^inf|; extras['monotone'] tells whether it
    decreases over the sweep.
    """
    a_values = _check_a_list(config.a_list if a_list is None else a_list)
    sphere = sphere or make_sphere_grid(config['sphere.order'])
    medium = config.medium()
    kappa = config.wavenumber().kappa
    regime0 = replace(config.regime(a_values[0]), s=config['sweep.dilute_s'])
    if regime0.is_equivalent_regime:
        logger.warning("⚠️  Dilute study run with s = 2 - beta")
    _warn_regime(regime0, config)

    start = time.perf_counter()
    background = build_background(medium, kappa, sphere, config.solver())
    v_inf = background.far_field()

    rows = []
    for a in a_values:
        regime = regime0.with_a(a)
        row = _row(a)
        try:
            holes = place(config, medium, regime)
            row = _row(a, holes)
            far, _, _ = foldy_far_field(holes, regime, background, config)
            row['discrepancy'] = far.sup_distance(v_inf)
        except (HolesError, ValueError) as e:
            _fail(row, e, 'dilute')
        rows.append(row)
        HolesLogger.log_sweep_row(a, row['holes'], row['discrepancy'], study='dilute',
                                  status=row['status'])

    report = ConvergenceReport(study='dilute', rows=rows, slope=_fit(rows), expected=None,
                               regime=regime0.describe(),
                               runtime={'total': time.perf_counter() - start})
    report.extras['monotone'] = _decreasing(report.column('discrepancy'))
    logger.info(f"📉 Dilute: monotone decrease = {report.extras['monotone']}")
    return report


def run_cloak(config: RunConfig, a_list: Optional[Sequence[float]] = None,
              sphere: Optional[SphereGrid] = None) -> ConvergenceReport:
    """
    Cloaked holes against the bare background over an a-sweep

    The cloaked holes use lambda_m = lambda_tilde_{m,0} kappa^2 a^{-beta} with
    lambda_tilde0 = (1 - n^2) / ((K + 1) P0), so the total far field should
    vanish. The discrepancy column is sup |U^inf| of the cloaked holes; ratio
    divides it by sup |V_n^inf| of the medium without holes. holes_ratio
    divides it by the same centers carrying the configured lambda0.

    The background grid is refined to h <= a_min^{(2-beta)/3} / 2. When the
    discrepancy stops decreasing anyway, extras['plateau_a'] names the first
    a that did not improve (the grid floor).
    """
    a_values = _check_a_list(config.a_list if a_list is None else a_list)
    sphere = sphere or make_sphere_grid(config['sphere.order'])
    medium = config.medium()
    kappa = config.wavenumber().kappa
    body = config.body()
    regime0 = config.regime(a_values[0])
    _warn_regime(regime0, config)

    start = time.perf_counter()
    background, grid = background_on_grid(config, medium, sphere,
                                          sweep_h_bound(a_values[-1], regime0.beta))
    background_sup = background.far_field().sup_norm()
    if background_sup == 0.0:
        raise ConfigError("Cloak study needs a scattering background (n != 1 somewhere)")
    design = cloak_coefficient(medium, shape_factor(body))

    rows = []
    for a in a_values:
        regime = regime0.with_a(a)
        row = _row(a)
        try:
            plain = place(config, medium, regime, body=body)
            row = _row(a, plain)
            cloaked = impedance_schedule(plain, design, kappa).apply(plain)
            far_cloaked, _, _ = foldy_far_field(cloaked, regime, background, config)
            far_plain, _, _ = foldy_far_field(plain, regime, background, config)
            cloaked_sup, plain_sup = far_cloaked.sup_norm(), far_plain.sup_norm()
            row.update(discrepancy=cloaked_sup, ratio=cloaked_sup / background_sup,
                       uncloaked=plain_sup,
                       holes_ratio=cloaked_sup / plain_sup if plain_sup > 0 else math.inf)
        except (HolesError, ValueError) as e:
            _fail(row, e, 'cloak')
        rows.append(row)
        HolesLogger.log_sweep_row(a, row['holes'], row['discrepancy'], study='cloak',
                                  status=row['status'])

    report = ConvergenceReport(study='cloak', rows=rows, slope=_fit(rows), expected=None,
                               regime=regime0.describe(),
                               runtime={'total': time.perf_counter() - start})
    values = report.column('discrepancy')
    ratios = report.column('ratio')
    plateau = _plateau(report.ok_rows())
    final_ratio = float(ratios[-1]) if len(ratios) else math.nan
    report.extras.update(monotone=_decreasing(values), plateau_a=plateau,
                         final_ratio=final_ratio, background_sup=background_sup,
                         background_grid_h=grid.h, background_cells=len(grid),
                         passed=bool(_decreasing(values) and final_ratio <= CLOAK_RATIO_TOL))
    if plateau is not None:
        logger.warning(f"⚠️  Cloak discrepancy stops decreasing at a = {plateau:g} "
                       f"(background grid h = {grid.h:g})")
    logger.info(f"🫥 Cloak: final ratio {final_ratio:.4g}, "
                f"monotone = {report.extras['monotone']}")
    return report


def run_beta_trend(config: RunConfig, a: Optional[float] = None,
                   betas: Optional[Sequence[float]] = None,
                   sphere: Optional[SphereGrid] = None) -> ConvergenceReport:
    """
    Discrepancy across beta at fixed a (s = 2 - beta)

    Smaller beta means more holes; extras['trend_holds'] tells whether the
    discrepancy is non-decreasing in beta over at least 3 rows.
    """
    a = config['regime.a'] if a is None else float(a)
    betas = sorted(config['sweep.beta_list'] if betas is None else betas)
    sphere = sphere or make_sphere_grid(config['sphere.order'])
    medium = config.medium()

    start = time.perf_counter()
    h_bound = min(sweep_h_bound(a, beta) for beta in betas)
    equivalent = equivalent_far_field(config, medium, sphere, h_bound=h_bound)
    holes_medium = hole_medium(config, medium)

    rows = []
    for beta in betas:
        regime = config.regime(a).with_beta(beta)
        _warn_regime(regime, config)
        row = _row(a)
        try:
            holes = place(config, holes_medium, regime)
            row = _row(a, holes)
            far, _, _ = foldy_far_field(holes, regime, equivalent.background, config)
            row['discrepancy'] = far.sup_distance(equivalent.far)
        except (HolesError, ValueError) as e:
            _fail(row, e, 'beta_trend')
        row['beta'] = beta
        rows.append(row)
        HolesLogger.log_sweep_row(a, row['holes'], row['discrepancy'], study='beta_trend',
                                  status=f"beta={beta:g} {row['status']}")

    report = ConvergenceReport(study='beta_trend', rows=rows, slope=math.nan, expected=None,
                               regime=config.regime(a).describe(),
                               runtime={'total': time.perf_counter() - start},
                               extras={'equivalent_grid_h': equivalent.grid_h})
    values = report.column('discrepancy')
    report.extras['trend_holds'] = bool(len(values) >= 3 and np.all(np.diff(values) >= 0))
    return report
