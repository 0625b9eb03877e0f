import json
import math
from pathlib import Path

import numpy as np
import pytest

from core.data.csv_exporter import CSVExporter
from core.domain.config_loader import load_config
from core.domain.types import AsymptoticRegime
from core.harness.convergence import (
    CLOAK_RATIO_TOL, build_manifest, run_beta_trend, run_cloak, run_convergence, run_dilute,
)
from core.harness.rates import expected_rate, fit_rate
from core.harness.validation import check_census, check_self_cell, run_oracle_suite
from core.utils.errors import ConfigError
from core.utils.run_store import RunStore

CONFIG_DIR = Path(__file__).resolve().parent.parent / "config"


# ===== RATES =====

def test_expected_rate_baseline():
    estimate = expected_rate(AsymptoticRegime(a=0.1, beta=0.0, t=2 / 3), gamma=1.0)
    assert estimate.exponent == pytest.approx(2 / 3)
    assert estimate.binding == '(2-beta)/3'
    assert estimate.proof_exponent == pytest.approx(1 / 3)
    assert estimate.converges


@pytest.mark.parametrize("beta,t,gamma,exponent,binding", [
    (0.2, 0.6, 1.0, 0.4, '1-3beta'),
    (0.0, 2 / 3, 0.3, 0.3, 'gamma'),
    (0.0, 1.8, 1.0, 0.2, '2-beta-t'),
])
def test_expected_rate_binding_term(beta, t, gamma, exponent, binding):
    estimate = expected_rate(AsymptoticRegime(a=0.1, beta=beta, t=t), gamma=gamma)
    assert estimate.exponent == pytest.approx(exponent)
    assert estimate.binding == binding


def test_expected_rate_no_convergence():
    estimate = expected_rate(AsymptoticRegime(a=0.1, beta=0.5, t=0.5), gamma=1.0)
    assert estimate.exponent == pytest.approx(-0.5)
    assert not estimate.converges


@pytest.mark.parametrize("beta", np.linspace(0.0, 0.3, 31))
def test_piecewise_form_agrees(beta):
    regime = AsymptoticRegime(a=0.1, beta=beta, t=(2.0 - beta) / 3.0)
    estimate = expected_rate(regime, gamma=1.0)
    assert estimate.piecewise_exponent == pytest.approx(estimate.exponent)


def test_fit_rate_exact_power():
    a = [0.1, 0.07, 0.05, 0.035, 0.025]
    assert fit_rate([(x, x ** (2 / 3)) for x in a]) == pytest.approx(2 / 3)
    assert fit_rate([(x, 3.0 * x) for x in a]) == pytest.approx(1.0)


def test_fit_rate_noisy():
    rng = np.random.default_rng(0)
    a = np.geomspace(0.1, 0.01, 6)
    err = a ** (2 / 3) * (1.0 + rng.uniform(-0.1, 0.1, size=len(a)))
    assert 0.55 <= fit_rate(zip(a, err)) <= 0.78


def test_fit_rate_drops_unusable_rows():
    pairs = [(0.1, 0.1), (0.05, 0.0), (0.025, 0.025), (0.01, math.nan)]
    assert fit_rate(pairs) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        fit_rate([(0.1, 0.1), (0.05, -1.0)])
    with pytest.raises(ValueError):
        fit_rate([(-0.1, 0.1), (0.05, 0.2)])


# ===== STUDIES =====

def test_convergence_study(small_config):
    report = run_convergence(small_config)
    assert [r['a'] for r in report.rows] == [0.3, 0.25, 0.2]
    assert [r['status'] for r in report.rows] == ['ok'] * 3
    assert all(r['discrepancy'] > 0 and math.isfinite(r['discrepancy']) for r in report.rows)
    assert [r['holes'] for r in report.rows] == [11, 16, 25]
    assert math.isfinite(report.slope)
    assert report.expected.exponent == pytest.approx(2 / 3)
    assert report.extras['equivalent_grid_h'] == pytest.approx(0.2 ** (2 / 3) / 2)
    frame = report.rows_frame()
    assert {'a', 'holes', 'min_distance', 'discrepancy', 'status', 'reason'} <= set(frame.columns)
    json.dumps(report.to_dict(), default=float)


def test_convergence_rows_independent_of_threads(small_config):
    serial = run_convergence(small_config).rows_frame()
    threaded = run_convergence(small_config.override(solver__threads=3,
                                                     solver__block_size=3)).rows_frame()
    assert list(serial['holes']) == list(threaded['holes'])
    np.testing.assert_allclose(serial['discrepancy'], threaded['discrepancy'], rtol=1e-10)


def test_repeated_run_is_byte_identical(small_config, tmp_path):
    paths = []
    for name in ['first', 'second']:
        report = run_convergence(small_config)
        paths.append(CSVExporter(str(tmp_path / name)).export_report_rows(report.rows_frame(),
                                                                          report.study))
    first, second = (Path(p).read_bytes() for p in paths)
    assert first == second
    assert first.count(b'\n') == 4


def test_short_or_unsorted_sweep_rejected(small_config):
    with pytest.raises(ConfigError, match="at least 3"):
        run_convergence(small_config, a_list=[0.3, 0.2])
    with pytest.raises(ConfigError, match="strictly decreasing"):
        run_convergence(small_config, a_list=[0.2, 0.25, 0.3])


def test_zero_impedance_rows_fail(small_config):
    config = small_config.override(medium__lambda0__value=0.0)
    report = run_convergence(config)
    assert [r['status'] for r in report.rows] == ['failed'] * 3
    assert all("degenerate: zero impedance" in r['reason'] for r in report.rows)
    assert math.isnan(report.slope)


def test_dilute_study(small_config):
    report = run_dilute(small_config)
    assert report.study == 'dilute'
    assert report.regime['s'] == pytest.approx(1.5)
    assert len(report.ok_rows()) == 3
    values = report.column('discrepancy')
    assert report.extras['monotone'] == bool(np.all(np.diff(values) < 0))


def test_cloak_study(small_config):
    config = small_config.override(medium__n__value=1.2)
    report = run_cloak(config)
    assert len(report.ok_rows()) == 3
    background_sup = report.extras['background_sup']
    assert background_sup > 0
    for row in report.rows:
        assert row['uncloaked'] > 0
        assert row['ratio'] == pytest.approx(row['discrepancy'] / background_sup)
        assert row['holes_ratio'] == pytest.approx(row['discrepancy'] / row['uncloaked'])
    assert report.extras['background_grid_h'] == pytest.approx(0.2 ** (2 / 3) / 2)
    assert report.extras['final_ratio'] == pytest.approx(report.rows[-1]['ratio'])
    assert report.extras['monotone'] == (report.extras['plateau_a'] is None)
    assert report.extras['passed'] == (report.extras['monotone']
                                       and report.extras['final_ratio'] <= CLOAK_RATIO_TOL)


def test_cloak_needs_scattering_background(small_config):
    with pytest.raises(ConfigError, match="scattering background"):
        run_cloak(small_config)


def test_beta_trend(small_config):
    report = run_beta_trend(small_config)
    assert [r['beta'] for r in report.rows] == [0.0, 0.1, 0.2]
    assert len(report.ok_rows()) == 3
    values = report.column('discrepancy')
    assert report.extras['trend_holds'] == bool(np.all(np.diff(values) >= 0))
    assert report.extras['equivalent_grid_h'] == pytest.approx(0.3 ** (2 / 3) / 2)


def test_manifest_contents(small_config):
    manifest = build_manifest(small_config, 'converge', study='convergence').to_dict()
    assert manifest['seed'] == 3
    assert manifest['extras'] == {'study': 'convergence'}
    assert set(manifest['versions']) == {'holes', 'python', 'numpy', 'scipy', 'pandas'}
    assert manifest['tolerances']['ls_residual'] == pytest.approx(1e-10)
    assert manifest['sign_convention'].startswith('u - int Phi_kappa q u')


def test_report_round_trips_through_store(small_config, tmp_path):
    report = run_dilute(small_config)
    store = RunStore(str(tmp_path / 'store'))
    assert store.save_report(report.to_dict())
    loaded = store.load_report()
    assert [r['a'] for r in loaded['rows']] == [0.3, 0.25, 0.2]


# ===== ORACLES =====

def test_self_cell_oracle():
    assert check_self_cell(1.0).passed


def test_census_oracle():
    result = check_census()
    assert result.passed, result.detail


@pytest.mark.slow
def test_full_oracle_suite(small_config):
    checks = run_oracle_suite(small_config)
    assert [c.name for c in checks if not c.passed] == []


@pytest.mark.slow
def test_acceptance_convergence_slope():
    report = run_convergence(load_config(str(CONFIG_DIR / 'base.json')))
    assert len(report.ok_rows()) == 5
    assert 0.4 <= report.slope <= 0.95


@pytest.mark.slow
def test_acceptance_convergence_deterministic():
    config = load_config(str(CONFIG_DIR / 'base.json'))
    first = run_convergence(config).rows_frame().to_csv(index=False)
    second = run_convergence(config).rows_frame().to_csv(index=False)
    assert first == second


@pytest.mark.slow
def test_acceptance_dilute_monotone():
    report = run_dilute(load_config(str(CONFIG_DIR / 'dilute.json')))
    assert len(report.ok_rows()) == 5
    assert report.extras['monotone'] is True


@pytest.mark.slow
def test_acceptance_cloak_leading_sweep():
    config = load_config(str(CONFIG_DIR / 'cloak.json'))
    report = run_cloak(config, a_list=[0.1, 0.07, 0.05])
    assert len(report.ok_rows()) == 3
    assert report.extras['monotone'] is True
    assert report.extras['passed'] is True


@pytest.mark.slow
def test_acceptance_cloak_full_sweep():
    report = run_cloak(load_config(str(CONFIG_DIR / 'cloak.json')))
    assert len(report.ok_rows()) == 5
    assert report.extras['final_ratio'] <= CLOAK_RATIO_TOL
    assert all(r['ratio'] <= CLOAK_RATIO_TOL for r in report.rows)
    assert report.extras['background_grid_h'] == pytest.approx(0.025 ** (2 / 3) / 2)
    if not report.extras['monotone']:
        assert report.extras['plateau_a'] in [r['a'] for r in report.rows[1:]]


@pytest.mark.slow
def test_acceptance_beta_trend():
    config = load_config(str(CONFIG_DIR / 'base.json'))
    report = run_beta_trend(config, a=0.05)
    assert len(report.ok_rows()) == 3
    assert report.extras['trend_holds'] is True
