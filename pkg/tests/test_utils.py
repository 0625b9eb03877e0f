import json
import logging
from pathlib import Path

import numpy as np
import pandas as pd
import pytest

from core.background.far_field import FarField
from core.data.csv_exporter import (
    FAR_FIELD_COLUMNS, REPORT_COLUMNS, CSVExporter, validate_export_frame,
)
from core.domain.sampling import make_sphere_grid
from core.utils.errors import (
    BoundViolationError, ConfigError, GeometryError, HolesError, NumericalError,
    SeriesConvergenceError, SingularSystemError,
)
from core.utils.logger import HolesLogger, get_logger
from core.utils.run_store import RunStore, _json_default


# ===== RUN STORE =====

def test_round_trip_with_numpy_values(tmp_path):
    store = RunStore(str(tmp_path / 'run'))
    report = {'rows': np.arange(3), 'slope': np.float64(0.5), 'count': np.int64(4),
              'charge': 1 + 2j, 'out': tmp_path}
    assert store.save_report(report)
    loaded = store.load_report()
    assert loaded == {'rows': [0, 1, 2], 'slope': 0.5, 'count': 4, 'charge': [1.0, 2.0],
                      'out': str(tmp_path)}


def test_json_default_complex_array():
    assert _json_default(np.complex128(0.5 - 1j)) == [0.5, -1.0]
    assert _json_default(np.array([[1, 2], [3, 4]])) == [[1, 2], [3, 4]]


def test_missing_artifact_loads_none(tmp_path):
    store = RunStore(str(tmp_path))
    assert store.load_manifest() is None
    assert store.load_report('dilute') is None


def test_no_temp_files_left_behind(tmp_path):
    store = RunStore(str(tmp_path))
    store.save_manifest({'command': 'validate'})
    store.save_invertibility({'passed': True})
    store.save_far_field({'values': np.zeros((2, 2), dtype=complex)}, 'zero')
    names = sorted(p.name for p in tmp_path.iterdir())
    assert names == ['farfield_zero.json', 'invertibility.json', 'manifest.json']
    assert set(store.get_artifact_info()) == set(names)


def test_corrupt_artifact_is_backed_up(tmp_path):
    store = RunStore(str(tmp_path))
    store.report_file.write_text('{"rows": [')
    assert store.load_report() is None
    backups = list(tmp_path.glob('report.corrupt.*'))
    assert len(backups) == 1
    assert backups[0].read_text() == '{"rows": ['


def test_unknown_types_fall_back_to_str(tmp_path):
    store = RunStore(str(tmp_path))
    assert store.save_report({'bad': {1, 2}})
    assert json.loads(store.report_file.read_text())['bad'] == '{1, 2}'


# ===== CSV EXPORT =====

def test_validate_export_frame():
    frame = pd.DataFrame({'a': [0.1, 0.05], 'holes': [8, 27], 'min_distance': [0.4, np.nan],
                          'discrepancy': [1e-3, np.nan], 'status': ['ok', 'failed'],
                          'reason': ['', 'boom']})
    check = validate_export_frame(frame, REPORT_COLUMNS)
    assert check == {'valid': True, 'issues': [], 'rows': 2}

    broken = frame.drop(columns=['status']).assign(a=[0.1, np.inf])
    check = validate_export_frame(broken, REPORT_COLUMNS)
    assert not check['valid']
    assert "Missing required column: status" in check['issues']
    assert "Non-finite values in column: a" in check['issues']


def test_exporter_writes_far_field(tmp_path):
    sphere = make_sphere_grid(1)
    far = FarField(values=np.array([[1 + 1j, 2.0], [3.0, 4 - 1j]]), sphere=sphere, kappa=1.0,
                   label='demo')
    exporter = CSVExporter(str(tmp_path / 'csv'))
    path = exporter.export_far_field(far)
    assert Path(path).name == 'farfield_demo.csv'

    frame = pd.read_csv(path)
    assert list(frame.columns) == FAR_FIELD_COLUMNS
    assert frame['re'].tolist() == [1.0, 3.0, 2.0, 4.0]
    summary = exporter.get_export_summary(path)
    assert summary['row_count'] == 4
    assert exporter.get_export_summary(str(tmp_path / 'none.csv')) == {"error": "File not found"}


def test_exporter_refuses_invalid_frame(tmp_path):
    exporter = CSVExporter(str(tmp_path))
    with pytest.raises(ValueError, match="Refusing to export"):
        exporter.export_report_rows(pd.DataFrame({'a': [0.1]}), 'convergence')


def test_charges_sorted_by_direction_then_hole(tmp_path):
    charges = np.array([[1, 2, 3], [4, 5, 6]], dtype=complex)
    frame = pd.read_csv(CSVExporter(str(tmp_path)).export_charges(charges, 'x'))
    assert frame['re'].tolist() == [1.0, 4.0, 2.0, 5.0, 3.0, 6.0]
    assert frame['m'].tolist() == [0, 1, 0, 1, 0, 1]


# ===== ERRORS =====

def test_error_hierarchy():
    assert issubclass(ConfigError, ValueError) and issubclass(ConfigError, HolesError)
    assert issubclass(GeometryError, ValueError)
    assert issubclass(NumericalError, RuntimeError)
    for cls in (SingularSystemError, SeriesConvergenceError, BoundViolationError):
        assert issubclass(cls, NumericalError)


def test_error_payloads():
    singular = SingularSystemError("Foldy-Lax matrix", condition_estimate=1e17)
    assert "1.000e+17" in str(singular)
    assert singular.condition_estimate == 1e17

    series = SeriesConvergenceError("Mie series", suggested_order=64)
    assert series.suggested_order == 64
    assert "max_order >= 64" in str(series)

    assert GeometryError("cell too small", cell=7).cell == 7


# ===== LOGGING =====

def test_loggers_are_cached_and_namespaced():
    solver = get_logger('solver')
    assert solver is get_logger('solver')
    assert solver.name == 'holes.solver'
    assert not solver.propagate
    assert any(isinstance(h, logging.FileHandler) for h in solver.handlers)


def test_log_helpers_write_to_channel_files():
    HolesLogger.log_solve('FOLDY', 27, 6, 0.01, residual=1e-14, kappa=1.0)
    HolesLogger.log_sweep_row(0.05, 400, 1.2e-3, study='convergence', status='ok')
    for handler in get_logger('solver').handlers + get_logger('system').handlers:
        handler.flush()
    assert 'FOLDY | size: 27 | rhs: 6' in HolesLogger.log_files['solver'].read_text()
    assert 'CONVERGENCE SWEEP | a: 0.05000 | M: 400' in HolesLogger.log_files['system'].read_text()
