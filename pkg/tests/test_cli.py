import json

import pandas as pd
import pytest

from core.harness.cli import EXIT_CONFIG, EXIT_OK, build_parser, cli

SMALL = {
    'run': {'seed': 3, 'a_list': [0.3, 0.25, 0.2]},
    'medium': {'lambda0': {'preset': 'constant', 'value': 1.0}},
    'regime': {'a': 0.3, 'beta': 0.0},
    'solver': {'grid_h': 0.25, 'subsamples': 2},
    'sphere': {'order': 2},
    'sweep': {'beta_list': [0.0, 0.1, 0.2]},
}

CLOAK = {
    'run': {'seed': 3, 'a_list': [0.1, 0.07, 0.05]},
    'medium': {'shape': 'ball', 'ball_center': [0.5, 0.5, 0.5], 'ball_radius': 0.5,
               'n': {'preset': 'constant', 'value': 2.0}},
    'regime': {'a': 0.1, 'beta': 0.0},
    'equivalent': {'cloak': True},
    'solver': {'grid_h': 0.25, 'subsamples': 2},
    'sphere': {'order': 2},
}


def _write_config(tmp_path, document, name='config.json'):
    path = tmp_path / name
    path.write_text(json.dumps(document))
    return str(path)


def _load(path):
    with open(path) as f:
        return json.load(f)


def test_parser_knows_every_command():
    parser = build_parser()
    for command in ['simulate', 'equivalent', 'converge', 'design', 'validate']:
        args = parser.parse_args([command, '--seed', '5'])
        assert args.command == command
        assert args.seed == 5
    assert parser.parse_args(['converge']).study == 'convergence'


def test_converge_writes_manifest_and_report(tmp_path):
    out = tmp_path / 'out'
    code = cli(['converge', '--config', _write_config(tmp_path, SMALL), '--out', str(out)])
    assert code == EXIT_OK

    manifest = _load(out / 'manifest.json')
    assert manifest['command'] == 'converge'
    assert manifest['extras']['exit_code'] == 0
    assert manifest['extras']['study'] == 'convergence'

    report = _load(out / 'report.json')
    assert [r['a'] for r in report['rows']] == [0.3, 0.25, 0.2]
    rows = pd.read_csv(out / 'convergence_rows.csv')
    assert list(rows['holes']) == [11, 16, 25]


def test_a_and_seed_flags_override_config(tmp_path):
    out = tmp_path / 'out'
    code = cli(['converge', '--config', _write_config(tmp_path, SMALL), '--out', str(out),
                '--a', '0.3,0.25,0.2', '--seed', '11', '--study', 'dilute'])
    assert code == EXIT_OK
    manifest = _load(out / 'manifest.json')
    assert manifest['seed'] == 11
    assert _load(out / 'report.json')['study'] == 'dilute'


def test_simulate_exports_tables(tmp_path):
    out = tmp_path / 'out'
    assert cli(['simulate', '--config', _write_config(tmp_path, SMALL), '--out', str(out)]) == EXIT_OK
    assert (out / 'farfield_foldy_a0.3.csv').exists()
    assert _load(out / 'farfield_foldy_a0.3.json')['sphere_order'] == 2
    placement = pd.read_csv(out / 'placement_a0.3.csv')
    assert len(placement) == 11
    charges = pd.read_csv(out / 'charges_a0.3.csv')
    assert list(charges.columns) == ['theta_idx', 'm', 're', 'im']
    assert (out / 'invertibility.json').exists()


def test_design_writes_index_and_schedule(tmp_path):
    out = tmp_path / 'out'
    assert cli(['design', '--config', _write_config(tmp_path, CLOAK), '--out', str(out)]) == EXIT_OK
    report = _load(out / 'report.json')
    assert report['command'] == 'design'
    assert report['lambda_tilde0_passive'] is False
    index = pd.read_csv(out / 'index.csv')
    assert index['passive'].all()
    assert (out / 'schedule.csv').exists()


def test_missing_config_exits_one(tmp_path, capsys):
    missing = tmp_path / 'nope.json'
    assert cli(['converge', '--config', str(missing), '--out', str(tmp_path)]) == EXIT_CONFIG
    assert str(missing) in capsys.readouterr().err


def test_bad_a_list_exits_one(tmp_path, capsys):
    code = cli(['converge', '--config', _write_config(tmp_path, SMALL), '--out', str(tmp_path),
                '--a', '0.1,abc'])
    assert code == EXIT_CONFIG
    assert '--a expects' in capsys.readouterr().err


def test_unsorted_sweep_exits_one(tmp_path):
    code = cli(['converge', '--config', _write_config(tmp_path, SMALL), '--out', str(tmp_path),
                '--a', '0.2,0.25,0.3'])
    assert code == EXIT_CONFIG


def test_usage_errors_exit_one(capsys):
    assert cli(['converge', '--bogus']) == EXIT_CONFIG
    assert cli([]) == EXIT_CONFIG
    assert cli(['converge', '--study', 'nonsense']) == EXIT_CONFIG
    assert 'holes.py: error' in capsys.readouterr().err


@pytest.mark.slow
def test_validate_passes(tmp_path):
    out = tmp_path / 'out'
    assert cli(['validate', '--config', _write_config(tmp_path, SMALL), '--out', str(out)]) == EXIT_OK
    checks = _load(out / 'report.json')['checks']
    assert all(c['passed'] for c in checks)
