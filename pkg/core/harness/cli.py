#!/usr/bin/env python3
"""
Command-line interface

    holes.py simulate   --config config/base.json --a 0.05
    holes.py equivalent --config config/base.json
    holes.py converge   --config config/base.json --a 0.1,0.07,0.05 [--study dilute]
    holes.py design     --config config/cloak.json
    holes.py validate

Shared flags: --config PATH, --a LIST, --seed INT, --out DIR, --threads INT.
Every run writes manifest.json into the output directory.

Exit codes: 0 success, 1 configuration/geometry error or missing file,
2 numerical failure or a failed oracle.
"""

import argparse
import sys
import time
from typing import List, Optional

from core.background.medium_solver import build_background
from core.data.csv_exporter import CSVExporter
from core.domain.config_loader import RunConfig, load_config
from core.domain.sampling import make_sphere_grid, make_volume_grid
from core.equivalent.design import (
    cloak_coefficient, effective_index, impedance_schedule, passivity_check,
)
from core.equivalent.potential import shape_factor
from core.harness.convergence import (
    build_manifest, equivalent_far_field, foldy_far_field, hole_medium, place, run_beta_trend,
    run_cloak, run_convergence, run_dilute,
)
from core.harness.validation import run_oracle_suite
from core.utils.errors import ConfigError, GeometryError, NumericalError
from core.utils.logger import get_logger
from core.utils.run_store import RunStore

logger = get_logger('system')

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_NUMERICAL = 2

STUDIES = {
    'convergence': run_convergence,
    'dilute': run_dilute,
    'cloak': run_cloak,
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog='holes.py', description='Perforated medium simulator')
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--config', help='JSON config file')
    common.add_argument('--a', help='Hole diameter(s), comma separated')
    common.add_argument('--seed', type=int, help='Placement seed')
    common.add_argument('--out', help='Output directory')
    common.add_argument('--threads', type=int, help='Worker threads')

    sub = parser.add_subparsers(dest='command', required=True, parser_class=_Parser)
    sub.add_parser('simulate', parents=[common], help='Foldy-Lax far field for one a')
    sub.add_parser('equivalent', parents=[common], help='Equivalent-medium far field')
    converge = sub.add_parser('converge', parents=[common], help='a-sweep study')
    converge.add_argument('--study', choices=sorted(STUDIES) + ['beta'], default='convergence')
    sub.add_parser('design', parents=[common], help='Effective index and impedance schedule')
    sub.add_parser('validate', parents=[common], help='Oracle suite')
    return parser


def _parse_a(text: str) -> List[float]:
    try:
        values = [float(v) for v in text.split(',') if v.strip()]
    except ValueError:
        raise ConfigError(f"--a expects comma-separated numbers: {text!r}")
    if not values:
        raise ConfigError("--a is empty")
    return values


def resolve_config(args) -> RunConfig:
    """Load the config file and apply command-line overrides"""
    config = load_config(args.config)
    updates = {}
    if args.a:
        a_values = _parse_a(args.a)
        updates.update(run__a_list=a_values, regime__a=a_values[0])
    if args.seed is not None:
        updates['run__seed'] = args.seed
    if args.out:
        updates['run__out_dir'] = args.out
    if args.threads is not None:
        updates['solver__threads'] = args.threads
    return config.override(**updates) if updates else config


# ===== COMMANDS =====

def cmd_simulate(config: RunConfig, store: RunStore, exporter: CSVExporter) -> int:
    sphere = make_sphere_grid(config['sphere.order'])
    medium = config.medium()
    regime = config.regime()
    background = build_background(medium, config.wavenumber().kappa, sphere, config.solver())

    holes = place(config, hole_medium(config, medium), regime)
    far, solution, report = foldy_far_field(holes, regime, background, config)

    label = f"foldy_a{regime.a:g}"
    exporter.export_far_field(far, label)
    store.save_far_field(far.to_json_dict(), label)
    exporter.export_placement(holes, f"a{regime.a:g}")
    exporter.export_charges(solution.charges, f"a{regime.a:g}")
    store.save_invertibility(report.to_dict())
    store.save_report({'command': 'simulate', 'holes': holes.describe(),
                       'solution': solution.describe(), 'sup_norm': far.sup_norm(),
                       'reciprocity_defect': far.reciprocity_defect(),
                       'background': background.describe()})
    print(f"✅ Foldy-Lax: M = {len(holes)}, sup|U∞| = {far.sup_norm():.6e}")
    return EXIT_OK


def cmd_equivalent(config: RunConfig, store: RunStore, exporter: CSVExporter) -> int:
    sphere = make_sphere_grid(config['sphere.order'])
    run = equivalent_far_field(config, config.medium(), sphere)
    exporter.export_far_field(run.far, 'equivalent')
    store.save_far_field(run.far.to_json_dict(), 'equivalent')
    store.save_report({'command': 'equivalent', 'grid_h': run.grid_h, 'cells': run.cells,
                       'sup_norm': run.far.sup_norm(),
                       'reciprocity_defect': run.far.reciprocity_defect()})
    print(f"✅ Equivalent medium: sup|U₀∞| = {run.far.sup_norm():.6e} ({run.cells} cells)")
    return EXIT_OK


def cmd_converge(config: RunConfig, store: RunStore, exporter: CSVExporter, study: str) -> int:
    if study == 'beta':
        report = run_beta_trend(config)
    else:
        report = STUDIES[study](config)

    exporter.export_report_rows(report.rows_frame(), report.study)
    store.save_report(report.to_dict())
    print(f"✅ {report.study}: {len(report.ok_rows())}/{len(report.rows)} rows, "
          f"slope = {report.slope:.4f}")
    return EXIT_OK


def cmd_design(config: RunConfig, store: RunStore, exporter: CSVExporter) -> int:
    medium = config.medium()
    kappa = config.wavenumber().kappa
    p0 = shape_factor(config.body())

    if config['equivalent.cloak']:
        lambda_tilde0 = cloak_coefficient(medium, p0)
    else:
        if kappa == 0:
            raise ConfigError("design needs wave.kappa > 0 to recover lambda_tilde0 = lambda0 / kappa^2")
        lambda_tilde0 = medium.lambda0.scaled(1.0 / kappa ** 2)

    points = make_volume_grid(medium, config['solver.grid_h'], config['solver.subsamples']).centers
    index = effective_index(medium, p0, lambda_tilde0, points,
                            pi_factor=config['equivalent.pi_factor'])
    passive, violations = passivity_check(lambda_tilde0, points)

    regime = config.regime()
    holes = place(config, medium, regime)
    schedule = impedance_schedule(holes, lambda_tilde0, kappa, regime.beta)

    exporter.export_index_grid(index, 'index')
    exporter.export_schedule(schedule, 'schedule')
    store.save_report({'command': 'design', 'index': index.describe(),
                       'lambda_tilde0_passive': passive, 'violations': violations,
                       'holes': len(holes), 'p0': p0})
    print(f"✅ Design: {index.describe()['negative_real_part']} points with Re ñ < 0, "
          f"passive λ̃₀: {passive}")
    return EXIT_OK


def cmd_validate(config: RunConfig, store: RunStore) -> int:
    checks = run_oracle_suite(config)
    store.save_report({'command': 'validate', 'checks': [c.to_dict() for c in checks]})
    failed = [c.name for c in checks if not c.passed]
    for check in checks:
        print(f"{'✅' if check.passed else '❌'} {check.name}: {check.value:.3e} {check.detail}")
    if failed:
        logger.error(f"❌ Oracles failed: {failed}")
        return EXIT_NUMERICAL
    return EXIT_OK


def cli(argv: Optional[List[str]] = None) -> int:
    """
    Entry point

    Args:
        argv: Arguments without the program name (default sys.argv[1:])

    Returns:
        Exit code
    """
    try:
        args = build_parser().parse_args(argv)
    except UsageError as e:
        print(f"holes.py: error: {e}", file=sys.stderr)
        return EXIT_CONFIG

    start = time.perf_counter()
    try:
        config = resolve_config(args)
        store = RunStore(config['run.out_dir'])
        exporter = CSVExporter(config['run.out_dir'])
        manifest = build_manifest(config, args.command, study=getattr(args, 'study', None))
        store.save_manifest(manifest.to_dict())

        if args.command == 'simulate':
            code = cmd_simulate(config, store, exporter)
        elif args.command == 'equivalent':
            code = cmd_equivalent(config, store, exporter)
        elif args.command == 'converge':
            code = cmd_converge(config, store, exporter, args.study)
        elif args.command == 'design':
            code = cmd_design(config, store, exporter)
        else:
            code = cmd_validate(config, store)

        manifest.extras.update(exit_code=code, seconds=round(time.perf_counter() - start, 3))
        store.save_manifest(manifest.to_dict())
        logger.info(f"📁 {len(store.get_artifact_info())} artifacts in {store.out_dir}")
        return code

    except (ConfigError, GeometryError, FileNotFoundError, ValueError) as e:
        logger.error(f"❌ {type(e).__name__}: {e}")
        print(f"holes.py: error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as e:
        logger.error(f"❌ {type(e).__name__}: {e}")
        print(f"holes.py: numerical failure: {e}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == '__main__':
    sys.exit(cli())
