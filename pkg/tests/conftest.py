import os
import tempfile

import pytest

# Route log files away from the working tree before any core module loads
os.environ.setdefault('HOLES_LOG_DIR', os.path.join(tempfile.gettempdir(), 'holes-test-logs'))

from core.domain.config_loader import config_from_dict  # noqa: E402
from core.domain.fields import ScalarField  # noqa: E402
from core.domain.sampling import make_sphere_grid, make_volume_grid  # noqa: E402
from core.domain.types import AsymptoticRegime, MediumSpec  # noqa: E402

RUN_SLOW = os.getenv('HOLES_RUN_SLOW') == '1'


def pytest_configure(config):
    config.addinivalue_line('markers', 'slow: desk-scale acceptance runs (HOLES_RUN_SLOW=1)')


def pytest_collection_modifyitems(config, items):
    if RUN_SLOW:
        return
    skip = pytest.mark.skip(reason='set HOLES_RUN_SLOW=1 to run')
    for item in items:
        if 'slow' in item.keywords:
            item.add_marker(skip)


@pytest.fixture
def unit_cube():
    return MediumSpec.unit_cube(lambda0=ScalarField.constant(1.0))


@pytest.fixture
def ball_medium():
    return MediumSpec.ball(center=(0.0, 0.0, 0.0), radius=0.5,
                           n=ScalarField.constant(1.2))


@pytest.fixture
def regime():
    return AsymptoticRegime(a=0.1, beta=0.0, t=2.0 / 3.0)


@pytest.fixture
def sphere():
    return make_sphere_grid(2)


@pytest.fixture
def coarse_grid(unit_cube):
    return make_volume_grid(unit_cube, h=0.25, subsamples=2)


@pytest.fixture
def small_config(tmp_path):
    """Cheap free-space configuration (a-sweep of a few dozen holes)"""
    return config_from_dict({
        'run': {'seed': 3, 'a_list': [0.3, 0.25, 0.2], 'out_dir': str(tmp_path / 'run')},
        'medium': {'lambda0': {'preset': 'constant', 'value': 1.0}},
        'regime': {'a': 0.3, 'beta': 0.0},
        'solver': {'grid_h': 0.25, 'subsamples': 2},
        'sphere': {'order': 2},
        'sweep': {'beta_list': [0.0, 0.1, 0.2]},
    })
