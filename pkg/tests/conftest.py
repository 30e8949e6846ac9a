from pathlib import Path

import numpy as np
import pytest

from apfree_app import create_app
from apfree_app.models import db
from apfree_app.services.analysis.funcspace import DenseFunction
from apfree_app.services.file_formats import store_function

GOLDEN_DIR = Path(__file__).parent / 'golden'


def pytest_addoption(parser):
    parser.addoption('--update-golden', action='store_true', default=False,
                     help='Record golden traces instead of comparing against them.')


@pytest.fixture
def app():
    app = create_app('testing')
    yield app
    with app.app_context():
        db.session.remove()
        db.drop_all()


@pytest.fixture
def runner(app):
    return app.test_cli_runner()


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def table_file(tmp_path):
    """Write a DenseFunction to an FPFN file and return its path."""
    def write(f, name='table.fpfn'):
        path = tmp_path / name
        store_function(f, str(path))
        return str(path)
    return write


@pytest.fixture
def golden(request):
    """Compare text byte for byte with tests/golden/<name>, or record it with --update-golden."""
    update = request.config.getoption('--update-golden')

    def compare(name, text):
        path = GOLDEN_DIR / name
        if update:
            GOLDEN_DIR.mkdir(exist_ok=True)
            path.write_bytes(text.encode('utf-8'))
            return
        if not path.exists():
            pytest.skip(f"golden trace {name} not recorded; run with --update-golden")
        assert text.encode('utf-8') == path.read_bytes()
    return compare


def boolean_table(p, n, indices):
    return DenseFunction.indicator(p, n, indices)
