"""
Set commands: freeness check, progression counting and extremal search.
"""
import click
from flask import Blueprint, current_app

from apfree_app.services.file_formats import load_function
from apfree_app.services.progressions import (
    extremal_search,
    is_restricted_ap_free,
    triple_correlation,
    trivial_floor,
)
from apfree_app.utils.commands import reported
from apfree_app.utils.constants import EXIT_NEGATIVE, EXIT_OK
from apfree_app.utils.errors import PreconditionError
from apfree_app.utils.validators import validate_table_size

bp = Blueprint('sets', __name__, cli_group=None)


def _load_table(path):
    f = load_function(path)
    validate_table_size(f.p, f.n, current_app.config['MAX_TABLE_BITS'])
    return f


def _pair(value):
    value = complex(value)
    return [value.real, value.imag]


@bp.cli.command('check-free')
@click.option('--input', 'input_path', required=True, type=click.Path(exists=True, dir_okay=False))
@reported('check-free')
def check_free(input_path):
    """Exit 0 if the set has no restricted progression, 1 with a witness otherwise."""
    f = _load_table(input_path)
    if f.kind != 'boolean':
        raise PreconditionError(f"check-free needs a boolean table, got {f.kind}")
    result = is_restricted_ap_free(f)
    data = dict(result.to_dict(), p=f.p, n=f.n, density=f.mean())
    return data, EXIT_OK if result.free else EXIT_NEGATIVE


@bp.cli.command('count')
@click.option('--input', 'input_path', required=True, type=click.Path(exists=True, dir_okay=False))
@click.option('--method', type=click.Choice(['direct', 'fourier', 'both']), default='direct', show_default=True)
@reported('count')
def count(input_path, method):
    """Lambda(f, f, f) over restricted progressions."""
    f = _load_table(input_path)
    work = f.size * 3 ** f.n
    if method != 'fourier' and work > current_app.config['MAX_COUNT_WORK']:
        raise PreconditionError(f"direct counting needs {work} evaluations, above MAX_COUNT_WORK")
    value = triple_correlation(f, f, f, method=method)
    floor = trivial_floor(f, f, f)
    return {
        'lambda': _pair(value),
        'trivial_floor': floor.real if f.kind != 'complex' else _pair(floor),
        'method': method,
        'p': f.p,
        'n': f.n,
    }, EXIT_OK


@bp.cli.command('search')
@click.option('--p', 'p', required=True, type=int)
@click.option('--n', 'n', required=True, type=int)
@click.option('--mode', type=click.Choice(['exhaustive', 'bb']), default='bb', show_default=True)
@click.option('--budget', type=int, default=None, help='Node budget of the branch and bound.')
@reported('search')
def search(p, n, mode, budget):
    """Largest free subset of F_p^n."""
    validate_table_size(p, n, current_app.config['MAX_TABLE_BITS'])
    if budget is not None and budget < 1:
        raise PreconditionError("budget must be positive")
    return extremal_search(p, n, mode=mode, budget=budget).to_dict(), EXIT_OK
