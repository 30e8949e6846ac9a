"""
Density increment commands and trace replay.
"""
import logging
import os

import click
import numpy as np
from flask import Blueprint, current_app

from apfree_app.services.file_formats import load_function, load_json_object, store_function
from apfree_app.services.increment import (
    IncrementConfig,
    IncrementTrace,
    increment_run,
    increment_step,
    replay_trace,
)
from apfree_app.utils.commands import output_dir, reported, resolve_threads, write_json
from apfree_app.utils.constants import EXIT_NEGATIVE, EXIT_OK
from apfree_app.utils.errors import ConsistencyError, FormatError, PreconditionError
from apfree_app.utils.validators import validate_table_size

logger = logging.getLogger(__name__)

bp = Blueprint('increment', __name__, cli_group='increment')
replay_bp = Blueprint('replay', __name__, cli_group=None)

OUTPUT_TABLE = 'output.fpfn'
TRACE_FILE = 'trace.jsonl'
REPORT_FILE = 'report.json'


def _engine_inputs(input_path, config_path, seed, threads):
    f = load_function(input_path)
    validate_table_size(f.p, f.n, current_app.config['MAX_TABLE_BITS'])
    if f.kind != 'boolean':
        raise PreconditionError(f"the increment engine needs a boolean table, got {f.kind}")
    data = load_json_object(config_path)
    data.update(seed=seed, threads=resolve_threads(threads))
    return f, IncrementConfig.from_dict(data)


def _write_outputs(out, f, g, trace, results):
    """Output table, trace and report; the trace is replayed before anything is written."""
    replayed = replay_trace(f, trace, check_free=current_app.config['CHECK_FREENESS'])
    if not np.array_equal(replayed.values, g.values):
        raise ConsistencyError("trace replay does not reproduce the output table")
    out = output_dir(out)
    paths = {
        'output': os.path.join(out, OUTPUT_TABLE),
        'trace': os.path.join(out, TRACE_FILE),
        'report': os.path.join(out, REPORT_FILE),
    }
    store_function(g, paths['output'])
    with open(paths['trace'], 'w', encoding='utf-8') as handle:
        handle.write(trace.to_jsonl())
    results['paths'] = paths
    write_json(paths['report'], results)
    logger.info(f"Wrote {len(trace)} trace steps to {paths['trace']}")
    return results


def _engine_options(fn):
    fn = click.option('--threads', type=int, default=None, help='Worker threads (default: APFREE_THREADS).')(fn)
    fn = click.option('--out', 'out', required=True, type=click.Path(file_okay=False))(fn)
    fn = click.option('--seed', required=True, type=int)(fn)
    fn = click.option('--config', 'config_path', required=True, type=click.Path(exists=True, dir_okay=False))(fn)
    fn = click.option('--input', 'input_path', required=True, type=click.Path(exists=True, dir_okay=False))(fn)
    return fn


@bp.cli.command('step')
@_engine_options
@reported('increment step')
def step(input_path, config_path, seed, out, threads):
    """One density increment step on a free set."""
    f, cfg = _engine_inputs(input_path, config_path, seed, threads)
    result = increment_step(f, cfg)
    results = dict(result.to_dict(), config=cfg.to_dict())
    _write_outputs(out, f, result.function, result.trace, results)
    return results, EXIT_NEGATIVE if result.stuck else EXIT_OK


@bp.cli.command('run')
@_engine_options
@click.option('--min-dimension', type=int, default=1, show_default=True)
@reported('increment run')
def run(input_path, config_path, seed, out, threads, min_dimension):
    """Iterate increment steps until stuck, the dimension floor or the endgame."""
    f, cfg = _engine_inputs(input_path, config_path, seed, threads)
    result = increment_run(f, cfg, cfg.max_iters, min_dimension=min_dimension,
                           max_work=current_app.config['MAX_COUNT_WORK'])
    results = dict(result.to_dict(), config=cfg.to_dict())
    _write_outputs(out, f, result.function, result.trace, results)
    return results, EXIT_NEGATIVE if result.status == 'stuck' else EXIT_OK


@replay_bp.cli.command('replay')
@click.option('--input', 'input_path', required=True, type=click.Path(exists=True, dir_okay=False))
@click.option('--trace', 'trace_path', required=True, type=click.Path(exists=True, dir_okay=False))
@click.option('--out', 'out', required=True, type=click.Path(dir_okay=False))
@reported('replay')
def replay(input_path, trace_path, out):
    """Re-apply a recorded trace to its input table."""
    f = load_function(input_path)
    with open(trace_path, 'r', encoding='utf-8') as handle:
        trace = IncrementTrace.from_jsonl(handle.read())
    if (trace.p, trace.n) != (f.p, f.n):
        raise FormatError(f"trace is for F_{trace.p}^{trace.n}, input is F_{f.p}^{f.n}")
    g = replay_trace(f, trace, check_free=current_app.config['CHECK_FREENESS'])
    store_function(g, out)
    return {'steps': len(trace), 'n': g.n, 'density': g.mean(), 'output': out}, EXIT_OK
