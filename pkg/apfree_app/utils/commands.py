"""
Shared plumbing for the command surface: reports, exit codes and the ledger.
"""
import logging
import os
import time
from functools import wraps

import click
from flask import current_app

from apfree_app.models import to_json
from apfree_app.utils.errors import ApfreeError
from apfree_app.utils.ledger import record_run

logger = logging.getLogger(__name__)


def emit(data):
    """Write a JSON document to stdout."""
    click.echo(to_json(data, sort_keys=True))


def write_json(path, data):
    with open(path, 'w', encoding='utf-8') as handle:
        handle.write(to_json(data, indent=2, sort_keys=True))


def resolve_threads(threads):
    """--threads, else the configured THREADS (APFREE_THREADS)."""
    if threads is not None:
        if threads < 1:
            raise click.BadParameter("threads must be positive", param_hint='--threads')
        return threads
    return current_app.config['THREADS']


def reported(command):
    """
    Wrap a command body returning (results, exit_code).

    The body's results become a versioned report on stdout; ApfreeError is
    turned into an error payload with its exit code. Every invocation is
    written to the run ledger.
    """
    def decorator(fn):
        @wraps(fn)
        def wrapper(**kwargs):
            start = time.perf_counter()
            try:
                results, exit_code = fn(**kwargs)
            except ApfreeError as e:
                logger.warning(f"{command} failed: {e}")
                results, exit_code = e.to_dict(), e.exit_code
            elapsed = time.perf_counter() - start
            report = {
                'schema': current_app.config['REPORT_SCHEMA_VERSION'],
                'command': command,
                'arguments': kwargs,
                'seed': kwargs.get('seed'),
                'timings': {'seconds': elapsed},
                'results': results,
                'exit_code': exit_code,
            }
            emit(report)
            record_run(command, kwargs, results, exit_code, elapsed, seed=kwargs.get('seed'))
            if exit_code:
                click.get_current_context().exit(exit_code)
        return wrapper
    return decorator


def output_dir(path):
    os.makedirs(path, exist_ok=True)
    return path
