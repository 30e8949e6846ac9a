"""
Property suite runner.
"""
import click
from flask import Blueprint, current_app

from apfree_app.services.verification import run_suite
from apfree_app.utils.commands import reported
from apfree_app.utils.constants import EXIT_NEGATIVE, EXIT_OK, VERIFY_SUITES

bp = Blueprint('verify', __name__, cli_group=None)


@bp.cli.command('verify')
@click.option('--suite', type=click.Choice(VERIFY_SUITES + ('all',)), default='all', show_default=True)
@click.option('--trials', type=int, default=None, help='Trials per property (default: each check\'s acceptance count).')
@click.option('--seed', required=True, type=int)
@click.option('--inject-fault', is_flag=True, hidden=True)
@reported('verify')
def verify(suite, trials, seed, inject_fault):
    """Run property checks; exit 1 if any fails."""
    if trials is None:
        trials = current_app.config['VERIFY_DEFAULT_TRIALS']
    checks = run_suite(suite, trials, seed, inject_fault=inject_fault)
    passed = all(c.passed for c in checks)
    return {
        'suite': suite,
        'passed': passed,
        'failed': [c.id for c in checks if not c.passed],
        'checks': [c.to_dict() for c in checks],
    }, EXIT_OK if passed else EXIT_NEGATIVE
