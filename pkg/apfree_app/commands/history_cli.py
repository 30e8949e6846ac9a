"""
Run ledger listing.
"""
import click
from flask import Blueprint

from apfree_app.utils.commands import emit
from apfree_app.utils.ledger import recent_runs

bp = Blueprint('history', __name__, cli_group=None)


@bp.cli.command('history')
@click.option('--limit', type=click.IntRange(min=1), default=20, show_default=True)
@click.option('--command', 'command', default=None, help='Only runs of this command.')
def history(limit, command):
    """Most recent runs from the ledger, newest first."""
    emit({'runs': [run.to_dict() for run in recent_runs(limit, command)]})
