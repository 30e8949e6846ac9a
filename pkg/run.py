"""
Command-line entry point.

    python run.py check-free --input set.fpfn
    python run.py increment step --input set.fpfn --config cfg.json --seed 7 --out out/
"""
import os

import click
from flask.cli import FlaskGroup

from apfree_app import create_app


def _create():
    return create_app(os.environ.get('APFREE_ENV', 'default'))


@click.group(cls=FlaskGroup, create_app=_create, add_default_commands=False, load_dotenv=True)
def cli():
    """Restricted 3-AP-free sets over F_p^n."""


if __name__ == '__main__':
    cli()
