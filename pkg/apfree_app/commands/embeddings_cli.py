"""
Embedding detector command.
"""
import click
from flask import Blueprint

from apfree_app.services.embeddings import universal_finite_embedding, verify_certificate, z_embedding
from apfree_app.services.file_formats import load_support
from apfree_app.utils.commands import reported
from apfree_app.utils.constants import EXIT_OK
from apfree_app.utils.errors import ConsistencyError, PreconditionError

bp = Blueprint('embeddings', __name__, cli_group=None)


@bp.cli.command('embed')
@click.option('--support', 'support_path', required=True, type=click.Path(exists=True, dir_okay=False))
@click.option('--target', type=click.Choice(['z', 'finite']), required=True)
@click.option('--max-order', type=int, default=None,
              help='Largest universal group order whose certificate is emitted.')
@reported('embed')
def embed(support_path, target, max_order):
    """Abelian embeddings of a support into Z or into finite groups."""
    if max_order is not None and max_order < 1:
        raise PreconditionError("max-order must be positive")
    support, sizes = load_support(support_path)
    universal = universal_finite_embedding(support, sizes)
    data = {
        'target': target,
        'universal_group': list(universal.torsion),
        'free_rank': universal.free_rank,
    }
    if target == 'z':
        report = z_embedding(support, sizes)
        data.update(report.to_dict())
        data['result'] = 'certificate' if report.nontrivial else 'NoneNontrivial'
        return data, EXIT_OK

    data.update(universal.to_dict())
    order = universal.group.order
    if max_order is not None and order > max_order:
        data['universal'] = None
        data['generators'] = []
        data['exceeds_max_order'] = True
    elif universal.universal is not None and not verify_certificate(universal.universal, support):
        raise ConsistencyError("emitted certificate failed verification")
    data['result'] = 'certificate' if universal.torsion else 'NoneNontrivial'
    return data, EXIT_OK
