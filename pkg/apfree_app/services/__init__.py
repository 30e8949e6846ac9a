"""
Services package for apfree.
"""
# Import the entry points of every service module for easy access
from apfree_app.services.rng import stream
from apfree_app.services.file_formats import (
    encode_function,
    decode_function,
    load_function,
    store_function,
    load_support,
    load_product,
    store_product,
)
from apfree_app.services.progressions import (
    PointSet,
    restricted_ap_distribution,
    triple_correlation,
    is_restricted_ap_free,
    progression_count,
    extremal_search,
)
from apfree_app.services.embeddings import (
    z_embedding,
    universal_finite_embedding,
    verify_certificate,
)
from apfree_app.services.increment import (
    IncrementConfig,
    IncrementTrace,
    increment_step,
    increment_run,
    replay_trace,
)

__all__ = [
    'stream',
    'encode_function',
    'decode_function',
    'load_function',
    'store_function',
    'load_support',
    'load_product',
    'store_product',
    'PointSet',
    'restricted_ap_distribution',
    'triple_correlation',
    'is_restricted_ap_free',
    'progression_count',
    'extremal_search',
    'z_embedding',
    'universal_finite_embedding',
    'verify_certificate',
    'IncrementConfig',
    'IncrementTrace',
    'increment_step',
    'increment_run',
    'replay_trace',
]
