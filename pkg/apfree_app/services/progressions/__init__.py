"""
Restricted progressions: distributions, counting, freeness and extremal sets.
"""
from apfree_app.services.progressions.aps import (
    TripleDistribution,
    PointSet,
    FreenessResult,
    restricted_ap_distribution,
    triple_correlation,
    trivial_floor,
    is_restricted_ap_free,
    progression_count,
    greedy_free_set,
    planted_free_set,
    regression_corpus,
    pairwise_connected,
)
from apfree_app.services.progressions.search import ExtremalResult, extremal_search, forbidden_triples

__all__ = [
    'TripleDistribution',
    'PointSet',
    'FreenessResult',
    'restricted_ap_distribution',
    'triple_correlation',
    'trivial_floor',
    'is_restricted_ap_free',
    'progression_count',
    'greedy_free_set',
    'planted_free_set',
    'regression_corpus',
    'pairwise_connected',
    'ExtremalResult',
    'extremal_search',
    'forbidden_triples',
]
