import itertools

import numpy as np
from pytest import approx, mark, raises

from apfree_app.services.analysis.funcspace import DenseFunction
from apfree_app.services.progressions import aps
from apfree_app.services.progressions.aps import (
    PointSet,
    TripleDistribution,
    greedy_free_set,
    is_restricted_ap_free,
    pairwise_connected,
    planted_free_set,
    progression_count,
    regression_corpus,
    restricted_ap_distribution,
    trivial_floor,
    triple_correlation,
)
from apfree_app.services.progressions.search import extremal_search, forbidden_triples
from apfree_app.utils.errors import ConsistencyError, PreconditionError, ShapeMismatchError


def test_short_interval_has_a_progression():
    result = is_restricted_ap_free(PointSet.from_indices(5, 1, [0, 1, 2]))
    assert not result.free
    assert result.witness == ((0,), (1,))
    assert result.to_dict()['witness'] == {'x': [0], 'a': [1]}


def test_single_point_is_free():
    assert is_restricted_ap_free(PointSet.from_indices(5, 2, [7])).free


def test_difference_three_is_not_restricted():
    # {0, 3, 6} in F_7 is an AP with difference 3, outside {0, 1, 2}
    assert is_restricted_ap_free(PointSet.from_indices(7, 1, [0, 3, 6])).free


def test_lambda_of_free_set_is_the_trivial_floor():
    A = planted_free_set(5, 3, (1, 2, 0), seed=4)
    f = A.to_function()
    lam = triple_correlation(f, f, f)
    assert lam.real == approx(trivial_floor(f, f, f).real, abs=1e-12)
    assert lam.real == approx(A.density / 27, abs=1e-12)


def test_progression_count_matches_lambda(rng):
    A = PointSet(5, 2, rng.random(25) < 0.5)
    lam = triple_correlation(A, A, A)
    assert progression_count(A) == round(lam.real * 25 * 9)
    assert progression_count(A, include_trivial=False) == progression_count(A) - A.size


def test_lambda_of_full_space_is_one():
    one = DenseFunction.constant(3, 3, 1.0, kind='boolean')
    assert abs(triple_correlation(one, one, one, method='both') - 1) < 1e-12


@mark.parametrize("p, n", [(3, 3), (5, 2), (7, 1)])
def test_direct_and_fourier_lambda_agree(rng, p, n):
    f, g, h = (DenseFunction(p, n, rng.uniform(0, 1, p ** n)) for _ in range(3))
    direct = triple_correlation(f, g, h, method='direct')
    spectral = triple_correlation(f, g, h, method='fourier')
    assert abs(direct - spectral) < 1e-10


@mark.parametrize("offset, consistent", [(5e-9, True), (2e-8, False)])
def test_dual_path_tolerance(monkeypatch, offset, consistent):
    original = aps._fourier_lambda
    monkeypatch.setattr(aps, '_fourier_lambda', lambda *args: original(*args) + offset)
    one = DenseFunction.constant(3, 2, 1.0, kind='boolean')
    if consistent:
        assert abs(triple_correlation(one, one, one, method='both') - 1) < 1e-12
    else:
        with raises(ConsistencyError):
            triple_correlation(one, one, one, method='both')


def test_lambda_needs_one_space(rng):
    with raises(ShapeMismatchError):
        triple_correlation(DenseFunction.constant(3, 2, 1.0), DenseFunction.constant(3, 3, 1.0),
                           DenseFunction.constant(3, 2, 1.0))


def test_unknown_method_is_rejected():
    one = DenseFunction.constant(3, 1, 1.0)
    with raises(PreconditionError):
        triple_correlation(one, one, one, method='fft')


def test_greedy_set_is_free_and_maximal():
    A = greedy_free_set(5, 2, np.arange(25))
    assert is_restricted_ap_free(A).free
    for x in range(25):
        if not A.members[x]:
            grown = PointSet.from_indices(5, 2, list(A.indices()) + [x])
            assert not is_restricted_ap_free(grown).free


def test_planted_sets_are_reproducible():
    first = planted_free_set(5, 3, (0, 1, 1), seed=9)
    second = planted_free_set(5, 3, (0, 1, 1), seed=9)
    assert np.array_equal(first.members, second.members)
    assert is_restricted_ap_free(first).free


def test_regression_corpus_is_deterministic():
    a = regression_corpus(5, count=2, n=3)
    b = regression_corpus(5, count=2, n=3)
    assert [beta for beta, _ in a] == [beta for beta, _ in b]
    assert all(any(beta) for beta, _ in a)
    assert all(np.array_equal(x.members, y.members) for (_, x), (_, y) in zip(a, b))


def test_regression_corpus_cycles_dimension_range():
    corpus = regression_corpus(5, count=4, p=3, n=(2, 3))
    assert [A.n for _, A in corpus] == [2, 3, 2, 3]
    assert [len(beta) for beta, _ in corpus] == [2, 3, 2, 3]
    assert all(is_restricted_ap_free(A).free for _, A in corpus)


def test_regression_corpus_rejects_empty_range():
    with raises(PreconditionError):
        regression_corpus(5, count=1, n=(4, 3))


def test_ap_distribution_marginals_are_uniform():
    mu = restricted_ap_distribution(5)
    for k in range(3):
        assert np.allclose(mu.marginal(k), 0.2)
    assert len(mu.support) == 15


@mark.parametrize("p", [3, 5, 7])
def test_ap_distribution_is_pairwise_connected(p):
    assert all(pairwise_connected(restricted_ap_distribution(p)).values())


def test_diagonal_support_is_not_pairwise_connected():
    mu = TripleDistribution.from_support((2, 2, 2), [(0, 0, 0), (1, 1, 1)])
    assert not any(pairwise_connected(mu).values())


def test_distribution_masses_must_sum_to_one():
    with raises(PreconditionError):
        TripleDistribution((2, 2), (((0, 0), 0.5), ((1, 1), 0.4)))


def test_every_triple_in_f5_is_a_progression():
    assert forbidden_triples(5, 1) == list(itertools.combinations(range(5), 3))


@mark.parametrize("p, n, expected", [(3, 1, 2), (3, 2, 4), (5, 1, 2)])
def test_extremal_sizes(p, n, expected):
    exhaustive = extremal_search(p, n, mode='exhaustive')
    pruned = extremal_search(p, n, mode='bb')
    assert exhaustive.size == pruned.size == expected
    assert exhaustive.optimal and pruned.optimal
    assert is_restricted_ap_free(PointSet.from_indices(p, n, pruned.members)).free


def test_exhaustive_mode_is_capped():
    with raises(PreconditionError):
        extremal_search(3, 3, mode='exhaustive')


def test_budget_exhaustion_is_reported():
    result = extremal_search(3, 3, mode='bb', budget=5)
    assert not result.optimal
    assert result.size >= result.greedy_size
