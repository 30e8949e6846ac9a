import math

import numpy as np
from pytest import approx, mark, raises

from apfree_app.services.analysis.funcspace import (
    DenseFunction,
    all_subsets,
    efron_stein_part,
    level_weights,
    low_degree_weight,
)
from apfree_app.services.analysis.restrictions import (
    Restriction,
    compose_restrictions,
    fiber_means,
    fiber_restriction,
    restrict,
    restriction_bump_search,
    restriction_correlation_event,
    restriction_event_exact,
    restriction_second_moment,
    sample_random_restriction,
)
from apfree_app.utils.errors import PreconditionError


def test_restriction_must_fix_everything_else():
    with raises(PreconditionError):
        Restriction(3, (0,), (1,))


def test_restrict_selects_the_fiber():
    f = DenseFunction.from_callable(3, 3, lambda x: x[0] + 3 * x[1] + 9 * x[2])
    g = restrict(f, Restriction(3, (1,), (2, 1)))
    assert g.n == 1
    assert list(g.values) == [2 + 9, 2 + 3 + 9, 2 + 6 + 9]


def test_compose_restrictions_matches_sequential_application(rng):
    f = DenseFunction(3, 4, rng.uniform(size=81))
    outer = Restriction(4, (0, 2, 3), (1,))
    inner = Restriction(3, (1,), (2, 0))
    combined = compose_restrictions(outer, inner)
    assert np.array_equal(restrict(restrict(f, outer), inner).values, restrict(f, combined).values)


def test_sampling_is_seeded():
    mu = np.full(3, 1 / 3)
    assert sample_random_restriction(6, 0.5, mu, 11, 4) == sample_random_restriction(6, 0.5, mu, 11, 4)


def test_fiber_restriction_matches_fiber_means(rng):
    f = DenseFunction(3, 3, rng.uniform(size=27))
    alive = (1,)
    means = fiber_means(f, alive)
    for k in range(means.size):
        assert restrict(f, fiber_restriction(3, 3, alive, k)).mean() == approx(means[k])


def test_second_moment_identity(rng):
    mu = np.array([0.2, 0.3, 0.5])
    f = DenseFunction(3, 3, rng.uniform(-1, 1, 27), measure=mu)
    q = 0.3
    expected = sum(efron_stein_part(f, S).norm() ** 2 * (1 - q) ** len(S) for S in all_subsets(3))
    assert restriction_second_moment(f, q) == approx(expected, abs=1e-10)


def test_second_moment_lower_bound(rng):
    f = DenseFunction(3, 4, rng.uniform(-1, 1, 81))
    d = 2
    q = 1 / d
    xi = low_degree_weight(f.centered(), d)
    assert restriction_second_moment(f, q) >= f.mean() ** 2 + xi * (1 - q) ** d - 1e-12


@mark.parametrize("d", [2, 3, 4])
def test_second_moment_exceeds_xi_over_e(rng, d):
    f = DenseFunction(3, 4, rng.uniform(-1, 1, 81))
    xi = float(np.sum(level_weights(f.centered())[1:d]))
    assert restriction_second_moment(f, 1 / d) >= f.mean() ** 2 + xi / math.e - 1e-9


@mark.parametrize("d", [2, 3, 4])
def test_second_moment_on_juntas(rng, d):
    # depends on the first d - 1 coordinates only
    table = rng.uniform(-1, 1, 3 ** (d - 1))
    f = DenseFunction.from_callable(3, 4, lambda x: table[sum(x[i] * 3 ** i for i in range(d - 1))])
    xi = low_degree_weight(f.centered(), d)
    assert xi == approx(f.centered().norm() ** 2)
    assert restriction_second_moment(f, 1 / d) >= f.mean() ** 2 + xi / math.e - 1e-9


def test_event_probability_floor(rng):
    g = DenseFunction(3, 4, rng.uniform(-1, 1, 81))
    xi = low_degree_weight(g, 2)
    estimate = restriction_event_exact(g, 2, xi)
    assert estimate.probability >= xi / (2 * math.e)


def test_monte_carlo_event_on_character():
    g = DenseFunction.from_callable(3, 4, lambda x: math.cos(2 * math.pi * x[0] / 3))
    xi = low_degree_weight(g, 1)
    estimate = restriction_correlation_event(g, 1, xi, trials=400, seed=3)
    assert estimate.probability >= estimate.floor - 3 * estimate.stderr


def test_event_rejects_unbounded_input():
    g = DenseFunction(3, 2, np.full(9, 2.0))
    with raises(PreconditionError):
        restriction_event_exact(g, 1, 0.1)


def test_bump_search_finds_dense_subcube():
    # dense on x_0 = 0, sparse elsewhere
    f = DenseFunction.from_callable(3, 3, lambda x: float(x[0] == 0 or (x[1] == 0 and x[2] == 0)), kind='boolean')
    xi = low_degree_weight(f.centered(), 2)
    result = restriction_bump_search(f, 2, xi, samples=64, seed=1)
    assert result.found
    assert result.exhaustive
    assert result.density >= f.mean() + xi / (4 * math.e)
    assert restrict(f, result.restriction).mean() == approx(result.density)


def test_bump_search_reports_unmet_hypothesis():
    f = DenseFunction.from_callable(3, 2, lambda x: float(x[0] == 0), kind='boolean')
    result = restriction_bump_search(f, 1, 10.0)
    assert not result.hypothesis_met
    assert not result.found
