import numpy as np
from pytest import approx, raises

from apfree_app.services.algebra.groups import FiniteAbelianGroup
from apfree_app.services.analysis.funcspace import DenseFunction, character_table
from apfree_app.services.analysis.restrictions import Restriction, restrict
from apfree_app.services.progressions.aps import is_restricted_ap_free, planted_free_set
from apfree_app.services.structure.bases import (
    BasisChangedView,
    SpecialBasis,
    apply_basis_change,
    product_closure_under_basis_change,
    random_special_basis,
    restrict_z,
)
from apfree_app.services.structure.operations import (
    BasisChangeStep,
    CoordinateDropStep,
    RandomRestrictionStep,
    ZRestrictionStep,
    replay_steps,
    replay_steps_on_product,
    step_from_dict,
)
from apfree_app.services.structure.products import (
    ProductFunction,
    best_character_correlation,
    correlation,
    has_product_structure,
    product_ascent_search,
)
from apfree_app.services.structure.robust import (
    DensityBump,
    RobustifyParams,
    RobustPair,
    robustify_correlation,
)
from apfree_app.utils.errors import FormatError, NotRootOfUnityError, PreconditionError, ShapeMismatchError

Z5 = FiniteAbelianGroup((5,))
TRIVIAL = FiniteAbelianGroup(())


def random_product(rng, group, p, n):
    return ProductFunction.from_root_indices(group, p, rng.integers(0, group.order, size=(n, p)))


def test_character_is_a_product():
    P = ProductFunction.from_character((1, 0, 3), 5)
    assert np.allclose(P.values(), character_table(5, 3, (1, 0, 3)).values)
    assert has_product_structure(P.materialize())


def test_sparse_indicator_is_not_a_product():
    f = DenseFunction.indicator(3, 2, [0, 4])
    assert not has_product_structure(f)


def test_factors_must_be_roots_of_unity():
    with raises(NotRootOfUnityError):
        ProductFunction(Z5, 5, 1.0, np.full((1, 5), np.exp(1j)))


def test_product_round_trip(rng):
    P = random_product(rng, Z5, 5, 2)
    Q = ProductFunction.from_dict(P.to_dict())
    assert np.allclose(P.values(), Q.values())
    assert np.array_equal(P.root_indices(), Q.root_indices())


def test_product_restriction_matches_dense_restriction(rng):
    P = random_product(rng, Z5, 5, 3)
    r = Restriction(3, (0, 2), (4,))
    assert np.allclose(P.restrict(r).values(), restrict(P.materialize(), r).values)


def test_best_character_is_found():
    chi = character_table(5, 2, (2, 1))
    best = best_character_correlation(chi)
    assert best.alpha == (2, 1)
    assert best.magnitude == approx(1.0)


def test_ascent_from_the_answer_stays_there(rng):
    P = random_product(rng, Z5, 5, 3)
    f = P.materialize()
    result = product_ascent_search(f, Z5, restarts=2, seed=1, init=P)
    assert result.correlation == approx(1.0)
    assert abs(correlation(f, result.product)) == approx(1.0)


def test_ascent_traces_never_decrease(rng):
    f = DenseFunction(3, 3, rng.uniform(-1, 1, 27))
    result = product_ascent_search(f, FiniteAbelianGroup((3,)), restarts=3, seed=2)
    assert all(b >= a - 1e-12 for a, b in zip(result.trace, result.trace[1:]))
    assert result.correlation == approx(abs(correlation(f, result.product)))


def test_special_basis_rejects_overlapping_blocks():
    with raises(PreconditionError):
        SpecialBasis(3, 2, ((1, 1), (0, 1)), ())


def test_special_basis_rejects_dependent_completion():
    with raises(PreconditionError):
        SpecialBasis(3, 2, ((1, 1),), ((2, 2),))


def test_blocks_are_completed_by_standard_vectors():
    basis = SpecialBasis.from_blocks(3, 4, [[0, 1], [2]])
    assert basis.v == ((1, 1, 0, 0), (0, 0, 1, 0))
    assert basis.u == ((1, 0, 0, 0), (0, 0, 0, 1))


def test_random_basis_is_seeded():
    a = random_special_basis(5, 6, 3, np.random.default_rng(4))
    b = random_special_basis(5, 6, 3, np.random.default_rng(4))
    assert a == b
    assert a.n_prime == 3


def test_basis_change_is_a_permutation(rng):
    f = DenseFunction(3, 3, rng.uniform(size=27))
    basis = random_special_basis(3, 3, 2, rng, completion='random')
    changed = apply_basis_change(f, basis)
    assert np.allclose(np.sort(changed.values), np.sort(f.values))


def test_z_restriction_is_a_slice_of_the_changed_table(rng):
    f = DenseFunction(5, 3, rng.uniform(size=125))
    view = BasisChangedView(f, SpecialBasis.from_blocks(5, 3, [[0, 2]]))
    z = (3, 1)
    expected = ZRestrictionStep(z).apply(view.changed())
    assert np.array_equal(view.restrict_z(z).values, expected.values)


def test_products_are_closed_under_basis_change(rng):
    P = random_product(rng, Z5, 5, 4)
    basis = SpecialBasis.from_blocks(5, 4, [[0, 3], [1]])
    z = (2, 4)
    dense = ZRestrictionStep(z).apply(apply_basis_change(P.materialize(), basis))
    closed = product_closure_under_basis_change(P, basis, z)
    assert np.allclose(closed.values(), dense.values)


def test_z_restriction_keeps_sets_free():
    A = planted_free_set(5, 4, (1, 1, 0, 2), seed=3).to_function()
    view = BasisChangedView(A, SpecialBasis.from_blocks(5, 4, [[0, 1], [2]]))
    for z in [(0, 0), (1, 4), (3, 2)]:
        assert is_restricted_ap_free(restrict_z(view, z, check_free=True)).free


def test_replay_on_product_matches_dense_replay(rng):
    P = random_product(rng, Z5, 5, 4)
    steps = [
        BasisChangeStep(SpecialBasis.from_blocks(5, 4, [[1], [0, 2]])),
        ZRestrictionStep((3, 0)),
        CoordinateDropStep((3,)),
        RandomRestrictionStep(Restriction(2, (1,), (2,))),
    ]
    dense = replay_steps(P.materialize(), steps)
    assert np.allclose(replay_steps_on_product(P, steps).values(), dense.values)


def test_steps_round_trip_through_dicts():
    steps = [
        BasisChangeStep(SpecialBasis.from_blocks(3, 3, [[0, 1]])),
        ZRestrictionStep((2,)),
        RandomRestrictionStep(Restriction(2, (0,), (1,))),
        CoordinateDropStep((1, 2)),
    ]
    assert [step_from_dict(s.to_dict()) for s in steps] == steps


def test_unknown_step_kind_is_a_format_error():
    with raises(FormatError):
        step_from_dict({'kind': 'shuffle'})


def test_z_restriction_checks_length():
    with raises(ShapeMismatchError):
        ZRestrictionStep((0, 0, 0)).apply(DenseFunction.constant(3, 2, 0.0))


def test_product_replay_needs_basis_before_z():
    with raises(PreconditionError):
        replay_steps_on_product(ProductFunction.constant(Z5, 5, 2), [ZRestrictionStep((1,))])


def test_constant_pair_is_robust():
    f = DenseFunction.constant(3, 3, 0.5)
    P = ProductFunction.constant(TRIVIAL, 3, 3)
    outcome = robustify_correlation(f, P, RobustifyParams(epsilon=0.25, delta=0.5, beta=0.2, bases=2, seed=1))
    assert isinstance(outcome, RobustPair)
    assert outcome.steps == []
    assert outcome.correlation == approx(0.5)


def test_dense_fiber_ends_in_a_bump():
    f = DenseFunction.from_callable(3, 2, lambda x: float(x[0] == 0), kind='boolean')
    P = ProductFunction.constant(TRIVIAL, 3, 2)

    def second_coordinate_block(p, n, n_prime, rng):
        return SpecialBasis.from_blocks(p, n, [[1]])

    params = RobustifyParams(epsilon=0.2, delta=0.5, beta=0.3, bases=1, seed=0,
                             basis_sampler=second_coordinate_block)
    outcome = robustify_correlation(f, P, params)
    assert isinstance(outcome, DensityBump)
    assert outcome.function.mean() == approx(1.0)
    assert np.array_equal(replay_steps(f, outcome.steps).values, outcome.function.values)


def test_robustify_needs_the_starting_correlation():
    f = DenseFunction.constant(3, 2, 0.1)
    P = ProductFunction.constant(TRIVIAL, 3, 2)
    with raises(PreconditionError):
        robustify_correlation(f, P, RobustifyParams(epsilon=0.5, delta=0.5, beta=0.2))
