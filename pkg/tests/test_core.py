import numpy as np
from hypothesis import given
from hypothesis import strategies as st
from pytest import mark, raises

from apfree_app.services.algebra.fields import (
    FpPoint,
    PrimeField,
    RestrictedDifference,
    decode_point,
    digits_table,
    encode_digits,
    encode_point,
    rank_mod_p,
)
from apfree_app.services.algebra.groups import (
    FiniteAbelianGroup,
    GroupCharacter,
    char_power_trivial,
    root_of_unity,
)
from apfree_app.services.rng import stream
from apfree_app.utils.errors import GroupMismatchError, NotRootOfUnityError, PreconditionError


@mark.parametrize("p", [3, 5, 7, 11, 13])
def test_every_nonzero_element_has_an_inverse(p):
    field = PrimeField(p)
    for a in range(1, p):
        assert field.mul(a, field.inv(a)) == 1


def test_zero_has_no_inverse():
    with raises(ZeroDivisionError):
        PrimeField(5).inv(0)


@mark.parametrize("p", [2, 4, 9, 1])
def test_field_rejects_non_odd_primes(p):
    with raises(PreconditionError):
        PrimeField(p)


def test_encoding_puts_first_coordinate_in_lowest_digit():
    assert encode_point(FpPoint(5, (1, 0, 0))) == 1
    assert encode_point(FpPoint(5, (0, 1, 0))) == 5
    assert encode_point(FpPoint(5, (2, 3, 4))) == 2 + 3 * 5 + 4 * 25


@given(st.sampled_from([3, 5, 7]), st.integers(min_value=1, max_value=4), st.data())
def test_decode_inverts_encode(p, n, data):
    index = data.draw(st.integers(min_value=0, max_value=p ** n - 1))
    assert encode_point(decode_point(p, n, index)) == index


def test_digits_table_matches_decode():
    table = digits_table(3, 3)
    for index in range(27):
        assert tuple(table[index]) == decode_point(3, 3, index).coords
    assert np.array_equal(encode_digits(table, 3), np.arange(27))


def test_decode_rejects_out_of_range_index():
    with raises(PreconditionError):
        decode_point(3, 2, 9)


def test_point_addition_is_coordinatewise_mod_p():
    x = FpPoint(5, (4, 3))
    y = FpPoint(5, (2, 2))
    assert (x + y).coords == (1, 0)
    assert x.scale(2).coords == (3, 1)


def test_restricted_difference_alphabet():
    assert RestrictedDifference((0, 1, 2)).nonzero
    assert not RestrictedDifference((0, 0)).nonzero
    with raises(PreconditionError):
        RestrictedDifference((0, 3))


def test_rank_mod_p_depends_on_the_prime():
    matrix = [[1, 1], [1, 6]]
    assert rank_mod_p(matrix, 5) == 1
    assert rank_mod_p(matrix, 7) == 2


def test_characters_are_orthogonal():
    group = FiniteAbelianGroup((2, 3))
    elements = list(group.elements())
    table = np.array([[chi(h) for h in elements] for chi in group.characters()])
    gram = table @ table.conj().T / group.order
    assert np.allclose(gram, np.eye(group.order), atol=1e-12)


def test_character_rejects_foreign_element():
    chi = GroupCharacter(FiniteAbelianGroup((5,)), (1,))
    with raises(GroupMismatchError):
        chi((7,))


@mark.parametrize("m", [1, 2, 5, 12])
def test_root_of_unity_power(m):
    values = [root_of_unity(k, m) for k in range(m)]
    assert char_power_trivial(values, m)


def test_non_root_is_rejected():
    with raises(NotRootOfUnityError):
        char_power_trivial([root_of_unity(1, 5)], 4)


def test_group_exponent_and_order():
    group = FiniteAbelianGroup((4, 6))
    assert group.order == 24
    assert group.exponent == 12


@mark.parametrize("orders", [(1,), (5, 1), (0,), (-3,)])
def test_cyclic_factors_have_order_at_least_two(orders):
    with raises(PreconditionError):
        FiniteAbelianGroup(orders)


def test_streams_are_reproducible_and_distinct():
    a = stream(7, 1, 2).random(4)
    b = stream(7, 1, 2).random(4)
    c = stream(7, 1, 3).random(4)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)


def test_stream_requires_seed():
    with raises(ValueError):
        stream(None, 0)
