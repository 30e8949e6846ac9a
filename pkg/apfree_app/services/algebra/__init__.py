"""
Prime fields, points of F_p^n and finite Abelian groups.
"""
from apfree_app.services.algebra.fields import (
    PrimeField,
    FpPoint,
    RestrictedDifference,
    encode_point,
    decode_point,
    digits_table,
    encode_digits,
    difference_vectors,
    rank_mod_p,
)
from apfree_app.services.algebra.groups import (
    FiniteAbelianGroup,
    GroupCharacter,
    char_eval,
    char_power_trivial,
    root_of_unity,
)

__all__ = [
    'PrimeField',
    'FpPoint',
    'RestrictedDifference',
    'encode_point',
    'decode_point',
    'digits_table',
    'encode_digits',
    'difference_vectors',
    'rank_mod_p',
    'FiniteAbelianGroup',
    'GroupCharacter',
    'char_eval',
    'char_power_trivial',
    'root_of_unity',
]
