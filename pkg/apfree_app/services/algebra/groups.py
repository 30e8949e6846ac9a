"""
Finite Abelian groups H = Z_{m_1} x ... x Z_{m_k} and their characters.
"""
import itertools
import math
from dataclasses import dataclass

import numpy as np

from apfree_app.utils.constants import ROOT_OF_UNITY_TOL
from apfree_app.utils.errors import GroupMismatchError, NotRootOfUnityError, PreconditionError


def root_of_unity(k, m):
    """exp(2*pi*i*k/m)."""
    return complex(np.exp(2j * np.pi * (k % m) / m))


@dataclass(frozen=True)
class FiniteAbelianGroup:
    """Direct product of cyclic groups, given by their orders."""
    cyclic_orders: tuple

    def __post_init__(self):
        orders = tuple(int(m) for m in self.cyclic_orders)
        if any(m < 2 for m in orders):
            raise PreconditionError(f"cyclic orders must be at least 2, got {orders}")
        object.__setattr__(self, 'cyclic_orders', orders)

    @property
    def order(self):
        return math.prod(self.cyclic_orders)

    @property
    def exponent(self):
        return math.lcm(*self.cyclic_orders) if self.cyclic_orders else 1

    @property
    def zero(self):
        return tuple(0 for _ in self.cyclic_orders)

    def contains(self, h):
        return (len(h) == len(self.cyclic_orders)
                and all(isinstance(c, (int, np.integer)) and 0 <= c < m
                        for c, m in zip(h, self.cyclic_orders)))

    def check(self, h):
        if not self.contains(h):
            raise GroupMismatchError(f"{h!r} is not an element of Z{self.cyclic_orders}")
        return tuple(int(c) for c in h)

    def elements(self):
        return itertools.product(*(range(m) for m in self.cyclic_orders))

    def add(self, g, h):
        return tuple((a + b) % m for a, b, m in zip(g, h, self.cyclic_orders))

    def neg(self, g):
        return tuple((-a) % m for a, m in zip(g, self.cyclic_orders))

    def reduce(self, h):
        """Reduce an integer vector into canonical representatives."""
        return tuple(int(a) % m for a, m in zip(h, self.cyclic_orders))

    def characters(self):
        return [GroupCharacter(self, exps) for exps in self.elements()]

    def to_dict(self):
        return {'cyclic_orders': list(self.cyclic_orders)}


@dataclass(frozen=True)
class GroupCharacter:
    """Homomorphism H -> C*, chi(h) = prod_j exp(2 pi i e_j h_j / m_j)."""
    group: FiniteAbelianGroup
    exponents: tuple

    def __post_init__(self):
        object.__setattr__(self, 'exponents', self.group.check(self.exponents))

    def __call__(self, h):
        return char_eval(self, h)

    @property
    def trivial(self):
        return not any(self.exponents)


def char_eval(chi, h):
    """Evaluate a character at a group element."""
    h = chi.group.check(h)
    phase = sum(e * c / m for e, c, m in zip(chi.exponents, h, chi.group.cyclic_orders))
    return complex(np.exp(2j * np.pi * (phase % 1.0)))


def char_power_trivial(values, r):
    """
    True iff every value v satisfies v^r = 1 within tolerance.

    Products of r values of the same r-th-root-valued factor collapse to 1;
    any value that is not an r-th root of unity is rejected.
    """
    if r < 1:
        raise PreconditionError(f"r must be positive, got {r}")
    values = np.asarray(list(values.values()) if isinstance(values, dict) else values, dtype=np.complex128)
    deviation = np.abs(values ** r - 1.0)
    if deviation.size and deviation.max() > ROOT_OF_UNITY_TOL:
        bad = values[int(np.argmax(deviation))]
        raise NotRootOfUnityError(f"value {bad} is not a {r}-th root of unity")
    return True
