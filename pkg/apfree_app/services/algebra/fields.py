"""
Prime field arithmetic and the point encoding of F_p^n.

A point x = (x_1, ..., x_n) is stored at index sum_i x_i p^(i-1), so coordinate 1
is the least significant digit. Tables reshaped with order='F' put coordinate i
on axis i-1.
"""
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from apfree_app.utils.constants import AP_DIFFERENCES
from apfree_app.utils.errors import PreconditionError
from apfree_app.utils.validators import validate_prime, validate_dimension


@dataclass(frozen=True)
class PrimeField:
    """The field F_p."""
    p: int

    def __post_init__(self):
        validate_prime(self.p)

    def elements(self):
        return range(self.p)

    def add(self, a, b):
        return (a + b) % self.p

    def sub(self, a, b):
        return (a - b) % self.p

    def mul(self, a, b):
        return (a * b) % self.p

    def neg(self, a):
        return (-a) % self.p

    def inv(self, a):
        if a % self.p == 0:
            raise ZeroDivisionError("0 has no inverse in F_p")
        return pow(a, self.p - 2, self.p)


@dataclass(frozen=True)
class FpPoint:
    """A point of F_p^n."""
    p: int
    coords: tuple

    def __post_init__(self):
        object.__setattr__(self, 'coords', tuple(int(c) for c in self.coords))
        for c in self.coords:
            if not 0 <= c < self.p:
                raise PreconditionError(f"coordinate {c} outside F_{self.p}")

    @property
    def n(self):
        return len(self.coords)

    def __add__(self, other):
        if self.p != other.p or self.n != other.n:
            raise PreconditionError("points live in different spaces")
        return FpPoint(self.p, tuple((a + b) % self.p for a, b in zip(self.coords, other.coords)))

    def scale(self, k):
        return FpPoint(self.p, tuple((k * c) % self.p for c in self.coords))


@dataclass(frozen=True)
class RestrictedDifference:
    """A difference vector a in {0,1,2}^n."""
    coords: tuple

    def __post_init__(self):
        object.__setattr__(self, 'coords', tuple(int(c) for c in self.coords))
        if any(c not in AP_DIFFERENCES for c in self.coords):
            raise PreconditionError("restricted differences take values in {0, 1, 2}")

    @property
    def nonzero(self):
        return any(self.coords)


def encode_point(x):
    """Index of a point in the canonical table order."""
    index = 0
    for c in reversed(x.coords):
        index = index * x.p + c
    return index


def decode_point(p, n, index):
    """Point stored at a table index."""
    if not 0 <= index < p ** n:
        raise PreconditionError(f"index {index} outside table of size {p}^{n}")
    coords = []
    for _ in range(n):
        index, digit = divmod(index, p)
        coords.append(digit)
    return FpPoint(p, tuple(coords))


@lru_cache(maxsize=32)
def _digits_table(p, n):
    # int16 holds sums of three digits for p < 10000
    index = np.arange(p ** n, dtype=np.int64)
    table = np.empty((p ** n, n), dtype=np.int16 if p < 10000 else np.int64)
    for i in range(n):
        table[:, i] = (index // p ** i) % p
    table.flags.writeable = False
    return table


def digits_table(p, n):
    """Array of shape (p^n, n) whose row k holds the coordinates of index k."""
    validate_dimension(n)
    return _digits_table(int(p), int(n))


def encode_digits(digits, p):
    """Vectorised encode of coordinate rows (..., n) into table indices."""
    digits = np.asarray(digits, dtype=np.int64)
    n = digits.shape[-1]
    return (np.mod(digits, p) * (p ** np.arange(n, dtype=np.int64))).sum(axis=-1)


@lru_cache(maxsize=32)
def _difference_vectors(n, differences):
    base = len(differences)
    digits = (np.arange(base ** n, dtype=np.int64)[:, None] // base ** np.arange(n, dtype=np.int64)) % base
    vectors = np.asarray(differences, dtype=np.int64)[digits]
    vectors.flags.writeable = False
    return vectors


def difference_vectors(n, differences=AP_DIFFERENCES):
    """All difference vectors in differences^n, row k in base-|D| index order."""
    return _difference_vectors(int(n), tuple(differences))


def rank_mod_p(matrix, p):
    """Rank of an integer matrix over F_p by Gaussian elimination."""
    m = np.mod(np.array(matrix, dtype=np.int64), p)
    if m.ndim != 2 or m.size == 0:
        return 0
    rows, cols = m.shape
    rank = 0
    for col in range(cols):
        pivot_rows = np.nonzero(m[rank:, col])[0]
        if pivot_rows.size == 0:
            continue
        pivot = rank + pivot_rows[0]
        m[[rank, pivot]] = m[[pivot, rank]]
        m[rank] = (m[rank] * pow(int(m[rank, col]), p - 2, p)) % p
        others = np.nonzero(m[:, col])[0]
        for r in others:
            if r != rank:
                m[r] = (m[r] - m[r, col] * m[rank]) % p
        rank += 1
        if rank == rows:
            break
    return rank
