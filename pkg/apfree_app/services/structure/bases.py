"""
Special bases of F_p^n and the change of variables they induce.

A special basis is (v_1, ..., v_{n'}, u_1, ..., u_{n-n'}) with v_j in {0,1}^n of
pairwise disjoint supports. With M = [v | u] as columns, f^#(x, z) = f(M (x; z));
x occupies the low coordinates of the new table, z the high ones.
"""
import logging
from dataclasses import dataclass

import numpy as np

from apfree_app.services.algebra.fields import digits_table, encode_digits, rank_mod_p
from apfree_app.services.analysis.funcspace import DenseFunction
from apfree_app.services.structure.products import ProductFunction
from apfree_app.utils.errors import ConsistencyError, PreconditionError, ShapeMismatchError

logger = logging.getLogger(__name__)

CHANGE_CHUNK_ROWS = 1 << 18


@dataclass(frozen=True)
class SpecialBasis:
    p: int
    n: int
    v: tuple
    u: tuple

    def __post_init__(self):
        v = tuple(tuple(int(c) for c in row) for row in self.v)
        u = tuple(tuple(int(c) % self.p for c in row) for row in self.u)
        object.__setattr__(self, 'v', v)
        object.__setattr__(self, 'u', u)
        if len(v) + len(u) != self.n or any(len(row) != self.n for row in v + u):
            raise ShapeMismatchError(f"special basis needs {self.n} vectors of length {self.n}")
        covered = set()
        for row in v:
            support = {i for i, c in enumerate(row) if c}
            if any(c not in (0, 1) for c in row) or not support:
                raise PreconditionError("block vectors must be nonzero 0/1 vectors")
            if support & covered:
                raise PreconditionError("block vectors must have disjoint supports")
            covered |= support
        if rank_mod_p(self.matrix(), self.p) != self.n:
            raise PreconditionError("basis vectors are not linearly independent over F_p")

    @property
    def n_prime(self):
        return len(self.v)

    def matrix(self):
        """n x n matrix whose columns are v_1..v_{n'}, u_1..u_{n-n'}."""
        return np.array(self.v + self.u, dtype=np.int64).reshape(self.n, self.n).T

    def supports(self):
        return tuple(tuple(i for i, c in enumerate(row) if c) for row in self.v)

    def shifts(self, z):
        """L(z) = sum_k z_k u_k mod p, one entry per original coordinate."""
        z = np.asarray(z, dtype=np.int64)
        if z.shape != (len(self.u),):
            raise ShapeMismatchError(f"z must have {len(self.u)} coordinates")
        if not self.u:
            return np.zeros(self.n, dtype=np.int64)
        return (z @ np.array(self.u, dtype=np.int64)) % self.p

    def block_shifts(self, z):
        """H_i(z) = L_i(z) for i in each block support."""
        shifts = self.shifts(z)
        return tuple(tuple(int(shifts[i]) for i in support) for support in self.supports())

    def to_dict(self):
        return {'p': self.p, 'n': self.n, 'v': [list(r) for r in self.v], 'u': [list(r) for r in self.u]}

    @classmethod
    def from_dict(cls, data):
        return cls(int(data['p']), int(data['n']), tuple(map(tuple, data['v'])), tuple(map(tuple, data['u'])))

    @classmethod
    def from_blocks(cls, p, n, blocks):
        """
        v_j = indicator of block j, completed by standard basis vectors in index
        order that keep the family independent.
        """
        v = []
        for block in blocks:
            row = [0] * n
            for i in block:
                row[i] = 1
            v.append(tuple(row))
        u = []
        for i in range(n):
            if len(v) + len(u) == n:
                break
            e = tuple(int(k == i) for k in range(n))
            if rank_mod_p(v + u + [e], p) == len(v) + len(u) + 1:
                u.append(e)
        return cls(p, n, tuple(v), tuple(u))


def random_special_basis(p, n, n_prime, rng, block_size=None, completion='standard', attempts=100):
    """Random disjoint blocks; 'standard' or uniformly 'random' completion vectors."""
    if not 1 <= n_prime <= n:
        raise PreconditionError(f"n' must lie in [1, {n}], got {n_prime}")
    order = rng.permutation(n)
    if block_size is not None:
        if block_size * n_prime > n:
            raise PreconditionError("blocks do not fit in n coordinates")
        blocks = [sorted(order[j * block_size:(j + 1) * block_size].tolist()) for j in range(n_prime)]
    else:
        blocks = [[int(order[j])] for j in range(n_prime)]
        for i in order[n_prime:]:
            slot = int(rng.integers(0, n_prime + 1))
            if slot < n_prime:
                blocks[slot].append(int(i))
        blocks = [sorted(b) for b in blocks]
    basis = SpecialBasis.from_blocks(p, n, blocks)
    if completion == 'standard':
        return basis
    for _ in range(attempts):
        u = tuple(tuple(int(c) for c in rng.integers(0, p, size=n)) for _ in range(n - n_prime))
        if rank_mod_p(list(basis.v) + list(u), p) == n:
            return SpecialBasis(p, n, basis.v, u)
    return basis


def apply_basis_change(f, basis):
    """f^#(x, z) = f(M (x; z)) on F_p^n."""
    if f.p != basis.p or f.n != basis.n:
        raise ShapeMismatchError("basis and function live on different spaces")
    if not f.is_uniform:
        raise PreconditionError("basis changes preserve only the uniform measure")
    digits = digits_table(f.p, f.n)
    matrix = basis.matrix().T
    indices = np.empty(f.size, dtype=np.int64)
    for start in range(0, f.size, CHANGE_CHUNK_ROWS):
        block = digits[start:start + CHANGE_CHUNK_ROWS].astype(np.int64) @ matrix
        indices[start:start + CHANGE_CHUNK_ROWS] = encode_digits(block, f.p)
    return f.with_values(f.values[indices])


def _fiber_indices(basis, z):
    x_digits = digits_table(basis.p, basis.n_prime)
    v = np.array(basis.v, dtype=np.int64).reshape(basis.n_prime, basis.n)
    return encode_digits(x_digits @ v + basis.shifts(z)[None, :], basis.p)


@dataclass(frozen=True, eq=False)
class BasisChangedView:
    """A function seen through a special basis."""
    source: DenseFunction
    basis: SpecialBasis

    def __post_init__(self):
        if self.source.p != self.basis.p or self.source.n != self.basis.n:
            raise ShapeMismatchError("basis and function live on different spaces")

    def changed(self):
        return apply_basis_change(self.source, self.basis)

    def restrict_z(self, z, check_free=False):
        return restrict_z(self, z, check_free=check_free)


def restrict_z(view, z, check_free=False):
    """
    x -> f(sum_j x_j v_j + sum_k z_k u_k) on F_p^{n'}.

    Restricted progressions of the result lift to restricted progressions of the
    source, so a free boolean source stays free; check_free asserts it.
    """
    f, basis = view.source, view.basis
    values = f.values[_fiber_indices(basis, z)]
    g = DenseFunction(f.p, basis.n_prime, values, kind=f.kind)
    if check_free and f.kind == 'boolean':
        from apfree_app.services.progressions.aps import is_restricted_ap_free
        if is_restricted_ap_free(f).free and not is_restricted_ap_free(g).free:
            raise ConsistencyError("z-restriction of a free set produced a progression")
    return g


def product_closure_under_basis_change(P, basis, z):
    """
    P restricted to the z-fiber is again a product over the blocks:
    f'_j(s) = prod_{i in supp v_j} f_i(s + L_i(z)) and the scalar absorbs
    the coordinates outside every block.
    """
    if P.p != basis.p or P.n != basis.n:
        raise ShapeMismatchError("basis and product live on different spaces")
    shifts = basis.shifts(z)
    s = np.arange(P.p)
    factors = []
    covered = set()
    for support in basis.supports():
        factor = np.ones(P.p, dtype=np.complex128)
        for i in support:
            factor = factor * P.factors[i, (s + shifts[i]) % P.p]
        covered.update(support)
        factors.append(factor)
    scalar = P.scalar
    for i in range(P.n):
        if i not in covered:
            scalar *= P.factors[i, shifts[i]]
    scalar /= abs(scalar)
    return ProductFunction(P.group, P.p, scalar, np.array(factors).reshape(len(factors), P.p))
