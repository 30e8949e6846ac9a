"""
Product functions P(x) = c prod_i f_i(x_i) with root-of-unity factors, and the
searches for the product function most correlated with a given function.
"""
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from apfree_app.services.algebra.groups import FiniteAbelianGroup
from apfree_app.services.analysis.funcspace import (
    DenseFunction,
    fourier_transform,
    inner_product,
    decode_alpha,
)
from apfree_app.services.analysis.restrictions import restrict, sample_random_restriction
from apfree_app.services.rng import stream
from apfree_app.utils.constants import ASCENT_IMPROVEMENT_TOL, ROOT_OF_UNITY_TOL
from apfree_app.utils.errors import NotRootOfUnityError, PreconditionError, ShapeMismatchError

logger = logging.getLogger(__name__)

ROUNDING_OFFSETS = 8


@dataclass(frozen=True, eq=False)
class ProductFunction:
    """c prod_i f_i(x_i) on F_p^n, each f_i valued in |H|-th roots of unity."""
    group: FiniteAbelianGroup
    p: int
    scalar: complex
    factors: np.ndarray

    def __post_init__(self):
        factors = np.array(self.factors, dtype=np.complex128)
        if factors.ndim != 2 or factors.shape[1] != self.p:
            raise ShapeMismatchError(f"factor table must have shape (n, {self.p})")
        if abs(abs(self.scalar) - 1) > ROOT_OF_UNITY_TOL:
            raise PreconditionError(f"scalar {self.scalar} is not of modulus 1")
        r = self.group.order
        if factors.size and np.max(np.abs(factors ** r - 1)) > ROOT_OF_UNITY_TOL:
            raise NotRootOfUnityError(f"factor values are not {r}-th roots of unity")
        factors.flags.writeable = False
        object.__setattr__(self, 'factors', factors)
        object.__setattr__(self, 'scalar', complex(self.scalar))

    @property
    def n(self):
        return self.factors.shape[0]

    @property
    def order(self):
        return self.group.order

    @classmethod
    def from_root_indices(cls, group, p, indices, scalar=1.0):
        indices = np.asarray(indices, dtype=np.int64)
        r = group.order
        return cls(group, p, scalar, np.exp(2j * np.pi * (indices % r) / r))

    @classmethod
    def from_character(cls, alpha, p):
        """chi_alpha(x) = omega^{alpha.x} as a product over Z_p."""
        alpha = np.asarray(alpha, dtype=np.int64)
        return cls.from_root_indices(FiniteAbelianGroup((p,)), p, np.outer(alpha, np.arange(p)))

    @classmethod
    def constant(cls, group, p, n, scalar=1.0):
        return cls(group, p, scalar, np.ones((n, p), dtype=np.complex128))

    def root_indices(self):
        """k with f_i(s) = exp(2 pi i k / r)."""
        r = self.order
        return np.mod(np.rint(np.angle(self.factors) * r / (2 * np.pi)).astype(np.int64), r)

    def values(self):
        table = np.ones(1, dtype=np.complex128)
        for i in range(self.n):
            table = np.kron(self.factors[i], table)
        return self.scalar * table

    def materialize(self, measure=None):
        return DenseFunction(self.p, self.n, self.values(), kind='complex', measure=measure)

    def restrict(self, r):
        """Restriction stays in the class; fixed factors fold into the scalar."""
        if r.n != self.n:
            raise PreconditionError("restriction dimension does not match the product")
        scalar = self.scalar
        for i, value in r.assignment.items():
            scalar *= self.factors[i, value]
        scalar /= abs(scalar)
        return ProductFunction(self.group, self.p, scalar, self.factors[list(r.alive)])

    def to_dict(self):
        return {
            'group': list(self.group.cyclic_orders),
            'p': self.p,
            'scalar': [self.scalar.real, self.scalar.imag],
            'factors': [[[v.real, v.imag] for v in row] for row in self.factors],
            'root_indices': self.root_indices().tolist(),
        }

    @classmethod
    def from_dict(cls, data):
        """Accepts explicit [re, im] factor tables or root indices."""
        orders = data['group']
        if isinstance(orders, dict):
            orders = orders['cyclic_orders']
        group = FiniteAbelianGroup(tuple(int(m) for m in orders))
        scalar = complex(*data.get('scalar', (1.0, 0.0)))
        if 'factors' in data:
            factors = np.array([[complex(*pair) for pair in row] for row in data['factors']], dtype=np.complex128)
            p = int(data.get('p', factors.shape[1] if factors.ndim == 2 else 0))
            return cls(group, p, scalar, factors.reshape(-1, p))
        p = int(data['p'])
        indices = np.asarray(data['root_indices'], dtype=np.int64).reshape(-1, p)
        return cls.from_root_indices(group, p, indices, scalar)


def has_product_structure(f, tol=1e-9):
    """Extensional rank-1 test: each slice along a coordinate is a multiple of every other."""
    t = f.tensor().astype(np.complex128)
    if np.max(np.abs(t)) <= tol:
        return True
    for axis in range(f.n):
        slices = np.moveaxis(t, axis, 0).reshape(f.p, -1)
        reference = slices[int(np.argmax(np.abs(slices).max(axis=1)))]
        scale = np.vdot(reference, reference)
        for row in slices:
            coefficient = np.vdot(reference, row) / scale
            if np.max(np.abs(row - coefficient * reference)) > tol:
                return False
    return True


def correlation(f, P):
    """<f, P> under f's measure."""
    if P.n != f.n or P.p != f.p:
        raise ShapeMismatchError("product and function live on different spaces")
    return complex(inner_product(f, P.materialize(f.measure)))


@dataclass
class CharacterCorrelation:
    alpha: tuple
    coefficient: complex
    magnitude: float

    def to_dict(self):
        return {
            'alpha': list(self.alpha),
            'coefficient': [self.coefficient.real, self.coefficient.imag],
            'magnitude': self.magnitude,
        }


def best_character_correlation(f, tol=1e-12):
    """argmax_alpha |hat f(alpha)|, ties broken by the lexicographically smallest alpha."""
    coefficients = fourier_transform(f)
    magnitudes = np.abs(coefficients)
    top = magnitudes.max()
    candidates = np.nonzero(magnitudes >= top - tol)[0]
    best = min(candidates, key=lambda k: decode_alpha(f.p, f.n, k))
    return CharacterCorrelation(decode_alpha(f.p, f.n, best), complex(coefficients[best]), float(magnitudes[best]))


@dataclass
class AscentResult:
    product: ProductFunction
    correlation: float
    trace: list = field(default_factory=list)
    restart: int = 0
    sweeps: int = 0

    def to_dict(self):
        return {
            'product': self.product.to_dict(),
            'correlation': self.correlation,
            'trace': list(self.trace),
            'restart': self.restart,
            'sweeps': self.sweeps,
        }


def _broadcast(vector, axis, ndim):
    shape = [1] * ndim
    shape[axis] = -1
    return vector.reshape(shape)


def _round_to_roots(phases, r, offset):
    return np.mod(np.rint((phases - offset) * r / (2 * np.pi)).astype(np.int64), r)


def _ascend(f, r, indices, max_sweeps):
    """Coordinate ascent on the root indices; returns (indices, |<f, P>|, trace, sweeps)."""
    n = f.n
    roots = np.exp(2j * np.pi * np.arange(r) / r)
    weighted = (f.tensor() * f.weights().reshape((f.p,) * n, order='F')).astype(np.complex128)
    mixed = weighted
    for i in range(n):
        mixed = mixed * _broadcast(np.conj(roots[indices[i]]), i, n)
    current = abs(mixed.sum())
    trace = [current]
    sweeps = 0
    for sweeps in range(1, max_sweeps + 1):
        improved = False
        for i in range(n):
            others = tuple(a for a in range(n) if a != i)
            g = mixed.sum(axis=others) * roots[indices[i]]
            phases = np.angle(g)
            best_value, best_choice = current, None
            for k in range(ROUNDING_OFFSETS):
                choice = _round_to_roots(phases, r, 2 * np.pi * k / (r * ROUNDING_OFFSETS))
                value = abs(np.sum(np.conj(roots[choice]) * g))
                if value > best_value + ASCENT_IMPROVEMENT_TOL:
                    best_value, best_choice = value, choice
            if best_choice is not None:
                ratio = roots[indices[i]] / roots[best_choice]
                mixed = mixed * _broadcast(ratio, i, n)
                indices[i] = best_choice
                current = best_value
                improved = True
            trace.append(current)
        if not improved:
            break
    return indices, current, trace, sweeps


def product_ascent_search(f, group, restarts=4, seed=0, init=None, max_sweeps=50, threads=1):
    """
    Local search for the product function maximizing |<f, P>|.

    Each coordinate step replaces f_i by the root-of-unity rounding of the
    phases of its conditional correlation, and is kept only if |<f, P>| grows,
    so every trace is non-decreasing. Restart 0 starts from `init` when given.
    """
    if restarts < 1:
        raise PreconditionError("restarts must be positive")
    r = group.order

    def run(restart):
        if restart == 0 and init is not None:
            start = np.array(init.root_indices() % r, dtype=np.int64)
        else:
            start = stream(seed, restart).integers(0, r, size=(f.n, f.p))
        return _ascend(f, r, start, max_sweeps)

    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        outcomes = list(pool.map(run, range(restarts)))
    best = max(range(restarts), key=lambda k: (outcomes[k][1], -k))
    indices, _, trace, sweeps = outcomes[best]
    unscaled = ProductFunction.from_root_indices(group, f.p, indices)
    value = correlation(f, unscaled)
    scalar = value / abs(value) if abs(value) > 0 else 1.0
    product = ProductFunction.from_root_indices(group, f.p, indices, scalar)
    return AscentResult(product=product, correlation=abs(value), trace=trace, restart=best, sweeps=sweeps)


@dataclass
class CorrelatedRestriction:
    restriction: object
    correlation: float
    density: float
    attempts: int


def find_correlated_restriction(f, P, d, samples, seed, min_correlation, min_density=None, counter_base=0,
                                keep_prob=None):
    """
    Random restriction with keep probability 1/(2d) (or keep_prob) under which
    the centered restriction of f still correlates with the restricted product.
    """
    keep_prob = keep_prob or 1.0 / (2 * d)
    if samples < 1:
        raise PreconditionError("samples must be positive")
    for attempt in range(samples):
        r = sample_random_restriction(f.n, keep_prob, f.measure, seed, counter_base + attempt)
        g = restrict(f, r)
        if min_density is not None and g.mean() < min_density:
            continue
        value = abs(correlation(g.centered(), P.restrict(r)))
        if value >= min_correlation:
            return CorrelatedRestriction(r, value, g.mean(), attempt + 1)
    return None
