"""
Dense functions on F_p^n and their harmonic analysis.

Functions are stored as flat tables in the canonical point order. Inner products
and expectations are taken under the product measure mu^{(x)n}; the Fourier
transform is only defined for the uniform measure.
"""
import itertools
import logging
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from apfree_app.services.algebra.fields import decode_point, digits_table, encode_digits
from apfree_app.utils.constants import MEASURE_TOL
from apfree_app.utils.errors import PreconditionError, ShapeMismatchError
from apfree_app.utils.validators import validate_dimension, validate_measure, validate_prime

logger = logging.getLogger(__name__)

LEVEL_WEIGHT_MODES = ('exact', 'at_most')

FUNCTION_DTYPES = {
    'boolean': np.float64,
    'real': np.float64,
    'complex': np.complex128,
}


def uniform_measure(p):
    return np.full(p, 1.0 / p)


@dataclass(frozen=True, eq=False)
class DenseFunction:
    """A function F_p^n -> C stored as a table of length p^n."""
    p: int
    n: int
    values: np.ndarray
    kind: str = 'real'
    measure: np.ndarray = field(default=None)

    def __post_init__(self):
        validate_prime(self.p)
        validate_dimension(self.n)
        if self.kind not in FUNCTION_DTYPES:
            raise PreconditionError(f"unknown function kind: {self.kind}")
        values = np.array(self.values, dtype=FUNCTION_DTYPES[self.kind]).reshape(-1)
        if values.shape[0] != self.p ** self.n:
            raise ShapeMismatchError(f"table has {values.shape[0]} entries, expected {self.p}^{self.n}")
        if self.kind == 'boolean' and not np.all((values == 0) | (values == 1)):
            raise PreconditionError("boolean functions take values in {0, 1}")
        values.flags.writeable = False
        measure = uniform_measure(self.p) if self.measure is None else validate_measure(self.measure, self.p).copy()
        measure.flags.writeable = False
        object.__setattr__(self, 'values', values)
        object.__setattr__(self, 'measure', measure)

    @classmethod
    def constant(cls, p, n, c, kind=None, measure=None):
        if kind is None:
            kind = 'complex' if isinstance(c, complex) else 'real'
        return cls(p, n, np.full(p ** n, c), kind=kind, measure=measure)

    @classmethod
    def from_tensor(cls, tensor, p, kind='real', measure=None):
        tensor = np.asarray(tensor)
        return cls(p, tensor.ndim, tensor.reshape(-1, order='F'), kind=kind, measure=measure)

    @classmethod
    def from_callable(cls, p, n, fn, kind='real', measure=None):
        """Tabulate fn over coordinate tuples."""
        digits = digits_table(p, n)
        return cls(p, n, [fn(tuple(int(c) for c in row)) for row in digits], kind=kind, measure=measure)

    @classmethod
    def indicator(cls, p, n, indices, measure=None):
        values = np.zeros(p ** n)
        values[np.asarray(list(indices), dtype=np.int64)] = 1.0
        return cls(p, n, values, kind='boolean', measure=measure)

    @property
    def size(self):
        return self.p ** self.n

    @property
    def is_uniform(self):
        return bool(np.all(np.abs(self.measure - 1.0 / self.p) <= MEASURE_TOL))

    def tensor(self):
        """View as an n-dimensional array; axis i holds coordinate i+1."""
        return self.values.reshape((self.p,) * self.n, order='F')

    def weights(self):
        return product_weights(self.p, self.n, self.measure)

    def mean(self):
        result = np.sum(self.weights() * self.values)
        return complex(result) if self.kind == 'complex' else float(result)

    def norm(self):
        return float(np.sqrt(np.sum(self.weights() * np.abs(self.values) ** 2)))

    def sup_norm(self):
        return float(np.max(np.abs(self.values))) if self.size else 0.0

    def with_values(self, values, kind=None):
        return DenseFunction(self.p, self.n, values, kind=kind or self.kind, measure=self.measure)

    def as_real(self):
        if self.kind == 'complex':
            raise PreconditionError("complex function cannot be viewed as real")
        return self.with_values(self.values, kind='real')

    def centered(self):
        """f - E f as a real (or complex) function."""
        kind = 'complex' if self.kind == 'complex' else 'real'
        return self.with_values(self.values - self.mean(), kind=kind)

    def same_space(self, other):
        return (self.p == other.p and self.n == other.n
                and np.allclose(self.measure, other.measure, atol=MEASURE_TOL, rtol=0))

    def equals(self, other):
        return (self.same_space(other) and self.kind == other.kind
                and np.array_equal(self.values, other.values))

    def __repr__(self):
        return f"<DenseFunction p={self.p} n={self.n} kind={self.kind}>"


@lru_cache(maxsize=64)
def _product_weights(p, n, measure_key):
    measure = np.array(measure_key)
    weights = np.ones(1)
    for _ in range(n):
        weights = np.kron(measure, weights)
    weights.flags.writeable = False
    return weights


def product_weights(p, n, measure):
    """Table of mu^{(x)n}(x) in canonical order."""
    return _product_weights(int(p), int(n), tuple(float(m) for m in measure))


def _require_same_space(f, g):
    if not f.same_space(g):
        raise ShapeMismatchError(f"functions on different spaces: ({f.p}, {f.n}) vs ({g.p}, {g.n})")


def inner_product(f, g):
    """<f, g> = E_mu[f conj(g)]."""
    _require_same_space(f, g)
    result = np.sum(f.weights() * f.values * np.conj(g.values))
    if f.kind == 'complex' or g.kind == 'complex':
        return complex(result)
    return float(np.real(result))


def average_axis(tensor, axis, measure):
    """E over one coordinate, broadcast back along that axis."""
    averaged = np.tensordot(tensor, measure, axes=([axis], [0]))
    return np.expand_dims(averaged, axis)


def average_out(tensor, axes, measure):
    """E over the given coordinates, dropping those axes."""
    for axis in sorted(axes, reverse=True):
        tensor = np.tensordot(tensor, measure, axes=([axis], [0]))
    return tensor


@dataclass(frozen=True)
class EfronSteinPart:
    """f^{=S}: the component of f in V_{=S}."""
    subset: frozenset
    part: DenseFunction

    @property
    def values(self):
        return self.part.values

    def tensor(self):
        return self.part.tensor()

    def norm(self):
        return self.part.norm()


def _subset(S, n):
    S = frozenset(int(i) for i in S)
    if any(not 0 <= i < n for i in S):
        raise PreconditionError(f"subset {sorted(S)} not contained in [0, {n})")
    return S


def efron_stein_part(f, S):
    """
    f^{=S} computed as prod_{i in S} (I - E_i) prod_{i not in S} E_i f.

    The per-coordinate projections commute, so this equals the inclusion-exclusion
    sum over T subset of S.
    """
    S = _subset(S, f.n)
    t = f.tensor().astype(np.complex128 if f.kind == 'complex' else np.float64)
    for axis in range(f.n):
        avg = average_axis(t, axis, f.measure)
        t = t - avg if axis in S else np.broadcast_to(avg, t.shape)
    kind = 'complex' if f.kind == 'complex' else 'real'
    return EfronSteinPart(S, DenseFunction.from_tensor(np.array(t), f.p, kind=kind, measure=f.measure))


def conditional_expectation(f, T):
    """E_{subset T} f: average out every coordinate outside T."""
    T = _subset(T, f.n)
    t = f.tensor().astype(np.complex128 if f.kind == 'complex' else np.float64)
    for axis in range(f.n):
        if axis not in T:
            t = np.broadcast_to(average_axis(t, axis, f.measure), t.shape)
    kind = 'complex' if f.kind == 'complex' else 'real'
    return DenseFunction.from_tensor(np.array(t), f.p, kind=kind, measure=f.measure)


def efron_stein_inclusion_exclusion(f, S):
    """f^{=S} = sum_{T subset S} (-1)^{|S \\ T|} E_{subset T} f."""
    S = sorted(_subset(S, f.n))
    total = np.zeros(f.size, dtype=np.complex128 if f.kind == 'complex' else np.float64)
    for k in range(len(S) + 1):
        for T in itertools.combinations(S, k):
            sign = -1.0 if (len(S) - k) % 2 else 1.0
            total = total + sign * conditional_expectation(f, T).values
    kind = 'complex' if f.kind == 'complex' else 'real'
    return f.with_values(total, kind=kind)


def all_subsets(n):
    for k in range(n + 1):
        for S in itertools.combinations(range(n), k):
            yield frozenset(S)


def efron_stein_decomposition(f):
    """Map every subset S of [n] to f^{=S}."""
    return {S: efron_stein_part(f, S) for S in all_subsets(f.n)}


def _require_uniform(f):
    if not f.is_uniform:
        raise PreconditionError("Fourier transform requires the uniform measure")


def fourier_transform(f):
    """
    Coefficients hat f(alpha) = E_x f(x) omega^{-alpha.x}, in canonical order of alpha.

    One length-p DFT per coordinate axis.
    """
    _require_uniform(f)
    t = f.tensor().astype(np.complex128)
    for axis in range(f.n):
        t = np.fft.fft(t, axis=axis) / f.p
    return t.reshape(-1, order='F')


def inverse_fourier_transform(coefficients, p, n):
    t = np.asarray(coefficients, dtype=np.complex128).reshape((p,) * n, order='F')
    for axis in range(n):
        t = np.fft.ifft(t, axis=axis) * p
    return DenseFunction.from_tensor(t, p, kind='complex')


def fourier_coefficient(f, alpha):
    """Single coefficient by direct summation."""
    _require_uniform(f)
    alpha = np.asarray(alpha, dtype=np.int64)
    phases = (digits_table(f.p, f.n) @ alpha) % f.p
    return complex(np.mean(f.values * np.exp(-2j * np.pi * phases / f.p)))


@lru_cache(maxsize=32)
def _support_sizes(p, n):
    sizes = np.count_nonzero(digits_table(p, n), axis=1)
    sizes.flags.writeable = False
    return sizes


def support_sizes(p, n):
    """|supp(alpha)| for every index alpha."""
    return _support_sizes(int(p), int(n))


def level_weights(f):
    """W_{=d}[f] for d = 0..n."""
    if f.is_uniform:
        coefficients = fourier_transform(f)
        return np.bincount(support_sizes(f.p, f.n), weights=np.abs(coefficients) ** 2, minlength=f.n + 1)
    return level_weights_efron_stein(f)


def level_weights_efron_stein(f):
    """W_{=d}[f] from the Efron-Stein parts; valid for any product measure."""
    weights = np.zeros(f.n + 1)
    for S in all_subsets(f.n):
        weights[len(S)] += efron_stein_part(f, S).norm() ** 2
    return weights


def level_weight(f, d, mode='exact'):
    """W_{=d}[f], or W_{<=d}[f] with mode='at_most'."""
    if mode not in LEVEL_WEIGHT_MODES:
        raise PreconditionError(f"Unknown level weight mode: {mode}")
    if not isinstance(d, (int, np.integer)) or not 0 <= d <= f.n:
        raise PreconditionError(f"Level {d!r} outside 0..{f.n}")
    weights = level_weights(f)
    return float(weights[d] if mode == 'exact' else np.sum(weights[: d + 1]))


def low_degree_weight(f, d):
    """W_{<=d}[f] = sum over |S| <= d of ||f^{=S}||^2."""
    return float(np.sum(level_weights(f)[: max(0, d) + 1]))


def character_table(p, n, alpha):
    """chi_alpha(x) = omega^{alpha.x} as a complex DenseFunction."""
    alpha = np.asarray(alpha, dtype=np.int64)
    phases = (digits_table(p, n) @ alpha) % p
    return DenseFunction(p, n, np.exp(2j * np.pi * phases / p), kind='complex')


def decode_alpha(p, n, index):
    return decode_point(p, n, int(index)).coords


def encode_alpha(alpha, p):
    return int(encode_digits(np.asarray(alpha), p))
