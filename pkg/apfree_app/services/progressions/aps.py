"""
Restricted arithmetic progressions x, x+a, x+2a with a in {0,1,2}^n.

Covers the progression distribution, point sets, the counting operator
Lambda(f, g, h) = E_{x,a} f(x) g(x+a) h(x+2a) computed two ways, the freeness
oracle and greedy constructions of free sets.
"""
import itertools
import logging
from dataclasses import dataclass
from functools import lru_cache

import networkx as nx
import numpy as np

from apfree_app.services.algebra.fields import difference_vectors, digits_table, encode_digits
from apfree_app.services.analysis.funcspace import DenseFunction, fourier_transform
from apfree_app.services.rng import stream
from apfree_app.utils.constants import AP_DIFFERENCES, CROSS_CHECK_TOL
from apfree_app.utils.errors import ConsistencyError, PreconditionError, ShapeMismatchError
from apfree_app.utils.validators import validate_dimension, validate_prime

logger = logging.getLogger(__name__)

CHUNK_ELEMENTS = 4_000_000


@dataclass(frozen=True)
class TripleDistribution:
    """Finitely supported distribution on Sigma_1 x ... x Sigma_k."""
    alphabet_sizes: tuple
    atoms: tuple

    def __post_init__(self):
        sizes = tuple(int(s) for s in self.alphabet_sizes)
        merged = {}
        for point, prob in self.atoms:
            point = tuple(int(c) for c in point)
            if len(point) != len(sizes) or any(not 0 <= c < s for c, s in zip(point, sizes)):
                raise PreconditionError(f"atom {point} outside the alphabets {sizes}")
            if prob <= 0:
                raise PreconditionError(f"atom {point} has non-positive mass {prob}")
            merged[point] = merged.get(point, 0.0) + float(prob)
        total = sum(merged.values())
        if abs(total - 1.0) > 1e-9:
            raise PreconditionError(f"atom masses sum to {total}, expected 1")
        object.__setattr__(self, 'alphabet_sizes', sizes)
        object.__setattr__(self, 'atoms', tuple(sorted(merged.items())))

    @property
    def arity(self):
        return len(self.alphabet_sizes)

    @property
    def support(self):
        return tuple(point for point, _ in self.atoms)

    def marginal(self, k):
        weights = np.zeros(self.alphabet_sizes[k])
        for point, prob in self.atoms:
            weights[point[k]] += prob
        return weights

    def to_dict(self):
        return {
            'alphabets': list(self.alphabet_sizes),
            'atoms': [list(point) for point in self.support],
            'weights': [prob for _, prob in self.atoms],
        }

    @classmethod
    def from_support(cls, alphabet_sizes, support):
        """Uniform distribution on the given support."""
        support = [tuple(point) for point in support]
        if not support:
            raise PreconditionError("support must be non-empty")
        return cls(tuple(alphabet_sizes), tuple((point, 1.0 / len(support)) for point in support))

    @classmethod
    def from_dict(cls, data):
        atoms = data['atoms']
        weights = data.get('weights') or [1.0 / len(atoms)] * len(atoms)
        return cls(tuple(data['alphabets']), tuple(zip(map(tuple, atoms), weights)))


def restricted_ap_distribution(p, differences=AP_DIFFERENCES):
    """Uniform x in F_p and a in D, atom (x, x+a, x+2a) with mass 1/(|D| p)."""
    validate_prime(p)
    atoms = tuple(((x, (x + a) % p, (x + 2 * a) % p), 1.0 / (len(differences) * p))
                  for x in range(p) for a in differences)
    return TripleDistribution((p, p, p), atoms)


@dataclass(frozen=True, eq=False)
class PointSet:
    """A subset A of F_p^n stored as a membership table."""
    p: int
    n: int
    members: np.ndarray

    def __post_init__(self):
        validate_prime(self.p)
        validate_dimension(self.n)
        members = np.array(self.members, dtype=bool).reshape(-1)
        if members.shape[0] != self.p ** self.n:
            raise ShapeMismatchError(f"membership table has {members.shape[0]} entries, expected {self.p}^{self.n}")
        members.flags.writeable = False
        object.__setattr__(self, 'members', members)

    @classmethod
    def from_indices(cls, p, n, indices):
        members = np.zeros(p ** n, dtype=bool)
        members[np.asarray(list(indices), dtype=np.int64)] = True
        return cls(p, n, members)

    @classmethod
    def from_function(cls, f):
        if f.kind != 'boolean':
            raise PreconditionError("point sets come from boolean functions")
        return cls(f.p, f.n, f.values > 0.5)

    def to_function(self):
        return DenseFunction(self.p, self.n, self.members.astype(np.float64), kind='boolean')

    def indices(self):
        return np.nonzero(self.members)[0]

    @property
    def size(self):
        return int(np.count_nonzero(self.members))

    @property
    def density(self):
        return self.size / self.members.shape[0]

    def __contains__(self, point):
        return bool(self.members[int(encode_digits(point.coords, self.p))])


def _as_function(f):
    if isinstance(f, PointSet):
        return f.to_function()
    return f


def _as_set(A):
    if isinstance(A, DenseFunction):
        return PointSet.from_function(A)
    return A


def _direct_lambda(f, g, h, differences):
    total = 0.0 + 0.0j
    digits = digits_table(f.p, f.n)
    for a in difference_vectors(f.n, differences):
        shifted_g = g.values[encode_digits(digits + a, f.p)]
        shifted_h = h.values[encode_digits(digits + 2 * a, f.p)]
        total += np.sum(f.values * shifted_g * shifted_h)
    return total / (f.size * len(differences) ** f.n)


def _fourier_lambda(f, g, h, differences):
    """Sum over (beta, gamma) of hat f(-beta-gamma) hat g(beta) hat h(gamma) prod_i S(beta_i + 2 gamma_i)."""
    p, n = f.p, f.n
    fh, gh, hh = fourier_transform(f), fourier_transform(g), fourier_transform(h)
    multiplier = np.array([np.mean([np.exp(2j * np.pi * a * t / p) for a in differences]) for t in range(p)])
    digits = digits_table(p, n)
    total = 0.0 + 0.0j
    for beta_index, beta in enumerate(digits):
        if gh[beta_index] == 0:
            continue
        f_index = encode_digits(-beta[None, :] - digits, p)
        factors = np.prod(multiplier[(beta[None, :] + 2 * digits) % p], axis=1)
        total += gh[beta_index] * np.sum(hh * fh[f_index] * factors)
    return total


def triple_correlation(f, g, h, method='direct', differences=AP_DIFFERENCES):
    """Lambda(f, g, h) under the uniform measure; method is 'direct', 'fourier' or 'both'."""
    f, g, h = _as_function(f), _as_function(g), _as_function(h)
    if not (f.same_space(g) and f.same_space(h)):
        raise ShapeMismatchError("Lambda needs three functions on the same space")
    if not f.is_uniform:
        raise PreconditionError("Lambda is defined under the uniform measure")
    if method == 'direct':
        return complex(_direct_lambda(f, g, h, differences))
    if method == 'fourier':
        return complex(_fourier_lambda(f, g, h, differences))
    if method == 'both':
        direct = complex(_direct_lambda(f, g, h, differences))
        spectral = complex(_fourier_lambda(f, g, h, differences))
        if abs(direct - spectral) > CROSS_CHECK_TOL:
            raise ConsistencyError(f"direct Lambda {direct} disagrees with Fourier-side {spectral}")
        return direct
    raise PreconditionError(f"unknown method: {method}")


def trivial_floor(f, g, h, differences=AP_DIFFERENCES):
    """Contribution of a = 0: |D|^{-n} E[f g h]."""
    f, g, h = _as_function(f), _as_function(g), _as_function(h)
    return complex(np.mean(f.values * g.values * h.values)) / len(differences) ** f.n


def _progression_hits(A, xs, differences, nonzero_only):
    """Boolean array (len(xs), |D|^n): x + a and x + 2a both in A."""
    digits = digits_table(A.p, A.n)[xs]
    diffs = difference_vectors(A.n, differences)
    if nonzero_only:
        diffs = diffs[1:]
    second = A.members[encode_digits(digits[:, None, :] + diffs[None, :, :], A.p)]
    third = A.members[encode_digits(digits[:, None, :] + 2 * diffs[None, :, :], A.p)]
    return second & third, diffs


def _chunks(A, differences):
    xs = A.indices()
    width = max(1, len(differences) ** A.n * max(A.n, 1))
    step = max(1, CHUNK_ELEMENTS // width)
    for start in range(0, len(xs), step):
        yield xs[start:start + step]


@dataclass
class FreenessResult:
    free: bool
    witness: tuple = None

    def to_dict(self):
        data = {'free': self.free}
        if self.witness is not None:
            x, a = self.witness
            data['witness'] = {'x': list(x), 'a': list(a)}
        return data


def is_restricted_ap_free(A, differences=AP_DIFFERENCES):
    """
    Check that A has no x, x+a, x+2a with a != 0.

    Enumerates A x D^n in chunks with early exit; the witness is the first
    (x, a) in index order.
    """
    A = _as_set(A)
    for xs in _chunks(A, differences):
        hits, diffs = _progression_hits(A, xs, differences, nonzero_only=True)
        if hits.any():
            row, col = np.unravel_index(int(np.argmax(hits.reshape(-1))), hits.shape)
            x = tuple(int(c) for c in digits_table(A.p, A.n)[xs[row]])
            a = tuple(int(c) for c in diffs[col])
            return FreenessResult(False, (x, a))
    return FreenessResult(True)


def progression_count(A, include_trivial=True, differences=AP_DIFFERENCES):
    """Number of pairs (x, a) with x, x+a, x+2a in A."""
    A = _as_set(A)
    total = 0
    for xs in _chunks(A, differences):
        hits, _ = _progression_hits(A, xs, differences, nonzero_only=not include_trivial)
        total += int(np.count_nonzero(hits))
    return total


@lru_cache(maxsize=32)
def _shift_contributions(p, n, k, differences):
    """contrib[i][v] = ((v + k d) mod p) p^i over d in D."""
    d = np.asarray(differences, dtype=np.int64)
    return tuple(
        np.stack([((v + k * d) % p) * p ** i for v in range(p)])
        for i in range(n)
    )


def _shifted(p, n, x_digits, k, differences):
    """index(x + k a) for every a in D^n, in difference_vectors order."""
    contributions = _shift_contributions(p, n, k % p, differences)
    indices = np.zeros(1, dtype=np.int64)
    for i in range(n):
        indices = np.add.outer(contributions[i][x_digits[i]], indices).reshape(-1)
    return indices


def greedy_free_set(p, n, order, differences=AP_DIFFERENCES, target_size=None):
    """
    Maximal free set built by inserting points in the given order.

    A bitmap tracks every point that would complete a progression with two
    current members; blocked points are skipped.
    """
    validate_prime(p)
    members = np.zeros(p ** n, dtype=bool)
    blocked = np.zeros(p ** n, dtype=bool)
    digits = digits_table(p, n)
    for x in np.asarray(order, dtype=np.int64):
        if members[x] or blocked[x]:
            continue
        members[x] = True
        if target_size is not None and np.count_nonzero(members) >= target_size:
            break
        d = digits[x]
        plus1, plus2 = _shifted(p, n, d, 1, differences)[1:], _shifted(p, n, d, 2, differences)[1:]
        minus1, minus2 = _shifted(p, n, d, -1, differences)[1:], _shifted(p, n, d, -2, differences)[1:]
        blocked[plus2[members[plus1]]] = True
        blocked[plus1[members[plus2]]] = True
        blocked[plus1[members[minus1]]] = True
        blocked[minus1[members[plus1]]] = True
        blocked[minus1[members[minus2]]] = True
        blocked[minus2[members[minus1]]] = True
    return PointSet(p, n, members)


def planted_free_set(p, n, beta, seed, differences=AP_DIFFERENCES, noise=1e-3):
    """Greedy free set inserting points by descending Re chi_beta(x), ties broken by seeded noise."""
    beta = np.asarray(beta, dtype=np.int64)
    if beta.shape != (n,):
        raise PreconditionError(f"beta must have {n} coordinates")
    phases = (digits_table(p, n) @ beta) % p
    score = np.cos(2 * np.pi * phases / p) + noise * stream(seed, 0).random(p ** n)
    order = np.argsort(-score, kind='stable')
    return greedy_free_set(p, n, order, differences)


def regression_corpus(seed, count=10, p=5, n=8):
    """
    Deterministic planted instances: one random nonzero beta per instance.

    n is a dimension or an inclusive (low, high) range cycled through by instance.
    """
    if isinstance(n, (tuple, list)):
        low, high = (int(v) for v in n)
        if low > high:
            raise PreconditionError(f"empty dimension range: {n}")
        dimensions = [low + k % (high - low + 1) for k in range(count)]
    else:
        dimensions = [n] * count
    corpus = []
    for k, dim in enumerate(dimensions):
        rng = stream(seed, 1, k)
        beta = rng.integers(0, p, size=dim)
        if not beta.any():
            beta[0] = 1
        corpus.append((tuple(int(b) for b in beta), planted_free_set(p, dim, beta, seed + k)))
    return corpus


def pairwise_connected(mu):
    """
    For each pair of coordinates (i, j), whether the bipartite graph on
    Sigma_i u Sigma_j with an edge (s_i, s_j) per atom is connected.
    """
    result = {}
    for i, j in itertools.combinations(range(mu.arity), 2):
        graph = nx.Graph()
        graph.add_nodes_from((i, s) for s in range(mu.alphabet_sizes[i]))
        graph.add_nodes_from((j, s) for s in range(mu.alphabet_sizes[j]))
        graph.add_edges_from(((i, point[i]), (j, point[j])) for point in mu.support)
        result[(i, j)] = nx.is_connected(graph)
    return result
