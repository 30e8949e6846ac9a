"""
Markov chains on F_p, their tensor powers and the spectral correlation bound.
"""
import logging
import math
from dataclasses import dataclass, field

import networkx as nx
import numpy as np

from apfree_app.services.analysis.funcspace import (
    DenseFunction,
    all_subsets,
    efron_stein_part,
    inner_product,
    low_degree_weight,
    uniform_measure,
)
from apfree_app.utils.constants import AP_DIFFERENCES, STATIONARY_TOL
from apfree_app.utils.errors import PreconditionError, ShapeMismatchError
from apfree_app.utils.validators import validate_measure, validate_prime

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class MarkovChain:
    """Row-stochastic p x p matrix with a stationary full-support measure."""
    transition: np.ndarray
    stationary: np.ndarray = field(default=None)

    def __post_init__(self):
        t = np.array(self.transition, dtype=np.float64)
        if t.ndim != 2 or t.shape[0] != t.shape[1]:
            raise PreconditionError("transition matrix must be square")
        if np.any(t < -STATIONARY_TOL) or np.any(np.abs(t.sum(axis=1) - 1) > STATIONARY_TOL * t.shape[0]):
            raise PreconditionError("transition matrix must be row-stochastic")
        mu = uniform_measure(t.shape[0]) if self.stationary is None else validate_measure(self.stationary, t.shape[0])
        if np.max(np.abs(mu @ t - mu)) > STATIONARY_TOL * t.shape[0]:
            raise PreconditionError("measure is not stationary for the chain")
        t.flags.writeable = False
        mu = np.array(mu)
        mu.flags.writeable = False
        object.__setattr__(self, 'transition', t)
        object.__setattr__(self, 'stationary', mu)

    @property
    def p(self):
        return self.transition.shape[0]

    @property
    def min_transition(self):
        """Smallest nonzero transition probability."""
        t = self.transition
        return float(t[t > 0].min())

    def graph(self):
        g = nx.DiGraph()
        g.add_nodes_from(range(self.p))
        rows, cols = np.nonzero(self.transition)
        g.add_edges_from(zip(rows.tolist(), cols.tolist()))
        return g

    def is_connected(self):
        """Irreducibility: the transition graph is strongly connected."""
        return nx.is_strongly_connected(self.graph())


def ap_difference_chain(p, differences=AP_DIFFERENCES):
    """T(y -> y + a) = 1/|D| for a in D."""
    validate_prime(p)
    t = np.zeros((p, p))
    for y in range(p):
        for a in differences:
            t[y, (y + a) % p] += 1.0 / len(differences)
    if p == 3 and tuple(differences) == AP_DIFFERENCES:
        logger.warning("p = 3: the AP difference chain is complete averaging")
    return MarkovChain(t)


def identity_chain(p):
    return MarkovChain(np.eye(p))


def complete_averaging_chain(p):
    return MarkovChain(np.full((p, p), 1.0 / p))


def _symmetrized(chain):
    root = np.sqrt(chain.stationary)
    return (root[:, None] * chain.transition) / root[None, :], root


def second_eigenvalue(chain):
    """
    Contraction constant of the chain on mean-zero functions.

    The largest singular value of the chain restricted to the mu-orthogonal
    complement of constants, in L2(mu).
    """
    a, root = _symmetrized(chain)
    projector = np.eye(chain.p) - np.outer(root, root)
    if chain.p == 1:
        return 0.0
    return float(np.linalg.svd(a @ projector, compute_uv=False)[0])


def second_eigenvalue_modulus(chain):
    """Largest |eigenvalue| after removing one eigenvalue equal to 1."""
    eigenvalues = np.linalg.eigvals(chain.transition)
    keep = np.ones(len(eigenvalues), dtype=bool)
    keep[int(np.argmin(np.abs(eigenvalues - 1)))] = False
    return float(np.max(np.abs(eigenvalues[keep]))) if keep.any() else 0.0


def circulant_second_eigenvalue(p, differences=AP_DIFFERENCES):
    """max_{t != 0} |sum_{a in D} omega^{a t}| / |D| for the difference chain."""
    best = 0.0
    for t in range(1, p):
        value = abs(sum(np.exp(2j * np.pi * a * t / p) for a in differences)) / len(differences)
        best = max(best, value)
    return float(best)


@dataclass
class ChainSpectrum:
    contraction: float
    eigenvalue_modulus: float
    circulant: float = None

    def to_dict(self):
        return dict(self.__dict__)


def chain_spectrum(chain, differences=None):
    """Dense contraction and eigenvalue data; the circulant value when differences are given."""
    circulant = circulant_second_eigenvalue(chain.p, differences) if differences is not None else None
    return ChainSpectrum(second_eigenvalue(chain), second_eigenvalue_modulus(chain), circulant)


def apply_tensor(chain, g):
    """(T^{(x)n} g)(x) = sum_y prod_i T(x_i, y_i) g(y), one coordinate at a time."""
    if chain.p != g.p:
        raise ShapeMismatchError(f"chain on F_{chain.p} applied to function on F_{g.p}")
    t = g.tensor().astype(np.complex128 if g.kind == 'complex' else np.float64)
    for axis in range(g.n):
        t = np.moveaxis(np.tensordot(chain.transition, t, axes=([1], [axis])), 0, axis)
    kind = 'complex' if g.kind == 'complex' else 'real'
    return DenseFunction.from_tensor(t, g.p, kind=kind, measure=g.measure)


@dataclass
class CorrelationReport:
    """Decomposition of <f, T g> over Efron-Stein parts with its bounds."""
    alpha: float
    beta: float
    degree: int
    lambda2: float
    inner: float
    decomposition_sum: float
    low_contribution: float
    low_bound: float
    low_weight_bound: float
    high_contribution: float
    high_bound: float
    spectral_bound: float
    hypothesis: bool
    degree_sufficient: bool
    conclusion: bool

    @property
    def holds(self):
        """Every inequality of the bound chain is satisfied."""
        tol = 1e-10
        return (abs(self.inner - self.decomposition_sum) <= tol
                and self.low_contribution <= self.low_bound + tol
                and self.low_bound <= self.low_weight_bound + tol
                and self.high_contribution <= self.high_bound + tol
                and abs(self.inner - self.alpha * self.beta) <= self.spectral_bound + tol
                and (not (self.hypothesis and self.degree_sufficient) or self.conclusion))

    def to_dict(self):
        data = dict(self.__dict__)
        data['holds'] = self.holds
        return data


def correlation_lower_bound_check(f, g, chain, d):
    """
    Evaluate <f, T^{(x)n} g> against the low/high degree split.

    Parts at |S| <= d are bounded by Cauchy-Schwarz, parts above d by
    lambda2^{|S|}. When W_{<=d}[f - alpha] <= alpha^2 beta^2 / 100 and
    lambda2^{d+1} <= alpha beta / 100 the inner product is at least (4/5) alpha beta.
    """
    for h in (f, g):
        if h.kind == 'complex' or np.any(h.values < -1e-12) or np.any(h.values > 1 + 1e-12):
            raise PreconditionError("correlation check needs functions valued in [0, 1]")
    if not f.same_space(g) or chain.p != f.p:
        raise ShapeMismatchError("f, g and the chain must share (p, n)")
    if not np.allclose(chain.stationary, f.measure, atol=1e-12, rtol=0):
        raise PreconditionError("function measure must be the chain's stationary measure")

    alpha, beta = f.mean(), g.mean()
    lam = second_eigenvalue(chain)
    inner = inner_product(f, apply_tensor(chain, g))
    total = alpha * beta
    low = low_norms = high = high_bound = spectral = 0.0
    for S in all_subsets(f.n):
        if not S:
            continue
        fs, gs = efron_stein_part(f, S).part, efron_stein_part(g, S).part
        term = inner_product(fs, apply_tensor(chain, gs))
        norms = fs.norm() * gs.norm()
        total += term
        spectral += lam ** len(S) * norms
        if len(S) <= d:
            low += abs(term)
            low_norms += norms
        else:
            high += abs(term)
            high_bound += lam ** (d + 1) * norms
    weight_f = low_degree_weight(f.centered(), d)
    weight_g = low_degree_weight(g.centered(), d)
    hypothesis = weight_f <= alpha ** 2 * beta ** 2 / 100
    return CorrelationReport(
        alpha=alpha,
        beta=beta,
        degree=d,
        lambda2=lam,
        inner=inner,
        decomposition_sum=total,
        low_contribution=low,
        low_bound=low_norms,
        low_weight_bound=math.sqrt(max(weight_f, 0.0) * max(weight_g, 0.0)),
        high_contribution=high,
        high_bound=high_bound,
        spectral_bound=spectral,
        hypothesis=hypothesis,
        degree_sufficient=lam ** (d + 1) <= alpha * beta / 100,
        conclusion=inner >= 0.8 * alpha * beta - 1e-12,
    )


def sufficient_degree(alpha, beta, lam):
    """Smallest d with lam^{d+1} <= alpha beta / 100."""
    if not 0 < lam < 1:
        raise PreconditionError(f"contraction constant must lie in (0, 1), got {lam}")
    return max(0, math.ceil(math.log(alpha * beta / 100) / math.log(lam)) - 1)
