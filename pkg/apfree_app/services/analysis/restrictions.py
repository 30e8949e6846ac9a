"""
Restrictions of functions on F_p^n with the random-restriction estimates built on them.

A restriction keeps the coordinates in `alive` free and fixes the rest to
`values` (listed in increasing coordinate order).
"""
import itertools
import logging
import math
from dataclasses import dataclass

import numpy as np

from apfree_app.services.analysis.funcspace import DenseFunction, average_out, low_degree_weight
from apfree_app.services.rng import stream
from apfree_app.utils.errors import PreconditionError
from apfree_app.utils.validators import validate_probability

logger = logging.getLogger(__name__)

EXHAUSTIVE_BUMP_BUDGET = 2_000_000


@dataclass(frozen=True)
class Restriction:
    """Partition [n] = I u I-bar with an assignment y on I-bar."""
    n: int
    alive: tuple
    values: tuple

    def __post_init__(self):
        alive = tuple(sorted(int(i) for i in self.alive))
        if len(set(alive)) != len(alive) or any(not 0 <= i < self.n for i in alive):
            raise PreconditionError(f"alive set {alive} is not a subset of [0, {self.n})")
        object.__setattr__(self, 'alive', alive)
        object.__setattr__(self, 'values', tuple(int(v) for v in self.values))
        if len(self.values) != self.n - len(alive):
            raise PreconditionError("restriction must fix every coordinate outside the alive set")

    @property
    def fixed(self):
        alive = set(self.alive)
        return tuple(i for i in range(self.n) if i not in alive)

    @property
    def assignment(self):
        return dict(zip(self.fixed, self.values))

    def index(self):
        """Tensor index selecting the restricted fiber."""
        assignment = self.assignment
        return tuple(slice(None) if i not in assignment else assignment[i] for i in range(self.n))

    def to_dict(self):
        return {'n': self.n, 'alive': list(self.alive), 'values': list(self.values)}

    @classmethod
    def from_dict(cls, data):
        return cls(int(data['n']), tuple(data['alive']), tuple(data['values']))


def restrict(f, r):
    """f_{I-bar -> y} as a function on F_p^{|I|}."""
    if r.n != f.n:
        raise PreconditionError(f"restriction on {r.n} coordinates applied to function on {f.n}")
    if any(not 0 <= v < f.p for v in r.values):
        raise PreconditionError("restriction values outside F_p")
    fiber = f.tensor()[r.index()]
    return DenseFunction.from_tensor(np.array(fiber), f.p, kind=f.kind, measure=f.measure)


def compose_restrictions(outer, inner):
    """The single restriction equal to applying `outer` then `inner`."""
    if inner.n != len(outer.alive):
        raise PreconditionError("inner restriction does not match the outer alive set")
    assignment = outer.assignment
    for position, value in zip(inner.fixed, inner.values):
        assignment[outer.alive[position]] = value
    alive = tuple(outer.alive[position] for position in inner.alive)
    fixed = sorted(assignment)
    return Restriction(outer.n, alive, tuple(assignment[i] for i in fixed))


def sample_random_restriction(n, keep_prob, measure, seed, counter=0):
    """Keep each coordinate with probability keep_prob; fix the rest by mu."""
    validate_probability(keep_prob, 'keep_prob')
    measure = np.asarray(measure, dtype=np.float64)
    rng = stream(seed, counter)
    keep = rng.random(n) < keep_prob
    draws = rng.choice(len(measure), size=n, p=measure)
    alive = tuple(int(i) for i in np.nonzero(keep)[0])
    values = tuple(int(draws[i]) for i in range(n) if not keep[i])
    return Restriction(n, alive, values)


def fiber_means(f, alive):
    """E[f_{I-bar -> y}] for every y, as a flat table over the fixed coordinates."""
    means = average_out(f.tensor(), alive, f.measure)
    return np.asarray(means).reshape(-1, order='F')


def fiber_restriction(n, p, alive, flat_index):
    fixed = [i for i in range(n) if i not in set(alive)]
    values = []
    for _ in fixed:
        flat_index, digit = divmod(flat_index, p)
        values.append(digit)
    return Restriction(n, tuple(alive), tuple(values))


@dataclass
class BumpSearchResult:
    """Outcome of a density-bump search over restrictions."""
    found: bool
    restriction: Restriction = None
    density: float = 0.0
    base_density: float = 0.0
    target: float = 0.0
    weight: float = 0.0
    hypothesis_met: bool = True
    exhaustive: bool = False
    candidates: int = 0

    @property
    def gain(self):
        return self.density - self.base_density

    def to_dict(self):
        return {
            'found': self.found,
            'restriction': self.restriction.to_dict() if self.restriction else None,
            'density': self.density,
            'base_density': self.base_density,
            'target': self.target,
            'weight': self.weight,
            'hypothesis_met': self.hypothesis_met,
            'exhaustive': self.exhaustive,
            'candidates': self.candidates,
        }


def restriction_bump_search(f, d, xi, min_alive=None, samples=256, seed=0, budget=EXHAUSTIVE_BUMP_BUDGET):
    """
    Find a restriction with E[f_{I-bar -> y}] >= E f + xi/(4e) and |I| >= n/(2d).

    Exhaustive over (I, y) when (1+p)^n fits the budget, otherwise samples
    restrictions with keep probability 1/d. The densest candidate is returned,
    ties going to the larger alive set.
    """
    if f.kind != 'boolean':
        raise PreconditionError("bump search needs a boolean function")
    if d < 1:
        raise PreconditionError(f"degree cap must be >= 1, got {d}")
    if xi <= 0:
        raise PreconditionError(f"xi must be positive, got {xi}")
    alpha = f.mean()
    weight = low_degree_weight(f.centered(), d)
    target = alpha + xi / (4 * math.e)
    floor = max(math.ceil(f.n / (2 * d)), min_alive or 0)
    result = BumpSearchResult(found=False, base_density=alpha, target=target, weight=weight, density=alpha)
    if weight < xi - 1e-12:
        logger.warning(f"Low-degree weight {weight:.3e} below xi={xi:.3e}; hypothesis not met")
        result.hypothesis_met = False
        return result
    if floor > f.n:
        return result

    best = (-1.0, -1, None)
    if (1 + f.p) ** f.n <= budget:
        result.exhaustive = True
        for size in range(f.n, floor - 1, -1):
            for alive in itertools.combinations(range(f.n), size):
                means = fiber_means(f, alive)
                k = int(np.argmax(means))
                result.candidates += means.size
                if means[k] > best[0] + 1e-15:
                    best = (float(means[k]), size, fiber_restriction(f.n, f.p, alive, k))
    else:
        for counter in range(samples):
            r = sample_random_restriction(f.n, 1.0 / d, f.measure, seed, counter)
            if len(r.alive) < floor:
                continue
            density = restrict(f, r).mean()
            result.candidates += 1
            if density > best[0] + 1e-15 or (abs(density - best[0]) <= 1e-15 and len(r.alive) > best[1]):
                best = (density, len(r.alive), r)

    if best[2] is not None:
        result.restriction = best[2]
        result.density = best[0]
        result.found = best[0] >= target - 1e-12
    logger.debug(f"Bump search: density {result.density:.4f} vs target {target:.4f} ({result.candidates} candidates)")
    return result


def restriction_second_moment(f, keep_prob):
    """Exact E_{I,y}[Z^2] with Z = E[f_{I-bar -> y}] and I kept with probability keep_prob."""
    validate_probability(keep_prob, 'keep_prob', open_low=False)
    total = 0.0
    for size in range(f.n + 1):
        p_set = keep_prob ** size * (1 - keep_prob) ** (f.n - size)
        for alive in itertools.combinations(range(f.n), size):
            means = fiber_means(f, alive)
            fixed = [i for i in range(f.n) if i not in alive]
            weights = _fixed_weights(f, len(fixed))
            total += p_set * float(np.sum(weights * np.abs(means) ** 2))
    return total


def _fixed_weights(f, count):
    weights = np.ones(1)
    for _ in range(count):
        weights = np.kron(f.measure, weights)
    return weights


@dataclass
class EventEstimate:
    """Probability estimate of |E[g_{I-bar -> y}]| >= sqrt(xi / 2e)."""
    probability: float
    threshold: float
    floor: float
    trials: int
    stderr: float = 0.0
    exhaustive: bool = False

    def to_dict(self):
        return dict(self.__dict__)


def _check_event_inputs(g, d, xi):
    if d < 1 or xi <= 0:
        raise PreconditionError("need d >= 1 and xi > 0")
    if g.sup_norm() > 1 + 1e-12:
        raise PreconditionError("function is not 1-bounded")
    weight = low_degree_weight(g, d)
    if weight < xi - 1e-12:
        raise PreconditionError(f"W_<=d[g] = {weight:.3e} is below xi = {xi:.3e}")


def restriction_correlation_event(g, d, xi, trials, seed):
    """Monte-Carlo frequency of the correlation event with keep probability 1/(2d)."""
    _check_event_inputs(g, d, xi)
    if trials < 1:
        raise PreconditionError("trials must be positive")
    threshold = math.sqrt(xi / (2 * math.e))
    hits = 0
    for counter in range(trials):
        r = sample_random_restriction(g.n, 1.0 / (2 * d), g.measure, seed, counter)
        if abs(restrict(g, r).mean()) >= threshold:
            hits += 1
    probability = hits / trials
    return EventEstimate(
        probability=probability,
        threshold=threshold,
        floor=xi / (2 * math.e),
        trials=trials,
        stderr=math.sqrt(probability * (1 - probability) / trials),
    )


def restriction_event_exact(g, d, xi):
    """Exact probability of the correlation event by enumerating (I, y)."""
    _check_event_inputs(g, d, xi)
    q = 1.0 / (2 * d)
    threshold = math.sqrt(xi / (2 * math.e))
    probability = 0.0
    for size in range(g.n + 1):
        p_set = q ** size * (1 - q) ** (g.n - size)
        for alive in itertools.combinations(range(g.n), size):
            means = fiber_means(g, alive)
            weights = _fixed_weights(g, g.n - size)
            probability += p_set * float(np.sum(weights[np.abs(means) >= threshold - 1e-15]))
    return EventEstimate(probability=probability, threshold=threshold, floor=xi / (2 * math.e),
                         trials=0, exhaustive=True)
