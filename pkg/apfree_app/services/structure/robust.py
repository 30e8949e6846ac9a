"""
Making a correlation with a product function robust under specialized basis
changes and z-part restrictions.

Starting from |<f, P>| >= eps, each round samples special bases and z-parts of
the current pair. For a sampled z an adversarial alive set I_z inside the
x-part is chosen greedily, and the correlation of every fiber z' over the rest
of the x-part is computed exactly. If the fraction of (z, z') whose
correlation collapses to at most eps/2 reaches delta, the pair is replaced by
a fiber whose correlation is larger by eps*delta/4 and whose mean has not
dropped below E f - beta^(1 - 2j/N). A fiber with mean >= E f + beta ends the
search as a density bump.
"""
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from apfree_app.services.analysis.funcspace import DenseFunction
from apfree_app.services.analysis.restrictions import fiber_means, fiber_restriction
from apfree_app.services.rng import stream
from apfree_app.services.structure.bases import random_special_basis
from apfree_app.services.structure.operations import (
    BasisChangeStep,
    RandomRestrictionStep,
    ZRestrictionStep,
    replay_steps,
    replay_steps_on_product,
)
from apfree_app.services.structure.products import correlation
from apfree_app.utils.errors import PreconditionError
from apfree_app.utils.validators import validate_probability

logger = logging.getLogger(__name__)


@dataclass
class RobustifyParams:
    epsilon: float
    delta: float
    beta: float
    max_iters: int = 8
    bases: int = 8
    z_samples: int = 16
    x_fraction: float = 0.5
    alive_fraction: float = 0.5
    seed: int = 0
    threads: int = 1
    basis_sampler: object = None

    def __post_init__(self):
        for name in ('epsilon', 'delta', 'beta'):
            validate_probability(getattr(self, name), name, open_high=True)
        validate_probability(self.x_fraction, 'x_fraction')
        validate_probability(self.alive_fraction, 'alive_fraction')
        if self.max_iters < 1 or self.bases < 1 or self.z_samples < 1:
            raise PreconditionError("max_iters, bases and z_samples must be positive")

    @property
    def step_gain(self):
        return self.epsilon * self.delta / 4

    def density_floor(self, base_mean, j):
        return base_mean - self.beta ** (1 - 2 * j / self.max_iters)

    def to_dict(self):
        data = {k: v for k, v in self.__dict__.items() if k != 'basis_sampler'}
        data['basis_sampler'] = getattr(self.basis_sampler, '__name__', None)
        return data


@dataclass
class RobustRound:
    iteration: int
    correlation: float
    density: float
    n: int
    collapse_frequency: float
    bases_tried: int

    def to_dict(self):
        return dict(self.__dict__)


@dataclass
class RobustifyOutcome:
    """Common shape of the three outcomes; `steps` replay f to `function`."""
    function: DenseFunction
    product: object
    steps: list
    rounds: list = field(default_factory=list)
    reason: str = ''
    kind = 'outcome'

    @property
    def correlation(self):
        return abs(correlation(self.function, self.product)) if self.product is not None else 0.0

    def to_dict(self):
        return {
            'outcome': self.kind,
            'n': self.function.n,
            'density': self.function.mean(),
            'correlation': self.correlation,
            'reason': self.reason,
            'steps': [s.to_dict() for s in self.steps],
            'rounds': [r.to_dict() for r in self.rounds],
        }


class RobustPair(RobustifyOutcome):
    kind = 'robust_pair'


class DensityBump(RobustifyOutcome):
    kind = 'density_bump'


class Exhausted(RobustifyOutcome):
    kind = 'exhausted'


@dataclass
class _BasisSurvey:
    collapse_frequency: float = 0.0
    samples: int = 0
    step: tuple = None
    step_value: float = -1.0
    bump: tuple = None
    bump_density: float = -math.inf


def _greedy_alive_set(h, floor):
    """Greedily shrink the alive set, keeping the one with least mean |fiber correlation|."""
    alive = list(range(h.n))
    best = (float(np.mean(np.abs(fiber_means(h, alive)))), tuple(alive))
    while len(alive) > floor:
        scored = []
        for i in alive:
            trial = [a for a in alive if a != i]
            scored.append((float(np.mean(np.abs(fiber_means(h, trial)))), i))
        score, dropped = min(scored)
        alive.remove(dropped)
        if score < best[0]:
            best = (score, tuple(alive))
    return best[1]


def _z_candidates(p, k, samples, rng):
    if p ** k <= samples:
        grid = np.indices((p,) * k).reshape(k, -1).T if k else np.zeros((1, 0), dtype=np.int64)
        return [tuple(int(c) for c in row[::-1]) for row in grid]
    return [tuple(int(c) for c in rng.integers(0, p, size=k)) for _ in range(samples)]


def _survey_basis(f, P, basis, rng, params, current, floor_density, bump_density):
    """Collapse frequency of one basis, plus the best step and bump fibers found on it."""
    survey = _BasisSurvey()
    n_x = basis.n_prime
    floor = max(1, math.ceil(params.alive_fraction * n_x))
    z_count = f.n - n_x
    collapsed = 0.0
    for z in _z_candidates(f.p, z_count, params.z_samples, rng):
        head = [BasisChangeStep(basis), ZRestrictionStep(z)]
        g = replay_steps(f, head)
        Q = replay_steps_on_product(P, head)
        h = DenseFunction(g.p, g.n, g.values * np.conj(Q.values()), kind='complex')
        alive = _greedy_alive_set(h, floor)
        ys = np.abs(fiber_means(h, alive))
        means = np.real(fiber_means(g, alive))
        collapsed += float(np.mean(ys <= params.epsilon / 2 + 1e-15))
        survey.samples += 1

        k = int(np.argmax(means))
        if means[k] > survey.bump_density:
            survey.bump_density = float(means[k])
            survey.bump = (z, alive, k)
        eligible = np.nonzero((ys >= current + params.step_gain - 1e-12) & (means >= floor_density - 1e-12))[0]
        if eligible.size:
            k = int(eligible[np.argmax(ys[eligible])])
            if ys[k] > survey.step_value:
                survey.step_value = float(ys[k])
                survey.step = (z, alive, k)
    survey.collapse_frequency = collapsed / max(survey.samples, 1)
    return survey


def _fiber_steps(basis, z, alive, k, p):
    r = fiber_restriction(basis.n_prime, p, alive, k)
    return [BasisChangeStep(basis), ZRestrictionStep(z), RandomRestrictionStep(r)]


def robustify_correlation(f, P, params):
    """
    Returns RobustPair when no sampled basis shows a collapse frequency of at
    least delta, DensityBump when some fiber reaches E f + beta, and Exhausted
    when N rounds pass or a collapsing basis offers no admissible fiber.
    """
    if f.kind == 'complex' or f.sup_norm() > 1 + 1e-12:
        raise PreconditionError("robustify needs a real function bounded by 1")
    if not f.is_uniform:
        raise PreconditionError("robustify needs the uniform measure")
    start = abs(correlation(f, P))
    if start < params.epsilon - 1e-12:
        raise PreconditionError(f"|<f, P>| = {start:.3e} is below epsilon = {params.epsilon}")
    sampler = params.basis_sampler or random_special_basis
    base_mean = f.mean()
    bump_density = base_mean + params.beta

    current_f, current_P, steps, rounds = f, P, [], []
    for j in range(1, params.max_iters + 1):
        value = abs(correlation(current_f, current_P))
        floor_density = params.density_floor(base_mean, j)
        n_x = max(1, math.ceil(params.x_fraction * current_f.n))

        def run(s, current_f=current_f, current_P=current_P, value=value, floor_density=floor_density, n_x=n_x):
            rng = stream(params.seed, j, s)
            basis = sampler(current_f.p, current_f.n, n_x, rng)
            return basis, _survey_basis(current_f, current_P, basis, rng, params, value, floor_density, bump_density)

        with ThreadPoolExecutor(max_workers=max(1, params.threads)) as pool:
            surveys = list(pool.map(run, range(params.bases)))

        for basis, survey in surveys:
            if survey.bump is not None and survey.bump_density >= bump_density - 1e-12:
                new_steps = steps + _fiber_steps(basis, *survey.bump, current_f.p)
                bumped = replay_steps(f, new_steps)
                logger.info(f"Robustify round {j}: density bump to {bumped.mean():.4f}")
                return DensityBump(bumped, replay_steps_on_product(P, new_steps), new_steps, rounds,
                                   reason='fiber mean reached E f + beta')

        collapsing = [(b, pr) for b, pr in surveys if pr.collapse_frequency >= params.delta]
        worst = max((pr.collapse_frequency for _, pr in surveys), default=0.0)
        rounds.append(RobustRound(j, value, current_f.mean(), current_f.n, worst, len(surveys)))
        if not collapsing:
            logger.info(f"Robustify round {j}: correlation {value:.4f} robust on {len(surveys)} sampled bases")
            return RobustPair(current_f, current_P, steps, rounds, reason='no sampled basis collapses')

        stepping = [(b, pr) for b, pr in collapsing if pr.step is not None]
        if not stepping:
            logger.warning(f"Robustify round {j}: collapse frequency {worst:.3f} but no admissible fiber")
            return Exhausted(current_f, current_P, steps, rounds, reason='collapse without admissible fiber')
        basis, survey = max(stepping, key=lambda item: item[1].step_value)
        steps = steps + _fiber_steps(basis, *survey.step, current_f.p)
        current_f = replay_steps(f, steps)
        current_P = replay_steps_on_product(P, steps)
        logger.info(f"Robustify round {j}: correlation {value:.4f} -> {survey.step_value:.4f} on n={current_f.n}")

    return Exhausted(current_f, current_P, steps, rounds, reason=f'no robust pair within {params.max_iters} rounds')
