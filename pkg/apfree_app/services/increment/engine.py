"""
The density increment step for restricted-AP-free sets and its iteration.

A step takes a free set A of density alpha and looks for a free set of larger
density on a not-much-smaller cube. Branches, in order:

  low_weight   W = E[f(x+a) f(x+2a)] is small, so f - alpha has low-degree
               weight and some restriction is denser.
  correlation  otherwise f - alpha correlates with a product function; the
               pair is made robust (robust_bump may end the step) and the
               product is cancelled on blocks of equal factors (pigeonhole).
  fallback     direct search over restrictions to the allowed dimension.

Every candidate is checked free before it is accepted; the densest candidate
that keeps enough coordinates wins.
"""
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from apfree_app.services.algebra.fields import difference_vectors, digits_table, encode_digits
from apfree_app.services.analysis.chains import ap_difference_chain, apply_tensor
from apfree_app.services.analysis.funcspace import DenseFunction, inner_product, low_degree_weight
from apfree_app.services.analysis.restrictions import (
    fiber_means,
    fiber_restriction,
    restriction_bump_search,
)
from apfree_app.services.increment.config import reference_formulas
from apfree_app.services.increment.trace import IncrementTrace
from apfree_app.services.progressions.aps import is_restricted_ap_free, progression_count
from apfree_app.services.rng import stream
from apfree_app.services.structure.bases import SpecialBasis
from apfree_app.services.structure.operations import (
    BasisChangeStep,
    CoordinateDropStep,
    RandomRestrictionStep,
    ZRestrictionStep,
    replay_steps,
    replay_steps_on_product,
)
from apfree_app.services.structure.products import (
    ProductFunction,
    best_character_correlation,
    correlation,
    find_correlated_restriction,
    product_ascent_search,
)
from apfree_app.services.structure.robust import DensityBump, RobustifyParams, robustify_correlation
from apfree_app.utils.constants import (
    ASCENT_IMPROVEMENT_TOL,
    CROSS_CHECK_TOL,
    ENDGAME_DENSITY,
    ENDGAME_MIN_DIMENSION,
    EXACT_TOL,
    ROOT_OF_UNITY_TOL,
)
from apfree_app.utils.errors import ConsistencyError, NotFreeError, PreconditionError

logger = logging.getLogger(__name__)

# stream ids of the branches
LOW_WEIGHT, CORRELATION, ASCENT, ROBUST, PIGEONHOLE, FALLBACK = range(6)

FINAL_BRANCHES = ('low_weight', 'robust_bump', 'pigeonhole', 'fallback')


def _subseed(seed, counter, branch):
    return int(stream(seed, counter, branch).integers(0, 2 ** 62))


@dataclass
class BranchOutcome:
    branch: str
    status: str
    function: DenseFunction = None
    steps: list = field(default_factory=list)
    product: ProductFunction = None
    correlation: float = None
    diagnostics: dict = field(default_factory=dict)

    @property
    def is_candidate(self):
        return self.status == 'candidate'

    @property
    def density(self):
        return self.function.mean() if self.function is not None else None

    @property
    def n(self):
        return self.function.n if self.function is not None else None

    def to_dict(self):
        return {
            'branch': self.branch,
            'status': self.status,
            'n': self.n,
            'density': self.density,
            'correlation': self.correlation,
            'steps': len(self.steps),
            'diagnostics': self.diagnostics,
        }


def pair_correlation_W(f, method='chain'):
    """
    W = E_{x,a}[f(x+a) f(x+2a)] = <f, T^{(x)n} f> with T the AP difference chain.

    'direct' sums f(y) f(y+a) over every difference vector a; 'both' checks
    the two agree.
    """
    if f.kind != 'boolean':
        raise PreconditionError("W is defined for boolean functions")
    if method not in ('chain', 'direct', 'both'):
        raise PreconditionError(f"unknown method: {method}")
    chain_value = direct_value = None
    if method in ('chain', 'both'):
        chain_value = float(np.real(inner_product(f, apply_tensor(ap_difference_chain(f.p), f))))
    if method in ('direct', 'both'):
        digits = digits_table(f.p, f.n)
        total = 0.0
        for a in difference_vectors(f.n):
            total += float(np.dot(f.values, f.values[encode_digits(digits + a, f.p)]))
        direct_value = total / (f.size * 3 ** f.n)
    if method == 'both' and abs(chain_value - direct_value) > CROSS_CHECK_TOL:
        raise ConsistencyError(f"W disagrees: chain {chain_value} vs direct {direct_value}")
    return chain_value if chain_value is not None else direct_value


def _check_free_input(f, cfg):
    if f.kind != 'boolean':
        raise PreconditionError("the increment engine needs a boolean function")
    if not f.is_uniform:
        raise PreconditionError("the increment engine needs the uniform measure")
    alpha = f.mean()
    if not 0 < alpha < 1:
        raise PreconditionError(f"density must lie in (0, 1), got {alpha}")
    result = is_restricted_ap_free(f, cfg.differences)
    if not result.free:
        raise NotFreeError(result.witness)
    return alpha


def low_weight_branch(f, cfg, W=None, counter=0):
    """Restriction bump when W <= low_weight_factor * alpha^2, else pass."""
    alpha = f.mean()
    if alpha <= 0:
        raise PreconditionError("empty set")
    W = pair_correlation_W(f) if W is None else W
    threshold = cfg.low_weight_factor * alpha ** 2
    diagnostics = {'W': W, 'threshold': threshold}
    if W > threshold:
        return BranchOutcome('low_weight', 'pass', diagnostics=diagnostics)

    weight = low_degree_weight(f.centered(), cfg.degree_cap)
    diagnostics.update(low_degree_weight=weight, surrogate=alpha ** 4, surrogate_met=weight >= alpha ** 4)
    logger.info(f"Low-weight branch active: W={W:.3e}, W_<=d={weight:.3e}")
    if weight <= EXACT_TOL:
        return BranchOutcome('low_weight', 'fail', diagnostics=diagnostics)
    bump = restriction_bump_search(f, cfg.degree_cap, weight, samples=cfg.samples,
                                   seed=_subseed(cfg.seed, counter, LOW_WEIGHT))
    diagnostics['bump'] = bump.to_dict()
    if bump.restriction is None or bump.density <= alpha + EXACT_TOL:
        return BranchOutcome('low_weight', 'fail', diagnostics=diagnostics)
    step = RandomRestrictionStep(bump.restriction)
    return BranchOutcome('low_weight', 'candidate', function=step.apply(f), steps=[step], diagnostics=diagnostics)


def correlation_branch(f, cfg, W=None, counter=0):
    """
    Product function correlated with f - alpha, after at most one random
    restriction. The progression identity |3^-n alpha - alpha W| is computed
    both from the free-set formula and from the progression count.
    """
    alpha = f.mean()
    W = pair_correlation_W(f) if W is None else W
    if W <= cfg.low_weight_factor * alpha ** 2:
        raise PreconditionError("correlation branch needs W above the low-weight threshold")

    n, p = f.n, f.p
    count = progression_count(f, include_trivial=True)
    lam = count / (f.size * 3 ** n)
    floor = alpha / 3 ** n
    via_count = lam - alpha * W
    via_identity = floor - alpha * W
    if abs(via_count - via_identity) > EXACT_TOL:
        raise ConsistencyError(f"progression identity fails: {via_count} vs {via_identity}")
    diagnostics = {
        'W': W,
        'lambda': lam,
        'identity': abs(via_identity),
        'identity_bound': alpha ** 3 / 200,
        'size_floor_met': 3.0 ** -n <= alpha ** 2 / 200,
    }
    diagnostics['bound_holds'] = diagnostics['identity'] >= diagnostics['identity_bound']
    if not diagnostics['size_floor_met']:
        logger.info(f"Correlation branch below size floor: 3^-{n} > alpha^2/200")

    centered = DenseFunction(p, n, f.values - alpha, kind='real')
    best = best_character_correlation(centered)
    P = ProductFunction.from_character(best.alpha, p)
    value = abs(correlation(centered, P))
    oracle = 'character'
    if cfg.use_ascent:
        ascent = product_ascent_search(centered, P.group, restarts=cfg.ascent_restarts,
                                       seed=_subseed(cfg.seed, counter, ASCENT), init=P, threads=cfg.threads)
        if ascent.correlation > value + ASCENT_IMPROVEMENT_TOL:
            P, value, oracle = ascent.product, ascent.correlation, 'ascent'
    diagnostics.update(oracle=oracle, character=list(best.alpha), correlation=value)

    if value >= cfg.epsilon:
        return BranchOutcome('correlation', 'candidate', function=f, product=P, correlation=value,
                             diagnostics=diagnostics)
    found = find_correlated_restriction(
        f, P, cfg.degree_cap, cfg.samples,
        seed=_subseed(cfg.seed, counter, CORRELATION),
        min_correlation=cfg.correlation_floor_after_restriction,
        min_density=alpha - cfg.eta,
        keep_prob=cfg.restriction_keep_prob,
    )
    if found is None:
        logger.info(f"Correlation branch failed: |<f - alpha, P>| = {value:.4f} and no restriction lifts it")
        return BranchOutcome('correlation', 'fail', diagnostics=diagnostics)
    step = RandomRestrictionStep(found.restriction)
    diagnostics['restriction_attempts'] = found.attempts
    return BranchOutcome('correlation', 'candidate', function=step.apply(f), steps=[step],
                         product=P.restrict(found.restriction), correlation=found.correlation,
                         diagnostics=diagnostics)


def _largest_class(P):
    classes = {}
    for i, row in enumerate(P.root_indices()):
        classes.setdefault(tuple(int(k) for k in row), []).append(i)
    return max(classes.values(), key=lambda members: (len(members), -members[0]))


def pigeonhole_block_step(f, P, cfg, counter=0):
    """
    Cancel P on blocks of r coordinates sharing one factor.

    Blocks come from the largest class of identical factors; a z-part is
    drawn until enough blocks have all shifts zero (z = 0 otherwise), the
    x-coordinates of the other blocks are fixed to the densest fiber, and the
    restricted product is asserted constant.
    """
    if f.kind != 'boolean':
        raise PreconditionError("pigeonhole step needs a boolean function")
    if (P.p, P.n) != (f.p, f.n):
        raise PreconditionError("product and function live on different spaces")
    p, n = f.p, f.n
    r = cfg.block(P.order)
    R = _largest_class(P)
    keep = len(R) - len(R) % r
    blocks = [R[k:k + r] for k in range(0, keep, r)]
    diagnostics = {'class_size': len(R), 'block_size': r, 'blocks': len(blocks)}
    if r % P.order:
        diagnostics['reason'] = 'block size is not a multiple of the group order'
        return BranchOutcome('pigeonhole', 'fail', diagnostics=diagnostics)
    if not blocks:
        return BranchOutcome('pigeonhole', 'fail', diagnostics=diagnostics)

    basis = SpecialBasis.from_blocks(p, n, blocks)
    m = len(blocks)
    need = max(1, math.ceil(cfg.good_block_fraction * m))
    rng = stream(cfg.seed, counter, PIGEONHOLE)
    z, good = None, None
    budget = cfg.good_z_budget(p, r)
    for attempt in range(budget):
        candidate = rng.integers(0, p, size=n - m)
        good_blocks = [j for j, shifts in enumerate(basis.block_shifts(candidate)) if not any(shifts)]
        if len(good_blocks) >= need:
            z, good = candidate, good_blocks
            diagnostics['z_attempts'] = attempt + 1
            break
    if z is None:
        logger.warning(f"No good z in {budget} samples; using z = 0")
        z = np.zeros(n - m, dtype=np.int64)
        good = list(range(m))
        diagnostics['z_attempts'] = budget
        diagnostics['z_fallback'] = True

    head = [CoordinateDropStep(R[keep:])] if keep < len(R) else []
    head += [BasisChangeStep(basis), ZRestrictionStep(z)]
    g_z = replay_steps(f, head)
    Q = replay_steps_on_product(P, head)
    means = fiber_means(g_z, good)
    k = int(np.argmax(means))
    fix = RandomRestrictionStep(fiber_restriction(m, p, tuple(good), k))
    g = fix.apply(g_z)
    values = Q.restrict(fix.restriction).values()
    spread = float(np.max(np.abs(values - values[0])))
    diagnostics.update(good_blocks=len(good), product_spread=spread)
    if spread > ROOT_OF_UNITY_TOL:
        raise ConsistencyError(f"restricted product is not constant (spread {spread:.3e})")
    return BranchOutcome('pigeonhole', 'candidate', function=g, steps=head + [fix], diagnostics=diagnostics)


def _structure_branches(f, found, cfg, counter):
    """Robustify the correlated pair, then cancel the product on blocks."""
    alpha = f.mean()
    f1, P1 = found.function, found.product
    centered = DenseFunction(f1.p, f1.n, f1.values - alpha, kind='real')
    value = abs(correlation(centered, P1))
    outcomes = []
    steps = list(found.steps)
    if value > EXACT_TOL and f1.n > 1:
        params = RobustifyParams(
            epsilon=min(value, cfg.correlation_floor_after_restriction, 1 - EXACT_TOL),
            delta=cfg.delta,
            beta=cfg.beta,
            max_iters=cfg.max_iters,
            bases=cfg.robust_bases,
            z_samples=cfg.robust_z_samples,
            seed=_subseed(cfg.seed, counter, ROBUST),
            threads=cfg.threads,
        )
        robust = robustify_correlation(centered, P1, params)
        steps += robust.steps
        summary = robust.to_dict()
        summary.pop('steps')
        if isinstance(robust, DensityBump):
            outcomes.append(BranchOutcome('robust_bump', 'candidate', function=replay_steps(f, steps), steps=steps,
                                          product=robust.product, diagnostics=summary))
            return outcomes
        outcomes.append(BranchOutcome('robustify', robust.kind, diagnostics=summary))
        f1, P1 = replay_steps(f, steps), robust.product
    block = pigeonhole_block_step(f1, P1, cfg, counter)
    if block.is_candidate:
        block.steps = steps + block.steps
    outcomes.append(block)
    return outcomes


def restriction_fallback(f, floor_n, cfg, counter=0):
    """Densest fiber over sampled alive sets of exactly floor_n coordinates."""
    rng = stream(cfg.seed, counter, FALLBACK)
    best = (-1.0, None)
    seen = set()
    for _ in range(cfg.samples):
        alive = tuple(sorted(int(i) for i in rng.choice(f.n, size=floor_n, replace=False)))
        if alive in seen:
            continue
        seen.add(alive)
        means = fiber_means(f, alive)
        k = int(np.argmax(means))
        if means[k] > best[0] + EXACT_TOL:
            best = (float(means[k]), fiber_restriction(f.n, f.p, alive, k))
    diagnostics = {'alive_sets': len(seen), 'density': best[0]}
    if best[1] is None or best[0] <= f.mean() + EXACT_TOL:
        return BranchOutcome('fallback', 'fail', diagnostics=diagnostics)
    step = RandomRestrictionStep(best[1])
    return BranchOutcome('fallback', 'candidate', function=step.apply(f), steps=[step], diagnostics=diagnostics)


@dataclass
class StepResult:
    status: str
    function: DenseFunction
    trace: IncrementTrace
    alpha: float
    W: float
    branch: str = None
    outcomes: list = field(default_factory=list)

    @property
    def stuck(self):
        return self.status == 'stuck'

    @property
    def gain(self):
        return self.function.mean() - self.alpha

    def to_dict(self):
        return {
            'status': self.status,
            'branch': self.branch,
            'alpha': self.alpha,
            'density': self.function.mean(),
            'gain': self.gain,
            'n_in': self.trace.n,
            'n_out': self.function.n,
            'W': self.W,
            'outcomes': [o.to_dict() for o in self.outcomes],
        }


def increment_step(f, cfg, counter=0):
    """
    One density increment. Returns StepResult with status 'increment' and a
    free g of strictly larger density on n'' >= ceil(min_dimension_fraction * n)
    coordinates, or status 'stuck' with f unchanged and every branch's diagnostics.
    """
    alpha = _check_free_input(f, cfg)
    floor_n = max(1, math.ceil(cfg.min_dimension_fraction * f.n))
    W = pair_correlation_W(f)
    logger.info(f"Increment step {counter}: n={f.n} alpha={alpha:.4f} W={W:.4e}")

    outcomes = [low_weight_branch(f, cfg, W, counter)]
    if outcomes[0].status == 'pass':
        found = correlation_branch(f, cfg, W, counter)
        outcomes.append(found)
        if found.is_candidate:
            outcomes.extend(_structure_branches(f, found, cfg, counter))
    if cfg.fallback:
        outcomes.append(restriction_fallback(f, floor_n, cfg, counter))

    accepted = []
    for outcome in outcomes:
        if not outcome.is_candidate or outcome.branch not in FINAL_BRANCHES:
            continue
        if outcome.n < floor_n or outcome.density <= alpha + EXACT_TOL:
            outcome.diagnostics['rejected'] = 'dimension or density'
            continue
        result = is_restricted_ap_free(outcome.function, cfg.differences)
        if not result.free:
            raise ConsistencyError(f"{outcome.branch} produced a set with a progression: {result.witness}")
        accepted.append(outcome)

    trace = IncrementTrace(f.p, f.n, cfg.seed)
    if not accepted:
        logger.info(f"Increment step {counter}: stuck at alpha={alpha:.4f}")
        return StepResult('stuck', f, trace, alpha, W, outcomes=outcomes)
    best = max(accepted, key=lambda o: (o.density, o.n, -FINAL_BRANCHES.index(o.branch)))
    g = trace.record(f, best.steps, best.branch)
    if not np.array_equal(g.values, best.function.values):
        raise ConsistencyError("recorded steps do not reproduce the selected candidate")
    logger.info(f"Increment step {counter}: {best.branch} gives density {g.mean():.4f} on n={g.n}")
    return StepResult('increment', g, trace, alpha, W, branch=best.branch, outcomes=outcomes)


def union_bound_endgame(f, max_work=None):
    """
    Density >= 0.99 forces Lambda(f, f, f) >= 1 - 3(1 - alpha), which exceeds the
    3^-n alpha a free set must have; the exact Lambda is added when affordable.
    """
    alpha = f.mean()
    bound = 1 - 3 * (1 - alpha)
    floor = alpha / 3 ** f.n
    report = {
        'density': alpha,
        'n': f.n,
        'applies': alpha >= ENDGAME_DENSITY and f.n >= ENDGAME_MIN_DIMENSION,
        'lambda_lower_bound': bound,
        'trivial_floor': floor,
        'contradiction': bound > floor,
        'lambda': None,
    }
    if max_work is None or f.size * 3 ** f.n <= max_work:
        report['lambda'] = progression_count(f, include_trivial=True) / (f.size * 3 ** f.n)
    return report


@dataclass
class RunResult:
    status: str
    function: DenseFunction
    trace: IncrementTrace
    densities: list
    dimensions: list
    steps: list = field(default_factory=list)
    endgame: dict = None

    def to_dict(self):
        return {
            'status': self.status,
            'densities': self.densities,
            'dimensions': self.dimensions,
            'iterations': len(self.steps),
            'steps': [s.to_dict() for s in self.steps],
            'endgame': self.endgame,
            'reference_formulas': reference_formulas(),
        }


def increment_run(f, cfg, max_iters, min_dimension=1, max_work=None):
    """
    Iterate increment_step until the density reaches 0.99, a step is stuck,
    the dimension floor is hit or max_iters steps are taken.
    """
    _check_free_input(f, cfg)
    trace = IncrementTrace(f.p, f.n, cfg.seed)
    densities, dimensions, steps = [f.mean()], [f.n], []
    current, status, endgame = f, 'max_iters', None
    for k in range(max_iters):
        if current.mean() >= ENDGAME_DENSITY:
            endgame = union_bound_endgame(current, max_work)
            status = 'endgame'
            break
        if current.n <= min_dimension:
            status = 'dimension_floor'
            break
        result = increment_step(current, cfg, counter=k)
        steps.append(result)
        if result.stuck:
            status = 'stuck'
            break
        if result.function.mean() <= densities[-1]:
            raise ConsistencyError("accepted step did not increase the density")
        trace.extend(result.trace)
        current = result.function
        densities.append(current.mean())
        dimensions.append(current.n)
    logger.info(f"Increment run ended ({status}) after {len(steps)} steps at density {current.mean():.4f}")
    return RunResult(status, current, trace, densities, dimensions, steps, endgame)
