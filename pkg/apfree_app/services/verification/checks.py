"""
Property checks, grouped by suite.

Each check returns (worst_deviation, detail). Sizes are kept small enough that
each check meets its acceptance count within a few minutes for `verify --suite all`.
"""
import math
import zlib

import numpy as np

from apfree_app.services.algebra.fields import PrimeField, decode_point, encode_point, rank_mod_p
from apfree_app.services.algebra.groups import FiniteAbelianGroup, char_power_trivial, root_of_unity
from apfree_app.services.analysis.chains import (
    ap_difference_chain,
    circulant_second_eigenvalue,
    correlation_lower_bound_check,
    identity_chain,
    second_eigenvalue,
    second_eigenvalue_modulus,
)
from apfree_app.services.analysis.funcspace import (
    DenseFunction,
    all_subsets,
    character_table,
    efron_stein_inclusion_exclusion,
    efron_stein_part,
    fourier_transform,
    inner_product,
    inverse_fourier_transform,
    level_weights,
    level_weights_efron_stein,
    low_degree_weight,
)
from apfree_app.services.analysis.restrictions import (
    restriction_correlation_event,
    restriction_event_exact,
    restriction_second_moment,
    sample_random_restriction,
)
from apfree_app.services.embeddings import (
    RelationLattice,
    universal_finite_embedding,
    verify_certificate,
    z_embedding,
)
from apfree_app.services.increment.config import IncrementConfig, regression_config
from apfree_app.services.increment.engine import increment_step, pair_correlation_W, pigeonhole_block_step
from apfree_app.services.increment.trace import IncrementTrace, replay_trace
from apfree_app.services.progressions.aps import (
    PointSet,
    greedy_free_set,
    is_restricted_ap_free,
    pairwise_connected,
    progression_count,
    regression_corpus,
    restricted_ap_distribution,
    triple_correlation,
)
from apfree_app.services.progressions.search import extremal_search
from apfree_app.services.rng import stream
from apfree_app.services.structure.bases import (
    BasisChangedView,
    apply_basis_change,
    product_closure_under_basis_change,
    random_special_basis,
)
from apfree_app.services.structure.operations import RandomRestrictionStep
from apfree_app.services.structure.products import (
    ProductFunction,
    has_product_structure,
    product_ascent_search,
)
from apfree_app.services.verification.harness import check
from apfree_app.utils.constants import CROSS_CHECK_TOL, DECOMPOSITION_TOL, EXACT_TOL
from apfree_app.utils.errors import ConsistencyError

GOLDEN_CONTRACTION = (1 + math.sqrt(5)) / 2 / 3
EXTREMAL_VALUES = {(3, 1): 2, (3, 2): 4, (5, 1): 2}
DECOMPOSITION_SHAPES = tuple((3, n) for n in range(1, 7)) + tuple((5, n) for n in range(1, 6))
FREE_SET_SHAPES = tuple((5, n) for n in range(1, 6)) + tuple((3, n) for n in range(1, 7))
DUAL_PATH_SHAPES = tuple((p, n) for p in (3, 5) for n in range(1, 5))
EVENT_SAMPLES = 10 ** 4
CORPUS_DIMENSIONS = (8, 10)
CORPUS_MIN_GAIN = 0.01


def _rng(seed, check_id, trial):
    return stream(seed, zlib.crc32(check_id.encode()), trial)


def _random_real(rng, p, n, measure=None):
    return DenseFunction(p, n, rng.uniform(-1, 1, p ** n), kind='real', measure=measure)


def _random_boolean(rng, p, n, density=0.5):
    return DenseFunction(p, n, (rng.random(p ** n) < density).astype(np.float64), kind='boolean')


def _random_measure(rng, p):
    weights = rng.uniform(0.5, 1.5, p)
    return weights / weights.sum()


def _random_bounded_complex(rng, p, n):
    """Values r e^{i theta} with r uniform in [0, 1]."""
    size = p ** n
    values = rng.uniform(0, 1, size) * np.exp(2j * np.pi * rng.uniform(0, 1, size))
    return DenseFunction(p, n, values, kind='complex')


def _random_free_set(rng, p, n):
    return greedy_free_set(p, n, rng.permutation(p ** n))


def _random_product(rng, group, p, n):
    return ProductFunction.from_root_indices(group, p, rng.integers(0, group.order, size=(n, p)))


# core

@check('core', 'field_inverse', tolerance=0)
def field_inverse(trials, seed):
    failures = 0
    for p in (3, 5, 7, 11, 13):
        field = PrimeField(p)
        failures += sum(field.mul(a, field.inv(a)) != 1 for a in range(1, p))
    return failures, {'primes': [3, 5, 7, 11, 13]}


@check('core', 'encode_decode', tolerance=0, default_trials=20)
def encode_decode(trials, seed):
    failures = 0
    for trial in range(trials):
        rng = _rng(seed, 'encode_decode', trial)
        p, n = int(rng.choice([3, 5, 7])), int(rng.integers(1, 5))
        for index in rng.integers(0, p ** n, size=16):
            failures += encode_point(decode_point(p, n, int(index))) != int(index)
    return failures, {}


@check('core', 'character_orthogonality', tolerance=1e-9, default_trials=20)
def character_orthogonality(trials, seed):
    worst = 0.0
    for trial in range(trials):
        rng = _rng(seed, 'character_orthogonality', trial)
        group = FiniteAbelianGroup(tuple(int(m) for m in rng.integers(2, 6, size=int(rng.integers(1, 3)))))
        elements = list(group.elements())
        table = np.array([[chi(h) for h in elements] for chi in group.characters()])
        gram = table @ table.conj().T / group.order
        worst = max(worst, float(np.max(np.abs(gram - np.eye(group.order)))))
    return worst, {}


@check('core', 'root_power', tolerance=1e-9)
def root_power(trials, seed):
    worst = 0.0
    for m in range(1, 13):
        values = [root_of_unity(k, m) for k in range(m)]
        char_power_trivial(values, m)
        worst = max(worst, max(abs(v ** m - 1) for v in values))
    return worst, {}


# funcspace

@check('funcspace', 'parseval', tolerance=1e-10, default_trials=100)
def parseval(trials, seed):
    worst = 0.0
    for trial in range(trials):
        rng = _rng(seed, 'parseval', trial)
        for p, n in DECOMPOSITION_SHAPES:
            f = _random_real(rng, p, n)
            coefficients = fourier_transform(f)
            worst = max(worst, abs(float(np.sum(np.abs(coefficients) ** 2)) - f.norm() ** 2))
            back = inverse_fourier_transform(coefficients, p, n)
            worst = max(worst, float(np.max(np.abs(back.values - f.values))))
    return worst, {'shapes': len(DECOMPOSITION_SHAPES)}


@check('funcspace', 'efron_stein_reconstruction', tolerance=DECOMPOSITION_TOL, default_trials=100)
def efron_stein_reconstruction(trials, seed):
    worst = 0.0
    for trial in range(trials):
        rng = _rng(seed, 'efron_stein_reconstruction', trial)
        for p, n in DECOMPOSITION_SHAPES:
            f = _random_real(rng, p, n, measure=_random_measure(rng, p))
            parts = [efron_stein_part(f, S) for S in all_subsets(n)]
            total = sum(part.values for part in parts)
            worst = max(worst, float(np.max(np.abs(total - f.values))))
            for a in range(len(parts)):
                for b in range(a + 1, len(parts)):
                    worst = max(worst, abs(inner_product(parts[a].part, parts[b].part)))
    return worst, {'shapes': len(DECOMPOSITION_SHAPES)}


@check('funcspace', 'inclusion_exclusion', tolerance=DECOMPOSITION_TOL, default_trials=100)
def inclusion_exclusion(trials, seed):
    worst = 0.0
    for trial in range(trials):
        rng = _rng(seed, 'inclusion_exclusion', trial)
        for p, n in DECOMPOSITION_SHAPES:
            f = _random_real(rng, p, n, measure=_random_measure(rng, p))
            for S in all_subsets(n):
                fast = efron_stein_part(f, S).values
                slow = efron_stein_inclusion_exclusion(f, S).values
                worst = max(worst, float(np.max(np.abs(fast - slow))))
    return worst, {'shapes': len(DECOMPOSITION_SHAPES)}


@check('funcspace', 'level_weights_agree', tolerance=DECOMPOSITION_TOL, default_trials=100)
def level_weights_agree(trials, seed):
    worst = 0.0
    for trial in range(trials):
        rng = _rng(seed, 'level_weights_agree', trial)
        for p, n in DECOMPOSITION_SHAPES:
            f = _random_real(rng, p, n)
            fourier_side = level_weights(f)
            worst = max(worst, float(np.max(np.abs(fourier_side - level_weights_efron_stein(f)))))
            worst = max(worst, abs(float(fourier_side.sum()) - f.norm() ** 2))
    return worst, {'shapes': len(DECOMPOSITION_SHAPES)}


@check('funcspace', 'second_moment_identity', tolerance=DECOMPOSITION_TOL, default_trials=10)
def second_moment_identity(trials, seed):
    """E[Z^2] over random restrictions equals sum_S ||f^S||^2 (1-q)^|S|."""
    worst = 0.0
    for trial in range(trials):
        rng = _rng(seed, 'second_moment_identity', trial)
        f = _random_real(rng, 3, 3, measure=_random_measure(rng, 3))
        q = float(rng.uniform(0.05, 0.95))
        expected = sum(efron_stein_part(f, S).norm() ** 2 * (1 - q) ** len(S) for S in all_subsets(f.n))
        worst = max(worst, abs(restriction_second_moment(f, q) - expected))
    return worst, {}


@check('funcspace', 'second_moment_floor', tolerance=1e-9, default_trials=30)
def second_moment_floor(trials, seed):
    """
    E[Z^2] >= alpha^2 + xi / e with keep probability 1/d, where xi is the weight
    of f - alpha on levels 1..d-1. Enumerated exactly at p=3, n=4.
    """
    worst = 0.0
    for trial in range(trials):
        rng = _rng(seed, 'second_moment_floor', trial)
        d = 2 + trial % 3
        f = _random_real(rng, 3, 4)
        xi = float(np.sum(level_weights(f.centered())[1:d]))
        shortfall = f.mean() ** 2 + xi / math.e - restriction_second_moment(f, 1.0 / d)
        worst = max(worst, shortfall)
    return worst, {'p': 3, 'n': 4}


@check('funcspace', 'restriction_event_floor', tolerance=0.0, default_trials=10)
def restriction_event_floor(trials, seed):
    worst = 0.0
    for trial in range(trials):
        rng = _rng(seed, 'restriction_event_floor', trial)
        g = _random_real(rng, 3, 4)
        d = int(rng.integers(1, 4))
        xi = low_degree_weight(g, d)
        estimate = restriction_event_exact(g, d, xi)
        worst = max(worst, estimate.floor - estimate.probability)
    return worst, {}


@check('funcspace', 'restriction_event_sampled', tolerance=0.0, default_trials=3)
def restriction_event_sampled(trials, seed):
    """Sampled event frequency on characters stays above xi/(2e) - 3 stderr."""
    worst, detail = 0.0, {'samples': EVENT_SAMPLES}
    for trial in range(trials):
        rng = _rng(seed, 'restriction_event_sampled', trial)
        d = int(rng.integers(1, 4))
        alpha = np.zeros(4, dtype=np.int64)
        support = rng.choice(4, size=int(rng.integers(1, d + 1)), replace=False)
        alpha[support] = rng.integers(1, 3, size=support.size)
        g = character_table(3, 4, alpha)
        estimate = restriction_correlation_event(g, d, low_degree_weight(g, d), EVENT_SAMPLES,
                                                 seed + trial)
        worst = max(worst, estimate.floor - 3 * estimate.stderr - estimate.probability)
        detail[f"trial_{trial}"] = estimate.probability
    return worst, detail


# chains

@check('chains', 'contraction_p5', tolerance=1e-8)
def contraction_p5(trials, seed):
    value = second_eigenvalue(ap_difference_chain(5))
    return abs(value - GOLDEN_CONTRACTION), {'lambda2': value, 'expected': GOLDEN_CONTRACTION}


@check('chains', 'circulant_agreement', tolerance=1e-9)
def circulant_agreement(trials, seed):
    worst, detail = 0.0, {}
    for p in (5, 7, 11, 13):
        chain = ap_difference_chain(p)
        exact = circulant_second_eigenvalue(p)
        worst = max(worst, abs(second_eigenvalue(chain) - exact), abs(second_eigenvalue_modulus(chain) - exact))
        detail[str(p)] = exact
    return worst, detail


@check('chains', 'spectral_bound', tolerance=1e-9, default_trials=50)
def spectral_bound(trials, seed):
    """The inequality chain of the low/high degree split on random boolean pairs."""
    chain = ap_difference_chain(5)
    worst, failures = 0.0, 0
    for trial in range(trials):
        rng = _rng(seed, 'spectral_bound', trial)
        f, g = _random_boolean(rng, 5, 4), _random_boolean(rng, 5, 4)
        report = correlation_lower_bound_check(f, g, chain, d=int(rng.integers(0, 4)))
        worst = max(worst, abs(report.inner - report.decomposition_sum))
        if not report.holds:
            failures += 1
    return (1.0 if failures else worst), {'failures': failures}


@check('chains', 'strong_connectivity', tolerance=0)
def strong_connectivity(trials, seed):
    wrong = sum(not ap_difference_chain(p).is_connected() for p in (5, 7, 11))
    wrong += identity_chain(3).is_connected()
    return wrong, {}


# aps

@check('aps', 'free_set_only_trivial', tolerance=EXACT_TOL, default_trials=50)
def free_set_only_trivial(trials, seed):
    """A free set meets only its a = 0 progressions, so Lambda = 3^-n mu(A)."""
    worst = 0.0
    for trial in range(trials):
        rng = _rng(seed, 'free_set_only_trivial', trial)
        p, n = FREE_SET_SHAPES[trial % len(FREE_SET_SHAPES)]
        A = _random_free_set(rng, p, n)
        if not is_restricted_ap_free(A).free or progression_count(A) != A.size:
            return 1.0, {'trial': trial, 'p': p, 'n': n}
        f = A.to_function()
        expected = A.size / p ** n / 3 ** n
        worst = max(worst, abs(triple_correlation(f, f, f).real - expected))
    return worst, {}


@check('aps', 'count_matches_lambda', tolerance=1e-8, default_trials=10)
def count_matches_lambda(trials, seed):
    worst = 0.0
    for trial in range(trials):
        rng = _rng(seed, 'count_matches_lambda', trial)
        f = _random_boolean(rng, 5, 3, density=float(rng.uniform(0.1, 0.6)))
        scaled = triple_correlation(f, f, f).real * 5 ** 3 * 3 ** 3
        worst = max(worst, abs(scaled - progression_count(PointSet.from_function(f))))
    return worst, {}


@check('aps', 'dual_path', tolerance=CROSS_CHECK_TOL, default_trials=100)
def dual_path(trials, seed):
    worst = 0.0
    for trial in range(trials):
        rng = _rng(seed, 'dual_path', trial)
        p, n = DUAL_PATH_SHAPES[trial % len(DUAL_PATH_SHAPES)]
        f, g, h = (_random_bounded_complex(rng, p, n) for _ in range(3))
        worst = max(worst, abs(triple_correlation(f, g, h, 'direct') - triple_correlation(f, g, h, 'fourier')))
    return worst, {}


@check('aps', 'pairwise_connected', tolerance=0)
def pairwise_connected_check(trials, seed):
    disconnected = 0
    for p in (3, 5, 7):
        disconnected += sum(not ok for ok in pairwise_connected(restricted_ap_distribution(p)).values())
    return disconnected, {}


@check('aps', 'extremal_oracle', tolerance=0)
def extremal_oracle(trials, seed):
    wrong, detail = 0, {}
    for (p, n), expected in EXTREMAL_VALUES.items():
        exhaustive = extremal_search(p, n, mode='exhaustive')
        bb = extremal_search(p, n, mode='bb')
        detail[f"{p},{n}"] = exhaustive.size
        wrong += (exhaustive.size != expected) + (bb.size != expected) + (not bb.optimal)
    return wrong, detail


# embeddings

@check('embeddings', 'ap_no_z_embedding', tolerance=0)
def ap_no_z_embedding(trials, seed):
    wrong = 0
    for p in (5, 7):
        mu = restricted_ap_distribution(p)
        wrong += z_embedding(mu.support, mu.alphabet_sizes).nontrivial
    return wrong, {}


@check('embeddings', 'universal_group_p5', tolerance=0)
def universal_group_p5(trials, seed):
    mu = restricted_ap_distribution(5)
    result = universal_finite_embedding(mu.support, mu.alphabet_sizes)
    wrong = (result.torsion != (5,)) + (not verify_certificate(result.universal, mu.support))
    return wrong, {'torsion': list(result.torsion)}


@check('embeddings', 'binary_support_embeds', tolerance=0)
def binary_support_embeds(trials, seed):
    support = ((0, 0, 0), (1, 1, 1))
    report = z_embedding(support, (2, 2, 2))
    ok = report.nontrivial and verify_certificate(report.certificate, support)
    return int(not ok), {}


@check('embeddings', 'modular_kernel_cross_check', tolerance=0, default_trials=20)
def modular_kernel_cross_check(trials, seed):
    """For prime m, the kernel of R mod m exceeds the free part iff m divides the torsion."""
    mu = restricted_ap_distribution(5)
    cases = [(mu.support, mu.alphabet_sizes)]
    for trial in range(trials):
        rng = _rng(seed, 'modular_kernel_cross_check', trial)
        atoms = {tuple(int(c) for c in rng.integers(0, 3, size=3)) for _ in range(int(rng.integers(2, 8)))}
        cases.append((tuple(sorted(atoms)), (3, 3, 3)))
    wrong = 0
    for support, sizes in cases:
        result = universal_finite_embedding(support, sizes)
        lattice = RelationLattice(sizes, support)
        for m in (2, 3, 5, 7):
            nullity = lattice.columns - rank_mod_p(lattice.rows(), m)
            divides = any(d % m == 0 for d in result.torsion)
            wrong += (nullity > result.free_rank) != divides
    return wrong, {'supports': len(cases)}


# structure

@check('structure', 'closure_materialization', tolerance=1e-10, default_trials=200)
def closure_materialization(trials, seed):
    worst = 0.0
    for trial in range(trials):
        rng = _rng(seed, 'closure_materialization', trial)
        p, n = 5, 3
        P = _random_product(rng, FiniteAbelianGroup((p,)), p, n)
        basis = random_special_basis(p, n, int(rng.integers(1, n + 1)), rng, completion='random')
        z = rng.integers(0, p, size=n - basis.n_prime)
        view = BasisChangedView(P.materialize(), basis)
        fiber = view.restrict_z(z).values
        closed = product_closure_under_basis_change(P, basis, z).values()
        worst = max(worst, float(np.max(np.abs(fiber - closed))))
        z_index = int(sum(int(c) * p ** k for k, c in enumerate(z)))
        block = p ** basis.n_prime
        changed = view.changed().values[z_index * block:(z_index + 1) * block]
        worst = max(worst, float(np.max(np.abs(changed - fiber))))
    return worst, {}


@check('structure', 'freeness_preserved', tolerance=0, default_trials=1000)
def freeness_preserved(trials, seed):
    """Restricting a free set along a special basis keeps it free, at (3, 4) and (5, 4)."""
    failures = 0
    for trial in range(trials):
        rng = _rng(seed, 'freeness_preserved', trial)
        for p, n in ((3, 4), (5, 4)):
            A = _random_free_set(rng, p, n).to_function()
            basis = random_special_basis(p, n, int(rng.integers(1, n + 1)), rng, completion='random')
            z = rng.integers(0, p, size=n - basis.n_prime)
            try:
                BasisChangedView(A, basis).restrict_z(z, check_free=True)
            except ConsistencyError:
                failures += 1
    return failures, {}


@check('structure', 'basis_change_mean', tolerance=1e-12, default_trials=20)
def basis_change_mean(trials, seed):
    worst = 0.0
    for trial in range(trials):
        rng = _rng(seed, 'basis_change_mean', trial)
        f = _random_real(rng, 5, 3)
        basis = random_special_basis(5, 3, int(rng.integers(1, 4)), rng, completion='random')
        g = apply_basis_change(f, basis)
        worst = max(worst, abs(g.mean() - f.mean()), float(np.max(np.abs(np.sort(g.values) - np.sort(f.values)))))
    return worst, {}


@check('structure', 'ascent_monotone', tolerance=0.0, default_trials=10)
def ascent_monotone(trials, seed):
    worst = 0.0
    for trial in range(trials):
        rng = _rng(seed, 'ascent_monotone', trial)
        f = _random_boolean(rng, 5, 3).centered()
        result = product_ascent_search(f, FiniteAbelianGroup((5,)), restarts=2, seed=seed + trial)
        steps = np.diff(result.trace)
        worst = max(worst, float(-steps.min()) if steps.size else 0.0)
    return worst, {}


@check('structure', 'rank_one', tolerance=0, default_trials=20)
def rank_one(trials, seed):
    wrong = 0
    for trial in range(trials):
        rng = _rng(seed, 'rank_one', trial)
        P = _random_product(rng, FiniteAbelianGroup((3, 2)), 5, 3)
        wrong += not has_product_structure(P.materialize())
        wrong += has_product_structure(_random_real(rng, 5, 3))
    return wrong, {}


# increment

@check('increment', 'pair_correlation_two_ways', tolerance=CROSS_CHECK_TOL, default_trials=10)
def pair_correlation_two_ways(trials, seed):
    worst = 0.0
    for trial in range(trials):
        rng = _rng(seed, 'pair_correlation_two_ways', trial)
        f = _random_boolean(rng, 5, 3)
        worst = max(worst, abs(pair_correlation_W(f, 'chain') - pair_correlation_W(f, 'direct')))
    return worst, {}


@check('increment', 'pigeonhole_constancy', tolerance=0, default_trials=10)
def pigeonhole_constancy(trials, seed):
    """Blocks of identical Z_5 factors cancel; the output stays free."""
    failures = 0
    group = FiniteAbelianGroup((5,))
    for trial in range(trials):
        rng = _rng(seed, 'pigeonhole_constancy', trial)
        f = _random_free_set(rng, 5, 6).to_function()
        row = rng.integers(0, 5, size=5)
        P = ProductFunction.from_root_indices(group, 5, np.tile(row, (6, 1)))
        outcome = pigeonhole_block_step(f, P, IncrementConfig(seed=seed + trial), counter=trial)
        if outcome.status != 'candidate' or not is_restricted_ap_free(outcome.function).free:
            failures += 1
    return failures, {}


@check('increment', 'trace_replay', tolerance=0, default_trials=10)
def trace_replay(trials, seed):
    failures = 0
    for trial in range(trials):
        rng = _rng(seed, 'trace_replay', trial)
        f = _random_boolean(rng, 3, 4)
        trace = IncrementTrace(3, 4, seed)
        steps = [RandomRestrictionStep(sample_random_restriction(4, 0.5, f.measure, seed, trial))]
        out = trace.record(f, steps, 'low_weight')
        try:
            replayed = replay_trace(f, IncrementTrace.from_jsonl(trace.to_jsonl()))
        except ConsistencyError:
            failures += 1
            continue
        failures += not replayed.equals(out)
    return failures, {}


@check('increment', 'increment_step_corpus', tolerance=0, default_trials=10)
def increment_step_corpus(trials, seed):
    """Planted instances at p=5, n in [8, 10]: each step gains density and stays free."""
    failures, detail = 0, {}
    for k, (beta, A) in enumerate(regression_corpus(seed, count=trials, p=5, n=CORPUS_DIMENSIONS)):
        f = A.to_function()
        result = increment_step(f, regression_config(seed + k), counter=k)
        g = result.function
        ok = (result.status == 'increment'
              and result.gain >= CORPUS_MIN_GAIN
              and g.n >= math.ceil(f.n / 5)
              and is_restricted_ap_free(g).free
              and np.array_equal(replay_trace(f, result.trace).values, g.values))
        failures += not ok
        detail[str(k)] = {'n': f.n, 'beta': list(beta), 'branch': result.branch, 'gain': result.gain}
    return failures, detail
