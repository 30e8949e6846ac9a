import math

import numpy as np
from pytest import approx, mark, raises

from apfree_app.services.algebra.groups import FiniteAbelianGroup
from apfree_app.services.analysis.funcspace import DenseFunction
from apfree_app.services.analysis.restrictions import Restriction
from apfree_app.services.increment import engine
from apfree_app.services.increment import (
    IncrementConfig,
    IncrementTrace,
    StepResult,
    correlation_branch,
    increment_run,
    increment_step,
    low_weight_branch,
    pair_correlation_W,
    pigeonhole_block_step,
    reference_formulas,
    regression_config,
    replay_trace,
    restriction_fallback,
    union_bound_endgame,
)
from apfree_app.services.progressions.aps import is_restricted_ap_free, planted_free_set
from apfree_app.services.structure.operations import RandomRestrictionStep, replay_steps
from apfree_app.services.structure.products import ProductFunction
from apfree_app.utils.errors import ConfigError, ConsistencyError, FormatError, NotFreeError, PreconditionError

BASE = {'degree_cap': 4, 'epsilon': 0.05, 'beta': 0.01, 'delta': 0.1, 'max_iters': 2}


def planted(n=4, seed=3):
    return planted_free_set(5, n, (1,) + (0,) * (n - 1), seed=seed).to_function()


def test_config_from_dict_fills_defaults():
    cfg = IncrementConfig.from_dict(dict(BASE, seed=5))
    assert cfg.degree_cap == 4
    assert cfg.seed == 5
    assert cfg.restriction_keep_prob == approx(1 / 8)
    assert cfg.correlation_floor_after_restriction == approx(0.05 / math.sqrt(2 * math.e))
    assert IncrementConfig.from_dict(cfg.to_dict()) == cfg


def test_config_requires_fields():
    data = dict(BASE)
    del data['beta']
    with raises(ConfigError) as excinfo:
        IncrementConfig.from_dict(data)
    assert excinfo.value.field == 'beta'


def test_config_rejects_unknown_fields():
    with raises(ConfigError) as excinfo:
        IncrementConfig.from_dict(dict(BASE, gamma=0.1))
    assert excinfo.value.field == 'gamma'


@mark.parametrize("field, value", [
    ('epsilon', 1.5),
    ('delta', 0),
    ('degree_cap', 0),
    ('differences', [0, 1, 3]),
    ('samples', -1),
])
def test_config_rejects_bad_values(field, value):
    with raises(ConfigError) as excinfo:
        IncrementConfig.from_dict(dict(BASE, **{field: value}))
    assert excinfo.value.field == field


def test_regression_config_is_light():
    cfg = regression_config(seed=4)
    assert cfg.seed == 4
    assert not cfg.use_ascent
    assert IncrementConfig.from_dict(cfg.to_dict()) == cfg


def test_reference_formulas_are_reported():
    assert set(reference_formulas()) >= {'N', 'beta0', 'eta', 'epsilon_prime'}


def test_w_two_ways_agree():
    f = planted()
    assert pair_correlation_W(f, method='both') == approx(pair_correlation_W(f, method='direct'))


def test_w_of_full_space_is_one():
    assert pair_correlation_W(DenseFunction.constant(5, 2, 1.0, kind='boolean')) == approx(1.0)


def test_w_needs_a_set():
    with raises(PreconditionError):
        pair_correlation_W(DenseFunction.constant(5, 2, 0.5))


def test_low_weight_branch_passes_when_w_is_large():
    f = planted()
    outcome = low_weight_branch(f, IncrementConfig(), W=1.0)
    assert outcome.status == 'pass'


def test_low_weight_branch_finds_a_denser_line():
    point = DenseFunction.indicator(5, 2, [0])
    outcome = low_weight_branch(point, IncrementConfig(), W=0.0)
    assert outcome.is_candidate
    assert outcome.density >= 0.2
    assert np.array_equal(replay_steps(point, outcome.steps).values, outcome.function.values)


def test_correlation_branch_checks_the_progression_identity():
    f = planted()
    alpha = f.mean()
    W = pair_correlation_W(f)
    cfg = IncrementConfig(seed=2, samples=8, ascent_restarts=2)
    outcome = correlation_branch(f, cfg, W)
    assert outcome.branch == 'correlation'
    assert outcome.diagnostics['identity'] == approx(abs(alpha / 81 - alpha * W), abs=1e-12)
    assert outcome.status in ('candidate', 'fail')
    if outcome.is_candidate:
        assert outcome.correlation >= cfg.correlation_floor_after_restriction - 1e-12


def test_pigeonhole_cancels_identical_factors(rng):
    f = planted(n=5, seed=1)
    row = rng.integers(0, 5, size=5)
    P = ProductFunction.from_root_indices(FiniteAbelianGroup((5,)), 5, np.tile(row, (5, 1)))
    outcome = pigeonhole_block_step(f, P, IncrementConfig(seed=4))
    assert outcome.is_candidate
    assert outcome.diagnostics['product_spread'] <= 1e-9
    assert outcome.n == 1
    assert np.array_equal(replay_steps(f, outcome.steps).values, outcome.function.values)
    assert is_restricted_ap_free(outcome.function).free


def test_pigeonhole_needs_block_multiple_of_order():
    f = planted(n=5, seed=1)
    P = ProductFunction.constant(FiniteAbelianGroup((5,)), 5, 5)
    outcome = pigeonhole_block_step(f, P, IncrementConfig(block_size=3))
    assert outcome.status == 'fail'


def test_fallback_finds_the_densest_fiber():
    f = DenseFunction.indicator(5, 2, [0, 1])
    outcome = restriction_fallback(f, 1, IncrementConfig(samples=8, seed=1))
    assert outcome.is_candidate
    assert outcome.density >= 0.2
    assert outcome.n == 1


def test_step_rejects_sets_with_progressions():
    f = DenseFunction.indicator(5, 1, [0, 1, 2])
    with raises(NotFreeError) as excinfo:
        increment_step(f, IncrementConfig())
    assert excinfo.value.witness == ((0,), (1,))


def test_step_rejects_empty_sets():
    with raises(PreconditionError):
        increment_step(DenseFunction.constant(5, 2, 0.0, kind='boolean'), IncrementConfig())


@mark.slow
def test_increment_step_is_replayable():
    f = planted()
    cfg = IncrementConfig(seed=11, samples=16, robust_bases=2, robust_z_samples=4, ascent_restarts=2, max_iters=2)
    result = increment_step(f, cfg)
    assert result.status in ('increment', 'stuck')
    if result.stuck:
        assert result.function is f
        return
    g = result.function
    assert g.mean() > f.mean()
    assert g.n >= math.ceil(cfg.min_dimension_fraction * f.n)
    assert is_restricted_ap_free(g).free
    assert np.array_equal(replay_trace(f, result.trace, check_free=True).values, g.values)


def fallback_step(f, cfg, counter=0):
    """A step that always takes the densest fiber on one coordinate."""
    outcome = restriction_fallback(f, 1, cfg, counter)
    trace = IncrementTrace(f.p, f.n, cfg.seed)
    if not outcome.is_candidate:
        return StepResult('stuck', f, trace, f.mean(), 0.0, outcomes=[outcome])
    g = trace.record(f, outcome.steps, 'fallback')
    return StepResult('increment', g, trace, f.mean(), 0.0, branch='fallback', outcomes=[outcome])


def test_run_stops_at_the_dimension_floor(monkeypatch):
    monkeypatch.setattr(engine, 'increment_step', fallback_step)
    f = DenseFunction.indicator(5, 2, [0, 1])
    result = increment_run(f, IncrementConfig(samples=8, seed=1), max_iters=5)
    assert result.status == 'dimension_floor'
    assert result.dimensions == [2, 1]
    assert result.densities[0] == approx(2 / 25)
    assert result.densities[1] >= 0.2
    assert np.array_equal(replay_trace(f, result.trace).values, result.function.values)


def test_run_without_steps_below_the_floor():
    f = DenseFunction.indicator(5, 3, [0])
    result = increment_run(f, IncrementConfig(), max_iters=5, min_dimension=3)
    assert result.status == 'dimension_floor'
    assert result.steps == []
    assert result.function is f
    assert result.to_dict()['iterations'] == 0


def test_run_stops_when_a_step_is_stuck(monkeypatch):
    def stuck(f, cfg, counter=0):
        return StepResult('stuck', f, IncrementTrace(f.p, f.n, cfg.seed), f.mean(), 0.0)

    monkeypatch.setattr(engine, 'increment_step', stuck)
    f = planted(n=3)
    result = increment_run(f, IncrementConfig(), max_iters=5)
    assert result.status == 'stuck'
    assert len(result.steps) == 1
    assert result.densities == [f.mean()]
    assert result.function is f


def test_run_honours_max_iters(monkeypatch):
    monkeypatch.setattr(engine, 'increment_step', fallback_step)
    f = DenseFunction.indicator(5, 3, [0, 7])
    result = increment_run(f, IncrementConfig(samples=8, seed=2), max_iters=1)
    assert result.status == 'max_iters'
    assert len(result.steps) == 1
    assert result.densities[1] > result.densities[0]


def test_run_requires_increasing_density(monkeypatch):
    def flat(f, cfg, counter=0):
        return StepResult('increment', f, IncrementTrace(f.p, f.n, cfg.seed), f.mean(), 0.0)

    monkeypatch.setattr(engine, 'increment_step', flat)
    with raises(ConsistencyError):
        increment_run(planted(n=3), IncrementConfig(), max_iters=3)


def test_run_rejects_sets_with_progressions():
    with raises(NotFreeError) as excinfo:
        increment_run(DenseFunction.indicator(5, 2, [0, 1, 2]), IncrementConfig(), max_iters=3)
    assert excinfo.value.witness == ((0, 0), (1, 0))


@mark.slow
def test_run_densities_increase():
    f = planted()
    cfg = IncrementConfig(seed=5, samples=16, robust_bases=2, robust_z_samples=4, ascent_restarts=2)
    result = increment_run(f, cfg, max_iters=3)
    assert result.status in ('stuck', 'dimension_floor', 'max_iters')
    assert all(b > a for a, b in zip(result.densities, result.densities[1:]))
    assert all(b <= a for a, b in zip(result.dimensions, result.dimensions[1:]))
    assert len(result.densities) == len([s for s in result.steps if not s.stuck]) + 1
    assert is_restricted_ap_free(result.function).free
    assert np.array_equal(replay_trace(f, result.trace, check_free=True).values, result.function.values)


def test_endgame_on_dense_sets():
    f = DenseFunction.constant(3, 2, 1.0, kind='boolean')
    report = union_bound_endgame(f)
    assert report['contradiction']
    assert report['lambda'] == approx(1.0)
    assert not report['applies']


def test_trace_round_trip_and_replay():
    f = planted()
    trace = IncrementTrace(5, 4, 7)
    g = trace.record(f, [RandomRestrictionStep(Restriction(4, (0, 1), (2, 3)))], 'fallback')
    loaded = IncrementTrace.from_jsonl(trace.to_jsonl())
    assert loaded.steps == trace.steps
    assert np.array_equal(replay_trace(f, loaded).values, g.values)


def test_trace_replay_detects_drift():
    f = planted()
    trace = IncrementTrace(5, 4, 7)
    trace.record(f, [RandomRestrictionStep(Restriction(4, (0, 1), (2, 3)))], 'fallback')
    trace.entries[0].after.density += 0.5
    with raises(ConsistencyError):
        replay_trace(f, trace)


def test_trace_replay_checks_the_input_space():
    trace = IncrementTrace(5, 3, 0)
    with raises(ConsistencyError):
        replay_trace(planted(), trace)


@mark.parametrize("text", ["", "not json\n", '{"p": 5}\n'])
def test_malformed_traces(text):
    with raises(FormatError):
        IncrementTrace.from_jsonl(text)
