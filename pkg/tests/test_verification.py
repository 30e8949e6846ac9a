import math

from pytest import mark, raises

from apfree_app.services.verification import REGISTRY, checks, run_suite
from apfree_app.services.verification.harness import check
from apfree_app.utils.constants import VERIFY_SUITES
from apfree_app.utils.errors import PreconditionError

ACCEPTANCE_COUNTS = {
    'parseval': 100,
    'efron_stein_reconstruction': 100,
    'inclusion_exclusion': 100,
    'level_weights_agree': 100,
    'spectral_bound': 50,
    'free_set_only_trivial': 50,
    'dual_path': 100,
    'closure_materialization': 200,
    'freeness_preserved': 1000,
    'increment_step_corpus': 10,
}


def registered(check_id):
    return next(entry for suite in VERIFY_SUITES for entry in REGISTRY[suite] if entry.id == check_id)


def test_every_suite_has_checks():
    run_suite('core', 1, seed=0)
    assert all(REGISTRY[suite] for suite in VERIFY_SUITES)
    ids = [entry.id for suite in VERIFY_SUITES for entry in REGISTRY[suite]]
    assert len(ids) == len(set(ids))


def test_checks_carry_their_acceptance_counts():
    assert {check_id: registered(check_id).default_trials for check_id in ACCEPTANCE_COUNTS} == ACCEPTANCE_COUNTS
    assert registered('closure_materialization').tolerance == 1e-10
    assert registered('dual_path').tolerance == 1e-8


def test_default_trials_come_from_the_check(monkeypatch):
    seen = []
    monkeypatch.setitem(REGISTRY, 'core', [])

    @check('core', 'counted', tolerance=0, default_trials=1000)
    def counted(trials, seed):
        seen.append(trials)
        return 0, {}

    [result] = run_suite('core', None, seed=0)
    assert seen == [1000]
    assert result.trials == 1000


def test_explicit_trials_are_not_truncated(monkeypatch):
    seen = []
    monkeypatch.setitem(REGISTRY, 'core', [])

    @check('core', 'counted', tolerance=0, default_trials=10)
    def counted(trials, seed):
        seen.append(trials)
        return 0, {}

    [result] = run_suite('core', 1200, seed=0)
    assert seen == [1200]
    assert result.trials == 1200


def test_reported_trials_match_the_request():
    results = run_suite('chains', 7, seed=4)
    assert {r.trials for r in results} == {7}
    assert all(r.passed for r in results)


@mark.parametrize("suite", ['core', 'chains', 'embeddings'])
def test_suite_passes(suite):
    results = run_suite(suite, 2, seed=17)
    assert results
    assert all(r.passed for r in results), [r.to_dict() for r in results if not r.passed]
    assert {r.suite for r in results} == {suite}


def test_injected_fault_fails_every_check():
    results = run_suite('core', 1, seed=17, inject_fault=True)
    assert results
    assert not any(r.passed for r in results)
    assert all(r.tolerance < 0 for r in results)


@mark.parametrize("trials", [0, -3, 1.5, True])
def test_trials_must_be_positive_integers(trials):
    with raises(PreconditionError):
        run_suite('core', trials, seed=1)


def test_unknown_suite():
    with raises(PreconditionError):
        run_suite('nothing', 1, seed=1)


def test_checks_are_seeded():
    first = run_suite('funcspace', 1, seed=5)
    second = run_suite('funcspace', 1, seed=5)
    assert [r.worst_deviation for r in first] == [r.worst_deviation for r in second]
    assert all(r.passed for r in first), [r.id for r in first if not r.passed]


def test_second_moment_floor_check():
    worst, detail = checks.second_moment_floor(6, seed=3)
    assert worst <= 1e-9
    assert detail == {'p': 3, 'n': 4}


def test_sampled_event_check_uses_ten_thousand_samples():
    worst, detail = checks.restriction_event_sampled(1, seed=8)
    assert worst <= 0
    assert detail['samples'] == 10 ** 4
    assert detail['trial_0'] >= 1 / (2 * math.e)


@mark.slow
def test_increment_step_corpus_check():
    failures, detail = checks.increment_step_corpus(3, seed=0)
    assert failures == 0, detail
    assert [entry['n'] for entry in detail.values()] == [8, 9, 10]


@mark.slow
def test_all_suites_pass():
    results = run_suite('all', 2, seed=2024)
    assert all(r.passed for r in results), [r.id for r in results if not r.passed]
