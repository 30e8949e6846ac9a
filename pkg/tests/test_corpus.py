import math

import numpy as np
from pytest import fixture, mark

from apfree_app.services.increment import increment_step, regression_config, replay_trace
from apfree_app.services.progressions.aps import is_restricted_ap_free, regression_corpus

CORPUS_SEED = 0
CORPUS_SIZE = 10


@fixture(scope='module')
def corpus():
    return regression_corpus(CORPUS_SEED, count=CORPUS_SIZE, p=5, n=(8, 10))


@mark.slow
@mark.parametrize("k", range(CORPUS_SIZE))
def test_planted_instance_increments(corpus, golden, k):
    beta, A = corpus[k]
    f = A.to_function()
    assert A.n == 8 + k % 3
    assert is_restricted_ap_free(f).free

    result = increment_step(f, regression_config(CORPUS_SEED + k), counter=k)
    g = result.function
    assert result.status == 'increment', [o.to_dict() for o in result.outcomes]
    assert result.gain >= 0.01
    assert g.n >= math.ceil(f.n / 5)
    assert is_restricted_ap_free(g).free
    assert np.array_equal(replay_trace(f, result.trace, check_free=True).values, g.values)
    golden(f"corpus_{k}.jsonl", result.trace.to_jsonl())
