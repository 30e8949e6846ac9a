"""
Executable property checks.

Each check runs a number of seeded trials and reports the worst deviation it
saw against its tolerance. Checks register themselves per suite.
"""
import logging
import time
from dataclasses import dataclass, field

import numpy as np

from apfree_app.utils.constants import VERIFY_SUITES
from apfree_app.utils.errors import PreconditionError

logger = logging.getLogger(__name__)

REGISTRY = {suite: [] for suite in VERIFY_SUITES}


@dataclass
class PropertyCheck:
    id: str
    suite: str
    trials: int
    worst_deviation: float
    tolerance: float
    passed: bool
    seconds: float = 0.0
    detail: dict = field(default_factory=dict)

    def to_dict(self):
        return dict(self.__dict__)


@dataclass(frozen=True)
class _Registered:
    id: str
    suite: str
    tolerance: float
    fn: object
    default_trials: int = 1


def check(suite, check_id, tolerance, default_trials=1):
    """
    Register fn(trials, seed) -> (worst_deviation, detail) under a suite.

    default_trials is the acceptance count, used when no trial count is given.
    """
    if suite not in REGISTRY:
        raise PreconditionError(f"unknown suite: {suite}")

    def decorator(fn):
        REGISTRY[suite].append(_Registered(check_id, suite, tolerance, fn, default_trials))
        return fn
    return decorator


def _faulty(tolerance):
    """A negated tolerance no deviation can meet."""
    return -(abs(tolerance) + np.spacing(1.0))


def run_check(entry, trials, seed, inject_fault=False):
    if trials is None:
        trials = entry.default_trials
    tolerance = _faulty(entry.tolerance) if inject_fault else entry.tolerance
    start = time.perf_counter()
    worst, detail = entry.fn(trials, seed)
    worst = float(worst)
    passed = bool(worst <= tolerance)
    elapsed = time.perf_counter() - start
    if not passed:
        logger.warning(f"Check {entry.id} failed: deviation {worst:.3e} > tolerance {tolerance:.3e}")
    return PropertyCheck(entry.id, entry.suite, trials, worst, tolerance, passed, elapsed, detail)


def run_suite(name, trials, seed, inject_fault=False):
    """
    Run one suite (or 'all'); returns the list of PropertyCheck results.

    trials=None runs every check at its acceptance count; an explicit count is
    run as given by every check.
    """
    # checks register on import
    from apfree_app.services.verification import checks  # noqa: F401

    if trials is not None and (isinstance(trials, bool) or not isinstance(trials, int) or trials < 1):
        raise PreconditionError(f"trials must be a positive integer, got {trials!r}")
    if name == 'all':
        suites = VERIFY_SUITES
    elif name in REGISTRY:
        suites = (name,)
    else:
        raise PreconditionError(f"unknown suite: {name}")
    results = []
    for suite in suites:
        for entry in REGISTRY[suite]:
            results.append(run_check(entry, trials, seed, inject_fault))
    logger.info(f"Suite {name}: {sum(r.passed for r in results)}/{len(results)} checks passed")
    return results
