"""
Validation utilities.
"""
import math

import numpy as np

from apfree_app.utils.constants import MEASURE_TOL
from apfree_app.utils.errors import PreconditionError


def is_prime(p):
    """Trial-division primality test."""
    if p < 2:
        return False
    for d in range(2, math.isqrt(p) + 1):
        if p % d == 0:
            return False
    return True


def validate_prime(p):
    """Require an odd prime; p = 2 is out of scope."""
    if not isinstance(p, (int, np.integer)) or isinstance(p, bool):
        raise PreconditionError(f"p must be an integer, got {p!r}")
    if not is_prime(int(p)):
        raise PreconditionError(f"p must be prime, got {p}")
    if p == 2:
        raise PreconditionError("p = 2 is not supported")
    return int(p)


def validate_dimension(n, minimum=0):
    """Require a non-negative integer dimension."""
    if not isinstance(n, (int, np.integer)) or isinstance(n, bool) or n < minimum:
        raise PreconditionError(f"n must be an integer >= {minimum}, got {n!r}")
    return int(n)


def validate_probability(value, name, open_low=True, open_high=False):
    """Require value in (0, 1] (or the requested variant)."""
    low_ok = value > 0 if open_low else value >= 0
    high_ok = value < 1 if open_high else value <= 1
    if not (low_ok and high_ok):
        raise PreconditionError(f"{name} must be a probability, got {value}")
    return float(value)


def validate_measure(measure, p):
    """Require a full-support probability vector of length p."""
    measure = np.asarray(measure, dtype=np.float64)
    if measure.shape != (p,):
        raise PreconditionError(f"measure must have length {p}")
    if np.any(measure <= 0):
        raise PreconditionError("measure must have full support")
    if abs(measure.sum() - 1.0) > MEASURE_TOL * p:
        raise PreconditionError(f"measure must sum to 1, got {measure.sum()}")
    return measure


def validate_table_size(p, n, max_bits):
    """Require p^n to fit the configured table cap."""
    if n * math.log2(p) > max_bits + 1e-9:
        raise PreconditionError(f"table p^n = {p}^{n} exceeds 2^{max_bits} entries")
