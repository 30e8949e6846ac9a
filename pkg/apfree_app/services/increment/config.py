"""
Run parameters of the density increment engine.

The quantitative constants that make the increment argument go through are far
too small to evaluate; every one of them is a knob here with a desk-scale
default, and the formulas they stand in for are reported alongside.
"""
import math
from dataclasses import asdict, dataclass, fields

from apfree_app.utils.constants import AP_DIFFERENCES
from apfree_app.utils.errors import ConfigError

REQUIRED_FIELDS = ('degree_cap', 'epsilon', 'beta', 'delta', 'max_iters')


@dataclass
class IncrementConfig:
    degree_cap: int = 8
    epsilon: float = 0.05
    beta: float = 0.01
    delta: float = 0.1
    max_iters: int = 8
    samples: int = 64
    robust_bases: int = 8
    robust_z_samples: int = 16
    block_size: int = None
    keep_prob: float = None
    epsilon_prime: float = None
    eta: float = 0.05
    low_weight_factor: float = 0.01
    min_dimension_fraction: float = 0.2
    good_block_fraction: float = 0.5
    z_budget: int = None
    use_ascent: bool = True
    ascent_restarts: int = 4
    fallback: bool = True
    differences: tuple = AP_DIFFERENCES
    seed: int = 0
    threads: int = 1

    def __post_init__(self):
        self.differences = tuple(int(d) for d in self.differences)
        self.validate()

    def validate(self):
        if not isinstance(self.degree_cap, int) or self.degree_cap < 1:
            raise ConfigError('degree_cap', f"degree_cap must be a positive integer, got {self.degree_cap!r}")
        for name in ('epsilon', 'beta', 'delta', 'eta', 'low_weight_factor',
                      'min_dimension_fraction', 'good_block_fraction'):
            value = getattr(self, name)
            if not isinstance(value, (int, float)) or not 0 < value <= 1:
                raise ConfigError(name, f"{name} must lie in (0, 1], got {value!r}")
        for name in ('epsilon', 'beta', 'delta'):
            if getattr(self, name) >= 1:
                raise ConfigError(name, f"{name} must lie in (0, 1), got {getattr(self, name)!r}")
        for name in ('max_iters', 'samples', 'robust_bases', 'robust_z_samples', 'ascent_restarts', 'threads'):
            value = getattr(self, name)
            if not isinstance(value, int) or value < 1:
                raise ConfigError(name, f"{name} must be a positive integer, got {value!r}")
        if self.block_size is not None and (not isinstance(self.block_size, int) or self.block_size < 1):
            raise ConfigError('block_size', f"block_size must be a positive integer, got {self.block_size!r}")
        if self.keep_prob is not None and not 0 < self.keep_prob <= 1:
            raise ConfigError('keep_prob', f"keep_prob must lie in (0, 1], got {self.keep_prob!r}")
        if self.epsilon_prime is not None and not 0 < self.epsilon_prime < 1:
            raise ConfigError('epsilon_prime', f"epsilon_prime must lie in (0, 1), got {self.epsilon_prime!r}")
        if self.z_budget is not None and (not isinstance(self.z_budget, int) or self.z_budget < 1):
            raise ConfigError('z_budget', f"z_budget must be a positive integer, got {self.z_budget!r}")
        if tuple(sorted(self.differences)) != AP_DIFFERENCES:
            raise ConfigError('differences', "the increment engine only supports differences (0, 1, 2)")

    @property
    def restriction_keep_prob(self):
        return self.keep_prob if self.keep_prob is not None else 1.0 / (2 * self.degree_cap)

    @property
    def correlation_floor_after_restriction(self):
        """epsilon' of the restricted pair; defaults to epsilon / sqrt(2e)."""
        if self.epsilon_prime is not None:
            return self.epsilon_prime
        return self.epsilon / math.sqrt(2 * math.e)

    def block(self, group_order):
        return self.block_size or group_order

    def good_z_budget(self, p, r):
        return self.z_budget or 16 * p ** r

    @classmethod
    def from_dict(cls, data):
        if not isinstance(data, dict):
            raise ConfigError('config', "config must be a JSON object")
        known = {f.name for f in fields(cls)}
        for name in data:
            if name not in known:
                raise ConfigError(name, f"Unknown config field: {name}")
        for name in REQUIRED_FIELDS:
            if name not in data:
                raise ConfigError(name, f"Missing config field: {name}")
        try:
            return cls(**data)
        except TypeError as e:
            raise ConfigError('config', str(e))

    def to_dict(self):
        data = asdict(self)
        data['differences'] = list(self.differences)
        return data


def regression_config(seed=0):
    """Knobs for the planted regression corpus: light enough for n = 10 tables."""
    return IncrementConfig(degree_cap=4, samples=16, robust_bases=2, robust_z_samples=4,
                           use_ascent=False, ascent_restarts=1, max_iters=1, seed=seed)


def reference_formulas():
    """The constants the knobs stand in for, as printed in reports."""
    return {
        'N': '4 / (delta * epsilon)',
        'beta0': '(epsilon * delta / 8) ** (10 * N)',
        'gamma': '(p ** (-100 r) * r ** (-10 p)) ** N',
        'eta': 'min(beta0 ** 2 / 1000, delta ** 100 / 100)',
        'epsilon_prime': 'delta / sqrt(2 e)',
        'robust_delta': 'p ** (-10 r) / (10 r)',
    }


def reference_magnitudes(cfg, p, r):
    """log10 of the reference constants for the configured epsilon and delta."""
    n_rounds = 4 / (cfg.delta * cfg.epsilon)
    log_beta0 = 10 * n_rounds * math.log10(cfg.epsilon * cfg.delta / 8)
    log_gamma = n_rounds * (-100 * r * math.log10(p) - 10 * p * math.log10(r))
    log_eta = min(2 * log_beta0 - 3, 100 * math.log10(cfg.delta) - 2)
    return {
        'N': n_rounds,
        'log10_beta0': log_beta0,
        'log10_gamma': log_gamma,
        'log10_eta': log_eta,
        'epsilon_prime': cfg.delta / math.sqrt(2 * math.e),
    }
