"""
Density increment engine for restricted-AP-free sets.
"""
from apfree_app.services.increment.config import (
    IncrementConfig,
    reference_formulas,
    reference_magnitudes,
    regression_config,
)
from apfree_app.services.increment.trace import IncrementTrace, Snapshot, TraceEntry, replay_trace
from apfree_app.services.increment.engine import (
    BranchOutcome,
    StepResult,
    RunResult,
    pair_correlation_W,
    low_weight_branch,
    correlation_branch,
    pigeonhole_block_step,
    restriction_fallback,
    increment_step,
    increment_run,
    union_bound_endgame,
)

__all__ = [
    'IncrementConfig',
    'reference_formulas',
    'reference_magnitudes',
    'regression_config',
    'IncrementTrace',
    'Snapshot',
    'TraceEntry',
    'replay_trace',
    'BranchOutcome',
    'StepResult',
    'RunResult',
    'pair_correlation_W',
    'low_weight_branch',
    'correlation_branch',
    'pigeonhole_block_step',
    'restriction_fallback',
    'increment_step',
    'increment_run',
    'union_bound_endgame',
]
