"""
Executable property suites for the verify command.
"""
from apfree_app.services.verification.harness import PropertyCheck, REGISTRY, check, run_check, run_suite

__all__ = [
    'PropertyCheck',
    'REGISTRY',
    'check',
    'run_check',
    'run_suite',
]
