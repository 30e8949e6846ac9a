"""
Exception hierarchy for apfree.

Every error carries the process exit code the command surface reports for it.
"""


class ApfreeError(Exception):
    """Base class for all apfree errors."""
    exit_code = 2

    def to_dict(self):
        """Convert error to dictionary for JSON output."""
        return {'error': str(self), 'kind': type(self).__name__}


class FormatError(ApfreeError):
    """Malformed input file."""


class ConfigError(ApfreeError):
    """Missing or invalid configuration field."""

    def __init__(self, field, message=None):
        self.field = field
        super().__init__(message or f"Invalid or missing config field: {field}")

    def to_dict(self):
        data = super().to_dict()
        data['field'] = self.field
        return data


class PreconditionError(ApfreeError, ValueError):
    """An operation was called outside its domain."""


class ShapeMismatchError(PreconditionError):
    """Operands live on different (p, n) or measures."""


class GroupMismatchError(PreconditionError):
    """Group element or character belongs to a different group."""


class NotRootOfUnityError(PreconditionError):
    """A value expected to be an r-th root of unity is not."""


class NotFreeError(ApfreeError):
    """Input set contains a nontrivial restricted progression."""
    exit_code = 1

    def __init__(self, witness):
        self.witness = witness
        super().__init__(f"Set is not free: witness x={witness[0]}, a={witness[1]}")

    def to_dict(self):
        data = super().to_dict()
        data['witness'] = {'x': list(self.witness[0]), 'a': list(self.witness[1])}
        return data


class ConsistencyError(ApfreeError):
    """Two independent computations of the same quantity disagree."""
    exit_code = 3
