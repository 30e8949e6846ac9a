"""
Audit trail of the increment engine.

A trace is the ordered list of operations applied to the input set, each with
(n, density, correlation) snapshots before and after. It is written as JSON
lines: a header line, then one line per step.
"""
import json
from dataclasses import dataclass, field

from apfree_app.services.progressions.aps import is_restricted_ap_free
from apfree_app.services.structure.operations import ZRestrictionStep, step_from_dict
from apfree_app.utils.constants import EXACT_TOL, REPORT_SCHEMA_VERSION
from apfree_app.utils.errors import ConsistencyError, FormatError


@dataclass
class Snapshot:
    n: int
    density: float
    correlation: float = None

    def to_dict(self):
        return {'n': self.n, 'density': self.density, 'correlation': self.correlation}

    @classmethod
    def of(cls, f, correlation=None):
        return cls(f.n, float(f.mean()), correlation)


@dataclass
class TraceEntry:
    step: object
    before: Snapshot
    after: Snapshot
    branch: str = ''

    def to_dict(self):
        return {
            'branch': self.branch,
            'step': self.step.to_dict(),
            'before': self.before.to_dict(),
            'after': self.after.to_dict(),
        }

    @classmethod
    def from_dict(cls, data):
        try:
            return cls(
                step=step_from_dict(data['step']),
                before=Snapshot(**data['before']),
                after=Snapshot(**data['after']),
                branch=data.get('branch', ''),
            )
        except (KeyError, TypeError) as e:
            raise FormatError(f"Malformed trace entry: {e}")


@dataclass
class IncrementTrace:
    p: int
    n: int
    seed: int
    entries: list = field(default_factory=list)

    @property
    def steps(self):
        return [entry.step for entry in self.entries]

    def __len__(self):
        return len(self.entries)

    def record(self, f, steps, branch, correlation=None):
        """Apply steps to f one at a time, appending an entry per step; returns the result."""
        for step in steps:
            before = Snapshot.of(f, correlation)
            f = step.apply(f)
            self.entries.append(TraceEntry(step, before, Snapshot.of(f), branch))
            correlation = None
        return f

    def extend(self, other):
        self.entries.extend(other.entries)

    def replay(self, f, check_free=False):
        """
        Re-apply every step, checking each snapshot; raises ConsistencyError on drift.
        With check_free, the output of every z-restriction is asserted free.
        """
        if (f.p, f.n) != (self.p, self.n):
            raise ConsistencyError(f"trace starts on F_{self.p}^{self.n}, input is F_{f.p}^{f.n}")
        for k, entry in enumerate(self.entries):
            _check(k, 'before', entry.before, f)
            f = entry.step.apply(f)
            _check(k, 'after', entry.after, f)
            if check_free and entry.step.kind == ZRestrictionStep.kind and f.kind == 'boolean':
                result = is_restricted_ap_free(f)
                if not result.free:
                    raise ConsistencyError(f"trace step {k}: z-restriction produced a progression {result.witness}")
        return f

    def to_jsonl(self):
        header = {'trace': REPORT_SCHEMA_VERSION, 'p': self.p, 'n': self.n, 'seed': self.seed}
        lines = [json.dumps(header)] + [json.dumps(entry.to_dict()) for entry in self.entries]
        return '\n'.join(lines) + '\n'

    @classmethod
    def from_jsonl(cls, text):
        lines = [line for line in text.splitlines() if line.strip()]
        if not lines:
            raise FormatError("Empty trace file")
        try:
            header = json.loads(lines[0])
            trace = cls(int(header['p']), int(header['n']), header.get('seed'))
            trace.entries = [TraceEntry.from_dict(json.loads(line)) for line in lines[1:]]
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as e:
            raise FormatError(f"Malformed trace file: {e}")
        return trace


def _check(k, which, snapshot, f):
    if snapshot.n != f.n or abs(snapshot.density - f.mean()) > EXACT_TOL:
        raise ConsistencyError(
            f"trace step {k} ({which}): expected n={snapshot.n} density={snapshot.density}, "
            f"got n={f.n} density={f.mean()}"
        )


def replay_trace(f, trace, check_free=False):
    """Bit-exact replay of a trace on its input."""
    return trace.replay(f, check_free=check_free)
