"""
Replayable operations on functions over F_p^n.

Every structural step the increment engine takes is one of these records. The
same records act on dense functions and on product functions, so a sequence
recorded while searching can be replayed on the boolean input bit-exactly.
"""
from dataclasses import dataclass

import numpy as np

from apfree_app.services.analysis.funcspace import DenseFunction
from apfree_app.services.analysis.restrictions import Restriction, restrict
from apfree_app.services.structure.bases import SpecialBasis, apply_basis_change, product_closure_under_basis_change
from apfree_app.utils.errors import FormatError, PreconditionError, ShapeMismatchError


@dataclass(frozen=True)
class RandomRestrictionStep:
    restriction: Restriction
    kind = 'random_restriction'

    def apply(self, f):
        return restrict(f, self.restriction)

    def dimension_after(self, n):
        return len(self.restriction.alive)

    def to_dict(self):
        return {'kind': self.kind, 'restriction': self.restriction.to_dict()}


@dataclass(frozen=True)
class BasisChangeStep:
    """Reorders the table into (x, z) coordinates; the dimension is unchanged."""
    basis: SpecialBasis
    kind = 'basis_change'

    def apply(self, f):
        return apply_basis_change(f, self.basis)

    def dimension_after(self, n):
        return n

    def to_dict(self):
        return {'kind': self.kind, 'basis': self.basis.to_dict()}


@dataclass(frozen=True)
class ZRestrictionStep:
    """Fixes the trailing len(z) coordinates, the z-part after a basis change."""
    z: tuple
    kind = 'z_restriction'

    def __post_init__(self):
        object.__setattr__(self, 'z', tuple(int(c) for c in self.z))

    def apply(self, f):
        k = len(self.z)
        if k > f.n:
            raise ShapeMismatchError(f"z has {k} coordinates, function has {f.n}")
        if any(not 0 <= c < f.p for c in self.z):
            raise PreconditionError("z entries outside F_p")
        kept = f.n - k
        offset = sum(c * f.p ** (kept + j) for j, c in enumerate(self.z))
        values = f.values[offset + np.arange(f.p ** kept)]
        return DenseFunction(f.p, kept, values, kind=f.kind, measure=f.measure)

    def dimension_after(self, n):
        return n - len(self.z)

    def to_dict(self):
        return {'kind': self.kind, 'z': list(self.z)}


@dataclass(frozen=True)
class CoordinateDropStep:
    """Records coordinates left out of every block; the table is untouched."""
    coordinates: tuple
    kind = 'coordinate_drop'

    def __post_init__(self):
        object.__setattr__(self, 'coordinates', tuple(int(i) for i in self.coordinates))

    def apply(self, f):
        return f

    def dimension_after(self, n):
        return n

    def to_dict(self):
        return {'kind': self.kind, 'coordinates': list(self.coordinates)}


def step_from_dict(data):
    kind = data.get('kind')
    if kind == RandomRestrictionStep.kind:
        return RandomRestrictionStep(Restriction.from_dict(data['restriction']))
    if kind == BasisChangeStep.kind:
        return BasisChangeStep(SpecialBasis.from_dict(data['basis']))
    if kind == ZRestrictionStep.kind:
        return ZRestrictionStep(tuple(data['z']))
    if kind == CoordinateDropStep.kind:
        return CoordinateDropStep(tuple(data['coordinates']))
    raise FormatError(f"unknown trace step kind: {kind!r}")


def replay_steps(f, steps):
    for step in steps:
        f = step.apply(f)
    return f


def replay_steps_on_product(P, steps):
    """
    Apply the same steps to a product function. A basis change is only
    meaningful together with the z-restriction that follows it.
    """
    pending = None
    for step in steps:
        if isinstance(step, BasisChangeStep):
            pending = step.basis
        elif isinstance(step, ZRestrictionStep):
            if pending is None:
                raise PreconditionError("z-restriction of a product needs a preceding basis change")
            P = product_closure_under_basis_change(P, pending, step.z)
            pending = None
        elif isinstance(step, RandomRestrictionStep):
            if pending is not None:
                raise PreconditionError("restriction between a basis change and its z-restriction")
            P = P.restrict(step.restriction)
    if pending is not None:
        raise PreconditionError("trailing basis change without a z-restriction")
    return P
