"""Additive maps between instances."""

from __future__ import annotations

from fractions import Fraction
from itertools import islice

from .algebra import StructureDescriptor, Window
from .errors import NotAdditive
from .instances import LatticeZd


class AdditiveMap:
    """T: X1 -> X2 given by a callable.

    ``matrix`` (rows over the target coordinates) is optional and only used to
    materialise adjoints when both sides carry coefficient duals.
    """

    def __init__(self, source: StructureDescriptor, target: StructureDescriptor, fn, name="T",
                 bijective=False, matrix=None):
        self.source = source
        self.target = target
        self.fn = fn
        self.name = name
        self.bijective = bijective
        self.matrix = None if matrix is None else tuple(tuple(Fraction(v) for v in r) for r in matrix)

    def __call__(self, x):
        return self.fn(x)

    @classmethod
    def identity(cls, S):
        return cls(S, S, lambda x: x, "id", bijective=True,
                   matrix=_eye(S.dual_dimension) if hasattr(S, "dual_dimension") else None)

    @classmethod
    def linear(cls, source, target, matrix, name="A", bijective=False):
        """x -> M x on coordinate instances (lattices, dyadics)."""
        M = tuple(tuple(Fraction(v) for v in r) for r in matrix)
        integral = isinstance(target, LatticeZd)

        def fn(x):
            y = tuple(sum((a * Fraction(v) for a, v in zip(row, x)), Fraction(0)) for row in M)
            if integral:
                if any(v.denominator != 1 for v in y):
                    raise NotAdditive(f"{name} does not map {x!r} into the lattice")
                return tuple(int(v) for v in y)
            return y

        return cls(source, target, fn, name, bijective, M)

    def verify(self, window: Window, limit: int = 400):
        """Spot-check T(0) = 0 and T(x + y) = T(x) + T(y) on window pairs."""
        S1, S2 = self.source, self.target
        if not S2.equal(self.fn(S1.zero), S2.zero):
            raise NotAdditive(f"{self.name}(0) is not the identity")
        els = S1.enumerate(window)
        pairs = ((x, y) for i, x in enumerate(els) for y in els[i:])
        for x, y in islice(pairs, limit):
            lhs = self.fn(S1.add(x, y))
            rhs = S2.add(self.fn(x), self.fn(y))
            if not S2.equal(lhs, rhs):
                raise NotAdditive(f"{self.name} fails additivity at {x!r}, {y!r}")
        return True


def _eye(d):
    return tuple(tuple(Fraction(int(i == j)) for j in range(d)) for i in range(d))
