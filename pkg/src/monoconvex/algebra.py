"""Monoid descriptors, windows, N-combinations and divisibility probing."""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations, product
from typing import Any, Iterable, Iterator

Element = Any

DIVISIBLE = "divisible"
NOT_DIVISIBLE = "not-divisible"
UNKNOWN = "unknown"


class Window:
    """A finite slice of a carrier.

    Subclasses may test membership without enumerating (``__contains__``);
    ``elements`` must return a duplicate-free tuple in a fixed order.
    """

    def elements(self) -> tuple:
        raise NotImplementedError

    def __contains__(self, x) -> bool:
        return x in self._index()

    def locate(self, x):
        """Canonical window element equal to x, or None."""
        return x if x in self else None

    def _index(self):
        idx = getattr(self, "_cached_index", None)
        if idx is None:
            idx = frozenset(self.elements())
            object.__setattr__(self, "_cached_index", idx)
        return idx

    def __len__(self):
        return len(self.elements())

    def __iter__(self):
        return iter(self.elements())


class ExplicitWindow(Window):
    def __init__(self, elements: Iterable):
        seen = {}
        for x in elements:
            seen.setdefault(x, None)
        self._elements = tuple(seen)

    def elements(self):
        return self._elements

    def __repr__(self):
        return f"ExplicitWindow({len(self._elements)} elements)"


class StructureDescriptor:
    """A commutative monoid (or group) with exact n-division.

    ``divide(y, n)`` returns every x with n*x = y (a set, possibly empty or,
    for torsion, large).  ``declared(n)`` reports the divisibility
    classification attached to the instance.
    """

    name = "monoid"
    exponent: int | None = None
    divide_complete = True
    tolerance: float | None = None
    has_negation = False

    @property
    def zero(self):
        raise NotImplementedError

    def add(self, x, y):
        raise NotImplementedError

    def negate(self, x):
        raise NotImplementedError(f"{self.name} has no negation")

    def divide(self, y, n: int):
        raise NotImplementedError

    def enumerate(self, window: Window) -> tuple:
        return window.elements()

    def declared(self, n: int) -> str:
        return UNKNOWN

    def multiple(self, x, n: int):
        return nth_multiple(x, n, self)

    def equal(self, x, y) -> bool:
        return x == y

    def default_window(self) -> Window:
        raise NotImplementedError

    def carrier(self) -> tuple | None:
        """Full carrier for finite instances, else None."""
        return None

    def to_json(self) -> dict:
        """JSON-ready kind tag and parameters."""
        raise NotImplementedError

    def encode(self, x):
        return x

    def decode(self, obj):
        return obj

    def fmt(self, x) -> str:
        return str(self.encode(x))

    def __repr__(self):
        return f"<{self.name}>"


@dataclass(frozen=True)
class NCombination:
    """m*x = sum(m_i * x_i); with ``cone`` set the sum constraint is dropped."""

    m: int
    terms: tuple
    cone: bool = False

    def __post_init__(self):
        if not self.terms:
            raise ValueError("an N-combination needs at least one term")
        if self.m < 1 or any(c < 1 for c, _ in self.terms):
            raise ValueError("coefficients must be positive integers")
        if not self.cone and self.m != sum(c for c, _ in self.terms):
            raise ValueError("lhs coefficient must equal the sum of term coefficients")

    @classmethod
    def of(cls, terms, m=None, cone=False):
        terms = tuple((int(c), x) for c, x in terms)
        if m is None:
            m = sum(c for c, _ in terms)
        return cls(int(m), terms, cone)

    def describe(self, S: StructureDescriptor | None = None) -> str:
        show = (lambda x: S.fmt(x)) if S is not None else str
        rhs = " + ".join(f"{c}*{show(x)}" for c, x in self.terms)
        return f"{self.m}x = {rhs}"

    def __str__(self):
        return self.describe()


def nth_multiple(x, n: int, S: StructureDescriptor):
    if n < 0:
        raise ValueError("n must be nonnegative")
    result = S.zero
    base = x
    while n:
        if n & 1:
            result = S.add(result, base)
        n >>= 1
        if n:
            base = S.add(base, base)
    return result


def combination_sum(c: NCombination, S: StructureDescriptor):
    total = S.zero
    for coeff, x in c.terms:
        total = S.add(total, S.multiple(x, coeff))
    return total


def combine_residual(c: NCombination, S: StructureDescriptor):
    """All x with c.m * x equal to the right-hand side of c."""
    return S.divide(combination_sum(c, S), c.m)


def enumerate_combinations(generators, max_terms: int, max_coeff: int) -> Iterator[NCombination]:
    """Every N-combination over distinct generators within the bounds.

    Order: number of terms, then coefficient tuple, then term indices.

    >>> len(list(enumerate_combinations(["a", "b", "c"], 3, 2)))
    26
    """
    if max_terms < 1 or max_coeff < 1:
        raise ValueError("bounds must be at least 1")
    gens = list(dict.fromkeys(generators))
    if not gens:
        raise ValueError("generators must be nonempty")
    for k in range(1, min(max_terms, len(gens)) + 1):
        idx_tuples = list(combinations(range(len(gens)), k))
        for coeffs in product(range(1, max_coeff + 1), repeat=k):
            m = sum(coeffs)
            for idx in idx_tuples:
                yield NCombination(m, tuple((c, gens[i]) for c, i in zip(coeffs, idx)))


@dataclass(frozen=True)
class Divisible:
    n: int
    source: str  # "declared" or "exhaustive"


@dataclass(frozen=True)
class NotDivisible:
    n: int
    witness: Any


@dataclass(frozen=True)
class UnknownWithinWindow:
    n: int
    checked: int


def probe_divisibility(S: StructureDescriptor, n: int, sample: Window):
    elements = S.enumerate(sample)
    if not elements:
        raise ValueError("sample window is empty")
    declared = S.declared(n)
    for y in elements:
        if not S.divide(y, n):
            if declared == DIVISIBLE:
                raise AssertionError(f"{S.name}: declared {n}-divisible but {y!r} has no solution")
            return NotDivisible(n, y)
    if declared == DIVISIBLE:
        return Divisible(n, "declared")
    carrier = S.carrier()
    if carrier is not None and S.divide_complete and set(carrier) <= set(elements):
        return Divisible(n, "exhaustive")
    return UnknownWithinWindow(n, len(elements))


def is_semidivisible(S: StructureDescriptor, primes=(2, 3, 5, 7, 11, 13)) -> int | None:
    """A prime p with pX = X according to the declared metadata, if any."""
    for p in primes:
        if S.declared(p) == DIVISIBLE:
            return p
    return None
