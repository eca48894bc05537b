"""Concrete monoids: lattices, dyadics, finite abelian groups, Q/Z,
the symmetric-difference group, meet semilattices and the arctan semigroup."""

from __future__ import annotations

import bisect
import math
from fractions import Fraction
from functools import reduce
from itertools import product

from .algebra import (
    DIVISIBLE,
    NOT_DIVISIBLE,
    ExplicitWindow,
    StructureDescriptor,
    Window,
)
from .errors import InvalidInstance, NotInLattice
from .scalar import fmt_rational


def parse_rational(s) -> Fraction:
    if isinstance(s, float):
        raise InvalidInstance(f"expected an exact rational, got float {s!r}")
    return Fraction(s)


# ---------------------------------------------------------------- windows


class BoxWindow(Window):
    """Integer points of a coordinate box."""

    def __init__(self, lo, hi):
        self.lo = tuple(int(v) for v in lo)
        self.hi = tuple(int(v) for v in hi)
        if len(self.lo) != len(self.hi) or any(a > b for a, b in zip(self.lo, self.hi)):
            raise InvalidInstance("malformed box window")
        self._elements = None

    @classmethod
    def cube(cls, d: int, radius: int):
        return cls((-radius,) * d, (radius,) * d)

    def elements(self):
        if self._elements is None:
            ranges = [range(a, b + 1) for a, b in zip(self.lo, self.hi)]
            self._elements = tuple(product(*ranges))
        return self._elements

    def __contains__(self, x):
        return (
            isinstance(x, tuple)
            and len(x) == len(self.lo)
            and all(a <= v <= b for v, a, b in zip(x, self.lo, self.hi))
        )

    def __len__(self):
        return math.prod(b - a + 1 for a, b in zip(self.lo, self.hi))

    def to_json(self):
        return {"lo": list(self.lo), "hi": list(self.hi)}


class DyadicWindow(Window):
    """Points whose coordinates are multiples of 2**-max_exp with |c| <= radius."""

    def __init__(self, dim: int, radius, max_exp: int):
        self.dim = dim
        self.radius = Fraction(radius)
        self.max_exp = int(max_exp)
        self._elements = None

    def _axis(self):
        step = Fraction(1, 2**self.max_exp)
        k = int(self.radius / step)
        return [j * step for j in range(-k, k + 1)]

    def elements(self):
        if self._elements is None:
            self._elements = tuple(product(self._axis(), repeat=self.dim))
        return self._elements

    def __contains__(self, x):
        if not isinstance(x, tuple) or len(x) != self.dim:
            return False
        scale = 2**self.max_exp
        for c in x:
            c = Fraction(c)
            if abs(c) > self.radius or (c * scale).denominator != 1:
                return False
        return True

    def __len__(self):
        return len(self._axis()) ** self.dim

    def to_json(self):
        return {"radius": fmt_rational(self.radius), "max_exp": self.max_exp}


class Mod1Window(Window):
    """Elements of Q/Z with denominator at most max_den (or multiples of 1/step)."""

    def __init__(self, max_den: int | None = None, step: int | None = None):
        if (max_den is None) == (step is None):
            raise InvalidInstance("give exactly one of max_den, step")
        self.max_den, self.step = max_den, step
        if step is not None:
            elems = [Fraction(k, step) for k in range(step)]
        else:
            elems = sorted({Fraction(p, q) for q in range(1, max_den + 1) for p in range(q)})
        self._elements = tuple(elems)

    def elements(self):
        return self._elements

    def to_json(self):
        return {"max_den": self.max_den} if self.max_den is not None else {"step": self.step}


class ToleranceWindow(Window):
    """Finite set of floats; membership up to an absolute tolerance."""

    def __init__(self, values, tol: float):
        self._elements = tuple(sorted(set(float(v) for v in values)))
        self.tol = tol

    def elements(self):
        return self._elements

    def locate(self, x):
        if x != x:  # nan
            return None
        xs = self._elements
        i = bisect.bisect_left(xs, x)
        best = None
        for j in (i - 1, i):
            if 0 <= j < len(xs) and abs(xs[j] - x) <= self.tol * max(1.0, abs(x)):
                if best is None or abs(xs[j] - x) < abs(best - x):
                    best = xs[j]
        return best

    def __contains__(self, x):
        return self.locate(x) is not None

    def to_json(self):
        return {"values": list(self._elements)}


# ---------------------------------------------------------------- lattices


class LatticeZd(StructureDescriptor):
    has_negation = True

    def __init__(self, d: int):
        if d < 1:
            raise InvalidInstance("dimension must be positive")
        self.d = d
        self.name = f"Z^{d}"
        self._zero = (0,) * d

    @property
    def zero(self):
        return self._zero

    def add(self, x, y):
        return tuple(a + b for a, b in zip(x, y))

    def negate(self, x):
        return tuple(-a for a in x)

    def multiple(self, x, n):
        return tuple(n * a for a in x)

    def divide(self, y, n):
        if all(a % n == 0 for a in y):
            return frozenset({tuple(a // n for a in y)})
        return frozenset()

    def declared(self, n):
        return DIVISIBLE if n == 1 else NOT_DIVISIBLE

    def default_window(self):
        return BoxWindow.cube(self.d, 4)

    def coords(self, x):
        return tuple(Fraction(a) for a in x)

    def to_json(self):
        return {"kind": "lattice", "dimension": self.d}

    def encode(self, x):
        return list(x)

    def decode(self, obj):
        if isinstance(obj, int):
            obj = [obj]
        if len(obj) != self.d:
            raise InvalidInstance(f"expected {self.d} coordinates, got {obj!r}")
        return tuple(int(v) for v in obj)

    def fmt(self, x):
        return "(" + ",".join(str(v) for v in x) + ")"

    dual_dimension = property(lambda self: self.d)


def _rank(rows) -> int:
    m = [list(map(Fraction, r)) for r in rows]
    rank, ncols = 0, len(m[0]) if m else 0
    for col in range(ncols):
        piv = next((i for i in range(rank, len(m)) if m[i][col] != 0), None)
        if piv is None:
            continue
        m[rank], m[piv] = m[piv], m[rank]
        for i in range(len(m)):
            if i != rank and m[i][col] != 0:
                f = m[i][col] / m[rank][col]
                m[i] = [a - f * b for a, b in zip(m[i], m[rank])]
        rank += 1
    return rank


def solve_exact(columns, target):
    """Unique rational alpha with sum(alpha_i * columns[i]) = target, or None.

    Columns must be linearly independent.
    """
    k, d = len(columns), len(target)
    aug = [[Fraction(columns[j][i]) for j in range(k)] + [Fraction(target[i])] for i in range(d)]
    row = 0
    pivots = []
    for col in range(k):
        piv = next((i for i in range(row, d) if aug[i][col] != 0), None)
        if piv is None:
            return None
        aug[row], aug[piv] = aug[piv], aug[row]
        pv = aug[row][col]
        aug[row] = [a / pv for a in aug[row]]
        for i in range(d):
            if i != row and aug[i][col] != 0:
                f = aug[i][col]
                aug[i] = [a - f * b for a, b in zip(aug[i], aug[row])]
        pivots.append(col)
        row += 1
    if any(aug[i][k] != 0 for i in range(row, d)):
        return None
    return tuple(aug[i][k] for i in range(k))


class GeneralLattice(LatticeZd):
    """Gamma = T(Z^k) for rational, linearly independent generators.

    Elements are integer coefficient vectors; the algebra is that of Z^k.
    """

    def __init__(self, generators):
        gens = [tuple(parse_rational(c) for c in v) for v in generators]
        if not gens:
            raise InvalidInstance("need at least one generator")
        amb = len(gens[0])
        if any(len(v) != amb for v in gens):
            raise InvalidInstance("generators must share a dimension")
        if _rank(gens) != len(gens):
            raise InvalidInstance("generators are dependent over Q (hence over Z)")
        super().__init__(len(gens))
        self.generators = tuple(gens)
        self.ambient = amb
        self.name = f"Gamma[{len(gens)} in Q^{amb}]"

    def transform(self, alpha):
        return tuple(
            sum((Fraction(a) * v[i] for a, v in zip(alpha, self.generators)), Fraction(0))
            for i in range(self.ambient)
        )

    def inverse(self, point):
        alpha = solve_exact(self.generators, [parse_rational(c) for c in point])
        if alpha is None or any(a.denominator != 1 for a in alpha):
            raise NotInLattice(f"{point!r} is not a lattice point")
        return tuple(int(a) for a in alpha)

    def to_json(self):
        return {
            "kind": "general_lattice",
            "generators": [[fmt_rational(c) for c in v] for v in self.generators],
        }


def lattice_transform(gamma: GeneralLattice, alpha):
    return gamma.transform(alpha)


def lattice_inverse(gamma: GeneralLattice, point):
    return gamma.inverse(point)


# ---------------------------------------------------------------- dyadics


def _is_dyadic(q: Fraction) -> bool:
    den = q.denominator
    return den & (den - 1) == 0


class DyadicRationals(StructureDescriptor):
    """(Z[1/2])^d; elements are tuples of Fractions with power-of-two denominators."""

    has_negation = True

    def __init__(self, d: int = 1):
        if d < 1:
            raise InvalidInstance("dimension must be positive")
        self.d = d
        self.name = "Z[1/2]" if d == 1 else f"Z[1/2]^{d}"
        self._zero = (Fraction(0),) * d

    @property
    def zero(self):
        return self._zero

    def add(self, x, y):
        return tuple(a + b for a, b in zip(x, y))

    def negate(self, x):
        return tuple(-a for a in x)

    def multiple(self, x, n):
        return tuple(n * a for a in x)

    def divide(self, y, n):
        x = tuple(a / n for a in y)
        return frozenset({x}) if all(_is_dyadic(a) for a in x) else frozenset()

    def declared(self, n):
        return DIVISIBLE if n & (n - 1) == 0 else NOT_DIVISIBLE

    def default_window(self):
        return DyadicWindow(self.d, 2, 2)

    def coords(self, x):
        return x

    def to_json(self):
        return {"kind": "dyadic", "dimension": self.d}

    def encode(self, x):
        return [fmt_rational(a) for a in x]

    def decode(self, obj):
        if not isinstance(obj, list):
            obj = [obj]
        x = tuple(parse_rational(a) for a in obj)
        if len(x) != self.d or not all(_is_dyadic(a) for a in x):
            raise InvalidInstance(f"{obj!r} is not a dyadic point of dimension {self.d}")
        return x

    def fmt(self, x):
        return "(" + ",".join(fmt_rational(a) for a in x) + ")"

    dual_dimension = property(lambda self: self.d)


# ---------------------------------------------------------------- finite groups


class CarrierWindow(Window):
    def __init__(self, carrier):
        self._elements = tuple(carrier)

    def elements(self):
        return self._elements

    def to_json(self):
        return {"carrier": True}


class FiniteCyclic(StructureDescriptor):
    """Z/n1 x ... x Z/nk.  A single modulus uses plain ints as elements."""

    has_negation = True

    def __init__(self, moduli):
        if isinstance(moduli, int):
            moduli = (moduli,)
        moduli = tuple(int(n) for n in moduli)
        if not moduli or any(n < 1 for n in moduli):
            raise InvalidInstance("moduli must be positive")
        self.moduli = moduli
        self.single = len(moduli) == 1
        self.exponent = reduce(math.lcm, moduli)
        self.name = " x ".join(f"Z/{n}" for n in moduli)
        if self.single:
            self._carrier = tuple(range(moduli[0]))
        else:
            self._carrier = tuple(product(*(range(n) for n in moduli)))
        self._divcache = {}

    @property
    def zero(self):
        return 0 if self.single else (0,) * len(self.moduli)

    def add(self, x, y):
        if self.single:
            return (x + y) % self.moduli[0]
        return tuple((a + b) % n for a, b, n in zip(x, y, self.moduli))

    def negate(self, x):
        if self.single:
            return (-x) % self.moduli[0]
        return tuple((-a) % n for a, n in zip(x, self.moduli))

    def multiple(self, x, n):
        if self.single:
            return (n * x) % self.moduli[0]
        return tuple((n * a) % m for a, m in zip(x, self.moduli))

    def divide(self, y, n):
        key = (y, n % self.exponent if self.exponent else n)
        hit = self._divcache.get(key)
        if hit is None:
            hit = frozenset(x for x in self._carrier if self.multiple(x, n) == y)
            self._divcache[key] = hit
        return hit

    def declared(self, n):
        return DIVISIBLE if math.gcd(n, self.exponent) == 1 else NOT_DIVISIBLE

    def carrier(self):
        return self._carrier

    def default_window(self):
        return CarrierWindow(self._carrier)

    def to_json(self):
        return {"kind": "cyclic", "moduli": list(self.moduli)}

    def encode(self, x):
        return x if self.single else list(x)

    def decode(self, obj):
        if self.single:
            if isinstance(obj, list) and len(obj) == 1:
                obj = obj[0]
            return int(obj) % self.moduli[0]
        return tuple(int(a) % n for a, n in zip(obj, self.moduli))


class RationalsMod1(StructureDescriptor):
    """Q/Z, the rational points of the circle group; every element has finite order."""

    name = "Q/Z"
    has_negation = True

    @property
    def zero(self):
        return Fraction(0)

    def add(self, x, y):
        return (x + y) % 1

    def negate(self, x):
        return (-x) % 1

    def multiple(self, x, n):
        return (n * x) % 1

    def __init__(self):
        self._divcache = {}

    def divide(self, y, n):
        hit = self._divcache.get((y, n))
        if hit is None:
            hit = frozenset(((y + k) / n) % 1 for k in range(n))
            if len(self._divcache) < 100_000:
                self._divcache[(y, n)] = hit
        return hit

    def declared(self, n):
        return DIVISIBLE

    def default_window(self):
        return Mod1Window(max_den=6)

    def to_json(self):
        return {"kind": "mod1"}

    def encode(self, x):
        return fmt_rational(x)

    def decode(self, obj):
        return parse_rational(obj) % 1

    def fmt(self, x):
        return fmt_rational(x)


MAX_SET_BITS = 24


class SetAlgebraGroup(StructureDescriptor):
    """Subsets of {0..s-1} as bitmasks under symmetric difference."""

    has_negation = True

    def __init__(self, s: int):
        if not 1 <= s <= MAX_SET_BITS:
            raise InvalidInstance(f"ground set size must be in 1..{MAX_SET_BITS}")
        self.s = s
        self.exponent = 2
        self.name = f"P({s}) with symmetric difference"

    @property
    def zero(self):
        return 0

    def add(self, x, y):
        return x ^ y

    def negate(self, x):
        return x

    def multiple(self, x, n):
        return x if n % 2 else 0

    def divide(self, y, n):
        if n % 2:
            return frozenset({y})
        # every element doubles to the empty set
        return range(1 << self.s) if y == 0 else frozenset()

    def declared(self, n):
        return DIVISIBLE if n % 2 else NOT_DIVISIBLE

    def carrier(self):
        return tuple(range(1 << self.s))

    def default_window(self):
        if self.s <= 10:
            return CarrierWindow(self.carrier())
        return ExplicitWindow([0] + [1 << i for i in range(self.s)])

    def to_json(self):
        return {"kind": "setalgebra", "size": self.s}

    def decode(self, obj):
        if isinstance(obj, list):
            mask = 0
            for i in obj:
                if not 0 <= int(i) < self.s:
                    raise InvalidInstance(f"point {i} outside the ground set")
                mask |= 1 << int(i)
            return mask
        v = int(obj)
        if not 0 <= v < (1 << self.s):
            raise InvalidInstance(f"bitmask {v} out of range")
        return v

    def fmt(self, x):
        return "{" + ",".join(str(i) for i in range(self.s) if x >> i & 1) + "}"


def symmetric_difference_sums(family, S: SetAlgebraGroup):
    """Every symmetric difference of finitely many members (with repetition).

    This is the finite-sums set displayed for the sigma-algebra example; it is
    the subgroup generated by the family.
    """
    reached = {0}
    frontier = list(family)
    for x in frontier:
        reached.add(x)
    changed = True
    while changed:
        changed = False
        for a in list(reached):
            for b in family:
                c = a ^ b
                if c not in reached:
                    reached.add(c)
                    changed = True
    return frozenset(reached)


class MeetSemilattice(StructureDescriptor):
    """A finite meet semilattice with a top element, which serves as the identity."""

    def __init__(self, elements, meet_table: dict, name: str = "meet semilattice"):
        self.elements_ = tuple(elements)
        self.table = dict(meet_table)
        self.name = name
        els = self.elements_
        for a in els:
            if self.table.get((a, a)) != a:
                raise InvalidInstance(f"meet is not idempotent at {a!r}")
            for b in els:
                ab = self.table.get((a, b))
                if ab is None or ab not in els:
                    raise InvalidInstance(f"meet table incomplete at {(a, b)!r}")
                if ab != self.table[(b, a)]:
                    raise InvalidInstance("meet is not commutative")
        for a in els:
            for b in els:
                for c in els:
                    if self.meet(self.meet(a, b), c) != self.meet(a, self.meet(b, c)):
                        raise InvalidInstance("meet is not associative")
        tops = [t for t in els if all(self.meet(t, x) == x for x in els)]
        if not tops:
            raise InvalidInstance("a top element is required as the monoid identity")
        self._zero = tops[0]

    @classmethod
    def boolean(cls, s: int):
        els = tuple(range(1 << s))
        return cls(els, {(a, b): a & b for a in els for b in els}, f"subsets of {s} points under meet")

    @classmethod
    def divisors(cls, n: int):
        els = tuple(d for d in range(1, n + 1) if n % d == 0)
        return cls(els, {(a, b): math.gcd(a, b) for a in els for b in els}, f"divisors of {n} under gcd")

    @classmethod
    def chain(cls, k: int):
        els = tuple(range(k))
        return cls(els, {(a, b): min(a, b) for a in els for b in els}, f"chain of {k}")

    def meet(self, a, b):
        return self.table[(a, b)]

    @property
    def zero(self):
        return self._zero

    def add(self, x, y):
        return self.table[(x, y)]

    def multiple(self, x, n):
        return x if n else self._zero

    def divide(self, y, n):
        return frozenset({y})

    def declared(self, n):
        return DIVISIBLE

    def carrier(self):
        return self.elements_

    def default_window(self):
        return CarrierWindow(self.elements_)

    def leq(self, a, b):
        return self.meet(a, b) == a

    def to_json(self):
        return {
            "kind": "meet",
            "elements": list(self.elements_),
            "meet": [[a, b, self.table[(a, b)]] for a in self.elements_ for b in self.elements_],
        }


def meet_closure(S: MeetSemilattice, A):
    """Sub-semilattice generated by A (closure under pairwise meets)."""
    closed = set(A)
    changed = True
    while changed:
        changed = False
        for a in list(closed):
            for b in list(closed):
                c = S.meet(a, b)
                if c not in closed:
                    closed.add(c)
                    changed = True
    return frozenset(closed)


# ---------------------------------------------------------------- arctan


ARCTAN_TOL = 1e-9


def arctan_add(a: float, b: float) -> float:
    if math.isinf(a) or math.isinf(b):
        raise ValueError("arctan elements are finite")
    return (a + b) / (1.0 + a * b)


def arctan_n_fold(a: float, n: int) -> float:
    """n-fold sum a + ... + a in the arctan semigroup.

    >>> round(arctan_n_fold(0.5, 3), 10)
    0.9285714286
    """
    if a < 0:
        raise ValueError("arctan elements are nonnegative")
    if n == 0 or a == 0.0:
        return 0.0
    if a == 1.0:
        return 1.0
    if a < 1.0:
        return math.tanh(n * math.atanh(a))
    # a = coth(t); the n-fold sum is coth(n t) for odd n, tanh(n t) for even n
    t = math.atanh(1.0 / a)
    if n % 2:
        return 1.0 / math.tanh(n * t)
    return math.tanh(n * t)


class ArctanSemigroup(StructureDescriptor):
    """[0, inf) with a (+) b = (a+b)/(1+ab); the only floating-point instance."""

    name = "arctan semigroup"
    tolerance = ARCTAN_TOL
    divide_complete = False

    @property
    def zero(self):
        return 0.0

    def add(self, x, y):
        return arctan_add(x, y)

    def multiple(self, x, n):
        return arctan_n_fold(x, n)

    def equal(self, x, y):
        return abs(x - y) <= ARCTAN_TOL * max(1.0, abs(x), abs(y))

    def divide(self, y, n):
        if y < 0:
            return frozenset()
        if n == 1:
            return frozenset({y})
        if abs(y) <= ARCTAN_TOL:
            return frozenset({0.0})
        if abs(y - 1.0) <= ARCTAN_TOL:
            return frozenset({1.0})
        sols = set()
        if y < 1.0:
            t = math.atanh(y) / n
            sols.add(math.tanh(t))
            if n % 2 == 0:
                sols.add(1.0 / math.tanh(t))
        elif n % 2:
            t = math.atanh(1.0 / y) / n
            sols.add(1.0 / math.tanh(t))
        return frozenset(x for x in sols if self.equal(arctan_n_fold(x, n), y))

    def declared(self, n):
        return DIVISIBLE if n % 2 else NOT_DIVISIBLE

    def default_window(self):
        base = [0.0, 0.25, 0.5, 0.75, 1.0, 2.0, 4.0]
        return ToleranceWindow(base + [1 / b for b in base if b > 1], ARCTAN_TOL)

    def to_json(self):
        return {"kind": "arctan"}

    def decode(self, obj):
        v = float(obj)
        if v < 0 or math.isinf(v):
            raise InvalidInstance("arctan elements are finite and nonnegative")
        return v

    def fmt(self, x):
        return repr(float(x))


# ---------------------------------------------------------------- construction


def build_instance(obj: dict) -> StructureDescriptor:
    kind = obj.get("kind")
    if kind == "lattice":
        return LatticeZd(int(obj["dimension"]))
    if kind == "general_lattice":
        return GeneralLattice(obj["generators"])
    if kind == "dyadic":
        return DyadicRationals(int(obj.get("dimension", 1)))
    if kind == "cyclic":
        return FiniteCyclic(obj["moduli"] if "moduli" in obj else obj["modulus"])
    if kind == "mod1":
        return RationalsMod1()
    if kind == "setalgebra":
        return SetAlgebraGroup(int(obj["size"]))
    if kind == "meet":
        if "boolean" in obj:
            return MeetSemilattice.boolean(int(obj["boolean"]))
        if "divisors" in obj:
            return MeetSemilattice.divisors(int(obj["divisors"]))
        els = obj["elements"]
        return MeetSemilattice(els, {(a, b): c for a, b, c in obj["meet"]})
    if kind == "arctan":
        return ArctanSemigroup()
    raise InvalidInstance(f"unknown instance kind {kind!r}")


def build_window(S: StructureDescriptor, obj: dict | None) -> Window:
    """Window from a JSON-ready description; None gives the instance default."""
    if obj is None:
        return S.default_window()
    if "elements" in obj:
        return ExplicitWindow(S.decode(e) for e in obj["elements"])
    if isinstance(S, LatticeZd):
        if "radius" in obj:
            return BoxWindow.cube(S.d, int(obj["radius"]))
        return BoxWindow(obj["lo"], obj["hi"])
    if isinstance(S, DyadicRationals):
        return DyadicWindow(S.d, parse_rational(obj["radius"]), int(obj["max_exp"]))
    if isinstance(S, RationalsMod1):
        return Mod1Window(obj.get("max_den"), obj.get("step"))
    if isinstance(S, ArctanSemigroup):
        return ToleranceWindow(obj["values"], ARCTAN_TOL)
    if obj.get("carrier") and S.carrier() is not None:
        return CarrierWindow(S.carrier())
    raise InvalidInstance(f"cannot build a window for {S.name} from {obj!r}")


def window_json(W: Window, S: StructureDescriptor) -> dict:
    if hasattr(W, "to_json"):
        return W.to_json()
    return {"elements": [S.encode(x) for x in W.elements()]}


# dual-space classification lives with the instances it describes
def dual_kind(S: StructureDescriptor) -> str:
    if isinstance(S, (LatticeZd, DyadicRationals)):
        return "coefficient"
    if isinstance(S, (FiniteCyclic, RationalsMod1, SetAlgebraGroup, MeetSemilattice)):
        return "trivial"
    return "unsupported"

