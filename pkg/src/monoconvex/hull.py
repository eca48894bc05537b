"""Convex-set predicates and convex hulls.

Three routes to a hull:

* finite groups collapse to the whole carrier for any nonempty set;
* lattice instances use real convex hulls intersected with the lattice
  (facet enumeration plus a bounding-box scan, all in integers);
* everything else runs the bounded fixpoint over N-combinations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations, product
from typing import Any, Callable

import numpy as np

from . import kernels
from .algebra import (
    NCombination,
    StructureDescriptor,
    Window,
    combination_sum,
    combine_residual,
    enumerate_combinations,
)
from .errors import DimensionTooLarge, PreconditionFailed, UnboundedHull
from .instances import (
    BoxWindow,
    DyadicRationals,
    FiniteCyclic,
    LatticeZd,
    MeetSemilattice,
    SetAlgebraGroup,
    _rank,
)
from .linear import primitive, solve_lp
from .maps import AdditiveMap

FINITE_GROUP = "FiniteGroupTheorem"
LATTICE = "LatticeIntersection"
FIXPOINT = "BoundedFixpoint"

MAX_RATIONAL_DIM = 6


# ---------------------------------------------------------------- set representations


@dataclass(frozen=True)
class ExplicitFinite:
    elements: frozenset

    def __contains__(self, x):
        return x in self.elements

    def __len__(self):
        return len(self.elements)

    def __iter__(self):
        return iter(_sorted(self.elements))


@dataclass(frozen=True)
class MembershipOracle:
    predicate: Callable[[Any], bool]
    name: str

    def __contains__(self, x):
        return bool(self.predicate(x))


def as_rep(A):
    if isinstance(A, (ExplicitFinite, MembershipOracle)):
        return A
    return ExplicitFinite(frozenset(A))


def _sorted(xs):
    xs = list(xs)
    try:
        return sorted(xs)
    except TypeError:
        return sorted(xs, key=repr)


# ---------------------------------------------------------------- verdicts


@dataclass(frozen=True)
class ConvexWithinBounds:
    checked: int
    off_window: int
    bounds: dict

    tag = "ConvexWithinBounds"


@dataclass(frozen=True)
class NotConvex:
    combination: NCombination
    element: Any

    tag = "NotConvex"


@dataclass
class HullReport:
    hull: ExplicitFinite
    method: str
    truncation: dict = field(default_factory=dict)
    certified: bool = False


@dataclass(frozen=True)
class Member:
    certificate: NCombination

    tag = "Member"


@dataclass(frozen=True)
class NonMemberCertified:
    separator: tuple | None = None  # (a, b) with a.x > b >= a.a_i when available

    tag = "NonMemberCertified"


@dataclass(frozen=True)
class UnknownWithinBounds:
    bounds: dict

    tag = "UnknownWithinBounds"


@dataclass(frozen=True)
class Inside:
    weights: tuple

    tag = "Inside"


@dataclass(frozen=True)
class Outside:
    a: tuple
    b: Fraction

    tag = "Outside"


# ---------------------------------------------------------------- convexity predicate


def _cone_relations(gens, max_terms, max_coeff):
    for k in range(1, min(max_terms, len(gens)) + 1):
        for coeffs in product(range(1, max_coeff + 1), repeat=k):
            for idx in combinations(range(len(gens)), k):
                terms = tuple((c, gens[i]) for c, i in zip(coeffs, idx))
                for m in range(1, max_coeff + 1):
                    yield NCombination(m, terms, cone=True)


def _relations(gens, max_terms, max_coeff, fresh_from=0):
    """N-combinations over gens using at least one index >= fresh_from."""
    for k in range(1, min(max_terms, len(gens)) + 1):
        for idx in kernels.fresh_subsets(len(gens), k, fresh_from):
            for coeffs in product(range(1, max_coeff + 1), repeat=k):
                yield NCombination.of([(c, gens[i]) for c, i in zip(coeffs, idx)])


def is_convex(A, S: StructureDescriptor, max_terms: int, max_coeff: int, window: Window | None = None,
              cone: bool = False):
    """Search every N-combination over A within bounds for a residual outside A.

    Residuals outside the window are skipped and counted.  With ``cone`` the
    constraint m = sum(m_i) is dropped (m ranges over 1..max_coeff).
    """
    window = window if window is not None else S.default_window()
    A = as_rep(A)
    if isinstance(A, ExplicitFinite):
        gens = _sorted(A.elements)
        members = A.elements
        inside = lambda x: x in members
    else:
        gens = [x for x in S.enumerate(window) if x in A]
        inside = lambda x: x in A
    bounds = {"max_terms": max_terms, "max_coeff": max_coeff, "cone": cone}
    if not gens:
        return ConvexWithinBounds(0, 0, bounds)
    rels = (_cone_relations if cone else enumerate_combinations)(gens, max_terms, max_coeff)
    checked = skipped = 0
    for rel in rels:
        for x in _sorted(combine_residual(rel, S)):
            canon = window.locate(x)
            if canon is None:
                skipped += 1
                continue
            checked += 1
            if not inside(canon):
                return NotConvex(rel, canon)
    return ConvexWithinBounds(checked, skipped, bounds)


# ---------------------------------------------------------------- hull routes


def _is_finite_group(S) -> bool:
    return isinstance(S, (FiniteCyclic, SetAlgebraGroup))


def default_strategy(S) -> str:
    if _is_finite_group(S):
        return "finite"
    if isinstance(S, LatticeZd):
        return "lattice"
    return "fixpoint"


def hull(A, S: StructureDescriptor, strategy: str = "auto", max_terms: int | None = None,
         max_coeff: int | None = None, window: Window | None = None) -> HullReport:
    A = frozenset(A)
    if strategy == "auto":
        strategy = default_strategy(S)
    if strategy == "finite":
        if not _is_finite_group(S):
            raise PreconditionFailed(f"{S.name} is not a finite group")
        hull_set = frozenset(S.carrier()) if A else frozenset()
        return HullReport(ExplicitFinite(hull_set), FINITE_GROUP, {}, True)
    if strategy == "lattice":
        if not isinstance(S, LatticeZd):
            if isinstance(S, DyadicRationals) and len(A) > 1:
                raise UnboundedHull("the dyadic hull of two or more points is infinite; use a window")
            if not isinstance(S, DyadicRationals):
                raise PreconditionFailed(f"lattice strategy needs a lattice instance, not {S.name}")
            return HullReport(ExplicitFinite(A), LATTICE, {}, True)
        return HullReport(ExplicitFinite(lattice_hull(A)), LATTICE, {}, True)
    if strategy == "fixpoint":
        if max_terms is None or max_coeff is None:
            raise PreconditionFailed("the fixpoint strategy needs explicit bounds")
        window = window if window is not None else S.default_window()
        return fixpoint_hull(A, S, max_terms, max_coeff, window)
    raise PreconditionFailed(f"unknown strategy {strategy!r}")


def _nullspace(rows, d):
    """Rational basis of {n : r.n = 0 for r in rows}."""
    m = [[Fraction(v) for v in r] for r in rows]
    pivots = []
    rank = 0
    for col in range(d):
        piv = next((i for i in range(rank, len(m)) if m[i][col] != 0), None)
        if piv is None:
            continue
        m[rank], m[piv] = m[piv], m[rank]
        pv = m[rank][col]
        m[rank] = [v / pv for v in m[rank]]
        for i in range(len(m)):
            if i != rank and m[i][col] != 0:
                f = m[i][col]
                m[i] = [a - f * b for a, b in zip(m[i], m[rank])]
        pivots.append(col)
        rank += 1
    basis = []
    for free in (c for c in range(d) if c not in pivots):
        n = [Fraction(0)] * d
        n[free] = Fraction(1)
        for i, pc in enumerate(pivots):
            n[pc] = -m[i][free]
        basis.append(n)
    return basis


def _facet_normal(diffs):
    """Integer normal orthogonal to r-1 difference vectors in Z^r (generalised cross product)."""
    r = len(diffs) + 1
    out = []
    for j in range(r):
        minor = [row[:j] + row[j + 1 :] for row in diffs]
        out.append((-1) ** j * kernels._det_int(minor))
    return out


def lattice_facets(points):
    """H-description of conv(points) for integer points.

    Returns (equations, inequalities) as lists of (normal, rhs) with integer
    normals: n.x = rhs on the affine hull, n.x <= rhs for facets.
    """
    pts = [tuple(int(v) for v in p) for p in points]
    d = len(pts[0])
    p0 = pts[0]
    diffs = [tuple(a - b for a, b in zip(p, p0)) for p in pts[1:]]
    basis = []
    for v in diffs:
        if _rank(basis + [v]) > len(basis):
            basis.append(v)
    r = len(basis)
    equations = []
    for n in _nullspace(basis, d) if r < d else []:
        n, _ = primitive(n)
        equations.append((n, sum(a * b for a, b in zip(n, p0))))
    if r == 0:
        return equations, []
    # project onto r coordinates where the affine hull is a graph
    cols = next(c for c in combinations(range(d), r)
                if kernels._det_int([[b[j] for j in c] for b in basis]) != 0)
    proj = sorted({tuple(p[j] for j in cols) for p in pts})
    P = np.array(proj, dtype=np.int64)
    ineqs = {}
    if r == 1:
        lo, hi = int(P[:, 0].min()), int(P[:, 0].max())
        ineqs[(1,)] = hi
        ineqs[(-1,)] = -lo
    else:
        for sub in combinations(range(len(proj)), r):
            q0 = proj[sub[0]]
            sd = [[a - b for a, b in zip(proj[i], q0)] for i in sub[1:]]
            n = _facet_normal(sd)
            if not any(n):
                continue
            n, _ = primitive(n)
            vals = P @ np.array(n, dtype=np.int64)
            c = sum(a * b for a, b in zip(n, q0))
            if vals.max() <= c:
                ineqs[n] = c
            elif vals.min() >= c:
                ineqs[tuple(-a for a in n)] = -c
    facets = []
    for n, c in sorted(ineqs.items()):
        full = [0] * d
        for j, a in zip(cols, n):
            full[j] = a
        facets.append((tuple(full), c))
    return equations, facets


def lattice_hull(A) -> frozenset:
    """conv_R(A) intersected with the integer lattice, exactly."""
    if not A:
        return frozenset()
    pts = [tuple(int(v) for v in p) for p in A]
    if len(pts) == 1:
        return frozenset(pts)
    equations, facets = lattice_facets(pts)
    arr = np.array(pts, dtype=np.int64)
    lo, hi = arr.min(0), arr.max(0)
    grid = np.stack(np.meshgrid(*[np.arange(a, b + 1) for a, b in zip(lo, hi)], indexing="ij"), -1)
    cand = grid.reshape(-1, arr.shape[1])
    keep = np.ones(len(cand), dtype=bool)
    for n, c in equations:
        keep &= cand @ np.array(n, dtype=np.int64) == c
    for n, c in facets:
        keep &= cand @ np.array(n, dtype=np.int64) <= c
    return frozenset(tuple(int(v) for v in x) for x in cand[keep])


def _fixpoint_certified(S, A, max_terms, max_coeff, window) -> bool:
    carrier = S.carrier()
    if carrier is None or not set(carrier) <= set(window.elements()):
        return False
    if isinstance(S, MeetSemilattice):
        return max_terms >= 2
    e = S.exponent
    return e is not None and max_coeff >= 2 * e and max_terms >= len(A)


def fixpoint_hull(A, S, max_terms, max_coeff, window, backend=None) -> HullReport:
    """Iterate x <- residuals of combinations over the current set inside the window."""
    trunc = {"max_terms": max_terms, "max_coeff": max_coeff}
    if hasattr(window, "to_json"):
        trunc["window"] = window.to_json()
    A = frozenset(A)
    if not A:
        return HullReport(ExplicitFinite(frozenset()), FIXPOINT, trunc, True)
    if isinstance(S, LatticeZd) and isinstance(window, BoxWindow):
        pts = [tuple(int(v) for v in p) for p in A]
        inside = [p for p in pts if p in window]
        try:
            closed = kernels.lattice_closure(inside, window.lo, window.hi, max_terms, max_coeff, backend)
        except OverflowError:
            closed = None
        if closed is not None:
            trunc["kernel"] = backend or kernels.BACKEND
            return HullReport(ExplicitFinite(frozenset(closed) | A), FIXPOINT, trunc, False)
    current = _sorted(A)
    members = set(current)
    fresh = 0
    off = 0
    while True:
        start = len(current)
        for rel in _relations(current[:start], max_terms, max_coeff, fresh):
            for x in combine_residual(rel, S):
                canon = window.locate(x)
                if canon is None:
                    off += 1
                elif canon not in members:
                    members.add(canon)
                    current.append(canon)
        if len(current) == start:
            break
        fresh = start
    trunc["off_window"] = off
    certified = _fixpoint_certified(S, A, max_terms, max_coeff, window)
    return HullReport(ExplicitFinite(frozenset(members)), FIXPOINT, trunc, certified)


def generic_fixpoint(A, S, max_terms, max_coeff, window) -> frozenset:
    """The plain Python fixpoint (all subsets), bypassing the lattice kernel."""
    current = _sorted(frozenset(A))
    members = set(current)
    fresh = 0
    while True:
        start = len(current)
        for rel in _relations(current[:start], max_terms, max_coeff, fresh):
            for x in combine_residual(rel, S):
                canon = window.locate(x)
                if canon is not None and canon not in members:
                    members.add(canon)
                    current.append(canon)
        if len(current) == start:
            return frozenset(members)
        fresh = start


# ---------------------------------------------------------------- membership


def _combination_from_weights(weights, points):
    terms = [(w, p) for w, p in zip(weights, points) if w > 0]
    den = math.lcm(*(w.denominator for w, _ in terms))
    return NCombination.of([(int(w * den), p) for w, p in terms], m=den)


def rational_hull_membership(x, A, d: int | None = None):
    """Exact test of x in conv_R(A) with a separating functional on failure."""
    A = [tuple(Fraction(v) for v in a) for a in A]
    x = tuple(Fraction(v) for v in x)
    d = len(x) if d is None else d
    if d > MAX_RATIONAL_DIM:
        raise DimensionTooLarge(f"dimension {d} exceeds {MAX_RATIONAL_DIM}")
    if not A:
        raise PreconditionFailed("empty point set")
    n = len(A)
    A_eq = [[a[j] for a in A] for j in range(d)] + [[Fraction(1)] * n]
    b_eq = list(x) + [Fraction(1)]
    res = solve_lp([0] * n, A_eq=A_eq, b_eq=b_eq, nonneg=range(n))
    if res.status == "optimal":
        return Inside(res.x)
    y = res.farkas_eq
    a, scale = primitive([-v for v in y[:d]])
    return Outside(tuple(Fraction(v) for v in a), y[d] * scale)


def member(x, A, S: StructureDescriptor, strategy: str = "auto", max_terms: int | None = None,
           max_coeff: int | None = None, window: Window | None = None):
    A = _sorted(frozenset(A))
    if strategy == "auto":
        strategy = default_strategy(S)
    if not A:
        return NonMemberCertified()
    if strategy == "lattice":
        if not isinstance(S, (LatticeZd, DyadicRationals)):
            raise PreconditionFailed(f"lattice membership needs a lattice instance, not {S.name}")
        verdict = rational_hull_membership(S.coords(x) if hasattr(S, "coords") else x,
                                           [S.coords(a) for a in A])
        if isinstance(verdict, Outside):
            return NonMemberCertified((verdict.a, verdict.b))
        return Member(_combination_from_weights(verdict.weights, A))
    if strategy == "finite":
        if not _is_finite_group(S):
            raise PreconditionFailed(f"{S.name} is not a finite group")
        max_terms = max_terms or len(A)
        max_coeff = max_coeff or 2 * S.exponent
    if max_terms is None or max_coeff is None:
        raise PreconditionFailed("combination search needs explicit bounds")
    for rel in _relations(A, max_terms, max_coeff):
        sols = combine_residual(rel, S)
        if x in sols or any(S.equal(x, s) for s in sols if S.tolerance):
            return Member(rel)
    return UnknownWithinBounds({"max_terms": max_terms, "max_coeff": max_coeff})


def replay_member(cert: NCombination, x, S) -> bool:
    """Re-check m*x == sum(m_i x_i) by direct evaluation."""
    return S.equal(S.multiple(x, cert.m), combination_sum(cert, S))


# ---------------------------------------------------------------- additive images


def check_image_convexity(T: AdditiveMap, A, direction: str, max_terms: int, max_coeff: int,
                          source_window: Window | None = None, target_window: Window | None = None):
    S1, S2 = T.source, T.target
    source_window = source_window if source_window is not None else S1.default_window()
    target_window = target_window if target_window is not None else S2.default_window()
    T.verify(source_window)
    if direction == "forward":
        divisible_source = all(S1.declared(n) == "divisible" for n in range(2, max_coeff + 1))
        if not (T.bijective or divisible_source):
            raise PreconditionFailed("forward images need a bijective map or a divisible source")
        image = frozenset(T(a) for a in A)
        return is_convex(image, S2, max_terms, max_coeff, target_window)
    if direction == "inverse":
        members = frozenset(A)
        pre = frozenset(x for x in S1.enumerate(source_window) if T(x) in members)
        return is_convex(pre, S1, max_terms, max_coeff, source_window)
    raise PreconditionFailed(f"unknown direction {direction!r}")


def rational_points_hull(A):
    """Vertices of conv(A) for rational points (LP elimination of interior points)."""
    pts = _sorted({tuple(Fraction(v) for v in a) for a in A})
    keep = []
    for i, p in enumerate(pts):
        others = pts[:i] + pts[i + 1 :]
        if not others or isinstance(rational_hull_membership(p, others), Outside):
            keep.append(p)
    return keep
