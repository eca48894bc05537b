"""Function tables on windows, class predicates, minorants and the slope lemmas."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations, product
from typing import Any

import numpy as np

from . import kernels
from .algebra import (
    DIVISIBLE,
    NCombination,
    StructureDescriptor,
    Window,
    combination_sum,
    combine_residual,
    enumerate_combinations,
)
from .errors import OffWindow, PreconditionFailed, RelationDoesNotHold
from .instances import (
    BoxWindow,
    CarrierWindow,
    DyadicRationals,
    DyadicWindow,
    FiniteCyclic,
    LatticeZd,
    MeetSemilattice,
    Mod1Window,
    RationalsMod1,
    SetAlgebraGroup,
)
from .scalar import NINF, PINF, ZERO, ExtendedScalar, add, ext, ext_sum, scale

PLUS_INFINITY = "plus_infinity"
UNDEFINED = "undefined"


class FunctionTable:
    """Extended-scalar values on every element of a window.

    ``rule`` (callable) fills the table when ``values`` is not given.  Off-window
    queries follow ``outside``: +inf, or an ``OffWindow`` error.
    """

    def __init__(self, S: StructureDescriptor, window: Window, values=None, rule=None,
                 outside: str = PLUS_INFINITY, name: str = "f", tags: dict | None = None):
        if outside not in (PLUS_INFINITY, UNDEFINED):
            raise ValueError(f"unknown outside policy {outside!r}")
        self.S = S
        self.window = window
        self.outside = outside
        self.name = name
        self.tags = dict(tags or {})
        els = S.enumerate(window)
        if values is None:
            if rule is None:
                raise ValueError("give values or a rule")
            self.values = {x: ext(rule(x)) for x in els}
        else:
            self.values = {}
            for x, v in dict(values).items():
                canon = window.locate(x)
                if canon is None:
                    raise OffWindow(f"value given for {x!r} outside the window")
                self.values[canon] = ext(v)
            missing = [x for x in els if x not in self.values]
            if missing:
                raise PreconditionFailed(f"{name} has no value at {missing[0]!r}")
        self.elements = els

    def __call__(self, x) -> ExtendedScalar:
        canon = self.window.locate(x)
        if canon is None:
            if self.outside == PLUS_INFINITY:
                return PINF
            raise OffWindow(f"{self.name} is undefined at {x!r}")
        return self.values[canon]

    def defined(self, x) -> bool:
        return self.window.locate(x) is not None

    def items(self):
        return ((x, self.values[x]) for x in self.elements)

    def domain(self):
        """Window elements with value below +inf."""
        return [x for x in self.elements if not self.values[x].is_pinf()]

    def with_values(self, values, name=None, tags=None):
        return FunctionTable(self.S, self.window, values, outside=self.outside,
                             name=name or self.name, tags=tags)

    def map(self, fn, name=None):
        return self.with_values({x: fn(v) for x, v in self.items()}, name)

    def __neg__(self):
        return self.map(lambda v: -v, f"-{self.name}")

    def same_window(self, other) -> bool:
        return self.S is other.S and tuple(self.elements) == tuple(other.elements)

    def __eq__(self, other):
        return isinstance(other, FunctionTable) and self.same_window(other) and self.values == other.values

    def __repr__(self):
        return f"FunctionTable({self.name} on {self.S.name}, {len(self.elements)} points)"


@dataclass
class ClassVerdict:
    holds: bool
    certificate: dict | None = None
    bounds: dict = field(default_factory=dict)
    skipped: int = 0

    @property
    def tag(self):
        return "HoldsWithinBounds" if self.holds else "Fails"


def _fails(kind, **cert):
    return ClassVerdict(False, {"kind": kind, **cert})


# ---------------------------------------------------------------- class predicates


def _powers(p, limit):
    out, q = set(), 1
    while q <= limit:
        out.add(q)
        q *= p
    return out


def check_convex(f: FunctionTable, max_terms: int, max_coeff: int, use_p_power: int | None = None):
    """m f(x) <= sum m_i f(x_i) over every bounded N-combination on the window."""
    S = f.S
    gens = f.domain()
    bounds = {"max_terms": max_terms, "max_coeff": max_coeff}
    if use_p_power:
        bounds["p"] = use_p_power
    if not gens:
        return ClassVerdict(True, None, bounds)
    allowed = _powers(use_p_power, max_terms * max_coeff) if use_p_power else None
    skipped = 0
    for rel in enumerate_combinations(gens, max_terms, max_coeff):
        if allowed is not None and rel.m not in allowed:
            continue
        rhs = ext_sum(scale(f(x), c) for c, x in rel.terms)
        if rhs.is_pinf():
            continue
        for x in combine_residual(rel, S):
            canon = f.window.locate(x)
            if canon is None:
                skipped += 1
                continue
            lhs = scale(f.values[canon], rel.m)
            if lhs > rhs:
                v = _fails("convex", combination=rel, x=canon, lhs=lhs, rhs=rhs)
                v.bounds, v.skipped = bounds, skipped
                return v
    return ClassVerdict(True, None, bounds, skipped)


def check_subadditive(f: FunctionTable):
    S = f.S
    dom = f.domain()
    for i, x in enumerate(dom):
        for y in dom[i:]:
            s = f.window.locate(S.add(x, y))
            if s is None:
                continue
            lhs, rhs = f.values[s], add(f.values[x], f.values[y])
            if lhs > rhs:
                return _fails("subadditive", pair=(x, y), lhs=lhs, rhs=rhs)
    return ClassVerdict(True)


def check_homogeneous(f: FunctionTable, ms):
    """f(m x) = m f(x) for the listed m (m >= 1) whenever m x is in the window."""
    S = f.S
    for m in ms:
        for x in f.elements:
            if S.equal(x, S.zero):
                continue
            mx = f.window.locate(S.multiple(x, m))
            if mx is None:
                continue
            lhs, rhs = f.values[mx], scale(f.values[x], m)
            if lhs != rhs:
                return _fails("homogeneity", x=x, m=m, lhs=lhs, rhs=rhs)
    return ClassVerdict(True, None, {"m": list(ms)})


def check_n_sublinear(f: FunctionTable, m_max: int):
    sub = check_subadditive(f)
    if not sub.holds:
        return sub
    hom = check_homogeneous(f, range(2, m_max + 1))
    if not hom.holds:
        return hom
    zero = f.window.locate(f.S.zero)
    if zero is not None and f.values[zero] != ZERO:
        return _fails("homogeneity", x=zero, m=0, lhs=f.values[zero], rhs=ZERO)
    return ClassVerdict(True, None, {"m_max": m_max})


def check_generalized_n_linear(f: FunctionTable, m_max: int):
    v = check_n_sublinear(f, m_max)
    if not v.holds:
        return v
    w = check_n_sublinear(-f, m_max)
    if not w.holds:
        w.certificate["negated"] = True
    return w


def replay_certificate(f: FunctionTable, verdict: ClassVerdict) -> bool:
    """Re-evaluate a Fails certificate from table lookups; True if it is a real violation."""
    c = verdict.certificate
    S = f.S
    g = -f if c.get("negated") else f
    kind = c["kind"]
    if kind == "convex":
        rel = c["combination"]
        if not any(S.equal(c["x"], y) for y in combine_residual(rel, S)):
            return False
        return scale(g(c["x"]), rel.m) > ext_sum(scale(g(x), k) for k, x in rel.terms)
    if kind == "subadditive":
        x, y = c["pair"]
        return g(S.add(x, y)) > add(g(x), g(y))
    if kind == "homogeneity":
        if c["m"] == 0:
            return g(S.zero) != ZERO
        return g(S.multiple(c["x"], c["m"])) != scale(g(c["x"]), c["m"])
    raise ValueError(f"unknown certificate kind {kind!r}")


@dataclass
class CompositeVerdict:
    parts: dict
    implication: str  # "holds", "vacuous" or "violated"


def check_p_homogeneous_implies_convex(f: FunctionTable, p: int, max_terms: int, max_coeff: int,
                                       m_max: int = 6):
    if f.S.declared(p) != DIVISIBLE:
        raise PreconditionFailed(f"{f.S.name} is not declared {p}-semidivisible")
    parts = {
        "subadditive": check_subadditive(f),
        "p_homogeneous": check_homogeneous(f, [p]),
    }
    if not (parts["subadditive"].holds and parts["p_homogeneous"].holds):
        return CompositeVerdict(parts, "vacuous")
    parts["convex"] = check_convex(f, max_terms, max_coeff)
    ok = parts["convex"].holds
    if f.S.has_negation:
        parts["n_sublinear"] = check_homogeneous(f, range(2, m_max + 1))
        ok = ok and parts["n_sublinear"].holds
    return CompositeVerdict(parts, "holds" if ok else "violated")


def pointwise_max(fs):
    fs = list(fs)
    if not fs:
        raise ValueError("need at least one table")
    base = fs[0]
    for g in fs[1:]:
        if not base.same_window(g):
            raise PreconditionFailed("tables live on different windows")
    vals = {x: max(g.values[x] for g in fs) for x in base.elements}
    return base.with_values(vals, "max(" + ",".join(g.name for g in fs) + ")")


# ---------------------------------------------------------------- subadditive minorant


def workspace(S, window: Window):
    """A finite region holding every partial sum needed to realise decompositions
    of window elements.  Returns (window, exact flag)."""
    carrier = S.carrier()
    if carrier is not None:
        return CarrierWindow(carrier), True
    els = S.enumerate(window)
    if isinstance(S, LatticeZd):
        R = max((abs(c) for x in els for c in x), default=0)
        return BoxWindow.cube(S.d, 2 * S.d * R), True
    if isinstance(S, DyadicRationals):
        R = max((abs(c) for x in els for c in x), default=Fraction(0))
        e = max((c.denominator.bit_length() - 1 for x in els for c in x), default=0)
        return DyadicWindow(S.d, 2 * S.d * R, e), True
    if isinstance(S, RationalsMod1):
        N = math.lcm(*(x.denominator for x in els)) if els else 1
        return Mod1Window(step=N), True
    return window, False


def _grid_coords(S, els):
    if isinstance(S, LatticeZd):
        return np.array(els, dtype=np.int64), 1
    e = max((c.denominator for x in els for c in x), default=1)
    return np.array([[int(c * e) for c in x] for x in els], dtype=np.int64), e


def addition_table(S, els, window):
    """add_idx[i, j] = index of els[i] + els[j] in els, or -1."""
    n = len(els)
    if isinstance(S, (LatticeZd, DyadicRationals)) and n:
        C, _ = _grid_coords(S, els)
        lo, hi = C.min(0), C.max(0)
        dims = hi - lo + 1
        if int(np.prod(dims)) <= 4_000_000:
            lookup = np.full(int(np.prod(dims)), -1, dtype=np.int64)
            strides = np.ones(len(dims), dtype=np.int64)
            for r in range(len(dims) - 2, -1, -1):
                strides[r] = strides[r + 1] * dims[r + 1]
            lookup[((C - lo) * strides).sum(1)] = np.arange(n)
            sums = C[:, None, :] + C[None, :, :]
            ok = np.all((sums >= lo) & (sums <= hi), axis=2)
            keys = ((np.clip(sums, lo, hi) - lo) * strides).sum(2)
            return np.where(ok, lookup[keys], -1)
    if isinstance(S, SetAlgebraGroup) and list(els) == list(range(len(els))):
        a = np.arange(n, dtype=np.int64)
        return a[:, None] ^ a[None, :]
    if isinstance(S, FiniteCyclic) and S.single and list(els) == list(range(n)):
        a = np.arange(n, dtype=np.int64)
        return (a[:, None] + a[None, :]) % n
    index = {x: i for i, x in enumerate(els)}
    out = np.full((n, n), -1, dtype=np.int64)
    for i, a in enumerate(els):
        for j in range(i, n):
            c = window.locate(S.add(a, els[j]))
            k = index.get(c, -1) if c is not None else -1
            out[i, j] = out[j, i] = k
    return out


def _minplus_exact(add_idx, vals):
    """Fraction version of the split closure, for values too large for int64."""
    n = len(vals)
    p = list(vals)
    rounds = 0
    while True:
        rounds += 1
        changed = False
        for i in range(n):
            for j in range(n):
                k = add_idx[i][j]
                if k < 0 or p[k].is_ninf():
                    continue
                s = add(p[i], p[j])
                if s < p[k]:
                    p[k] = NINF if rounds > n + 1 else s
                    changed = True
        if not changed:
            return p


def split_closure(S, window, values: dict, backend=None):
    """Min-plus closure of ``values`` (dict over ``window``) under in-window splits."""
    els = S.enumerate(window)
    add_idx = addition_table(S, els, window)
    vals = [ext(values.get(x, PINF)) for x in els]
    fin = [v.finite for v in vals]
    finite_vals = [v.value for v in vals if v.finite]
    L = math.lcm(*(q.denominator for q in finite_vals)) if finite_vals else 1
    ints = [int(v.value * L) if v.finite else 0 for v in vals]
    big = max((abs(v) for v in ints), default=0)
    thresh = (len(els) + 1) * (big + 1)
    if thresh * 8 < kernels.INT_LIMIT:
        p, pf, pn = kernels.minplus_closure(add_idx, ints, fin, [v.is_ninf() for v in vals], thresh, backend)
        out = {}
        for i, x in enumerate(els):
            out[x] = NINF if pn[i] else ExtendedScalar(Fraction(int(p[i]), L)) if pf[i] else PINF
        return out
    p = _minplus_exact(add_idx.tolist(), vals)
    return dict(zip(els, p))


def subadditive_minorant_p(f: FunctionTable, backend=None):
    """Largest subadditive minorant: inf of sum f(x_i) over decompositions sum x_i = x.

    f is +inf off the window; partial sums may leave the window, so the closure
    runs over a workspace large enough to realise every decomposition.
    """
    ws, exact = workspace(f.S, f.window)
    if not exact:
        return _layered_minorant(f)
    closed = split_closure(f.S, ws, {x: v for x, v in f.items()}, backend)
    vals = {x: closed[ws.locate(x)] for x in f.elements}
    return f.with_values(vals, f"p[{f.name}]", {"minorant": "p", "window_relative": False})


MAX_LAYERS = 8


def _layered_minorant(f: FunctionTable):
    """Decompositions of bounded length, for carriers without a finite workspace.

    With values in [lo, hi], lo > 0, no decomposition longer than hi / lo can
    beat a single term, so that length bound is exact; otherwise the search
    stops at MAX_LAYERS terms and the result is tagged truncated.
    """
    S = f.S
    dom = [(x, v) for x, v in f.items() if not v.is_pinf()]
    fin = [v.value for _, v in dom if v.finite]
    exact = bool(fin) and len(fin) == len(dom) and min(fin) > 0
    L = min(MAX_LAYERS, math.ceil(max(fin) / min(fin))) if exact else MAX_LAYERS
    exact = exact and math.ceil(max(fin) / min(fin)) <= MAX_LAYERS
    key = (lambda y: round(y, 8)) if S.tolerance else (lambda y: y)
    layer = {key(x): (x, v) for x, v in dom}
    best = {x: f.values[x] for x in f.elements}
    for _ in range(L):
        for y, c in layer.values():
            canon = f.window.locate(y)
            if canon is not None and c < best[canon]:
                best[canon] = c
        nxt = {}
        for y, c in layer.values():
            for x, v in dom:
                z = S.add(y, x)
                cost = add(c, v)
                k = key(z)
                if k not in nxt or cost < nxt[k][1]:
                    nxt[k] = (z, cost)
        layer = nxt
    return f.with_values(best, f"p[{f.name}]", {"minorant": "p", "window_relative": True,
                                                 "max_len": L, "truncated": not exact})


def brute_force_minorant(f: FunctionTable, max_len: int = 6):
    """inf over multisets of at most max_len window elements summing to x."""
    S = f.S
    dom = [x for x in f.elements if not f.values[x].is_pinf()]
    best = {x: PINF for x in f.elements}
    for k in range(1, max_len + 1):
        for combo in _multisets(len(dom), k):
            total = S.zero
            for i in combo:
                total = S.add(total, dom[i])
            x = f.window.locate(total)
            if x is None:
                continue
            cost = ext_sum(f.values[dom[i]] for i in combo)
            if cost < best[x]:
                best[x] = cost
    return best


def _multisets(n, k):
    from itertools import combinations_with_replacement

    return combinations_with_replacement(range(n), k)


def _order(S, x, limit=10_000):
    z = S.zero
    y = x
    for m in range(1, limit + 1):
        if S.equal(y, z):
            return m
        y = S.add(y, x)
    return None


def homogenize(p: FunctionTable, m_max: int):
    """po(x) = inf_m p(m x) / m.

    Torsion elements use their orbit: residue classes with a finite nonnegative
    value contribute the limit 0; negative classes are minimised at the first m.
    Elsewhere the infimum runs over m <= m_max and the result is tagged truncated.
    """
    S = p.S
    torsion = isinstance(S, (FiniteCyclic, SetAlgebraGroup, RationalsMod1))
    vals, truncated = {}, False
    for x in p.elements:
        order = _order(S, x) if torsion else None
        if order is not None:
            best = PINF
            for r in range(1, order + 1):
                c = p(S.multiple(x, r))
                if c.is_pinf():
                    continue
                cand = c if c.is_ninf() else (ZERO if c.value >= 0 else c / r)
                best = min(best, cand)
            vals[x] = best
        else:
            truncated = True
            best = PINF
            for m in range(1, m_max + 1):
                c = p(S.multiple(x, m))
                if c.is_pinf():
                    continue
                best = min(best, c if c.is_ninf() else c / m)
            vals[x] = best
    return p.with_values(vals, f"po[{p.name}]", {"minorant": "po", "truncated": truncated, "m_max": m_max})


def homogenized_minorant_po(f: FunctionTable, m_max: int, backend=None):
    return homogenize(subadditive_minorant_p(f, backend), m_max)


def wedge_minorant(f: FunctionTable, g: FunctionTable, n_max: int):
    """(f ^ g)(x) = inf (n1 f(x1) + n2 g(x2)) / n over n1 x1 + n2 x2 = n x, bounded by n_max.

    n1 or n2 may be zero (the term is then absent), which gives f ^ g <= min(f, g).
    """
    if not f.same_window(g):
        raise PreconditionFailed("tables live on different windows")
    S = f.S
    df, dg = f.domain(), g.domain()
    best = {x: PINF for x in f.elements}
    sums = {}
    for n1 in range(0, n_max + 1):
        for n2 in range(0, n_max + 1):
            if n1 == n2 == 0:
                continue
            for x1 in (df if n1 else [None]):
                for x2 in (dg if n2 else [None]):
                    total = S.zero
                    cost = ZERO
                    if n1:
                        total = S.add(total, S.multiple(x1, n1))
                        cost = add(cost, scale(f.values[x1], n1))
                    if n2:
                        total = S.add(total, S.multiple(x2, n2))
                        cost = add(cost, scale(g.values[x2], n2))
                    sums.setdefault((total, cost), None)
    for (total, cost) in sums:
        for n in range(1, n_max + 1):
            for x in S.divide(total, n):
                canon = f.window.locate(x)
                if canon is None:
                    continue
                v = cost if not cost.finite else cost / n
                if v < best[canon]:
                    best[canon] = v
    return f.with_values(best, f"{f.name}^{g.name}", {"minorant": "wedge", "n_max": n_max})


# ---------------------------------------------------------------- slope and continuity lemmas


@dataclass
class LemmaVerdict:
    holds: bool
    details: dict
    certificate: Any = None


def local_boundedness_bound(f: FunctionTable, x0, B, M, m: int):
    S = f.S
    M = ext(M)
    B = list(B)
    if not S.has_negation:
        raise PreconditionFailed(f"{S.name} has no negation; symmetric sets are undefined")
    Bset = set(B)
    for b in B:
        if S.negate(b) not in Bset:
            raise PreconditionFailed(f"B is not symmetric: -{b!r} is missing")
    f0 = f(x0)
    if not f0.finite:
        raise PreconditionFailed("f(x0) must be finite")
    for b in B:
        x = S.add(x0, b)
        if f.defined(x) and f(x) > f0 + M:
            raise PreconditionFailed(f"f(x0 + {b!r}) exceeds f(x0) + M")
    bound = M / m
    checked = 0
    for y in f.elements:
        if S.multiple(y, m) not in Bset or not f.defined(S.add(x0, y)):
            continue
        checked += 1
        v = f(S.add(x0, y))
        gap = v - f0 if v.finite else PINF
        if gap > bound or (-gap) > bound:
            return LemmaVerdict(False, {"bound": bound, "checked": checked}, {"y": y, "value": v})
    return LemmaVerdict(True, {"bound": bound, "checked": checked})


def three_slope_check(f: FunctionTable, x, x1, x2, m1: int, m2: int):
    """Slopes along (m1+m2) x = m1 x1 + m2 x2.

    Checks (f(x)-f(x1))/m2 <= (f(x2)-f(x1))/(m1+m2) <= (f(x2)-f(x))/m1; the
    variant with f(x1) in the last numerator is reported separately.
    """
    S = f.S
    lhs = S.multiple(x, m1 + m2)
    rhs = S.add(S.multiple(x1, m1), S.multiple(x2, m2))
    if not S.equal(lhs, rhs):
        raise RelationDoesNotHold(f"({m1}+{m2})x != {m1}x1 + {m2}x2")
    fx, f1, f2 = f(x), f(x1), f(x2)
    if not (fx.finite and f1.finite and f2.finite):
        raise PreconditionFailed("slopes need finite values at x, x1, x2")
    a = (fx.value - f1.value) / m2
    b = (f2.value - f1.value) / (m1 + m2)
    c = (f2.value - fx.value) / m1
    c_alt = (f2.value - f1.value) / m1
    return LemmaVerdict(a <= b <= c, {"left": a, "middle": b, "right": c, "right_from_x1": c_alt,
                                      "holds_with_right_from_x1": a <= b <= c_alt})


def is_non_decreasing(f: FunctionTable, leq) -> ClassVerdict:
    els = f.elements
    for x in els:
        for y in els:
            if leq(x, y) and f.values[x] > f.values[y]:
                return _fails("monotone", pair=(x, y), lhs=f.values[x], rhs=f.values[y])
    return ClassVerdict(True)


def _scalar_leq(x, y):
    return all(a <= b for a, b in zip(x, y)) if isinstance(x, tuple) else x <= y


def monotone_composition_check(outer: FunctionTable, inner: FunctionTable, max_terms: int, max_coeff: int,
                               m_max: int = 4):
    """outer o inner is convex when outer is N-sublinear and non-decreasing and inner is convex."""
    T = outer.S
    if not (isinstance(T, (LatticeZd, DyadicRationals)) and T.d == 1):
        raise PreconditionFailed("outer must live on a one-dimensional ordered instance")
    mono = is_non_decreasing(outer, _scalar_leq)
    if not mono.holds:
        raise PreconditionFailed("outer is not non-decreasing")
    sub = check_n_sublinear(outer, m_max)
    if not sub.holds:
        raise PreconditionFailed("outer is not N-sublinear on its window")
    inner_convex = check_convex(inner, max_terms, max_coeff)
    if not inner_convex.holds:
        raise PreconditionFailed("inner is not convex")

    def to_elem(v):
        if not v.finite:
            raise PreconditionFailed("inner must be finite-valued")
        if isinstance(T, LatticeZd):
            if v.value.denominator != 1:
                return None
            return (int(v.value),)
        return (v.value,)

    comp = {}
    for x, v in inner.items():
        t = to_elem(v)
        comp[x] = PINF if t is None else outer(t)
    composed = inner.with_values(comp, f"{outer.name}o{inner.name}")
    verdict = check_convex(composed, max_terms, max_coeff)
    inner_mono = is_non_decreasing(inner, _scalar_leq) if isinstance(inner.S, (LatticeZd, DyadicRationals)) else None
    return LemmaVerdict(verdict.holds, {
        "composed": composed,
        "inner_non_decreasing": None if inner_mono is None else inner_mono.holds,
        "convexity": verdict,
    }, verdict.certificate)


# ---------------------------------------------------------------- generalised affine


def classify_generalized_affine(f: FunctionTable, max_terms: int, max_coeff: int):
    """Classify a table that is both convex and concave within bounds.

    Returns one of "finite", "plus_infinity", "minus_infinity", "both_infinities",
    "not_affine", or "mixed_offwindow" when the witness demanded by the
    trichotomy falls outside the window.
    """
    if not (check_convex(f, max_terms, max_coeff).holds and check_convex(-f, max_terms, max_coeff).holds):
        return "not_affine"
    vals = [v for _, v in f.items()]
    has_p = any(v.is_pinf() for v in vals)
    has_n = any(v.is_ninf() for v in vals)
    has_f = any(v.finite for v in vals)
    if not has_p and not has_n:
        return "finite"
    if has_p and has_n:
        return "both_infinities"
    if not has_f:
        return "plus_infinity" if has_p else "minus_infinity"
    S = f.S
    # one infinity mixed with finite values: 2 x2 - x1 must carry the other infinity
    for x1, v1 in f.items():
        if v1.finite:
            continue
        for x2, v2 in f.items():
            if v2.finite and S.has_negation:
                w = S.add(S.multiple(x2, 2), S.negate(x1))
                if f.defined(w):
                    raise AssertionError(f"trichotomy violated at {x1!r}, {x2!r}")
    return "mixed_offwindow"


# ---------------------------------------------------------------- core of domain


@dataclass
class DomainCoreQuery:
    x: Any
    directions: list
    results: dict  # h -> (n, g) or None

    @property
    def in_core(self) -> bool:
        return all(r is not None for r in self.results.values())


def core_probe(f: FunctionTable, x, directions, n_schedule) -> DomainCoreQuery:
    """For each h find n in the schedule and g with n g = h and f(x + g) < inf."""
    S = f.S
    results = {}
    for h in directions:
        found = None
        for n in n_schedule:
            for g in sorted(S.divide(h, n), key=repr):
                if not f(S.add(x, g)).is_pinf():
                    found = (n, g)
                    break
            if found:
                break
        results[h] = found
    return DomainCoreQuery(x, list(directions), results)


def replay_core(f: FunctionTable, q: DomainCoreQuery) -> bool:
    S = f.S
    for h, r in q.results.items():
        if r is None:
            continue
        n, g = r
        if not S.equal(S.multiple(g, n), h) or f(S.add(q.x, g)).is_pinf():
            return False
    return True


def table_from_rule(S, window, rule, name="f", outside=PLUS_INFINITY):
    return FunctionTable(S, window, rule=rule, name=name, outside=outside)
