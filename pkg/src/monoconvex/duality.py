"""Dual groups, conjugates, subdifferentials, derivatives and the separation witnesses.

Every search here is an exact rational LP over coefficient vectors built from
the whole window, so each witness or certificate can be replayed by hand.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Callable

from .algebra import enumerate_combinations, is_semidivisible
from .errors import (
    BoundsExhausted,
    CorePrereqFailed,
    EmptyProbeSet,
    HypothesisFailed,
    NotSeparating,
    NotStabilized,
    PreconditionFailed,
    UnsupportedDual,
)
from .functions import (
    FunctionTable,
    check_convex,
    check_homogeneous,
    check_n_sublinear,
    check_subadditive,
    classify_generalized_affine,
)
from .instances import dual_kind, solve_exact
from .linear import Polyhedron, fm_eliminate, fm_rows, polytope_from_points, solve_lp
from .maps import AdditiveMap
from .scalar import NINF, PINF, ZERO, ExtendedScalar, add, ext

F0 = Fraction(0)
STABLE_RUN = 3


# ---------------------------------------------------------------- dual spaces


@dataclass(frozen=True)
class DualSpaceDescriptor:
    instance: Any
    representation: str  # "coefficient" or "trivial"
    dimension: int

    def coords(self, x):
        if self.representation != "coefficient":
            return ()
        return tuple(Fraction(v) for v in self.instance.coords(x))


def dual_space(S) -> DualSpaceDescriptor:
    kind = dual_kind(S)
    if kind == "coefficient":
        return DualSpaceDescriptor(S, kind, S.dual_dimension)
    if kind == "trivial":
        return DualSpaceDescriptor(S, kind, 0)
    raise UnsupportedDual(f"no dual representation for {S.name}")


@dataclass(frozen=True)
class AdditiveWitness:
    dual: DualSpaceDescriptor
    coefficients: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "coefficients", tuple(Fraction(c) for c in self.coefficients))
        if len(self.coefficients) != self.dual.dimension:
            raise ValueError("coefficient vector has the wrong length")

    @classmethod
    def zero(cls, dual):
        return cls(dual, (F0,) * dual.dimension)

    def __call__(self, x) -> Fraction:
        return sum((a * v for a, v in zip(self.coefficients, self.dual.coords(x))), F0)

    def __neg__(self):
        return AdditiveWitness(self.dual, tuple(-c for c in self.coefficients))

    def __add__(self, other):
        return AdditiveWitness(self.dual, tuple(a + b for a, b in zip(self.coefficients, other.coefficients)))

    def verify(self, window, limit=400) -> bool:
        S = self.dual.instance
        els = S.enumerate(window)
        n = 0
        for i, x in enumerate(els):
            for y in els[i:]:
                if self(S.add(x, y)) != self(x) + self(y):
                    return False
                n += 1
                if n >= limit:
                    return True
        return True


def adjoint(T: AdditiveMap, phi: AdditiveWitness) -> AdditiveWitness:
    """T* phi = phi o T, read off on unit vectors of the source."""
    src = dual_space(T.source)
    if src.representation == "trivial":
        return AdditiveWitness.zero(src)
    S = T.source
    coeffs = []
    for j in range(src.dimension):
        e = _unit(S, src.dimension, j)
        coeffs.append(phi(T(e)))
    return AdditiveWitness(src, tuple(coeffs))


def _unit(S, d, j):
    from .instances import LatticeZd

    one = 1 if isinstance(S, LatticeZd) else Fraction(1)
    zero = 0 if isinstance(S, LatticeZd) else Fraction(0)
    return tuple(one if i == j else zero for i in range(d))


def _lower(g: FunctionTable, y) -> ExtendedScalar:
    """Lower (concave-side) tables are -inf off their window."""
    return g.values[g.window.locate(y)] if g.defined(y) else NINF


# ---------------------------------------------------------------- directional derivatives


@dataclass
class DirectionalDerivativeReport:
    x: Any
    h: Any
    samples: list  # (n, g, value)
    value: ExtendedScalar
    stabilized: bool


def _g_for(S, h, n):
    gs = S.divide(h, n)
    return sorted(gs, key=repr)[0] if gs else None


def default_schedule(S, length=8):
    p = is_semidivisible(S) or 2
    return [p ** k for k in range(length)]


def directional_derivative(f: FunctionTable, x, h, n_schedule=None, sublinear=False):
    """f_x(h) = inf n (f(x + g) - f(x)) over n g = h.

    With ``sublinear`` the equivalent form f(n x + h) - n f(x) is used.
    """
    S = f.S
    n_schedule = list(n_schedule or default_schedule(S))
    fx = f(x)
    if not fx.finite:
        raise CorePrereqFailed("f(x) must be finite")
    samples = []
    for n in n_schedule:
        if sublinear:
            y = S.add(S.multiple(x, n), h)
            v = f(y)
            samples.append((n, None, v if not v.finite else v - fx * n))
            continue
        g = _g_for(S, h, n)
        if g is None:
            continue
        v = f(S.add(x, g))
        samples.append((n, g, v if not v.finite else (v - fx) * n))
    finite = [s for s in samples if not s[2].is_pinf()]
    if not finite:
        raise CorePrereqFailed(f"no n in the schedule puts x + h/n in dom f (h = {h!r})")
    value = min(s[2] for s in samples)
    # off-window samples read +inf; stabilisation looks at the resolved ones
    tail = [s[2] for s in finite[-STABLE_RUN:]]
    stable = len(tail) == STABLE_RUN and len(set(tail)) == 1 and tail[0] == value
    return DirectionalDerivativeReport(x, h, samples, value, stable)


def derivative_laws_check(f: FunctionTable, x, probes, n_schedule=None):
    S = f.S
    p = is_semidivisible(S)
    if p is None:
        raise PreconditionFailed(f"{S.name} is not declared semidivisible")
    if not check_subadditive(f).holds or not check_homogeneous(f, [p]).holds:
        raise PreconditionFailed(f"f is not subadditive with f({p}x) = {p}f(x) on the window")
    rows, ok = [], True
    for h in probes:
        r = directional_derivative(f, x, h, n_schedule)
        below = r.value <= f(h) if r.stabilized else None
        ok = ok and below is not False
        rows.append({"h": h, "f_x(h)": r.value, "f(h)": f(h), "stabilized": r.stabilized, "below": below})
    plus = directional_derivative(f, x, x, n_schedule)
    minus = directional_derivative(f, x, S.negate(x), n_schedule)
    anti = None
    if plus.stabilized and minus.stabilized:
        anti = add(plus.value, minus.value) <= ZERO
        ok = ok and anti
    return {"holds": ok, "probes": rows, "antisymmetry": anti,
            "f_x(x)": plus.value, "f_x(-x)": minus.value}


# ---------------------------------------------------------------- subdifferentials


@dataclass
class SubdifferentialRep:
    x0: Any
    dual: DualSpaceDescriptor
    constraints: list  # (h, rhs): a(h) <= rhs
    polyhedron: Polyhedron | None

    def contains(self, phi: AdditiveWitness) -> bool:
        return all(phi(h) <= rhs for h, rhs in self.constraints)

    def is_empty(self) -> bool:
        if self.dual.representation == "trivial":
            return any(rhs < 0 for _, rhs in self.constraints)
        return self.polyhedron.is_empty()

    def maximize(self, h):
        """sup a(h) over the set: a Fraction, 'unbounded', or None when empty."""
        if self.dual.representation == "trivial":
            return None if self.is_empty() else F0
        return self.polyhedron.maximize(self.dual.coords(h))

    def vertices(self):
        if self.dual.representation == "trivial":
            return [] if self.is_empty() else [()]
        return self.polyhedron.vertices()

    def witnesses(self):
        return [AdditiveWitness(self.dual, v) for v in self.vertices()]


def subdifferential(f: FunctionTable, x0, probes) -> SubdifferentialRep:
    S = f.S
    dual = dual_space(S)
    f0 = f(x0)
    if not f0.finite:
        raise PreconditionFailed("f(x0) must be finite")
    cons = []
    for h in probes:
        v = f(S.add(x0, h))
        if v.is_pinf():
            continue
        if v.is_ninf():
            cons.append((h, None))
            continue
        cons.append((h, v.value - f0.value))
    if not cons:
        raise EmptyProbeSet("no probe direction stays in dom f")
    if any(r is None for _, r in cons):
        # f = -inf nearby: nothing lies below it; a(0) <= -1 encodes the empty set
        cons = [(S.zero, Fraction(-1))]
    poly = None
    if dual.representation == "coefficient":
        poly = Polyhedron(dual.dimension, [(dual.coords(h), r) for h, r in cons])
    return SubdifferentialRep(x0, dual, cons, poly)


def max_formula_check(f: FunctionTable, x0, h, probes, n_schedule=None):
    S = f.S
    if is_semidivisible(S) is None:
        raise PreconditionFailed(f"{S.name} is not declared semidivisible")
    if dual_space(S).representation != "coefficient":
        raise PreconditionFailed("max formula check needs a coefficient dual")
    if not S.equal(x0, S.zero):
        a = directional_derivative(f, x0, x0, n_schedule)
        b = directional_derivative(f, x0, S.negate(x0), n_schedule)
        if not (a.stabilized and b.stabilized):
            raise NotStabilized("f_x0(+-x0) did not stabilise")
        if add(a.value, b.value) > ZERO:
            raise HypothesisFailed("f_x0(x0) + f_x0(-x0) > 0")
    lhs = directional_derivative(f, x0, h, n_schedule)
    if not lhs.stabilized:
        raise NotStabilized(f"f_x0({h!r}) did not stabilise: {[str(s[2]) for s in lhs.samples]}")
    sub = subdifferential(f, x0, probes)
    if sub.is_empty():
        return {"holds": False, "lhs": lhs.value, "rhs": None, "nonempty": False}
    rhs = sub.maximize(h)
    rhs_e = PINF if rhs == "unbounded" else ExtendedScalar(rhs)
    return {"holds": lhs.value == rhs_e, "lhs": lhs.value, "rhs": rhs_e, "nonempty": True,
            "argmax": sub.polyhedron.argmax(sub.dual.coords(h)) if rhs != "unbounded" else None}


# ---------------------------------------------------------------- conjugates and Fenchel duality


def conjugate(f: FunctionTable, phi: AdditiveWitness) -> ExtendedScalar:
    """sup over the window of phi(x) - f(x) (window-relative)."""
    best = NINF
    for x, v in f.items():
        if v.is_pinf():
            continue
        if v.is_ninf():
            return PINF
        c = ExtendedScalar(phi(x) - v.value)
        if c > best:
            best = c
    return best


def in_subdifferential_window(f: FunctionTable, phi: AdditiveWitness, x) -> bool:
    """f(x) + phi(y - x) <= f(y) for every window y."""
    fx = f(x)
    if not fx.finite:
        return False
    base = phi(x) - fx.value
    for y, v in f.items():
        if v.is_pinf():
            continue
        if v.is_ninf() or phi(y) - v.value > base:
            return False
    return True


def fenchel_young_check(f: FunctionTable, phi: AdditiveWitness, x):
    lhs = add(f(x), conjugate(f, phi))
    rhs = ExtendedScalar(phi(x))
    equality = lhs == rhs
    member = in_subdifferential_window(f, phi, x)
    return {"holds": lhs >= rhs and equality == member, "lhs": lhs, "rhs": rhs,
            "equality": equality, "in_subdifferential": member}


def _domain_difference(f, g, T):
    S2 = T.target
    out = set()
    for x in f.domain():
        tx = T(x)
        for y in g.domain():
            out.add(S2.add(y, S2.negate(tx)))
    return out


def core_of_set(S, C, x, directions, n_schedule):
    """Probe x in core(C) on the given directions; returns {h: (n, g) or None}."""
    C = set(C)
    res = {}
    for h in directions:
        res[h] = None
        for n in n_schedule:
            hit = next((g for g in sorted(S.divide(h, n), key=repr) if S.add(x, g) in C), None)
            if hit is not None:
                res[h] = (n, hit)
                break
    return res


@dataclass
class DualityReport:
    P: ExtendedScalar
    D: ExtendedScalar
    witness: Any
    gap: ExtendedScalar
    search: str
    core: dict | None
    strong_asserted: bool

    @property
    def weak_holds(self):
        return self.P >= self.D

    @property
    def strong_holds(self):
        return self.gap == ZERO


def primal_value(f, g, T):
    best, arg = PINF, None
    for x, v in f.items():
        c = add(v, g(T(x)))
        if c < best or arg is None:
            best, arg = c, x
    return best, arg


def dual_objective(f, g, T, phi):
    return -add(conjugate(f, adjoint(T, phi)), conjugate(g, -phi))


def fenchel_duality(f: FunctionTable, g: FunctionTable, T: AdditiveMap, dual_grid=None,
                    directions=None, n_schedule=None):
    T.verify(f.window)
    P, _ = primal_value(f, g, T)
    d2 = dual_space(T.target)
    dual_space(T.source)
    witness = None
    if dual_grid is not None:
        search = "grid"
        D = NINF
        for phi in dual_grid:
            val = dual_objective(f, g, T, phi)
            if val > D or witness is None:
                D, witness = val, phi
    elif d2.representation == "trivial":
        search = "polyhedral"
        witness = AdditiveWitness.zero(d2)
        D = dual_objective(f, g, T, witness)
    else:
        search = "polyhedral"
        D, witness = _dual_lp(f, g, T, d2)
    core = None
    asserted = False
    if directions is not None:
        C = _domain_difference(f, g, T)
        core = core_of_set(T.target, C, T.target.zero, directions, n_schedule or default_schedule(T.target))
        asserted = (search == "polyhedral" and is_semidivisible(T.source) is not None
                    and all(v is not None for v in core.values()))
    gap = add(P, -D) if D.finite or P.finite else (ZERO if P == D else PINF)
    return DualityReport(P, D, witness, gap, search, core, asserted)


def _dual_lp(f, g, T, d2):
    """max -s - t  s.t.  phi.Tx - s <= f(x),  -phi.y - t <= g(y)."""
    fd = [(x, v) for x, v in f.items() if not v.is_pinf()]
    gd = [(y, v) for y, v in g.items() if not v.is_pinf()]
    if any(v.is_ninf() for _, v in fd + gd) or not fd or not gd:
        phi = AdditiveWitness.zero(d2)
        return dual_objective(f, g, T, phi), phi
    k = d2.dimension
    A, b = [], []
    for x, v in fd:
        A.append(list(d2.coords(T(x))) + [Fraction(-1), F0])
        b.append(v.value)
    for y, v in gd:
        A.append([-c for c in d2.coords(y)] + [F0, Fraction(-1)])
        b.append(v.value)
    res = solve_lp([F0] * k + [Fraction(-1), Fraction(-1)], A, b, certify=False)
    if res.status == "unbounded":
        return PINF, None
    # among optimal multipliers prefer the smallest in l1
    tie = _min_l1_point(A + [[F0] * k + [Fraction(1), Fraction(1)]], b + [-res.value], k, extra_vars=2)
    x = tie.x if tie.status == "optimal" else res.x
    phi = AdditiveWitness(d2, x[:k])
    return ExtendedScalar(res.value), phi


# ---------------------------------------------------------------- separation witnesses


@dataclass
class AffineWitness:
    a: AdditiveWitness
    c: Fraction

    def __call__(self, x):
        return self.a(x) + self.c


@dataclass
class InfeasibleCertificate:
    """Nonnegative combinations of the window constraints.

    ``upper`` derives c <= U, ``lower`` derives c >= L with U < L; each carries
    {constraint index: multiplier}.  ``constraints`` lists (kind, point, value).
    """

    constraints: list
    upper: tuple | None
    lower: tuple | None
    farkas: tuple | None = None

    def replay(self, d) -> bool:
        """Recombine the listed constraints and confirm the contradiction."""
        rows = _constraint_rows(self.constraints, d)
        if self.upper is None:
            return False
        U = _combine(rows, self.upper[1])
        L = _combine(rows, self.lower[1])
        if any(U[0][:d]) or any(L[0][:d]):
            return False
        # U: k_u c <= r_u with k_u > 0 ; L: -k_l c <= r_l with k_l > 0
        ku, ru = U[0][d], U[1]
        kl, rl = -L[0][d], L[1]
        return ku > 0 and kl > 0 and ru / ku == self.upper[0] and -rl / kl == self.lower[0] \
            and self.upper[0] < self.lower[0]


def _constraint_rows(constraints, d):
    rows = []
    for kind, coords, val in constraints:
        if kind == "upper":  # a.x + c <= f(x)
            rows.append((list(coords) + [Fraction(1)], val))
        else:  # a.x + c >= g(Tx)
            rows.append(([-v for v in coords] + [Fraction(-1)], -val))
    return rows


def _combine(rows, mult):
    n = len(rows[0][0])
    coeffs = [F0] * n
    rhs = F0
    for i, m in mult.items():
        r, b = rows[i]
        coeffs = [c + m * v for c, v in zip(coeffs, r)]
        rhs += m * b
    return coeffs, rhs


FM_CAP = 20000


def _bound_certificate(rows, d):
    fm = fm_rows([r for r, _ in rows], [b for _, b in rows])
    for j in range(d):
        fm = fm_eliminate(fm, j)
        if len(fm) > FM_CAP:
            return None, None
    ups = [r for r in fm if r.coeffs[d] > 0]
    lows = [r for r in fm if r.coeffs[d] < 0]
    if not ups or not lows:
        return None, None
    u = min(ups, key=lambda r: r.rhs / r.coeffs[d])
    lo = max(lows, key=lambda r: r.rhs / r.coeffs[d])
    U = u.rhs / u.coeffs[d]
    L = lo.rhs / lo.coeffs[d]
    if U >= L:
        return None, None
    return (U, dict(u.mult)), (L, dict(lo.mult))


def _min_l1_point(A, b, d, extra_vars=0, A_eq=(), b_eq=()):
    """Feasible point of A z <= b minimising the l1 norm of the first d coordinates."""
    nv = d + extra_vars
    A2 = [list(r) + [F0] * d for r in A]
    for j in range(d):
        for s in (1, -1):
            row = [F0] * (nv + d)
            row[j] = Fraction(s)
            row[nv + j] = Fraction(-1)
            A2.append(row)
    b2 = list(b) + [F0] * (2 * d)
    Aeq2 = [list(r) + [F0] * d for r in A_eq]
    cost = [F0] * nv + [Fraction(-1)] * d
    res = solve_lp(cost, A2, b2, Aeq2, list(b_eq), certify=True)
    return res


def sandwich_witness(f: FunctionTable, g: FunctionTable, T: AdditiveMap):
    """Affine a = phi + c with g o T <= a <= f on the window of f, or a certificate."""
    S = f.S
    dual = dual_space(S)
    if dual.representation != "coefficient":
        raise PreconditionFailed("sandwich search needs a coefficient dual on the source")
    T.verify(f.window)
    cons = []
    for x, v in f.items():
        gv = _lower(g, T(x))
        if gv > v:
            raise PreconditionFailed(f"g(T x) > f(x) at {x!r}")
        coords = dual.coords(x)
        if v.finite:
            cons.append(("upper", coords, v.value, x))
        elif v.is_ninf():
            return InfeasibleCertificate([("upper", coords, None)], None, None)
        if gv.finite:
            cons.append(("lower", coords, gv.value, x))
        elif gv.is_pinf():
            return InfeasibleCertificate([("lower", coords, None)], None, None)
    d = dual.dimension
    listed = [(k, c, val) for k, c, val, _ in cons]
    rows = _constraint_rows(listed, d)
    if not rows:
        return AffineWitness(AdditiveWitness.zero(dual), F0)
    res = _min_l1_point([r for r, _ in rows], [b for _, b in rows], d, extra_vars=1)
    if res.status != "optimal":
        up, lo = _bound_certificate(rows, d)
        return InfeasibleCertificate([(k, c, val) for k, c, val in listed], up, lo,
                                     (res.farkas_ub, res.farkas_eq))
    alpha = res.x[:d]
    phi = AdditiveWitness(dual, alpha)
    lo_c, hi_c = None, None
    for kind, coords, val in listed:
        slack = val - phi_coords(alpha, coords)
        if kind == "upper":
            hi_c = slack if hi_c is None else min(hi_c, slack)
        else:
            lo_c = slack if lo_c is None else max(lo_c, slack)
    if lo_c is not None and hi_c is not None:
        c = (lo_c + hi_c) / 2
    else:
        c = lo_c if lo_c is not None else hi_c
    return AffineWitness(phi, c)


def phi_coords(alpha, coords):
    return sum((a * v for a, v in zip(alpha, coords)), F0)


@dataclass
class InfeasibleWithinWindow:
    reason: str
    farkas: tuple | None = None
    contradicts_theorem: bool = False


def kaufman_witness(f: FunctionTable, g: FunctionTable):
    """Additive a with g <= a <= f on the window."""
    if not check_subadditive(f).holds:
        raise PreconditionFailed("f is not subadditive")
    if not check_subadditive(-g).holds:
        raise PreconditionFailed("-g is not subadditive")
    S = f.S
    dual = dual_space(S)
    for x, v in f.items():
        if _lower(g, x) > v:
            raise PreconditionFailed(f"g > f at {x!r}")
    A, b = [], []
    for x, v in f.items():
        gv = _lower(g, x)
        coords = list(dual.coords(x))
        if v.is_ninf() or gv.is_pinf():
            return InfeasibleWithinWindow(f"infinite bound at {x!r}")
        if v.finite:
            A.append(coords)
            b.append(v.value)
        if gv.finite:
            A.append([-c for c in coords])
            b.append(-gv.value)
    d = dual.dimension
    if d == 0:
        if all(r >= 0 for r in b):
            return AdditiveWitness.zero(dual)
        return InfeasibleWithinWindow("the zero map is the only additive function and it violates a bound")
    if not A:
        return AdditiveWitness.zero(dual)
    res = _min_l1_point(A, b, d)
    if res.status != "optimal":
        return InfeasibleWithinWindow("no coefficient vector satisfies the window bounds",
                                      (res.farkas_ub, res.farkas_eq))
    return AdditiveWitness(dual, res.x[:d])


@dataclass
class Extension:
    witness: AdditiveWitness
    ranges: list  # per coordinate (lo, hi), None = unbounded


def _in_span(gens, x):
    alpha = solve_exact([tuple(Fraction(v) for v in g) for g in gens], [Fraction(v) for v in x])
    if alpha is None or any(a.denominator != 1 for a in alpha):
        return None
    return alpha


def hahn_banach_extend(f: FunctionTable, h: dict, m_max: int = 4):
    """Extend h (values on independent subgroup generators) to a <= f."""
    S = f.S
    dual = dual_space(S)
    if dual.representation != "coefficient":
        raise PreconditionFailed("extension search needs a coefficient dual")
    if not check_n_sublinear(f, m_max).holds:
        raise PreconditionFailed("f is not N-sublinear on the window")
    gens = list(h)
    gc = [dual.coords(g) for g in gens]
    hv = [Fraction(h[g]) for g in gens]
    for x, v in f.items():
        alpha = _in_span(gc, dual.coords(x))
        if alpha is None:
            continue
        hx = sum((a * w for a, w in zip(alpha, hv)), F0)
        if ExtendedScalar(hx) > v:
            raise PreconditionFailed(f"h({x!r}) = {hx} exceeds f")
    d = dual.dimension
    A = [list(dual.coords(x)) for x, v in f.items() if v.finite]
    b = [v.value for x, v in f.items() if v.finite]
    res = _min_l1_point(A, b, d, A_eq=[list(c) for c in gc], b_eq=hv)
    if res.status != "optimal":
        return InfeasibleWithinWindow("no extension below f on the window", (res.farkas_ub, res.farkas_eq))
    ranges = []
    for j in range(d):
        e = [F0] * d
        e[j] = Fraction(1)
        hi = solve_lp(e, A, b, [list(c) for c in gc], hv, certify=False)
        lo = solve_lp([-v for v in e], A, b, [list(c) for c in gc], hv, certify=False)
        ranges.append((None if lo.status == "unbounded" else -lo.value,
                       None if hi.status == "unbounded" else hi.value))
    return Extension(AdditiveWitness(dual, res.x[:d]), ranges)


# ---------------------------------------------------------------- interpolation


@dataclass
class RefineResult:
    table: FunctionTable
    side: str
    holds: bool
    applied: bool
    violations: list = field(default_factory=list)


def interpolation_refine_step(f: FunctionTable, g: FunctionTable, x0, r, side: str,
                              max_terms: int, max_coeff: int):
    """One refinement of the interpolation argument.

    lower: h(x) = sup (k0 r + sum k_i g(y_i)) / k over k x = k0 x0 + sum k_i y_i
    upper: h'(x) = inf (k0 r + (k - k0) f(y)) / k over k x = k0 x0 + (k - k0) y
    k0 = 0 is allowed, so h >= g and h' <= f come for free.
    """
    if side not in ("lower", "upper"):
        raise ValueError("side is 'lower' or 'upper'")
    S = f.S
    if not f.same_window(g):
        raise PreconditionFailed("tables live on different windows")
    if f == g:
        return RefineResult(g if side == "lower" else f, side, True, False)
    if is_semidivisible(S) is None:
        raise PreconditionFailed(f"{S.name} is not declared semidivisible")
    if not check_convex(f, max_terms, max_coeff).holds or not check_convex(-g, max_terms, max_coeff).holds:
        raise PreconditionFailed("f and -g must be convex within bounds")
    r = ext(r)
    if not (g(x0) < r < f(x0)):
        raise PreconditionFailed("need g(x0) < r < f(x0)")
    if side == "lower":
        vals, used = _refine_lower(g, x0, r, max_terms, max_coeff)
    else:
        vals, used = _refine_upper(f, x0, r, max_coeff)
    if not used:
        raise BoundsExhausted("no defining relation through x0 lands in the window")
    h = g.with_values(vals, f"{'h' if side == 'lower' else 'h_prime'}")
    bad = [x for x in g.elements if not (g.values[x] <= h.values[x] <= f.values[x])]
    at = h(x0)
    ok = not bad and (at >= r if side == "lower" else at <= r)
    return RefineResult(h, side, ok, True, bad)


def _refine_lower(g, x0, r, max_terms, max_coeff):
    S = g.S
    gens = [("x0", x0, r)] + [(i, y, v) for i, (y, v) in enumerate(g.items()) if not v.is_ninf()]
    vals = dict(g.values)
    used = False
    for rel in enumerate_combinations(range(len(gens)), max_terms, max_coeff):
        total = S.zero
        cost = ZERO
        k0 = 0
        for c, i in rel.terms:
            tag, y, v = gens[i]
            total = S.add(total, S.multiple(y, c))
            cost = add(cost, v * c)
            if tag == "x0":
                k0 = c
        if not k0:
            continue
        val = cost / rel.m
        for x in S.divide(total, rel.m):
            canon = g.window.locate(x)
            if canon is None:
                continue
            used = True
            if val > vals[canon]:
                vals[canon] = val
    return vals, used


def _refine_upper(f, x0, r, max_coeff):
    S = f.S
    vals = dict(f.values)
    used = False
    dom = [(y, v) for y, v in f.items() if not v.is_pinf()]
    for k in range(1, max_coeff + 1):
        for k0 in range(1, k + 1):
            if k0 == k:
                cands = [(S.multiple(x0, k), r * k)]
            else:
                cands = [(S.add(S.multiple(x0, k0), S.multiple(y, k - k0)), add(r * k0, v * (k - k0)))
                         for y, v in dom]
            for total, cost in cands:
                val = cost / k
                for x in S.divide(total, k):
                    canon = f.window.locate(x)
                    if canon is None:
                        continue
                    used = True
                    if val < vals[canon]:
                        vals[canon] = val
    return vals, used


# ---------------------------------------------------------------- generalised affine and Stone


@dataclass
class GeneralizedAffineWitness:
    finite: AdditiveWitness
    offset: Fraction
    plus_region: Callable = lambda x: False
    minus_region: Callable = lambda x: False
    classification: str = "finite"

    def __call__(self, x) -> ExtendedScalar:
        if self.minus_region(x):
            return NINF
        if self.plus_region(x):
            return PINF
        return ExtendedScalar(self.finite(x) + self.offset)

    def regions_disjoint(self, window) -> bool:
        return not any(self.plus_region(x) and self.minus_region(x) for x in window.elements())


def affine_as_generalized(w: AffineWitness) -> GeneralizedAffineWitness:
    return GeneralizedAffineWitness(w.a, w.c)


def generalized_affine_witness(f: FunctionTable, max_terms: int, max_coeff: int):
    """Witness matching a table that is convex and concave within bounds."""
    cls = classify_generalized_affine(f, max_terms, max_coeff)
    if cls == "not_affine":
        raise PreconditionFailed("table is not both convex and concave within bounds")
    dual = dual_space(f.S)
    plus = frozenset(x for x, v in f.items() if v.is_pinf())
    minus = frozenset(x for x, v in f.items() if v.is_ninf())
    fin = [(x, v.value) for x, v in f.items() if v.finite]
    phi, c = AdditiveWitness.zero(dual), F0
    if fin:
        d = dual.dimension
        A_eq = [list(dual.coords(x)) + [Fraction(1)] for x, _ in fin]
        b_eq = [v for _, v in fin]
        res = solve_lp([F0] * (d + 1), A_eq=A_eq, b_eq=b_eq, certify=False)
        if res.status != "optimal":
            raise PreconditionFailed("finite values are not affine on the window")
        phi, c = AdditiveWitness(dual, res.x[:d]), res.x[d]
    return GeneralizedAffineWitness(phi, c, lambda x: x in plus, lambda x: x in minus, cls)


def stone_partition(witness, A, B, window):
    """C = {a < 0}, D = {a >= 0} over the window for a separator with a <= 0 on A, a >= 0 on B."""
    A, B = list(A), list(B)
    for x in A:
        if witness(x) > ZERO:
            raise NotSeparating(f"a > 0 at {x!r} in A")
    for x in B:
        if witness(x) < ZERO:
            raise NotSeparating(f"a < 0 at {x!r} in B")
    els = window.elements()
    C = [x for x in els if witness(x) < ZERO]
    D = [x for x in els if not witness(x) < ZERO]
    assert not set(C) & set(D) and len(C) + len(D) == len(els)
    Cs = set(C)
    return C, D, {"A_in_C": all(x in Cs for x in A), "B_in_D": not any(x in Cs for x in B),
                  "boundary_of_A": [x for x in A if witness(x) == ZERO]}


# ---------------------------------------------------------------- sum rule


def sum_rule_check(f: FunctionTable, g: FunctionTable, T: AdditiveMap, x0, probes):
    S1 = f.S
    d1 = dual_space(S1)
    if d1.representation != "coefficient" or dual_space(T.target).representation != "coefficient":
        raise PreconditionFailed("sum rule check needs coefficient duals")
    total = f.with_values({x: add(v, g(T(x))) for x, v in f.items()}, f"{f.name}+{g.name}oT")
    probes = list(probes)
    sf = subdifferential(f, x0, probes)
    sg = subdifferential(g, T(x0), [T(h) for h in probes])
    st = subdifferential(total, x0, probes)
    vf, vg = sf.witnesses(), sg.witnesses()
    sums = [a + adjoint(T, b) for a in vf for b in vg]
    inclusion = all(st.contains(s) for s in sums)
    equality = None
    if d1.dimension <= 2 and sums and st.polyhedron.bounded():
        hull = polytope_from_points([s.coefficients for s in sums], d1.dimension)
        equality = hull.equals(st.polyhedron)
    return {"holds": inclusion and equality is not False, "inclusion": inclusion, "equality": equality,
            "sum_vertices": sorted(s.coefficients for s in sums), "total_vertices": st.vertices()
            if st.polyhedron.bounded() else None}
