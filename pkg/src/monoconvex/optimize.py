"""Value functions, Lagrangian bounds and the subdifferential of a pointwise maximum."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .algebra import is_semidivisible
from .duality import dual_space, subdifferential
from .errors import NegativeMultiplier, PreconditionFailed
from .functions import FunctionTable, check_homogeneous, check_subadditive, pointwise_max
from .linear import polytope_from_points
from .scalar import PINF, ExtendedScalar, add, ext, ext_sum


@dataclass
class ConstrainedProblem:
    """min f(x) subject to g_i(x) <= b_i, over the shared window."""

    objective: FunctionTable
    constraints: list

    def __post_init__(self):
        if not self.constraints:
            raise ValueError("need at least one constraint")
        for g in self.constraints:
            if not self.objective.same_window(g):
                raise PreconditionFailed("objective and constraints must share a window")

    @property
    def k(self):
        return len(self.constraints)

    def feasible(self, x, b) -> bool:
        return all(g.values[x] <= ext(bi) for g, bi in zip(self.constraints, b))


def _vec(b, k):
    if isinstance(b, (list, tuple)):
        out = tuple(Fraction(v) for v in b)
    else:
        out = (Fraction(b),)
    if len(out) != k:
        raise ValueError(f"rhs must have {k} entries")
    return out


@dataclass
class ValueFunctionTable:
    values: dict  # rhs tuple -> ExtendedScalar
    feasible: dict  # rhs tuple -> bool
    argmin: dict
    window_relative: bool = True

    def __call__(self, b):
        return self.values[_vec(b, len(next(iter(self.values))))]


def value_function(P: ConstrainedProblem, grid) -> ValueFunctionTable:
    f = P.objective
    vals, feas, arg = {}, {}, {}
    for b in grid:
        b = _vec(b, P.k)
        best, where = PINF, None
        for x in f.elements:
            if P.feasible(x, b):
                v = f.values[x]
                if where is None or v < best:
                    best, where = v, x
        vals[b], feas[b], arg[b] = best, where is not None, where
    return ValueFunctionTable(vals, feas, arg)


@dataclass
class LawVerdict:
    holds: bool | None  # None: hypotheses not met, law not asserted
    certificate: dict | None = None
    note: str = ""


def value_function_laws(P: ConstrainedProblem, grid, p: int | None = None):
    tables = [P.objective] + list(P.constraints)
    out = {}
    if all(check_subadditive(t).holds for t in tables):
        v = value_function(P, grid)
        out["subadditive"] = _check_v_subadditive(v)
    else:
        out["subadditive"] = LawVerdict(None, note="objective or a constraint is not subadditive")
    if p is not None:
        v = value_function(P, list(grid) + [tuple(p * c for c in _vec(b, P.k)) for b in grid])
        law = _check_v_homogeneous(v, grid, p, P.k)
        S = P.objective.S
        hyp = S.declared(p) == "divisible" and all(check_homogeneous(t, [p]).holds for t in tables)
        if not hyp:
            law.note = f"hypotheses fail ({S.name} not {p}-semidivisible or tables not {p}-homogeneous)"
            if law.holds is False:
                law.note += "; failure is consistent with that"
        out["homogeneous"] = law
        out["homogeneous_hypotheses"] = hyp
    return out


def _check_v_subadditive(v: ValueFunctionTable) -> LawVerdict:
    keys = list(v.values)
    for b in keys:
        for c in keys:
            s = tuple(x + y for x, y in zip(b, c))
            if s not in v.values:
                continue
            lhs, rhs = v.values[s], add(v.values[b], v.values[c])
            if lhs > rhs:
                return LawVerdict(False, {"b": b, "c": c, "v(b+c)": lhs, "v(b)+v(c)": rhs})
    return LawVerdict(True)


def _check_v_homogeneous(v, grid, p, k) -> LawVerdict:
    for b in grid:
        b = _vec(b, k)
        pb = tuple(p * c for c in b)
        lhs, rhs = v.values[pb], v.values[b] * p
        if lhs != rhs:
            return LawVerdict(False, {"b": b, "p": p, "v(pb)": lhs, "p*v(b)": rhs})
    return LawVerdict(True)


def lagrangian(P: ConstrainedProblem, x, lam, b) -> ExtendedScalar:
    """f(x) + sum lam_i (g_i(x) - b_i)."""
    lam = _vec(lam, P.k)
    if any(l < 0 for l in lam):
        raise NegativeMultiplier(f"multiplier {lam} has a negative entry")
    b = _vec(b, P.k)
    terms = [P.objective(x)]
    for l, g, bi in zip(lam, P.constraints, b):
        if l:
            terms.append(ext(g(x) - ext(bi)) * l)
    return ext_sum(terms)


@dataclass
class LagrangianReport:
    multiplier: tuple
    bound: ExtendedScalar
    primal: ExtendedScalar
    gap: ExtendedScalar
    exact: bool
    scanned: list = field(default_factory=list)
    window_relative: bool = True


def dual_bound(P, lam, b):
    return min(lagrangian(P, x, lam, b) for x in P.objective.elements)


def find_multiplier(P: ConstrainedProblem, b, lam_grid) -> LagrangianReport:
    b = _vec(b, P.k)
    primal = value_function(P, [b]).values[b]
    best, arg, scanned = None, None, []
    for lam in lam_grid:
        lam = _vec(lam, P.k)
        val = dual_bound(P, lam, b)
        scanned.append((lam, val))
        if best is None or val > best:
            best, arg = val, lam
    if best is None:
        raise ValueError("empty multiplier grid")
    gap = add(primal, -best)
    return LagrangianReport(arg, best, primal, gap, gap == ExtendedScalar(0), scanned)


def subdiff_of_max_check(fs, x0, probes):
    fs = list(fs)
    S = fs[0].S
    if is_semidivisible(S) is None:
        raise PreconditionFailed(f"{S.name} is not declared semidivisible")
    dual = dual_space(S)
    if dual.representation != "coefficient":
        raise PreconditionFailed("needs a coefficient dual")
    F = pointwise_max(fs)
    top = F(x0)
    active = [i for i, f in enumerate(fs) if f(x0) == top]
    probes = list(probes)
    sF = subdifferential(F, x0, probes)
    parts = [subdifferential(fs[i], x0, probes) for i in active]
    pts = [v for s in parts for v in s.vertices()]
    hull = polytope_from_points(pts, dual.dimension)
    equal = hull.equals(sF.polyhedron) if dual.dimension <= 2 else None
    return {"holds": bool(equal), "active": active, "max_vertices": sF.vertices(),
            "union_vertices": sorted(set(pts))}
