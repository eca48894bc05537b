"""Exact rational linear programming.

A dense two-phase simplex with Bland's rule over ``Fraction`` entries, Farkas
certificates for infeasible systems, Fourier-Motzkin elimination with
multiplier tracking, and a small H-polyhedron type.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from math import gcd, lcm

F0 = Fraction(0)
F1 = Fraction(1)


@dataclass
class LPResult:
    status: str  # "optimal", "infeasible", "unbounded"
    x: tuple | None = None
    value: Fraction | None = None
    farkas_ub: tuple | None = None
    farkas_eq: tuple | None = None


def _fr(rows):
    return [[Fraction(v) for v in r] for r in rows]


class _Tableau:
    def __init__(self, rows, rhs, basis):
        self.rows = rows  # list of lists, each length ncols
        self.rhs = rhs
        self.basis = basis

    def pivot(self, r, c):
        row = self.rows[r]
        pv = row[c]
        if pv != 1:
            inv = 1 / pv
            row = [v * inv for v in row]
            self.rows[r] = row
            self.rhs[r] *= inv
        nz = [(j, v) for j, v in enumerate(row) if v]
        rr = self.rhs[r]
        for i, other in enumerate(self.rows):
            if i == r:
                continue
            f = other[c]
            if f:
                for j, v in nz:
                    other[j] -= f * v
                self.rhs[i] -= f * rr
        self.basis[r] = c

    def optimize(self, cost, allowed):
        """Maximise cost.z; returns 'optimal' or 'unbounded'."""
        allowed = list(allowed)
        while True:
            basic = set(self.basis)
            cb = [(i, cost[b]) for i, b in enumerate(self.basis) if cost[b]]
            entering = None
            for j in allowed:
                if j in basic:
                    continue
                red = cost[j]
                for i, w in cb:
                    v = self.rows[i][j]
                    if v:
                        red -= w * v
                if red > 0:
                    entering = j
                    break
            if entering is None:
                return "optimal"
            best = None
            for i, row in enumerate(self.rows):
                a = row[entering]
                if a > 0:
                    key = (self.rhs[i] / a, self.basis[i])
                    if best is None or key < best[0]:
                        best = (key, i)
            if best is None:
                return "unbounded"
            self.pivot(best[1], entering)


def _simplex_std(A, b, c):
    """max c.z s.t. A z = b, z >= 0 (b arbitrary sign).  Dense, exact."""
    m = len(A)
    n = len(c)
    rows, rhs = [], []
    for i in range(m):
        r = list(A[i])
        bi = b[i]
        if bi < 0:
            r = [-v for v in r]
            bi = -bi
        rows.append(r + [F0] * m)
        rhs.append(bi)
    for i in range(m):
        rows[i][n + i] = F1
    tab = _Tableau(rows, rhs, [n + i for i in range(m)])
    phase1 = [F0] * n + [-F1] * m
    tab.optimize(phase1, range(n + m))
    if any(tab.rhs[i] != 0 for i in range(m) if tab.basis[i] >= n):
        return "infeasible", None, None
    # drive artificials out or drop redundant rows
    i = 0
    while i < len(tab.rows):
        if tab.basis[i] >= n:
            j = next((j for j in range(n) if tab.rows[i][j] != 0), None)
            if j is None:
                del tab.rows[i], tab.rhs[i], tab.basis[i]
                continue
            tab.pivot(i, j)
        i += 1
    cost = list(c) + [F0] * m
    status = tab.optimize(cost, range(n))
    if status == "unbounded":
        return "unbounded", None, None
    z = [F0] * n
    for i, bi in enumerate(tab.basis):
        if bi < n:
            z[bi] = tab.rhs[i]
    return "optimal", z, sum((ci * zi for ci, zi in zip(c, z)), F0)


def solve_lp(c, A_ub=(), b_ub=(), A_eq=(), b_eq=(), nonneg=(), maximize=True, certify=True):
    """Optimise c.x subject to A_ub x <= b_ub and A_eq x = b_eq.

    Variables are free except the indices listed in ``nonneg``.  When the
    system is infeasible and ``certify`` is set, a Farkas vector is attached:
    y_ub >= 0 and y_eq with y.A = 0 on free columns, >= 0 on nonneg columns,
    and y.b = -1.
    """
    c = [Fraction(v) for v in c]
    nv = len(c)
    A_ub, A_eq = _fr(A_ub), _fr(A_eq)
    b_ub, b_eq = [Fraction(v) for v in b_ub], [Fraction(v) for v in b_eq]
    nonneg = set(nonneg)
    # columns: for free vars x = p - q, for nonneg vars x = p
    colmap = []
    for j in range(nv):
        colmap.append((j, 1))
        if j not in nonneg:
            colmap.append((j, -1))
    ns = len(A_ub)
    A, b = [], []
    for i, row in enumerate(A_ub):
        A.append([row[j] * s for j, s in colmap] + [F1 if k == i else F0 for k in range(ns)])
        b.append(b_ub[i])
    for i, row in enumerate(A_eq):
        A.append([row[j] * s for j, s in colmap] + [F0] * ns)
        b.append(b_eq[i])
    sign = 1 if maximize else -1
    cost = [sign * c[j] * s for j, s in colmap] + [F0] * ns
    status, z, _ = _simplex_std(A, b, cost)
    if status == "optimal":
        x = [F0] * nv
        for (j, s), v in zip(colmap, z):
            x[j] += s * v
        value = sum((ci * xi for ci, xi in zip(c, x)), F0)
        return LPResult("optimal", tuple(x), value)
    if status == "unbounded":
        return LPResult("unbounded")
    res = LPResult("infeasible")
    if certify:
        res.farkas_ub, res.farkas_eq = farkas(A_ub, b_ub, A_eq, b_eq, nv, nonneg)
    return res


def farkas(A_ub, b_ub, A_eq, b_eq, nv, nonneg=()):
    """A vertex Farkas certificate for an infeasible system (see solve_lp)."""
    mu, me = len(A_ub), len(A_eq)
    ny = mu + me
    rows_eq, rhs_eq, rows_ub, rhs_ub = [], [], [], []
    for j in range(nv):
        col = [A_ub[i][j] for i in range(mu)] + [A_eq[i][j] for i in range(me)]
        if j in nonneg:
            rows_ub.append([-v for v in col])  # y.A_j >= 0
            rhs_ub.append(F0)
        else:
            rows_eq.append(col)
            rhs_eq.append(F0)
    rows_eq.append([Fraction(v) for v in b_ub] + [Fraction(v) for v in b_eq])
    rhs_eq.append(-F1)
    res = solve_lp([F0] * ny, rows_ub, rhs_ub, rows_eq, rhs_eq, nonneg=range(mu), certify=False)
    if res.status != "optimal":
        raise ArithmeticError("system reported infeasible but no Farkas vector exists")
    y = res.x
    return tuple(y[:mu]), tuple(y[mu:])


def check_farkas(A_ub, b_ub, A_eq, b_eq, y_ub, y_eq, nonneg=()) -> bool:
    nv = len(A_ub[0]) if A_ub else len(A_eq[0])
    if any(v < 0 for v in y_ub):
        return False
    for j in range(nv):
        s = sum((Fraction(A_ub[i][j]) * y_ub[i] for i in range(len(A_ub))), F0)
        s += sum((Fraction(A_eq[i][j]) * y_eq[i] for i in range(len(A_eq))), F0)
        if (j in nonneg and s < 0) or (j not in nonneg and s != 0):
            return False
    total = sum((Fraction(b) * y for b, y in zip(b_ub, y_ub)), F0)
    total += sum((Fraction(b) * y for b, y in zip(b_eq, y_eq)), F0)
    return total < 0


def feasible_point(A_ub, b_ub, A_eq=(), b_eq=()):
    nv = len(A_ub[0]) if A_ub else len(A_eq[0])
    res = solve_lp([0] * nv, A_ub, b_ub, A_eq, b_eq, certify=False)
    return res.x if res.status == "optimal" else None


# ---------------------------------------------------------------- Fourier-Motzkin


@dataclass
class FMRow:
    """sum(coeffs[j] * x_j) <= rhs, derived as sum(mult[i] * original_row_i)."""

    coeffs: tuple
    rhs: Fraction
    mult: dict = field(default_factory=dict)


def _normalise(row: FMRow) -> FMRow:
    nz = [abs(v) for v in row.coeffs if v]
    if not nz:
        return row
    scale = min(nz)
    return FMRow(
        tuple(v / scale for v in row.coeffs),
        row.rhs / scale,
        {k: v / scale for k, v in row.mult.items()},
    )


def fm_eliminate(rows, var: int):
    pos, neg, rest = [], [], []
    for r in rows:
        a = r.coeffs[var]
        (pos if a > 0 else neg if a < 0 else rest).append(r)
    out = list(rest)
    for p in pos:
        for q in neg:
            a, b = p.coeffs[var], -q.coeffs[var]
            coeffs = tuple(b * u + a * v for u, v in zip(p.coeffs, q.coeffs))
            mult = {}
            for k, v in p.mult.items():
                mult[k] = mult.get(k, F0) + b * v
            for k, v in q.mult.items():
                mult[k] = mult.get(k, F0) + a * v
            out.append(_normalise(FMRow(coeffs, b * p.rhs + a * q.rhs, mult)))
    # drop exact duplicates, keeping the tightest rhs per normal
    best = {}
    for r in out:
        key = r.coeffs
        if key not in best or r.rhs < best[key].rhs:
            best[key] = r
    return list(best.values())


def fm_rows(A_ub, b_ub):
    return [
        FMRow(tuple(Fraction(v) for v in row), Fraction(b), {i: F1})
        for i, (row, b) in enumerate(zip(A_ub, b_ub))
    ]


def fm_feasible(A_ub, b_ub) -> bool:
    """Feasibility of A x <= b by full Fourier-Motzkin elimination."""
    rows = fm_rows(A_ub, b_ub)
    nv = len(A_ub[0]) if A_ub else 0
    for j in range(nv):
        rows = fm_eliminate(rows, j)
    return all(r.rhs >= 0 for r in rows)


# ---------------------------------------------------------------- polyhedra


def primitive(vec):
    """Scale a rational vector to coprime integers (sign kept)."""
    vec = [Fraction(v) for v in vec]
    den = lcm(*(v.denominator for v in vec)) if vec else 1
    ints = [int(v * den) for v in vec]
    g = 0
    for v in ints:
        g = gcd(g, v)
    if g == 0:
        return tuple(ints), den
    return tuple(v // g for v in ints), Fraction(den, g)


class Polyhedron:
    """{a : A a <= b} in exact rationals."""

    def __init__(self, dim: int, constraints):
        self.dim = dim
        best = {}
        for row, rhs in constraints:
            row = tuple(Fraction(v) for v in row)
            rhs = Fraction(rhs)
            if not any(row):
                if rhs < 0:
                    best[("empty",)] = ((F0,) * dim, rhs)
                continue
            normal, scale = primitive(row)
            r = rhs * scale
            if normal not in best or r < best[normal][1]:
                best[normal] = (normal, r)
        self.constraints = [(tuple(Fraction(v) for v in n), r) for n, r in best.values()]
        self.constraints.sort(key=lambda c: (c[0], c[1]))
        self._empty = None

    def A(self):
        return [list(c[0]) for c in self.constraints]

    def b(self):
        return [c[1] for c in self.constraints]

    def contains(self, point) -> bool:
        p = [Fraction(v) for v in point]
        return all(sum((a * x for a, x in zip(row, p)), F0) <= rhs for row, rhs in self.constraints)

    def is_empty(self) -> bool:
        if self._empty is None:
            if not self.constraints:
                self._empty = False
            else:
                self._empty = feasible_point(self.A(), self.b()) is None
        return self._empty

    def maximize(self, direction):
        """Exact sup of direction.a over the polyhedron; None if empty, 'unbounded' if so."""
        if self.is_empty():
            return None
        if not self.constraints:
            return "unbounded" if any(direction) else F0
        res = solve_lp(direction, self.A(), self.b(), certify=False)
        if res.status == "unbounded":
            return "unbounded"
        return res.value

    def argmax(self, direction):
        res = solve_lp(direction, self.A(), self.b(), certify=False)
        return res.x if res.status == "optimal" else None

    def bounded(self) -> bool:
        for j in range(self.dim):
            for s in (1, -1):
                e = [F0] * self.dim
                e[j] = Fraction(s)
                if self.maximize(e) == "unbounded":
                    return False
        return True

    def subset_of(self, other: "Polyhedron") -> bool:
        if self.is_empty():
            return True
        for row, rhs in other.constraints:
            m = self.maximize(row)
            if m == "unbounded" or m > rhs:
                return False
        return True

    def equals(self, other: "Polyhedron") -> bool:
        return self.subset_of(other) and other.subset_of(self)

    def vertices(self):
        """Vertices of a bounded polyhedron (brute force over constraint d-subsets)."""
        if self.dim > 3:
            raise ValueError("vertex enumeration supports d <= 3")
        if self.is_empty():
            return []
        if not self.bounded():
            raise ValueError("polyhedron is unbounded")
        found = set()
        rows = self.constraints
        for subset in combinations(range(len(rows)), self.dim):
            M = [rows[i][0] for i in subset]
            rhs = [rows[i][1] for i in subset]
            sol = _solve_square(M, rhs)
            if sol is not None and self.contains(sol):
                found.add(sol)
        return sorted(found)

    def interval(self):
        """(lo, hi) for d = 1; None entries mean unbounded."""
        if self.dim != 1:
            raise ValueError("interval() needs dimension 1")
        if self.is_empty():
            return None
        lo = self.maximize([-1])
        hi = self.maximize([1])
        return (None if lo == "unbounded" else -lo, None if hi == "unbounded" else hi)

    def __repr__(self):
        return f"Polyhedron(dim={self.dim}, {len(self.constraints)} constraints)"


def _solve_square(M, rhs):
    n = len(M)
    aug = [list(M[i]) + [rhs[i]] for i in range(n)]
    for col in range(n):
        piv = next((i for i in range(col, n) if aug[i][col] != 0), None)
        if piv is None:
            return None
        aug[col], aug[piv] = aug[piv], aug[col]
        pv = aug[col][col]
        aug[col] = [v / pv for v in aug[col]]
        for i in range(n):
            if i != col and aug[i][col] != 0:
                f = aug[i][col]
                aug[i] = [a - f * b for a, b in zip(aug[i], aug[col])]
    return tuple(aug[i][n] for i in range(n))


def polytope_from_points(points, dim: int) -> Polyhedron:
    """H-description of conv(points) for d <= 2 (facets by brute force)."""
    pts = sorted(set(tuple(Fraction(v) for v in p) for p in points))
    if not pts:
        return Polyhedron(dim, [((F0,) * dim, -F1)])
    if dim == 1:
        lo, hi = pts[0][0], pts[-1][0]
        return Polyhedron(1, [((F1,), hi), ((-F1,), -lo)])
    if dim != 2:
        raise ValueError("polytope_from_points supports d <= 2")
    cons = []
    if len(pts) == 1:
        (x, y), = pts
        return Polyhedron(2, [((F1, F0), x), ((-F1, F0), -x), ((F0, F1), y), ((F0, -F1), -y)])
    for p, q in combinations(pts, 2):
        n = (q[1] - p[1], p[0] - q[0])
        val = n[0] * p[0] + n[1] * p[1]
        sides = [n[0] * r[0] + n[1] * r[1] - val for r in pts]
        if all(s <= 0 for s in sides):
            cons.append((n, val))
        if all(s >= 0 for s in sides):
            cons.append(((-n[0], -n[1]), -val))
    ends = (pts[0], pts[-1])
    d = (ends[1][0] - ends[0][0], ends[1][1] - ends[0][1])
    collinear = all(d[0] * (r[1] - ends[0][1]) - d[1] * (r[0] - ends[0][0]) == 0 for r in pts)
    if collinear:
        # close off the segment ends
        cons.append((d, d[0] * ends[1][0] + d[1] * ends[1][1]))
        cons.append(((-d[0], -d[1]), -(d[0] * ends[0][0] + d[1] * ends[0][1])))
    return Polyhedron(2, cons)
