"""Brute-force oracles written independently of the library code paths."""

from fractions import Fraction
from itertools import combinations, combinations_with_replacement, product


def _solve(cols, target):
    """Exact solution of sum_j w_j cols[j] = target (square or tall), or None."""
    n = len(cols)
    rows = [[Fraction(c[i]) for c in cols] + [Fraction(target[i])] for i in range(len(target))]
    piv_cols, r = [], 0
    for c in range(n):
        p = next((i for i in range(r, len(rows)) if rows[i][c] != 0), None)
        if p is None:
            continue
        rows[r], rows[p] = rows[p], rows[r]
        pv = rows[r][c]
        rows[r] = [v / pv for v in rows[r]]
        for i in range(len(rows)):
            if i != r and rows[i][c] != 0:
                f = rows[i][c]
                rows[i] = [a - f * b for a, b in zip(rows[i], rows[r])]
        piv_cols.append(c)
        r += 1
    if any(all(v == 0 for v in row[:-1]) and row[-1] != 0 for row in rows):
        return None
    w = [Fraction(0)] * n
    for i, c in enumerate(piv_cols):
        w[c] = rows[i][-1]
    return w


def in_real_hull(x, pts):
    """Caratheodory: x is a convex combination of some affinely independent subset."""
    d = len(x)
    for k in range(1, min(len(pts), d + 1) + 1):
        for sub in combinations(pts, k):
            cols = [list(p) + [1] for p in sub]
            w = _solve(cols, list(x) + [1])
            if w is not None and all(v >= 0 for v in w):
                return True
    return False


def lattice_hull_oracle(pts):
    pts = [tuple(p) for p in pts]
    if not pts:
        return frozenset()
    d = len(pts[0])
    lo = [min(p[i] for p in pts) for i in range(d)]
    hi = [max(p[i] for p in pts) for i in range(d)]
    box = product(*(range(a, b + 1) for a, b in zip(lo, hi)))
    return frozenset(x for x in box if in_real_hull(x, pts))


def minorant_oracle(S, window, values, max_len=6):
    """inf over multisets (length <= max_len) of window elements summing to each x.

    ``values`` maps window elements to Fractions (finite only).
    """
    els = list(values)
    best = {}
    for k in range(1, max_len + 1):
        for combo in combinations_with_replacement(els, k):
            total = combo[0]
            for y in combo[1:]:
                total = S.add(total, y)
            x = window.locate(total)
            if x is None:
                continue
            c = sum(values[y] for y in combo)
            if x not in best or c < best[x]:
                best[x] = c
    return best


def value_oracle(f, g, b):
    """min f(x) over g(x) <= b on plain dicts; None when infeasible."""
    feas = [f[x] for x in f if g[x] <= b]
    return min(feas) if feas else None


def pl_max(pieces, x):
    """max_i (a_i . x + c_i) for affine pieces given as (a, c)."""
    return max(sum(Fraction(ai) * Fraction(xi) for ai, xi in zip(a, x)) + Fraction(c) for a, c in pieces)


def pl_directional(pieces, x0, h):
    """Analytic directional derivative of a finite max of affine maps."""
    top = pl_max(pieces, x0)
    active = [a for a, c in pieces
              if sum(Fraction(ai) * Fraction(xi) for ai, xi in zip(a, x0)) + Fraction(c) == top]
    return max(sum(Fraction(ai) * Fraction(hi) for ai, hi in zip(a, h)) for a in active)
