"""Integer kernels for the two hot loops.

* ``lattice_closure``: bounded fixpoint of residuals of N-combinations in Z^d.
* ``minplus_closure``: split closure p(x) <- min p(y) + p(z) over y + z = x.

Both run under numba when it is importable and ``MONOCONVEX_DISABLE_NUMBA``
is unset; otherwise a vectorised numpy path with identical results is used.
"""

from __future__ import annotations

import math
import os
from itertools import combinations

import numpy as np

_DISABLED = os.environ.get("MONOCONVEX_DISABLE_NUMBA", "").strip().lower() in ("1", "true", "yes")

try:
    if _DISABLED:
        raise ImportError
    import numba

    njit = numba.njit(cache=True, nogil=True)
    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised via the env flag
    HAVE_NUMBA = False

BACKEND = "numba" if HAVE_NUMBA else "numpy"

INT_LIMIT = 2**62


# ------------------------------------------------------------ exact helpers


def _det_int(M):
    """Exact integer determinant (Bareiss) on a list of lists."""
    M = [list(r) for r in M]
    n = len(M)
    if n == 0:
        return 1
    sign, prev = 1, 1
    for k in range(n - 1):
        if M[k][k] == 0:
            swap = next((i for i in range(k + 1, n) if M[i][k] != 0), None)
            if swap is None:
                return 0
            M[k], M[swap] = M[swap], M[k]
            sign = -sign
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                M[i][j] = (M[i][j] * M[k][k] - M[i][k] * M[k][j]) // prev
        prev = M[k][k]
    return sign * M[n - 1][n - 1]


def _adjugate(M):
    n = len(M)
    if n == 1:
        return [[1]]
    adj = [[0] * n for _ in range(n)]
    for i in range(n):
        for j in range(n):
            minor = [row[:j] + row[j + 1 :] for k, row in enumerate(M) if k != i]
            adj[j][i] = (-1) ** (i + j) * _det_int(minor)
    return adj


def fresh_subsets(n, k, fresh_from):
    """k-subsets of range(n) whose largest index is >= fresh_from."""
    for last in range(max(fresh_from, k - 1), n):
        for rest in combinations(range(last), k - 1):
            yield rest + (last,)


def _subset_system(pts, idx, d, row_choices):
    """(rows, det, adjugate, V) for an affinely independent subset, else None."""
    k = len(idx)
    p0 = pts[idx[0]]
    V = [[pts[idx[i]][r] - p0[r] for i in range(1, k)] for r in range(d)]
    for rows in row_choices:
        M = [V[r] for r in rows]
        D = _det_int(M)
        if D:
            return rows, D, _adjugate(M), V
    return None

# ------------------------------------------------------------ numpy path


def _closure_numpy(points, lo, hi, max_terms, max_coeff):
    d = points.shape[1]
    dims = hi - lo + 1
    grid = np.stack(np.meshgrid(*[np.arange(a, b + 1) for a, b in zip(lo, hi)], indexing="ij"), -1)
    cand_all = grid.reshape(-1, d).astype(np.int64)
    strides = np.ones(d, dtype=np.int64)
    for r in range(d - 2, -1, -1):
        strides[r] = strides[r + 1] * dims[r + 1]
    occ = np.zeros(len(cand_all), dtype=bool)
    found = []
    for p in points:
        if np.all(p >= lo) and np.all(p <= hi):
            key = int(((p - lo) * strides).sum())
            if not occ[key]:
                occ[key] = True
                found.append(tuple(int(v) for v in p))
    fresh = 0
    while True:
        start = len(found)
        pts = np.array(found, dtype=np.int64).reshape(-1, d)
        for k in range(2, max_terms + 1):
            if k - 1 > d:
                break
            row_choices = list(combinations(range(d), k - 1))
            for idx in fresh_subsets(start, k, fresh):
                sub = pts[list(idx)]
                bmin, bmax = sub.min(0), sub.max(0)
                mask = ~occ & np.all((cand_all >= bmin) & (cand_all <= bmax), axis=1)
                if not mask.any():
                    continue
                system = _subset_system(found, idx, d, row_choices)
                if system is None:
                    continue
                rows, D, adj, V = system
                cand = cand_all[mask]
                w = cand - sub[0]
                A = np.array(adj, dtype=np.int64)
                L = w[:, list(rows)] @ A.T  # lambda_i * D for i = 1..k-1
                Vn = np.array(V, dtype=np.int64)
                ok = np.all(L @ Vn.T == D * w, axis=1)
                lam0 = D - L.sum(1)
                mu = np.concatenate([lam0[:, None], L], axis=1) * (1 if D > 0 else -1)
                ok &= np.all(mu > 0, axis=1)
                if not ok.any():
                    continue
                g = np.gcd.reduce(mu, axis=1)
                g[g == 0] = 1
                ok &= np.all(mu // g[:, None] <= max_coeff, axis=1)
                for x in cand[ok]:
                    key = int(((x - lo) * strides).sum())
                    if not occ[key]:
                        occ[key] = True
                        found.append(tuple(int(v) for v in x))
        if len(found) == start:
            break
        fresh = start
    return np.array(sorted(found), dtype=np.int64).reshape(-1, d)


def _minplus_numpy(add_idx, vals, finite, ninf_init, thresh):
    n = len(vals)
    p = vals.copy()
    fin = finite.copy()
    ninf = ninf_init.copy()
    valid = add_idx >= 0
    rounds = 0
    while True:
        rounds += 1
        changed = np.zeros(n, dtype=bool)
        # -inf propagation: y or z at -inf and the other not +inf
        usable = fin | ninf
        src = valid & ((ninf[:, None] & usable[None, :]) | (usable[:, None] & ninf[None, :]))
        if src.any():
            tgt = np.unique(add_idx[src])
            newly = tgt[~ninf[tgt]]
            if len(newly):
                ninf[newly] = True
                changed[newly] = True
        both = valid & fin[:, None] & fin[None, :] & ~ninf[:, None] & ~ninf[None, :]
        ii, jj = np.nonzero(both)
        if len(ii):
            tgt = add_idx[ii, jj]
            s = p[ii] + p[jj]
            best = np.full(n, np.iinfo(np.int64).max, dtype=np.int64)
            np.minimum.at(best, tgt, s)
            better = (best < p) | (~fin & (best < np.iinfo(np.int64).max))
            better &= ~ninf
            if better.any():
                p[better] = np.where(fin[better], np.minimum(p[better], best[better]), best[better])
                fin[better] = True
                changed |= better
        low = fin & ~ninf & (p < -thresh)
        if rounds > n + 1:
            low |= changed & ~ninf
        if low.any():
            ninf[low] = True
            changed |= low
        if not changed.any():
            break
    fin &= ~ninf
    return p, fin, ninf


# ------------------------------------------------------------ numba path

if HAVE_NUMBA:

    @njit
    def _det_nb(M, q):
        A = M[:q, :q].copy()
        sign = 1
        prev = 1
        for k in range(q - 1):
            if A[k, k] == 0:
                swap = -1
                for i in range(k + 1, q):
                    if A[i, k] != 0:
                        swap = i
                        break
                if swap < 0:
                    return 0
                for j in range(q):
                    t = A[k, j]
                    A[k, j] = A[swap, j]
                    A[swap, j] = t
                sign = -sign
            for i in range(k + 1, q):
                for j in range(k + 1, q):
                    A[i, j] = (A[i, j] * A[k, k] - A[i, k] * A[k, j]) // prev
            prev = A[k, k]
        return sign * A[q - 1, q - 1]

    @njit
    def _gcd(a, b):
        while b:
            a, b = b, a % b
        return a

    @njit
    def _next_comb(c, k, n):
        i = k - 1
        while i >= 0 and c[i] == n - k + i:
            i -= 1
        if i < 0:
            return False
        c[i] += 1
        for j in range(i + 1, k):
            c[j] = c[j - 1] + 1
        return True

    @njit
    def _closure_nb(points, lo, hi, max_terms, max_coeff):
        d = points.shape[1]
        dims = hi - lo + 1
        total = 1
        for r in range(d):
            total *= dims[r]
        strides = np.ones(d, dtype=np.int64)
        for r in range(d - 2, -1, -1):
            strides[r] = strides[r + 1] * dims[r + 1]
        occ = np.zeros(total, dtype=np.bool_)
        found = np.empty((total, d), dtype=np.int64)
        n = 0
        for t in range(points.shape[0]):
            inside = True
            key = 0
            for r in range(d):
                v = points[t, r]
                if v < lo[r] or v > hi[r]:
                    inside = False
                    break
                key += (v - lo[r]) * strides[r]
            if inside and not occ[key]:
                occ[key] = True
                found[n, :] = points[t, :]
                n += 1
        V = np.zeros((d, max_terms), dtype=np.int64)
        M = np.zeros((max_terms, max_terms), dtype=np.int64)
        Mi = np.zeros((max_terms, max_terms), dtype=np.int64)
        adj = np.zeros((max_terms, max_terms), dtype=np.int64)
        rows = np.zeros(max_terms, dtype=np.int64)
        rc = np.zeros(max_terms, dtype=np.int64)
        idx = np.zeros(max_terms, dtype=np.int64)
        w = np.zeros(d, dtype=np.int64)
        lam = np.zeros(max_terms + 1, dtype=np.int64)
        bmin = np.zeros(d, dtype=np.int64)
        bmax = np.zeros(d, dtype=np.int64)
        cur = np.zeros(d, dtype=np.int64)
        fresh = 0
        while True:
            start = n
            for k in range(2, max_terms + 1):
                q = k - 1
                if q > d or k > start:
                    break
                for i in range(k):
                    idx[i] = i
                more = True
                while more:
                    if idx[k - 1] < fresh:
                        more = _next_comb(idx, k, start)
                        continue
                    # difference vectors
                    for r in range(d):
                        for i in range(1, k):
                            V[r, i - 1] = found[idx[i], r] - found[idx[0], r]
                    # first row choice with nonzero minor
                    for i in range(q):
                        rc[i] = i
                    D = 0
                    has_rows = True
                    while True:
                        for a in range(q):
                            for b in range(q):
                                M[a, b] = V[rc[a], b]
                        D = _det_nb(M, q)
                        if D != 0:
                            break
                        if not _next_comb(rc, q, d):
                            has_rows = False
                            break
                    if has_rows:
                        for a in range(q):
                            rows[a] = rc[a]
                        # adjugate via cofactors: adj[j, i] = (-1)^(i+j) det(minor_ij)
                        if q == 1:
                            adj[0, 0] = 1
                        else:
                            for i in range(q):
                                for j in range(q):
                                    ra = 0
                                    for a in range(q):
                                        if a == i:
                                            continue
                                        cb = 0
                                        for b in range(q):
                                            if b == j:
                                                continue
                                            Mi[ra, cb] = M[a, b]
                                            cb += 1
                                        ra += 1
                                    s = 1 if (i + j) % 2 == 0 else -1
                                    adj[j, i] = s * _det_nb(Mi, q - 1)
                        sgn = 1 if D > 0 else -1
                        for r in range(d):
                            bmin[r] = found[idx[0], r]
                            bmax[r] = found[idx[0], r]
                            for i in range(1, k):
                                v = found[idx[i], r]
                                if v < bmin[r]:
                                    bmin[r] = v
                                if v > bmax[r]:
                                    bmax[r] = v
                            cur[r] = bmin[r]
                        going = True
                        while going:
                            key = 0
                            for r in range(d):
                                key += (cur[r] - lo[r]) * strides[r]
                            if not occ[key]:
                                for r in range(d):
                                    w[r] = cur[r] - found[idx[0], r]
                                s0 = 0
                                for i in range(q):
                                    acc = 0
                                    for j in range(q):
                                        acc += adj[i, j] * w[rows[j]]
                                    lam[i + 1] = acc
                                    s0 += acc
                                lam[0] = D - s0
                                ok = True
                                for r in range(d):
                                    acc = 0
                                    for i in range(q):
                                        acc += V[r, i] * lam[i + 1]
                                    if acc != D * w[r]:
                                        ok = False
                                        break
                                g = 0
                                if ok:
                                    for i in range(k):
                                        lam[i] *= sgn
                                        if lam[i] <= 0:
                                            ok = False
                                            break
                                        g = _gcd(g, lam[i])
                                if ok:
                                    for i in range(k):
                                        if lam[i] // g > max_coeff:
                                            ok = False
                                            break
                                if ok:
                                    occ[key] = True
                                    found[n, :] = cur[:]
                                    n += 1
                            # advance odometer over the bounding box
                            r = d - 1
                            while r >= 0:
                                cur[r] += 1
                                if cur[r] <= bmax[r]:
                                    break
                                cur[r] = bmin[r]
                                r -= 1
                            if r < 0:
                                going = False
                    more = _next_comb(idx, k, start)
            if n == start:
                break
            fresh = start
        return found[:n].copy()

    @njit
    def _minplus_nb(add_idx, vals, finite, ninf_init, thresh):
        n = vals.shape[0]
        p = vals.copy()
        fin = finite.copy()
        ninf = ninf_init.copy()
        rounds = 0
        while True:
            rounds += 1
            any_change = False
            for i in range(n):
                for j in range(n):
                    k = add_idx[i, j]
                    if k < 0 or ninf[k]:
                        continue
                    ui = fin[i] or ninf[i]
                    uj = fin[j] or ninf[j]
                    if not (ui and uj):
                        continue
                    if ninf[i] or ninf[j]:
                        ninf[k] = True
                        any_change = True
                        continue
                    s = p[i] + p[j]
                    if (not fin[k]) or s < p[k]:
                        p[k] = s
                        fin[k] = True
                        any_change = True
                        if s < -thresh or rounds > n + 1:
                            ninf[k] = True
            if not any_change:
                break
        for i in range(n):
            if ninf[i]:
                fin[i] = False
        return p, fin, ninf


# ------------------------------------------------------------ public API


def lattice_closure(points, lo, hi, max_terms: int, max_coeff: int, backend: str | None = None):
    """Closure of ``points`` under residuals of N-combinations over affinely
    independent subsets of size <= max_terms with coefficients <= max_coeff,
    restricted to the box [lo, hi].  Returns a sorted list of tuples."""
    points = np.asarray(points, dtype=np.int64)
    if points.ndim != 2:
        raise ValueError("points must be an (n, d) array")
    lo = np.asarray(lo, dtype=np.int64)
    hi = np.asarray(hi, dtype=np.int64)
    d = points.shape[1]
    span = int(max(1, (hi - lo).max()))
    q = min(max_terms - 1, d)
    if q >= 1 and (math.sqrt(q) * span) ** q * (q + 1) * max(span, 1) * 4 > INT_LIMIT:
        raise OverflowError("coordinates too large for the int64 kernel")
    backend = backend or BACKEND
    if backend == "numba":
        if not HAVE_NUMBA:
            raise RuntimeError("numba backend unavailable")
        out = _closure_nb(points, lo, hi, max_terms, max_coeff)
    else:
        out = _closure_numpy(points, lo, hi, max_terms, max_coeff)
    return sorted(tuple(int(v) for v in row) for row in out)


def minplus_closure(add_idx, vals, finite, ninf, thresh, backend: str | None = None):
    """Split closure with -inf detection on integer-scaled values.

    add_idx[i, j] is the window index of elem_i + elem_j or -1.  Returns
    (values, finite mask, minus-infinity mask).
    """
    backend = backend or BACKEND
    args = (
        np.asarray(add_idx, dtype=np.int64),
        np.asarray(vals, dtype=np.int64),
        np.asarray(finite, dtype=np.bool_),
        np.asarray(ninf, dtype=np.bool_),
        np.int64(thresh),
    )
    if backend == "numba":
        if not HAVE_NUMBA:
            raise RuntimeError("numba backend unavailable")
        return _minplus_nb(*args)
    return _minplus_numpy(*args)
