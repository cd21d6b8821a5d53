"""Compiled inner loops of the facet traversal.

These mirror :meth:`PivotContext.materialize` and :meth:`PivotContext.neighbors`
operation for operation; the numpy versions stay as the reference route.
"""

from __future__ import annotations

import numpy as np
from numba import njit

OK = 0
BAD_TYPE = 1  # facet is not of a valid type
TIE = 2  # unresolved tie in the pivot minimum
MIXED_SIGNS = 3  # ascent candidates with both signs
SINGULAR = 4
TIGHT = 5  # an inactive constraint is numerically tight


@njit(cache=True)
def materialize_kernel(active, level, rows, sp, rhs, flag_rows):
    """``(B, x0, cond, resid, status)`` for the facet with these labels.

    A singular active matrix raises from the LAPACK inverse.
    """
    k = active.shape[0]
    n = flag_rows.shape[0]
    m = rows.shape[1]
    C = np.empty((m, m))
    b = np.zeros(m)
    for a in range(k):
        C[a, :] = rows[active[a]]
        b[a] = rhs[active[a]]
    for a in range(n - level):
        C[k + a, :] = flag_rows[level + a]
    B = np.linalg.inv(C)
    x0 = np.zeros(m)
    ptr, cidx, val = sp
    nc = 0.0
    nb = 0.0
    resid = 0.0
    R = np.zeros(m)
    for r in range(m):
        sc = 0.0
        sb = 0.0
        for t in range(m):
            sc += abs(C[r, t])
            sb += abs(B[r, t])
        nc = max(nc, sc)
        nb = max(nb, sb)
        for t in range(m):
            R[t] = 1.0 if r == t else 0.0
        if r < k:
            lab = active[r]
            for e in range(ptr[lab], ptr[lab + 1]):
                u = cidx[e]
                f = val[e]
                for t in range(m):
                    R[t] -= f * B[u, t]
        else:
            for u in range(m):
                f = C[r, u]
                if f != 0.0:
                    for t in range(m):
                        R[t] -= f * B[u, t]
        sr = 0.0
        for t in range(m):
            sr += abs(R[t])
        resid = max(resid, sr)
    for r in range(m):
        acc = 0.0
        for t in range(m):
            acc += B[r, t] * b[t]
        x0[r] = acc
    return B, x0, nc * nb, resid, OK


def sparse_rows(rows):
    """CSR pattern ``(ptr, col, val)`` of the Cayley rows."""
    nz = [np.nonzero(r)[0] for r in rows]
    ptr = np.zeros(len(rows) + 1, dtype=np.int64)
    ptr[1:] = np.cumsum([len(z) for z in nz])
    col = np.concatenate(nz).astype(np.int64) if len(nz) else np.zeros(0, np.int64)
    val = np.concatenate([r[z] for r, z in zip(rows, nz)]) if len(nz) else np.zeros(0)
    return ptr, col, val


@njit(cache=True)
def _dot_row(sp, lab, v):
    ptr, col, val = sp
    acc = 0.0
    for t in range(ptr[lab], ptr[lab + 1]):
        acc += val[t] * v[col[t]]
    return acc


@njit(cache=True)
def _abs_dot_row(sp, lab, v):
    """``sum |row_t| |v_t|``: the scale of the rounding error of the dot product."""
    ptr, col, val = sp
    acc = 0.0
    for t in range(ptr[lab], ptr[lab + 1]):
        acc += abs(val[t] * v[col[t]])
    return acc


@njit(cache=True)
def _lex_argmin(T, TOL, cnt):
    """Row of the lexicographic minimum of ``T[:cnt]``, highest column first,
    with ``TOL`` the per-entry equality tolerances; -1 on an unresolved tie."""
    alive = np.arange(cnt)
    na = cnt
    L = T.shape[1]
    for l in range(L - 1, -1, -1):
        kmin = alive[0]
        for a in range(1, na):
            if T[alive[a], l] < T[kmin, l]:
                kmin = alive[a]
        tk = TOL[kmin, l]
        nn = 0
        for a in range(na):
            i = alive[a]
            ti = TOL[i, l]
            if T[i, l] - T[kmin, l] <= max(ti, tk):
                alive[nn] = i
                nn += 1
        na = nn
        if na == 1:
            return alive[0]
    return -1


@njit(cache=True)
def _pivot(active, level, dropped, j, B, G0, GF, A0, AF, rows, sp, block, adj, use_adj,
           hits_all, r, s, n, eps, ascent):
    """Entering label for releasing row ``j`` (-1 when unbounded) and a status."""
    L = rows.shape[0]
    k = active.shape[0]
    nf = n - level
    is_active = np.zeros(L, dtype=np.bool_)
    for a in range(k):
        is_active[active[a]] = True
    need = np.zeros(s, dtype=np.int64)
    for a in range(k):
        if active[a] != dropped:
            need[block[active[a]]] += 1
    T = np.empty((L, nf + 1))
    TOL = np.empty((L, nf + 1))
    cand = np.empty(L, dtype=np.int64)
    sgn = np.empty(L)
    cnt = 0
    bj = B[:, j].copy()
    Nrow = np.empty(nf + 1)
    Arow = np.empty(nf + 1)
    for c in range(L):
        if is_active[c]:
            continue
        if use_adj:
            hits = hits_all[c]
            if dropped >= 0 and adj[dropped, c]:
                hits -= 1
            if hits != need[block[c]]:
                continue
        Nrow[0] = G0[c]
        Arow[0] = A0[c]
        for l in range(1, nf + 1):
            Nrow[l] = GF[c, l - 1] * r[n - l]
            Arow[l] = AF[c, l - 1] * r[n - l]
        lead = 0.0
        for l in range(nf + 1):
            if abs(Nrow[l]) <= eps * max(1.0, Arow[l]):
                Nrow[l] = 0.0
            else:
                lead = Nrow[l]
        if lead == 0.0:
            return -1, TIGHT
        d = _dot_row(sp, c, bj)
        ad = _abs_dot_row(sp, c, bj)
        if abs(d) <= eps * max(1.0, ad):
            continue
        sg = (1.0 if lead > 0 else -1.0) * (1.0 if d > 0 else -1.0)
        if not ascent and sg <= 0:
            continue
        for l in range(nf + 1):
            T[cnt, l] = Nrow[l] / d
            TOL[cnt, l] = eps * max(1.0, Arow[l] + abs(T[cnt, l]) * ad) / abs(d)
        cand[cnt] = c
        sgn[cnt] = sg
        cnt += 1
    if cnt == 0:
        return -1, OK
    if ascent:
        s0 = sgn[0]
        for a in range(1, cnt):
            if sgn[a] != s0:
                return -1, MIXED_SIGNS
        for a in range(cnt):
            lead = T[a, nf]
            T[a, nf] = r[level] * (1.0 if lead > 0 else (-1.0 if lead < 0 else 0.0))
            for l in range(nf + 1):
                T[a, l] *= s0
    best = _lex_argmin(T, TOL, cnt)
    if best < 0:
        return -1, TIE
    return cand[best], OK


@njit(cache=True)
def expand_kernel(active, level, B, x0, rows, sp, rhs, block, adj, use_adj, r, mtab,
                  s, n, eps):
    """Neighbors of a facet.

    Returns ``(dropped, entering, is_cell, status)``; ``dropped`` is -1 for the
    ascent and ``entering`` is -1 where the pivot runs off to infinity.
    """
    k = active.shape[0]
    L = rows.shape[0]
    counts = np.full(s, -1, dtype=np.int64)
    for a in range(k):
        counts[block[active[a]]] += 1
    quota = True
    for i in range(s):
        if counts[i] != mtab[level, i]:
            quota = False
    drops = np.empty(k + 1, dtype=np.int64)
    ents = np.empty(k + 1, dtype=np.int64)
    nout = 0
    # shared products: constraint values at x0 and flag columns
    nf = n - level
    G0 = np.empty(L)
    A0 = np.empty(L)
    GF = np.empty((L, max(nf, 1)))
    AF = np.empty((L, max(nf, 1)))
    for c in range(L):
        G0[c] = _dot_row(sp, c, x0) - rhs[c]
        A0[c] = _abs_dot_row(sp, c, x0) + abs(rhs[c])
    if nf > 0:
        col = np.empty(B.shape[0])
        for l in range(1, nf + 1):
            for t in range(B.shape[0]):
                col[t] = B[t, s + n - l]
            for c in range(L):
                GF[c, l - 1] = _dot_row(sp, c, col)
                AF[c, l - 1] = _abs_dot_row(sp, c, col)
    hits_all = np.zeros(L, dtype=np.int64)
    if use_adj:
        for a in range(k):
            lab = active[a]
            for c in range(L):
                if adj[lab, c]:
                    hits_all[c] += 1
    if level > 0:
        q = -1
        for i in range(s):
            e = counts[i] - mtab[level - 1, i]
            if e < 0 or e > 1:
                return drops[:0], ents[:0], quota, BAD_TYPE
            if e == 1:
                if q >= 0:
                    return drops[:0], ents[:0], quota, BAD_TYPE
                q = i
        if q < 0:
            return drops[:0], ents[:0], quota, BAD_TYPE
        for j in range(k):
            if block[active[j]] != q:
                continue
            ent, st = _pivot(active, level, active[j], j, B, G0, GF, A0, AF, rows, sp, block, adj,
                             use_adj, hits_all, r, s, n, eps, False)
            if st != OK:
                return drops[:0], ents[:0], quota, st
            drops[nout] = active[j]
            ents[nout] = ent
            nout += 1
    is_cell = quota and level == n
    if quota and level < n:
        ent, st = _pivot(active, level, -1, s + level, B, G0, GF, A0, AF, rows, sp, block, adj,
                         use_adj, hits_all, r, s, n, eps, True)
        if st != OK:
            return drops[:0], ents[:0], quota, st
        drops[nout] = -1
        ents[nout] = ent
        nout += 1
    return drops[:nout], ents[:nout], is_cell, OK
