"""Hot loops: set-message flooding, binary peeling, GF(2) rank.

Every kernel exists twice: a numba version written as scalar loops and a
numpy version vectorised over nodes.  The public names at the bottom of the
module point at one or the other depending on ``_accel.USE_NUMBA``.

Masks are ``uint64``.  Inside the numba kernels every integer that touches a
mask is kept ``uint64``; mixing signed and unsigned operands makes numba
promote to float.
"""

from __future__ import annotations

import numpy as np

from . import _accel
from ._accel import njit

SUCCESS, STALLED, ITERATION_LIMIT = 0, 1, 2

_U0 = np.uint64(0)
_U1 = np.uint64(1)


# ---------------------------------------------------------------------------
# numba

@njit
def _nb_translate(b, x, swaps):
    k = 0
    while x:
        if x & 1:
            sh = np.uint64(1 << k)
            sw = swaps[k]
            b = ((b & sw) << sh) | ((b >> sh) & sw)
        x >>= 1
        k += 1
    return b


@njit
def _nb_popcount(m):
    c = 0
    while m:
        m &= m - np.uint64(1)
        c += 1
    return c


@njit
def _nb_sumset(a, b, swaps):
    if a == np.uint64(1):
        return b
    if b == np.uint64(1):
        return a
    if _nb_popcount(a) > _nb_popcount(b):
        a, b = b, a
    out = np.uint64(0)
    x = 0
    while a:
        if a & np.uint64(1):
            out |= _nb_translate(b, x, swaps)
        a >>= np.uint64(1)
        x += 1
    return out


@njit
def _nb_scale(g, m, mul):
    if g == 1:
        return m
    out = np.uint64(0)
    x = 0
    while m:
        if m & np.uint64(1):
            out |= np.uint64(1) << np.uint64(mul[g, x])
        m >>= np.uint64(1)
        x += 1
    return out


@njit
def _nb_flood(vtc, ctv, final, channel, edge_label, check_edges, var_edges,
              mul, inv, swaps, full, max_iters):
    m, dc = check_edges.shape
    n, dv = var_edges.shape
    done = True
    for v in range(n):
        final[v] = channel[v]
        if channel[v] & (channel[v] - np.uint64(1)):
            done = False
    if done:
        return 0, SUCCESS
    u = np.empty(dc, dtype=np.uint64)
    pre = np.empty(dc + 1, dtype=np.uint64)
    vpre = np.empty(dv, dtype=np.uint64)
    it = 0
    while it < max_iters:
        it += 1
        changed = False
        for c in range(m):
            d = 0
            while d < dc and check_edges[c, d] >= 0:
                e = check_edges[c, d]
                u[d] = _nb_scale(edge_label[e], vtc[e], mul)
                d += 1
            pre[0] = np.uint64(1)
            for k in range(d):
                pre[k + 1] = _nb_sumset(pre[k], u[k], swaps)
            suf = np.uint64(1)
            for k in range(d - 1, -1, -1):
                e = check_edges[c, k]
                ext = _nb_sumset(pre[k], suf, swaps)
                new = _nb_scale(inv[edge_label[e]], ext, mul)
                if new != ctv[e]:
                    changed = True
                    ctv[e] = new
                suf = _nb_sumset(suf, u[k], swaps)
        done = True
        for v in range(n):
            d = 0
            while d < dv and var_edges[v, d] >= 0:
                d += 1
            acc = channel[v]
            for k in range(d):
                vpre[k] = acc
                acc &= ctv[var_edges[v, k]]
            final[v] = acc
            if acc & (acc - np.uint64(1)):
                done = False
            suf = full
            for k in range(d - 1, -1, -1):
                e = var_edges[v, k]
                new = vpre[k] & suf
                if new != vtc[e]:
                    changed = True
                    vtc[e] = new
                suf &= ctv[e]
        if done:
            return it, SUCCESS
        if not changed:
            return it, STALLED
    return it, ITERATION_LIMIT


@njit
def _nb_peel(erased, check_edges, edge_var, var_edges, edge_check):
    m, dc = check_edges.shape
    n, dv = var_edges.shape
    res = erased.copy()
    count = np.zeros(m, dtype=np.int64)
    for c in range(m):
        for k in range(dc):
            e = check_edges[c, k]
            if e < 0:
                break
            if res[edge_var[e]]:
                count[c] += 1
    stack = np.empty(m, dtype=np.int64)
    top = 0
    for c in range(m):
        if count[c] == 1:
            stack[top] = c
            top += 1
    while top > 0:
        top -= 1
        c = stack[top]
        if count[c] != 1:
            continue
        for k in range(dc):
            e = check_edges[c, k]
            if e < 0:
                break
            v = edge_var[e]
            if res[v]:
                res[v] = False
                for kk in range(dv):
                    f = var_edges[v, kk]
                    if f < 0:
                        break
                    c2 = edge_check[f]
                    count[c2] -= 1
                    if count[c2] == 1:
                        stack[top] = c2
                        top += 1
                break
    return res


@njit
def _nb_gf2_rank(mat):
    # rows packed into 64-bit words, one column per bit
    rows, cols = mat.shape
    words = (cols + 63) // 64
    a = np.zeros((rows, words), dtype=np.uint64)
    for i in range(rows):
        for c in range(cols):
            if mat[i, c]:
                a[i, c // 64] |= _U1 << np.uint64(c % 64)
    r = 0
    for c in range(cols):
        w = c // 64
        bit = _U1 << np.uint64(c % 64)
        piv = -1
        for i in range(r, rows):
            if a[i, w] & bit:
                piv = i
                break
        if piv < 0:
            continue
        if piv != r:
            for j in range(w, words):
                t = a[r, j]
                a[r, j] = a[piv, j]
                a[piv, j] = t
        for i in range(r + 1, rows):
            if a[i, w] & bit:
                for j in range(w, words):
                    a[i, j] ^= a[r, j]
        r += 1
        if r == rows:
            break
    return r


# ---------------------------------------------------------------------------
# numpy

def _np_scale(g, m, mul):
    out = np.zeros_like(m)
    for x in range(mul.shape[0]):
        bit = (m >> np.uint64(x)) & _U1
        if bit.any():
            out |= bit << mul[g, x].astype(np.uint64)
    return out


def _np_translate(b, x, swaps):
    k = 0
    while x:
        if x & 1:
            sh = np.uint64(1 << k)
            b = ((b & swaps[k]) << sh) | ((b >> sh) & swaps[k])
        x >>= 1
        k += 1
    return b


def _np_sumset(a, b, swaps, q):
    out = np.zeros(np.broadcast(a, b).shape, dtype=np.uint64)
    for x in range(q):
        sel = ((a >> np.uint64(x)) & _U1).astype(bool)
        if sel.any():
            out |= np.where(sel, _np_translate(b, x, swaps), _U0)
    return out


def _np_flood(vtc, ctv, final, channel, edge_label, check_edges, var_edges,
              mul, inv, swaps, full, max_iters):
    q = mul.shape[0]
    final[:] = channel
    if not np.any(channel & (channel - _U1)):
        return 0, SUCCESS
    cvalid = check_edges >= 0
    ce = np.where(cvalid, check_edges, 0)
    lab = np.where(cvalid, edge_label[ce], 1)
    ilab = inv[lab]
    vvalid = var_edges >= 0
    ve = np.where(vvalid, var_edges, 0)
    m, dc = ce.shape
    n, dv = ve.shape
    it = 0
    while it < max_iters:
        it += 1
        vin = np.where(cvalid, vtc[ce], _U1)
        u = _np_scale(lab, vin, mul)
        pre = np.empty((m, dc), dtype=np.uint64)
        suf = np.empty((m, dc), dtype=np.uint64)
        pre[:, 0] = 1
        for k in range(1, dc):
            pre[:, k] = _np_sumset(pre[:, k - 1], u[:, k - 1], swaps, q)
        suf[:, dc - 1] = 1
        for k in range(dc - 2, -1, -1):
            suf[:, k] = _np_sumset(suf[:, k + 1], u[:, k + 1], swaps, q)
        new_ctv = _np_scale(ilab, _np_sumset(pre, suf, swaps, q), mul)
        changed = bool(np.any(new_ctv[cvalid] != ctv[check_edges[cvalid]]))
        ctv[check_edges[cvalid]] = new_ctv[cvalid]

        cin = np.where(vvalid, ctv[ve], full)
        vpre = np.empty((n, dv), dtype=np.uint64)
        vsuf = np.empty((n, dv), dtype=np.uint64)
        vpre[:, 0] = channel
        for k in range(1, dv):
            vpre[:, k] = vpre[:, k - 1] & cin[:, k - 1]
        vsuf[:, dv - 1] = full
        for k in range(dv - 2, -1, -1):
            vsuf[:, k] = vsuf[:, k + 1] & cin[:, k + 1]
        new_vtc = vpre & vsuf
        final[:] = vpre[:, dv - 1] & cin[:, dv - 1]
        changed |= bool(np.any(new_vtc[vvalid] != vtc[var_edges[vvalid]]))
        vtc[var_edges[vvalid]] = new_vtc[vvalid]
        if not np.any(final & (final - _U1)):
            return it, SUCCESS
        if not changed:
            return it, STALLED
    return it, ITERATION_LIMIT


def _np_peel(erased, check_edges, edge_var, var_edges, edge_check):
    res = erased.copy()
    valid = check_edges >= 0
    ce = np.where(valid, check_edges, 0)
    while True:
        er_edge = res[edge_var[ce]] & valid
        cnt = er_edge.sum(axis=1)
        rows = np.flatnonzero(cnt == 1)
        if rows.size == 0:
            return res
        cols = np.argmax(er_edge[rows], axis=1)
        res[edge_var[ce[rows, cols]]] = False


def _np_gf2_rank(mat):
    a = np.array(mat, dtype=np.uint8, copy=True)
    rows, cols = a.shape
    r = 0
    for c in range(cols):
        if r == rows:
            break
        nz = np.flatnonzero(a[r:, c])
        if nz.size == 0:
            continue
        piv = r + nz[0]
        if piv != r:
            a[[r, piv]] = a[[piv, r]]
        below = np.flatnonzero(a[r + 1:, c]) + r + 1
        if below.size:
            a[below, c:] ^= a[r, c:]
        r += 1
    return r


# ---------------------------------------------------------------------------

numba_kernels = {"flood": _nb_flood, "peel": _nb_peel, "gf2_rank": _nb_gf2_rank}
numpy_kernels = {"flood": _np_flood, "peel": _np_peel, "gf2_rank": _np_gf2_rank}


def get(name: str, backend: str | None = None):
    backend = backend or _accel.backend_name()
    return (numba_kernels if backend == "numba" else numpy_kernels)[name]


flood = get("flood")
peel = get("peel")
gf2_rank = get("gf2_rank")
