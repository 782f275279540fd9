"""Compiled inner loops: greedy lattice nets and line-by-line cover updates."""
import numpy as np
from numba import njit

BOX, BALL = 0, 1


@njit(cache=True)
def _member(m, kinds, params, d):
    for p in range(kinds.size):
        if kinds[p] == BOX:
            ok = True
            for i in range(d):
                if m[i] < params[p, i] or m[i] > params[p, d + i]:
                    ok = False
                    break
            if ok:
                return True
        else:
            s = 0.0
            for i in range(d):
                t = m[i] - params[p, i]
                s += t * t
            r2 = params[p, d] * params[p, d]
            if s <= r2 * (1.0 + 1e-12):
                return True
    return False


@njit(cache=True)
def _offsets(d, reach):
    side = 2 * reach + 1
    n = side ** d
    out = np.empty((n, d), np.int64)
    for j in range(n):
        k = j
        for i in range(d - 1, -1, -1):
            out[j, i] = k % side - reach
            k //= side
    return out


@njit(cache=True)
def lattice_greedy(lo, hi, kinds, params, q, cell, reach, capacity):
    """Lexicographic greedy sweep over integer lattice points in ``[lo, hi]``.

    A member candidate is kept iff its squared distance (in lattice units) to
    every kept point is at least ``q``. ``cell`` is chosen so that one grid
    cell holds at most one kept point.
    """
    d = lo.size
    dims = np.empty(d, np.int64)
    strides = np.empty(d, np.int64)
    total = 1
    for i in range(d - 1, -1, -1):
        dims[i] = (hi[i] - lo[i]) // cell + 1
        strides[i] = total
        total *= dims[i]
    grid = np.full(total, -1, np.int64)
    offs = _offsets(d, reach)
    kept = np.empty((capacity, d), np.int64)
    nk = 0
    m = lo.copy()
    mf = np.empty(d, np.float64)
    cidx = np.empty(d, np.int64)
    while True:
        for i in range(d):
            mf[i] = m[i]
        if _member(mf, kinds, params, d):
            for i in range(d):
                cidx[i] = (m[i] - lo[i]) // cell
            ok = True
            for j in range(offs.shape[0]):
                flat = 0
                inside = True
                for i in range(d):
                    c = cidx[i] + offs[j, i]
                    if c < 0 or c >= dims[i]:
                        inside = False
                        break
                    flat += c * strides[i]
                if not inside:
                    continue
                k = grid[flat]
                if k >= 0:
                    s = 0
                    for i in range(d):
                        t = m[i] - kept[k, i]
                        s += t * t
                    if s < q:
                        ok = False
                        break
            if ok:
                if nk == kept.shape[0]:
                    bigger = np.empty((2 * nk, d), np.int64)
                    bigger[:nk] = kept
                    kept = bigger
                flat = 0
                for i in range(d):
                    flat += cidx[i] * strides[i]
                grid[flat] = nk
                kept[nk] = m
                nk += 1
        # advance odometer; last coordinate varies fastest
        i = d - 1
        while i >= 0:
            m[i] += 1
            if m[i] <= hi[i]:
                break
            m[i] = lo[i]
            i -= 1
        if i < 0:
            break
    return kept[:nk]


@njit(cache=True)
def lattice_members(lo, hi, kinds, params, capacity):
    d = lo.size
    out = np.empty((capacity, d), np.int64)
    n = 0
    m = lo.copy()
    mf = np.empty(d, np.float64)
    while True:
        for i in range(d):
            mf[i] = m[i]
        if _member(mf, kinds, params, d):
            if n == out.shape[0]:
                bigger = np.empty((2 * n, d), np.int64)
                bigger[:n] = out
                out = bigger
            out[n] = m
            n += 1
        i = d - 1
        while i >= 0:
            m[i] += 1
            if m[i] <= hi[i]:
                break
            m[i] = lo[i]
            i -= 1
        if i < 0:
            break
    return out[:n]


@njit(cache=True)
def point_greedy(pts, rho2, cell, reach, lo):
    """Greedy over pre-sorted float points; keeps a point iff its squared
    distance to every kept point is at least ``rho2``. Returns kept row ids."""
    n, d = pts.shape
    idx = np.empty((n, d), np.int64)
    dims = np.zeros(d, np.int64)
    for j in range(n):
        for i in range(d):
            c = np.int64(np.floor((pts[j, i] - lo[i]) / cell))
            idx[j, i] = c
            if c + 1 > dims[i]:
                dims[i] = c + 1
    strides = np.empty(d, np.int64)
    total = 1
    for i in range(d - 1, -1, -1):
        strides[i] = total
        total *= dims[i]
    # several kept points may share a cell: chain them
    head = np.full(total, -1, np.int64)
    nxt = np.full(n, -1, np.int64)
    offs = _offsets(d, reach)
    keep = np.empty(n, np.int64)
    nk = 0
    for j in range(n):
        ok = True
        for o in range(offs.shape[0]):
            flat = 0
            inside = True
            for i in range(d):
                c = idx[j, i] + offs[o, i]
                if c < 0 or c >= dims[i]:
                    inside = False
                    break
                flat += c * strides[i]
            if not inside:
                continue
            k = head[flat]
            while k >= 0:
                s = 0.0
                for i in range(d):
                    t = pts[j, i] - pts[k, i]
                    s += t * t
                if s < rho2:
                    ok = False
                    break
                k = nxt[k]
            if not ok:
                break
        if ok:
            flat = 0
            for i in range(d):
                flat += idx[j, i] * strides[i]
            nxt[j] = head[flat]
            head[flat] = j
            keep[nk] = j
            nk += 1
    return keep[:nk]


@njit(cache=True)
def cover_update(pts, active, n_active, first_hit, first_sing, times, dirs,
                 offs, r_sing2):
    """Apply a batch of time-ordered lines to the still-active points.

    A point stays active until it is singularly covered (squared distance to a
    line at most ``r_sing2``); plain hits (squared distance at most 1) only set
    ``first_hit`` once. Active points are kept compacted in ``active[:n_active]``.
    Returns the new active count and the number of lines consumed.
    """
    d = pts.shape[1]
    used = 0
    for li in range(times.size):
        if n_active == 0:
            break
        used += 1
        s = times[li]
        j = 0
        while j < n_active:
            p = active[j]
            ww = 0.0
            al = 0.0
            for i in range(d):
                w = pts[p, i] - offs[li, i]
                ww += w * w
                al += w * dirs[li, i]
            dist2 = ww - al * al
            if dist2 <= 1.0:
                if first_hit[p] > s:
                    first_hit[p] = s
                if dist2 <= r_sing2:
                    first_sing[p] = s
                    n_active -= 1
                    active[j] = active[n_active]
                    active[n_active] = p
                    continue
            j += 1
    return n_active, used
