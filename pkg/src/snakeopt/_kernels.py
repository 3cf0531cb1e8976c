"""Compiled evaluation kernels for error components.

Components live in a structure-of-arrays table passed around as a plain tuple:
(kind, va, vb, q, off, p1, p2, t1_inv, dfdphi, f_max, g0, step, traj_s, traj_w, t_sq, t_cz)
"""
import numpy as np
from numba import njit

SQ_RELAX = 0
SQ_DEPH = 1
STRAY = 2
CZ_RELAX = 3
CZ_DEPH = 4
CZ_DIST = 5


# Note: array-valued helper calls inside the hot loop cost ~100 ns each in
# reference counting, so interpolation is written out inline.

@njit(cache=True)
def eval_list(comps, x, tab, out):
    """Unweighted values of components ``comps`` at configuration ``x`` into ``out``."""
    kind, va, vb, q, off, p1, p2, t1, dfd, fmax, g0, step, ts, tw, t_sq, t_cz = tab
    n_grid = t1.shape[1]
    for i in range(comps.shape[0]):
        c = comps[i]
        k = kind[c]
        if k == STRAY:
            chi = p1[c]
            if chi == 0.0:
                out[i] = 0.0
            else:
                d = x[va[c]] - x[vb[c]] + off[c]
                out[i] = chi * chi / (chi * chi + d * d)
            continue
        if k == CZ_DIST:
            d = abs(x[vb[c]] + off[c] - x[va[c]])
            out[i] = p1[c] * d + p2[c] * d * d
            continue
        qi = q[c]
        f0 = x[va[c]]
        if k == SQ_RELAX or k == SQ_DEPH:
            npts = 1
            tgt = f0
            scale = t_sq
        else:
            npts = ts.shape[0]
            tgt = x[vb[c]] + off[c]
            scale = t_cz
        deph = k == SQ_DEPH or k == CZ_DEPH
        fm = fmax[qi]
        acc = 0.0
        for j in range(npts):
            if npts == 1:
                f = f0
                wj = 1.0
            else:
                f = f0 + ts[j] * (tgt - f0)
                wj = tw[j]
            u = (f - g0) / step
            if deph:
                # flux sensitivity vanishes at f_max, which rarely sits on a grid point
                if f >= fm:
                    y = 0.0
                elif u <= 0.0:
                    y = dfd[qi, 0]
                else:
                    m = int(u)
                    x0 = g0 + m * step
                    if m + 1 >= n_grid or x0 + step >= fm:
                        y = dfd[qi, m] * (fm - f) / (fm - x0)
                    else:
                        t = u - m
                        y = dfd[qi, m] * (1.0 - t) + dfd[qi, m + 1] * t
            else:
                if u <= 0.0:
                    y = t1[qi, 0]
                elif u >= n_grid - 1:
                    y = t1[qi, n_grid - 1]
                else:
                    m = int(u)
                    t = u - m
                    y = t1[qi, m] * (1.0 - t) + t1[qi, m + 1] * t
            acc += wj * y
        out[i] = scale * acc


@njit(cache=True)
def all_values(x, tab):
    n = tab[0].shape[0]
    out = np.empty(n)
    eval_list(np.arange(n), x, tab, out)
    return out


@njit(cache=True)
def subset_values(comps, x, tab):
    out = np.empty(comps.shape[0])
    eval_list(comps, x, tab, out)
    return out


@njit(cache=True)
def weighted_total(x, wc, tab):
    n = wc.shape[0]
    out = np.empty(n)
    eval_list(np.arange(n), x, tab, out)
    acc = 0.0
    for c in range(n):
        acc += wc[c] * out[c]
    return acc


@njit(cache=True)
def batch_subset_total(comps, wc, xbase, free, grids, K, tab):
    """Weighted subset totals for a batch of grid-index rows K (P x k) placed into ``free``."""
    P = K.shape[0]
    res = np.empty(P)
    x = xbase.copy()
    out = np.empty(comps.shape[0])
    wsub = np.empty(comps.shape[0])
    for i in range(comps.shape[0]):
        wsub[i] = wc[comps[i]]
    for p in range(P):
        for j in range(free.shape[0]):
            x[free[j]] = grids[j, K[p, j]]
        eval_list(comps, x, tab, out)
        acc = 0.0
        for i in range(comps.shape[0]):
            acc += wsub[i] * out[i]
        res[p] = acc
    return res


@njit(cache=True)
def delta_update(xnew, changed, xc, eps, wc, ptr, idx, mark, tab):
    """Refresh cached component values after ``changed`` variables moved.

    Returns (delta of the weighted total, stale flag).  The cache is left
    untouched when variables outside ``changed`` differ from it.
    """
    n = xc.shape[0]
    for j in range(changed.shape[0]):
        mark[changed[j]] = True
    stale = False
    for v in range(n):
        if not mark[v] and xnew[v] != xc[v]:
            stale = True
            break
    for j in range(changed.shape[0]):
        mark[changed[j]] = False
    if stale:
        return 0.0, True
    total = 0
    for j in range(changed.shape[0]):
        v = changed[j]
        xc[v] = xnew[v]
        total += ptr[v + 1] - ptr[v]
    comps = np.empty(total, dtype=np.int64)
    m = 0
    seen = np.zeros(0, dtype=np.bool_)
    if changed.shape[0] > 1:
        seen = np.zeros(eps.shape[0], dtype=np.bool_)
    for j in range(changed.shape[0]):
        v = changed[j]
        for r in range(ptr[v], ptr[v + 1]):
            c = idx[r]
            if changed.shape[0] > 1:
                if seen[c]:
                    continue
                seen[c] = True
            comps[m] = c
            m += 1
    comps = comps[:m]
    out = np.empty(m)
    eval_list(comps, xc, tab, out)
    d = 0.0
    for i in range(m):
        c = comps[i]
        d += wc[c] * (out[i] - eps[c])
        eps[c] = out[i]
    return d, False
