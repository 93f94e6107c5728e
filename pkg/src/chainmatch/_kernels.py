"""Compiled scalar primitives and trellis kernels.

Internal node convention: real scene nodes are ``0 .. S-1`` and the dummy is
``S``, which makes "real nodes ascending, then dummy" the natural loop order.
Every function here is ``nogil`` so the layer-parallel driver can run row
blocks on plain threads.
"""

import math

import numpy as np
from numba import njit

INF = np.inf
TWO_PI = 2.0 * math.pi


@njit(cache=True, nogil=True, inline='always')
def feature_distance(f, g):
    acc = 0.0
    for k in range(f.shape[0]):
        d = f[k] - g[k]
        acc += d * d
    return math.sqrt(acc)


@njit(cache=True, nogil=True, inline='always')
def spatial_angle(px, py, vx, vy, qx, qy):
    ux = px - vx
    uy = py - vy
    wx = qx - vx
    wy = qy - vy
    if (ux == 0.0 and uy == 0.0) or (wx == 0.0 and wy == 0.0):
        return 0.0
    cross = ux * wy - uy * wx
    dot = ux * wx + uy * wy
    return math.atan2(abs(cross), dot)


@njit(cache=True, nogil=True, inline='always')
def wrap_angle(d):
    if d > math.pi:
        d -= TWO_PI
    elif d < -math.pi:
        d += TWO_PI
    return d


@njit(cache=True, nogil=True, inline='always')
def angle_pair_distance(m1, m2, s1, s2):
    d1 = wrap_angle(m1 - s1)
    d2 = wrap_angle(m2 - s2)
    return math.sqrt(d1 * d1 + d2 * d2)


@njit(cache=True, nogil=True, inline='always')
def distortion(mdt1, mdt2, mang1, mang2,
               tc, ta, tb, xc, yc, xa, ya, xb, yb, lam3):
    """Temporal plus weighted spatial distortion of one scene triple.

    ``mdt1 = t(i) - t(i-1)``, ``mdt2 = t(i-1) - t(i-2)``; ``mang1`` is the
    model angle at node i-1 and ``mang2`` the one at node i. (c, a, b) are the
    scene nodes assigned to (i, i-1, i-2).
    """
    dt = abs(mdt1 - (tc - ta)) + abs(mdt2 - (ta - tb))
    s1 = spatial_angle(xc, yc, xa, ya, xb, yb)
    s2 = spatial_angle(xa, ya, xc, yc, xb, yb)
    return dt + lam3 * angle_pair_distance(mang1, mang2, s1, s2)


@njit(cache=True, nogil=True)
def unary_table(model_f, scene_f):
    S = scene_f.shape[0]
    M = model_f.shape[0]
    out = np.empty((S, M))
    for n in range(S):
        for i in range(M):
            out[n, i] = feature_distance(model_f[i], scene_f[n])
    return out


@njit(cache=True, nogil=True)
def model_layer_constants(model_t, model_xy):
    """Per-layer model quantities for i >= 2 (entries 0 and 1 unused)."""
    M = model_t.shape[0]
    dt1 = np.zeros(M)
    dt2 = np.zeros(M)
    ang1 = np.zeros(M)
    ang2 = np.zeros(M)
    for i in range(2, M):
        dt1[i] = model_t[i] - model_t[i - 1]
        dt2[i] = model_t[i - 1] - model_t[i - 2]
        ang1[i] = spatial_angle(model_xy[i, 0], model_xy[i, 1],
                                model_xy[i - 1, 0], model_xy[i - 1, 1],
                                model_xy[i - 2, 0], model_xy[i - 2, 1])
        ang2[i] = spatial_angle(model_xy[i - 1, 0], model_xy[i - 1, 1],
                                model_xy[i, 0], model_xy[i, 1],
                                model_xy[i - 2, 0], model_xy[i - 2, 1])
    return dt1, dt2, ang1, ang2


@njit(cache=True, nogil=True, inline='always')
def minnode(table, S, f):
    if f <= 0:
        return table[0]
    if f >= table.shape[0]:
        return S
    return table[f]


@njit(cache=True, nogil=True, inline='always')
def candidate_range(a, b, S, scene_t, table, T, pruned):
    """Half-open range of real z_i candidates for predecessors (a, b)."""
    if not pruned:
        return 0, S
    if a < S and b < S:
        lo = a + 1
        hi = minnode(table, S, scene_t[b] + T)
    elif b < S:
        lo = b + 1
        hi = minnode(table, S, scene_t[b] + T)
    elif a < S:
        lo = a + 1
        hi = minnode(table, S, scene_t[a] + T)
    else:
        lo = 0
        hi = S
    if hi < lo:
        hi = lo
    return lo, hi


@njit(cache=True, nogil=True, inline='always')
def band_lookup(band, eps_row, lo, width, S, W, c, a):
    """alpha(c, a) read from banded storage; +inf outside the band."""
    if c == S:
        return eps_row[a]
    if a == S:
        return band[c, W - 1]
    k = a - lo[c]
    if k < 0 or k >= width[c]:
        return INF
    return band[c, k]


@njit(cache=True, nogil=True, inline='always')
def _unary(i, c, model_f, scene_f, utab, use_table, counters):
    if use_table:
        return utab[c, i]
    counters[3] += 1
    return feature_distance(model_f[i], scene_f[c])


@njit(cache=True, nogil=True, inline='always')
def _cell(i, a, b, last, S, scene_t, scene_xy, table, model_f, scene_f, utab,
          use_table, lam1, lam2, lam3, Wd, T, pruned,
          mdt1, mdt2, mang1, mang2,
          prev_band, prev_eps, lo, width, W, counters):
    """Minimise over z_i for one cell; ties keep the first candidate."""
    c_lo, c_hi = candidate_range(a, b, S, scene_t, table, T, pruned)
    best = INF
    arg = S
    real_pair = a < S and b < S
    ta = scene_t[min(a, S - 1)]
    tb = scene_t[min(b, S - 1)]
    xa = scene_xy[min(a, S - 1), 0]
    ya = scene_xy[min(a, S - 1), 1]
    xb = scene_xy[min(b, S - 1), 0]
    yb = scene_xy[min(b, S - 1), 1]
    fi = model_f[i]
    for c in range(c_lo, c_hi):
        if use_table:
            u = lam1 * utab[c, i]
        else:
            u = lam1 * feature_distance(fi, scene_f[c])
        d = 0.0
        if real_pair:
            d = lam2 * distortion(mdt1, mdt2, mang1, mang2,
                                  scene_t[c], ta, tb,
                                  scene_xy[c, 0], scene_xy[c, 1],
                                  xa, ya, xb, yb, lam3)
        v = u + d
        if not last:
            if a == S:
                k = W - 1
            else:
                k = a - lo[c]
            v = v + prev_band[c, k]
        if v < best:
            best = v
            arg = c
    v = lam1 * Wd
    if not last:
        v = v + prev_eps[a]
    if v < best:
        best = v
        arg = S
    counters[2] += c_hi - c_lo + 1
    if not use_table:
        counters[3] += c_hi - c_lo
    return best, arg


@njit(cache=True, nogil=True)
def compute_rows(i, layer, M, row_start, row_stop, do_eps_row,
                 S, scene_t, scene_xy, table, model_f, scene_f, utab, use_table,
                 lam1, lam2, lam3, Wd, T, pruned,
                 mdt1, mdt2, mang1, mang2,
                 alpha_band, alpha_eps, beta_band, beta_eps, lo, width, W):
    """Fill rows ``row_start .. row_stop-1`` (z_{i-1} fixed per row) of layer i.

    ``layer`` is the storage slot of model node ``i``; slot ``layer + 1``
    holds alpha_{i+1}. Values are written only inside the caller's rows, so
    disjoint row blocks may run concurrently. Returns counters
    ``[cells, real_cells, min_iterations, unary_evaluations]``.
    """
    counters = np.zeros(4, dtype=np.int64)
    last = i == M - 1
    nxt = layer + 1 if not last else layer
    prev_band = alpha_band[nxt]
    prev_eps = alpha_eps[nxt]
    out_band = alpha_band[layer]
    out_beta = beta_band[layer]
    for a in range(row_start, row_stop):
        w = width[a]
        base = lo[a]
        for k in range(w):
            v, arg = _cell(i, a, base + k, last, S, scene_t, scene_xy, table,
                           model_f, scene_f, utab, use_table,
                           lam1, lam2, lam3, Wd, T, pruned,
                           mdt1, mdt2, mang1, mang2,
                           prev_band, prev_eps, lo, width, W, counters)
            out_band[a, k] = v
            out_beta[a, k] = arg
        for k in range(w, W - 1):
            out_band[a, k] = INF
            out_beta[a, k] = -1
        v, arg = _cell(i, a, S, last, S, scene_t, scene_xy, table,
                       model_f, scene_f, utab, use_table,
                       lam1, lam2, lam3, Wd, T, pruned,
                       mdt1, mdt2, mang1, mang2,
                       prev_band, prev_eps, lo, width, W, counters)
        out_band[a, W - 1] = v
        out_beta[a, W - 1] = arg
        counters[0] += w + 1
        counters[1] += w
    if do_eps_row:
        out_eps = alpha_eps[layer]
        out_eps_beta = beta_eps[layer]
        for b in range(S + 1):
            v, arg = _cell(i, S, b, last, S, scene_t, scene_xy, table,
                           model_f, scene_f, utab, use_table,
                           lam1, lam2, lam3, Wd, T, pruned,
                           mdt1, mdt2, mang1, mang2,
                           prev_band, prev_eps, lo, width, W, counters)
            out_eps[b] = v
            out_eps_beta[b] = arg
        counters[0] += S + 1
    return counters


@njit(cache=True, nogil=True)
def init_search(M, S, scene_t, table, T, pruned, model_f, scene_f, utab,
                use_table, lam1, Wd, alpha_band, alpha_eps, lo, width, W):
    """Best (z_0, z_1) over admissible pairs, including alpha of node 2 if M > 2.

    Returns ``(value, z0, z1, evaluations, unary_evaluations)``.
    """
    counters = np.zeros(4, dtype=np.int64)
    has_layer = M > 2
    best = INF
    best0 = S
    best1 = S
    evals = 0
    for z0 in range(S + 1):
        if z0 < S:
            u0 = lam1 * _unary(0, z0, model_f, scene_f, utab, use_table, counters)
        else:
            u0 = lam1 * Wd
        if not pruned:
            lo1 = 0
            hi1 = S
        elif z0 < S:
            lo1 = z0 + 1
            hi1 = minnode(table, S, scene_t[z0] + T)
            if hi1 < lo1:
                hi1 = lo1
        else:
            lo1 = 0
            hi1 = S
        for z1 in range(lo1, hi1 + 1):
            if z1 == hi1:
                z1 = S
            if z1 < S:
                u1 = lam1 * _unary(1, z1, model_f, scene_f, utab, use_table, counters)
            else:
                u1 = lam1 * Wd
            v = u0 + u1
            if has_layer:
                v = v + band_lookup(alpha_band[0], alpha_eps[0], lo, width, S, W, z1, z0)
            evals += 1
            if v < best:
                best = v
                best0 = z0
                best1 = z1
    return best, best0, best1, evals, counters[3]
