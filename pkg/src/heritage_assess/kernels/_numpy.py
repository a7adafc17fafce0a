"""Vectorised numpy fallbacks for the kernels in ``_numba``.

Reductions that feed comparisons are written as sequential cumulative sums so
the floating point results match the compiled loops exactly.
"""

import numpy as np


def _node_order(sorted_idx, member):
    m = int(member.sum())
    order = sorted_idx[member[sorted_idx]]
    return order.reshape(sorted_idx.shape[0], m)


def _pick(score, valid, V, floor):
    score = np.where(valid, score, -np.inf)
    if score.size == 0:
        return floor, -1, np.nan
    flat = int(np.argmax(score))
    best = score.flat[flat]
    if not best > floor:
        return floor, -1, np.nan
    f, j = divmod(flat, score.shape[1])
    prev, x = V[f, j], V[f, j + 1]
    mid = 0.5 * (prev + x)
    return float(best), f, float(prev if mid >= x else mid)


def gbt_best_split(X, sorted_idx, member, g, h, G, H, lam, min_child_weight):
    O = _node_order(sorted_idx, member)
    V = np.take_along_axis(X.T, O, axis=1)
    gl = np.cumsum(g[O], axis=1)[:, :-1]
    hl = np.cumsum(h[O], axis=1)[:, :-1]
    hr = H - hl
    gr = G - gl
    parent = G * G / (H + lam)
    with np.errstate(divide="ignore", invalid="ignore"):
        gain = 0.5 * (gl * gl / (hl + lam) + gr * gr / (hr + lam) - parent)
    valid = (V[:, 1:] > V[:, :-1]) & (hl >= min_child_weight) & (hr >= min_child_weight)
    return _pick(gain, valid, V, 0.0)


def gini_best_split(X, sorted_idx, member, y, w, features, totals, n_classes):
    W = 0.0
    parent = 0.0
    for k in range(n_classes):
        W += totals[k]
        parent += totals[k] * totals[k]
    parent = parent / W
    O = _node_order(sorted_idx[features], member)
    V = np.take_along_axis(X.T[features], O, axis=1)
    Y = y[O]
    Wt = w[O]
    wl = np.cumsum(Wt, axis=1)[:, :-1]
    wr = W - wl
    sl = np.zeros_like(wl)
    sr = np.zeros_like(wl)
    for k in range(n_classes):
        cl = np.cumsum(np.where(Y == k, Wt, 0.0), axis=1)[:, :-1]
        cr = totals[k] - cl
        sl = sl + cl * cl
        sr = sr + cr * cr
    with np.errstate(divide="ignore", invalid="ignore"):
        score = sl / wl + sr / wr - parent
    valid = (V[:, 1:] > V[:, :-1]) & (wl > 0.0) & (wr > 0.0)
    best, f, thr = _pick(score, valid, V, -np.inf)
    if f < 0:
        return -np.inf, -1, np.nan
    return best, int(features[f]), thr


def minkowski_distances(A, B, p):
    acc = np.zeros((A.shape[0], B.shape[0]))
    for j in range(A.shape[1]):
        diff = np.abs(A[:, j][:, None] - B[:, j][None, :])
        acc = acc + (diff if p == 1 else diff ** p)
    if p == 1:
        return acc
    if p == 2:
        return np.sqrt(acc)
    return acc ** (1.0 / p)


def tree_apply(X, feature, threshold, left, right):
    node = np.zeros(X.shape[0], dtype=np.int64)
    rows = np.arange(X.shape[0])
    active = left[node] >= 0
    while active.any():
        idx = rows[active]
        cur = node[idx]
        go_left = X[idx, feature[cur]] <= threshold[cur]
        node[idx] = np.where(go_left, left[cur], right[cur])
        active = left[node] >= 0
    return node
