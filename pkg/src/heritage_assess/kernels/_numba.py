"""numba-compiled inner loops.

Every function here has a twin in ``_numpy`` with identical arithmetic order,
so both paths return bit-identical results on the same inputs.
"""

import numpy as np
from numba import njit


@njit(cache=True)
def gbt_best_split(X, sorted_idx, member, g, h, G, H, lam, min_child_weight):
    d = sorted_idx.shape[0]
    n = sorted_idx.shape[1]
    parent = G * G / (H + lam)
    best_gain = 0.0
    best_feature = -1
    best_threshold = np.nan
    for f in range(d):
        gl = 0.0
        hl = 0.0
        prev = 0.0
        started = False
        for j in range(n):
            i = sorted_idx[f, j]
            if not member[i]:
                continue
            x = X[i, f]
            if started and x > prev:
                hr = H - hl
                if hl >= min_child_weight and hr >= min_child_weight:
                    gr = G - gl
                    gain = 0.5 * (gl * gl / (hl + lam) + gr * gr / (hr + lam) - parent)
                    if gain > best_gain:
                        best_gain = gain
                        best_feature = f
                        mid = 0.5 * (prev + x)
                        best_threshold = prev if mid >= x else mid
            gl += g[i]
            hl += h[i]
            prev = x
            started = True
    return best_gain, best_feature, best_threshold


@njit(cache=True)
def gini_best_split(X, sorted_idx, member, y, w, features, totals, n_classes):
    n = sorted_idx.shape[1]
    W = 0.0
    parent = 0.0
    for k in range(n_classes):
        W += totals[k]
        parent += totals[k] * totals[k]
    parent = parent / W
    best_score = -np.inf
    best_feature = -1
    best_threshold = np.nan
    cl = np.zeros(n_classes)
    for f in features:
        for k in range(n_classes):
            cl[k] = 0.0
        wl = 0.0
        prev = 0.0
        started = False
        for j in range(n):
            i = sorted_idx[f, j]
            if not member[i]:
                continue
            x = X[i, f]
            if started and x > prev:
                wr = W - wl
                if wl > 0.0 and wr > 0.0:
                    sl = 0.0
                    sr = 0.0
                    for k in range(n_classes):
                        cr = totals[k] - cl[k]
                        sl = sl + cl[k] * cl[k]
                        sr = sr + cr * cr
                    score = sl / wl + sr / wr - parent
                    if score > best_score:
                        best_score = score
                        best_feature = f
                        mid = 0.5 * (prev + x)
                        best_threshold = prev if mid >= x else mid
            cl[y[i]] += w[i]
            wl += w[i]
            prev = x
            started = True
    return best_score, best_feature, best_threshold


@njit(cache=True)
def minkowski_distances(A, B, p):
    na = A.shape[0]
    nb = B.shape[0]
    d = A.shape[1]
    out = np.zeros((na, nb))
    for a in range(na):
        for b in range(nb):
            acc = 0.0
            for j in range(d):
                diff = abs(A[a, j] - B[b, j])
                if p == 1:
                    acc = acc + diff
                else:
                    acc = acc + diff ** p
            if p == 1:
                out[a, b] = acc
            elif p == 2:
                out[a, b] = np.sqrt(acc)
            else:
                out[a, b] = acc ** (1.0 / p)
    return out


@njit(cache=True)
def tree_apply(X, feature, threshold, left, right):
    n = X.shape[0]
    out = np.empty(n, dtype=np.int64)
    for i in range(n):
        node = 0
        while left[node] >= 0:
            if X[i, feature[node]] <= threshold[node]:
                node = left[node]
            else:
                node = right[node]
        out[i] = node
    return out
