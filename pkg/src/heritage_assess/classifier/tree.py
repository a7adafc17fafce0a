"""Array-backed binary trees plus the CART (weighted Gini) and boosting tree growers."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np

from .. import kernels


@dataclass(frozen=True)
class Tree:
    """Node arrays in preorder; ``left == -1`` marks a leaf. ``x <= threshold`` goes left."""

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray  # (n_nodes, n_outputs)
    gain: np.ndarray  # split gain / impurity decrease, 0 at leaves

    @property
    def n_nodes(self) -> int:
        return int(self.feature.shape[0])

    @property
    def depth(self) -> int:
        depth = np.zeros(self.n_nodes, dtype=np.int64)
        for i in range(self.n_nodes):
            if self.left[i] >= 0:
                depth[self.left[i]] = depth[self.right[i]] = depth[i] + 1
        return int(depth.max())

    def apply(self, X: np.ndarray) -> np.ndarray:
        return kernels.tree_apply(np.ascontiguousarray(X, dtype=np.float64), self.feature, self.threshold, self.left, self.right)

    def predict_value(self, X: np.ndarray) -> np.ndarray:
        return self.value[self.apply(X)]

    def importance(self, n_features: int) -> np.ndarray:
        out = np.zeros(n_features)
        split = self.left >= 0
        np.add.at(out, self.feature[split], self.gain[split])
        return out

    def structure_key(self) -> str:
        h = hashlib.sha256()
        for arr in (self.feature, self.threshold, self.left, self.right, self.value):
            h.update(np.ascontiguousarray(arr).tobytes())
        return h.hexdigest()

    def to_json(self) -> dict:
        return {
            "feature": self.feature.tolist(),
            "threshold": self.threshold.tolist(),
            "left": self.left.tolist(),
            "right": self.right.tolist(),
            "value": self.value.tolist(),
            "gain": self.gain.tolist(),
        }

    @classmethod
    def from_json(cls, d: dict) -> "Tree":
        return cls(
            np.asarray(d["feature"], dtype=np.int64),
            np.asarray(d["threshold"], dtype=np.float64),
            np.asarray(d["left"], dtype=np.int64),
            np.asarray(d["right"], dtype=np.int64),
            np.asarray(d["value"], dtype=np.float64).reshape(len(d["feature"]), -1),
            np.asarray(d["gain"], dtype=np.float64),
        )


class _Builder:
    def __init__(self, n_outputs: int):
        self.feature: list[int] = []
        self.threshold: list[float] = []
        self.left: list[int] = []
        self.right: list[int] = []
        self.value: list[np.ndarray] = []
        self.gain: list[float] = []
        self.n_outputs = n_outputs

    def add(self, value) -> int:
        self.feature.append(0)
        self.threshold.append(0.0)
        self.left.append(-1)
        self.right.append(-1)
        self.value.append(np.asarray(value, dtype=np.float64).reshape(self.n_outputs))
        self.gain.append(0.0)
        return len(self.feature) - 1

    def split(self, node: int, feature: int, threshold: float, gain: float, left: int, right: int):
        self.feature[node] = feature
        self.threshold[node] = threshold
        self.gain[node] = gain
        self.left[node] = left
        self.right[node] = right

    def build(self) -> Tree:
        return Tree(
            np.asarray(self.feature, dtype=np.int64),
            np.asarray(self.threshold, dtype=np.float64),
            np.asarray(self.left, dtype=np.int64),
            np.asarray(self.right, dtype=np.int64),
            np.vstack(self.value) if self.value else np.zeros((0, self.n_outputs)),
            np.asarray(self.gain, dtype=np.float64),
        )


def presort(X: np.ndarray) -> np.ndarray:
    """Per-feature row order, shape ``(d, n)``; ties keep row order."""
    return np.ascontiguousarray(np.argsort(X, axis=0, kind="stable").T.astype(np.int64))


def _children(X, member, feature, threshold):
    go_left = X[:, feature] <= threshold
    return member & go_left, member & ~go_left


def grow_cart(
    X: np.ndarray,
    sorted_idx: np.ndarray,
    y: np.ndarray,
    w: np.ndarray,
    n_classes: int,
    *,
    max_depth: int | None = None,
    min_samples_split: int = 2,
    max_features: int | None = None,
    rng: np.random.Generator | None = None,
) -> Tree:
    """Grow a classification tree on rows with positive weight.

    Nodes are expanded depth first, left child before right. At each node a
    random subset of ``max_features`` columns is scanned; if none of them
    admits a split the next subset from the same permutation is tried.
    Leaves store the normalised weighted class distribution.
    """
    n, d = X.shape
    mf = d if max_features is None else max(1, min(d, int(max_features)))
    member0 = w > 0
    b = _Builder(n_classes)
    root_tot = np.bincount(y[member0], weights=w[member0], minlength=n_classes)
    stack = [(b.add(root_tot / root_tot.sum()), member0, 0, root_tot)]
    while stack:
        node, member, depth, totals = stack.pop()
        if (
            (max_depth is not None and depth >= max_depth)
            or int(member.sum()) < min_samples_split
            or np.count_nonzero(totals > 0) < 2
        ):
            continue
        perm = rng.permutation(d) if (rng is not None and mf < d) else np.arange(d)
        feat = -1
        for start in range(0, d, mf):
            cand = np.ascontiguousarray(perm[start : start + mf], dtype=np.int64)
            score, feat, thr = kernels.gini_best_split(X, sorted_idx, member, y, w, cand, totals, n_classes)
            if feat >= 0:
                break
        if feat < 0:
            continue
        lm, rm = _children(X, member, feat, thr)
        lt = np.bincount(y[lm], weights=w[lm], minlength=n_classes)
        rt = np.bincount(y[rm], weights=w[rm], minlength=n_classes)
        li = b.add(lt / lt.sum())
        ri = b.add(rt / rt.sum())
        b.split(node, feat, thr, max(score, 0.0), li, ri)
        stack.append((ri, rm, depth + 1, rt))
        stack.append((li, lm, depth + 1, lt))
    return _renumber(b.build())


def grow_boost_tree(
    X: np.ndarray,
    sorted_idx: np.ndarray,
    member: np.ndarray,
    g: np.ndarray,
    h: np.ndarray,
    *,
    max_depth: int,
    learning_rate: float,
    reg_lambda: float = 1.0,
    min_child_weight: float = 1.0,
) -> Tree:
    """Second-order regression tree; leaf weight ``-lr * G / (H + lambda)``."""
    b = _Builder(1)

    def leaf(m):
        G, H = float(g[m].sum()), float(h[m].sum())
        return G, H, -learning_rate * G / (H + reg_lambda)

    G, H, v = leaf(member)
    stack = [(b.add(v), member, 0, G, H)]
    while stack:
        node, m, depth, G, H = stack.pop()
        if depth >= max_depth or int(m.sum()) < 2:
            continue
        gain, feat, thr = kernels.gbt_best_split(X, sorted_idx, m, g, h, G, H, reg_lambda, min_child_weight)
        if feat < 0:
            continue
        lm, rm = _children(X, m, feat, thr)
        lG, lH, lv = leaf(lm)
        rG, rH, rv = leaf(rm)
        li, ri = b.add(lv), b.add(rv)
        b.split(node, feat, thr, gain, li, ri)
        stack.append((ri, rm, depth + 1, rG, rH))
        stack.append((li, lm, depth + 1, lG, lH))
    return _renumber(b.build())


def _renumber(t: Tree) -> Tree:
    """Reorder nodes into preorder so structurally equal trees have equal arrays."""
    order: list[int] = []
    stack = [0]
    while stack:
        i = stack.pop()
        order.append(i)
        if t.left[i] >= 0:
            stack.append(t.right[i])
            stack.append(t.left[i])
    pos = np.empty(t.n_nodes, dtype=np.int64)
    pos[order] = np.arange(len(order))
    o = np.asarray(order)
    left = np.where(t.left[o] >= 0, pos[np.maximum(t.left[o], 0)], -1)
    right = np.where(t.right[o] >= 0, pos[np.maximum(t.right[o], 0)], -1)
    return Tree(t.feature[o], t.threshold[o], left, right, t.value[o], t.gain[o])
