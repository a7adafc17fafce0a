from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .tree import Tree, grow_cart, presort


@dataclass(frozen=True)
class ForestModel:
    trees: tuple[Tree, ...]
    n_classes: int
    n_features: int

    def votes(self, X: np.ndarray) -> np.ndarray:
        v = np.zeros((X.shape[0], self.n_classes), dtype=np.int64)
        rows = np.arange(X.shape[0])
        for t in self.trees:
            np.add.at(v, (rows, np.argmax(t.predict_value(X), axis=1)), 1)
        return v

    def predict(self, X: np.ndarray) -> np.ndarray:
        # argmax returns the first maximum, so ties go to the lowest class index
        return np.argmax(self.votes(X), axis=1)

    def importances(self) -> np.ndarray:
        acc = np.zeros(self.n_features)
        for t in self.trees:
            imp = t.importance(self.n_features)
            s = imp.sum()
            if s > 0:
                acc += imp / s
        s = acc.sum()
        return acc / s if s > 0 else acc

    def structure_key(self) -> tuple[str, ...]:
        return tuple(t.structure_key() for t in self.trees)

    def to_json(self) -> dict:
        return {
            "n_classes": self.n_classes,
            "n_features": self.n_features,
            "trees": [t.to_json() for t in self.trees],
        }

    @classmethod
    def from_json(cls, d: dict) -> "ForestModel":
        return cls(tuple(Tree.from_json(t) for t in d["trees"]), d["n_classes"], d["n_features"])


def sqrt_features(d: int) -> int:
    return max(1, int(math.sqrt(d)))


def train_forest(
    X: np.ndarray,
    y: np.ndarray,
    weights: np.ndarray,
    n_classes: int,
    *,
    n_estimators: int = 100,
    max_depth: int | None = None,
    min_samples_split: int = 2,
    max_features: int | str | None = "sqrt",
    bootstrap: bool = True,
    seed: int = 0,
) -> ForestModel:
    """Bagged weighted-Gini trees.

    Bootstrap draws enter as integer multiplicities on the sample weights, so
    an out-of-bag row simply has weight zero in that tree.
    """
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.int64)
    w = np.ascontiguousarray(weights, dtype=np.float64)
    n, d = X.shape
    if n == 0:
        raise ValueError("cannot fit a forest on zero rows")
    mf = sqrt_features(d) if max_features == "sqrt" else max_features
    order = presort(X)
    rng = np.random.default_rng(seed)
    trees = []
    for _ in range(n_estimators):
        tw = w * np.bincount(rng.integers(0, n, n), minlength=n) if bootstrap else w
        trees.append(
            grow_cart(X, order, y, tw, n_classes, max_depth=max_depth, min_samples_split=min_samples_split, max_features=mf, rng=rng)
        )
    return ForestModel(tuple(trees), n_classes, d)
