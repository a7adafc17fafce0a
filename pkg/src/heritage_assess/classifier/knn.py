from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import kernels


@dataclass(frozen=True)
class KnnModel:
    X: np.ndarray
    y: np.ndarray
    n_classes: int
    n_neighbors: int = 5
    weights: str = "uniform"
    p: int = 2

    def __post_init__(self):
        if self.n_neighbors > self.X.shape[0]:
            raise ValueError(f"n_neighbors={self.n_neighbors} exceeds the {self.X.shape[0]} training rows")
        if self.weights not in ("uniform", "distance"):
            raise ValueError(f"unknown weighting {self.weights!r}")

    def votes(self, Q: np.ndarray) -> np.ndarray:
        Q = np.ascontiguousarray(Q, dtype=np.float64)
        D = kernels.minkowski_distances(Q, self.X, self.p)
        near = np.argsort(D, axis=1, kind="stable")[:, : self.n_neighbors]
        out = np.zeros((Q.shape[0], self.n_classes))
        for i in range(Q.shape[0]):
            d = D[i, near[i]]
            cls = self.y[near[i]]
            if self.weights == "uniform":
                vote = np.ones_like(d)
            elif (d == 0).any():
                vote = (d == 0).astype(np.float64)
            else:
                vote = 1.0 / d
            for c, v in zip(cls, vote):
                out[i, c] += v
        return out

    def predict(self, Q: np.ndarray) -> np.ndarray:
        return np.argmax(self.votes(Q), axis=1)

    def to_json(self) -> dict:
        return {
            "X": self.X.tolist(),
            "y": self.y.tolist(),
            "n_classes": self.n_classes,
            "n_neighbors": self.n_neighbors,
            "weights": self.weights,
            "p": self.p,
        }

    @classmethod
    def from_json(cls, d: dict) -> "KnnModel":
        X = np.asarray(d["X"], dtype=np.float64).reshape(len(d["y"]), -1)
        return cls(X, np.asarray(d["y"], dtype=np.int64), d["n_classes"], d["n_neighbors"], d["weights"], d["p"])


def train_knn(X, y, n_classes: int, *, n_neighbors: int = 5, weights: str = "uniform", p: int = 2) -> KnnModel:
    """Store the training rows; sample weights are deliberately not used."""
    return KnnModel(
        np.ascontiguousarray(X, dtype=np.float64), np.asarray(y, dtype=np.int64), n_classes, int(n_neighbors), weights, int(p)
    )
