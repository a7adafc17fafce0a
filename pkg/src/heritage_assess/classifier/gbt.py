"""Softmax gradient boosting with second-order trees and validation early stopping."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .tree import Tree, grow_boost_tree, presort

logger = logging.getLogger(__name__)


class TrainingError(RuntimeError):
    pass


def softmax(margin: np.ndarray) -> np.ndarray:
    z = margin - margin.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def mlogloss(margin: np.ndarray, y: np.ndarray, w: np.ndarray | None = None) -> float:
    """Mean (weighted) multiclass cross-entropy from raw margins."""
    z = margin - margin.max(axis=1, keepdims=True)
    logp = z - np.log(np.exp(z).sum(axis=1, keepdims=True))
    per_row = -logp[np.arange(y.size), y]
    if w is None:
        return float(per_row.mean())
    return float((w * per_row).sum() / w.sum())


@dataclass(frozen=True)
class GbtModel:
    rounds: tuple[tuple[Tree, ...], ...]  # one tree per class per round
    n_classes: int
    n_features: int
    best_round: int
    train_loss: tuple[float, ...] = ()
    valid_loss: tuple[float, ...] = ()
    stopped_early: bool = False

    def margin(self, X: np.ndarray, n_rounds: int | None = None) -> np.ndarray:
        X = np.ascontiguousarray(X, dtype=np.float64)
        out = np.zeros((X.shape[0], self.n_classes))
        for trees in self.rounds[:n_rounds]:
            for k, t in enumerate(trees):
                out[:, k] += t.predict_value(X)[:, 0]
        return out

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        return softmax(self.margin(X))

    def predict(self, X: np.ndarray) -> np.ndarray:
        return np.argmax(self.margin(X), axis=1)

    def importances(self) -> np.ndarray:
        acc = np.zeros(self.n_features)
        for trees in self.rounds:
            for t in trees:
                acc += t.importance(self.n_features)
        s = acc.sum()
        return acc / s if s > 0 else acc

    def to_json(self) -> dict:
        return {
            "n_classes": self.n_classes,
            "n_features": self.n_features,
            "best_round": self.best_round,
            "stopped_early": self.stopped_early,
            "train_loss": list(self.train_loss),
            "valid_loss": list(self.valid_loss),
            "rounds": [[t.to_json() for t in r] for r in self.rounds],
        }

    @classmethod
    def from_json(cls, d: dict) -> "GbtModel":
        return cls(
            tuple(tuple(Tree.from_json(t) for t in r) for r in d["rounds"]),
            d["n_classes"],
            d["n_features"],
            d["best_round"],
            tuple(d.get("train_loss", ())),
            tuple(d.get("valid_loss", ())),
            d.get("stopped_early", False),
        )


@dataclass
class _History:
    train: list[float] = field(default_factory=list)
    valid: list[float] = field(default_factory=list)


def train_gbt(
    X: np.ndarray,
    y: np.ndarray,
    weights: np.ndarray,
    X_val: np.ndarray,
    y_val: np.ndarray,
    n_classes: int,
    *,
    learning_rate: float = 0.1,
    max_depth: int = 6,
    n_estimators: int = 1000,
    subsample: float = 1.0,
    early_stopping_rounds: int | None = 20,
    reg_lambda: float = 1.0,
    min_child_weight: float = 1.0,
    seed: int = 0,
) -> GbtModel:
    """Fit ``n_classes`` trees per round on the weighted softmax loss.

    After each round the unweighted validation log-loss is checked; once it
    has not improved for ``early_stopping_rounds`` rounds training stops and
    the ensemble is cut back to the best round.
    """
    X = np.ascontiguousarray(X, dtype=np.float64)
    X_val = np.ascontiguousarray(X_val, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    y_val = np.asarray(y_val, dtype=np.int64)
    w = np.asarray(weights, dtype=np.float64)
    if X_val.shape[0] == 0:
        raise TrainingError("boosting needs a non-empty validation set")
    if not 0 < subsample <= 1:
        raise ValueError("subsample must be in (0, 1]")
    n = X.shape[0]
    order = presort(X)
    rng = np.random.default_rng(seed)
    onehot = np.eye(n_classes)[y]
    margin = np.zeros((n, n_classes))
    vmargin = np.zeros((X_val.shape[0], n_classes))
    rounds: list[tuple[Tree, ...]] = []
    hist = _History()
    best, best_round = np.inf, -1
    stopped = False
    for r in range(n_estimators):
        if subsample < 1.0:
            member = np.zeros(n, dtype=bool)
            member[rng.choice(n, size=max(1, int(round(subsample * n))), replace=False)] = True
        else:
            member = np.ones(n, dtype=bool)
        p = softmax(margin)
        trees = []
        for k in range(n_classes):
            g = np.ascontiguousarray(w * (p[:, k] - onehot[:, k]))
            h = np.ascontiguousarray(np.maximum(w * p[:, k] * (1.0 - p[:, k]), 1e-16))
            t = grow_boost_tree(
                X, order, member, g, h,
                max_depth=max_depth, learning_rate=learning_rate,
                reg_lambda=reg_lambda, min_child_weight=min_child_weight,
            )  # fmt: skip
            trees.append(t)
        for k, t in enumerate(trees):
            margin[:, k] += t.predict_value(X)[:, 0]
            vmargin[:, k] += t.predict_value(X_val)[:, 0]
        rounds.append(tuple(trees))
        tl, vl = mlogloss(margin, y, w), mlogloss(vmargin, y_val)
        if not (np.isfinite(tl) and np.isfinite(vl)):
            raise TrainingError(f"non-finite loss at round {r}")
        hist.train.append(tl)
        hist.valid.append(vl)
        if vl < best:
            best, best_round = vl, r
        elif early_stopping_rounds is not None and r - best_round >= early_stopping_rounds:
            stopped = True
            break
    kept = rounds[: best_round + 1] if early_stopping_rounds is not None else rounds
    if early_stopping_rounds is None:
        best_round = len(rounds) - 1
    logger.debug("boosting kept %d of %d rounds", len(kept), len(rounds))
    return GbtModel(tuple(kept), n_classes, X.shape[1], best_round, tuple(hist.train), tuple(hist.valid), stopped)
