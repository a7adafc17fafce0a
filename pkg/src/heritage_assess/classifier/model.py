"""Family dispatch, the trained-model container and its JSON format."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

import numpy as np

from ..geo_ingest import TARGET_CLASSES
from .encoding import Column, FeatureMatrix
from .forest import ForestModel, train_forest
from .gbt import GbtModel, train_gbt
from .knn import KnnModel, train_knn
from .logistic import LogisticModel, train_logistic

FORMAT = "heritage-assess-model"
FORMAT_VERSION = 1

LR, KNN, RF, XGB = "LR", "N", "RF", "XGB"
FAMILIES = (LR, KNN, RF, XGB)

_ESTIMATORS = {LR: LogisticModel, KNN: KnnModel, RF: ForestModel, XGB: GbtModel}


class ModelError(ValueError):
    pass


@dataclass(frozen=True)
class TrainedModel:
    family: str
    hyperparams: Mapping[str, Any]
    columns: tuple[Column, ...]
    estimator: Any
    seed: int = 0
    split_hash: str = ""
    feature_set: str = ""
    meta: Mapping[str, Any] = field(default_factory=dict)

    @property
    def feature_names(self) -> tuple[str, ...]:
        return tuple(c.name for c in self.columns)

    def _matrix(self, data) -> np.ndarray:
        if isinstance(data, FeatureMatrix):
            return data.aligned(self.feature_names)
        X = np.asarray(data, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != len(self.columns):
            raise ModelError(f"expected {len(self.columns)} columns, got shape {X.shape}")
        return X

    def predict(self, data) -> np.ndarray:
        """Class indices into ``TARGET_CLASSES``; FeatureMatrix inputs are aligned by column name."""
        return self.estimator.predict(self._matrix(data))

    def predict_labels(self, data) -> list:
        return [TARGET_CLASSES[i] for i in self.predict(data)]

    def importances(self) -> np.ndarray | None:
        """Per-feature importance; logistic models sum absolute coefficients over classes."""
        if self.family == KNN:
            return None
        imp = self.estimator.importances()
        return imp.sum(axis=0) if imp.ndim == 2 else imp

    def to_json(self) -> dict:
        return {
            "format": FORMAT,
            "version": FORMAT_VERSION,
            "family": self.family,
            "hyperparams": dict(self.hyperparams),
            "columns": [[c.name, c.kind, c.from_register] for c in self.columns],
            "seed": self.seed,
            "split_hash": self.split_hash,
            "feature_set": self.feature_set,
            "meta": dict(self.meta),
            "model": self.estimator.to_json(),
        }

    @classmethod
    def from_json(cls, d: Mapping) -> "TrainedModel":
        if d.get("format") != FORMAT:
            raise ModelError("not a heritage-assess model file")
        if d.get("version") != FORMAT_VERSION:
            raise ModelError(f"unsupported model format version {d.get('version')}")
        family = d["family"]
        if family not in _ESTIMATORS:
            raise ModelError(f"unknown model family {family!r}")
        return cls(
            family,
            d["hyperparams"],
            tuple(Column(n, k, bool(r)) for n, k, r in d["columns"]),
            _ESTIMATORS[family].from_json(d["model"]),
            d.get("seed", 0),
            d.get("split_hash", ""),
            d.get("feature_set", ""),
            d.get("meta", {}),
        )

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_json(), sort_keys=True) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "TrainedModel":
        return cls.from_json(json.loads(Path(path).read_text(encoding="utf-8")))


def fit(
    family: str,
    params: Mapping[str, Any],
    train: FeatureMatrix,
    weights: np.ndarray,
    validation: FeatureMatrix | None = None,
    seed: int = 0,
) -> TrainedModel:
    """Train one model of ``family`` at one hyperparameter point."""
    K = len(TARGET_CLASSES)
    X, y = train.X, train.y
    if family == LR:
        if params.get("penalty", "l2") != "l2":
            raise ModelError("only the l2 penalty is supported")
        est = train_logistic(X, y, weights, K, C=float(params.get("C", 1.0)), max_iter=int(params.get("max_iter", 1000)))
    elif family == KNN:
        est = train_knn(X, y, K, n_neighbors=params.get("n_neighbors", 5), weights=params.get("weights", "uniform"), p=params.get("p", 2))
    elif family == RF:
        est = train_forest(
            X, y, weights, K,
            n_estimators=int(params.get("n_estimators", 100)),
            max_depth=params.get("max_depth"),
            min_samples_split=int(params.get("min_samples_split", 2)),
            seed=seed,
        )  # fmt: skip
    elif family == XGB:
        if params.get("objective", "multi:softmax") != "multi:softmax":
            raise ModelError("only the multi:softmax objective is supported")
        if validation is None:
            raise ModelError("boosting needs a validation split for early stopping")
        est = train_gbt(
            X, y, weights, validation.aligned(train.names), validation.y, K,
            learning_rate=float(params.get("learning_rate", 0.1)),
            max_depth=int(params.get("max_depth", 6)),
            n_estimators=int(params.get("n_estimators", 1000)),
            subsample=float(params.get("subsample", 1.0)),
            early_stopping_rounds=params.get("early_stopping_rounds", 20),
            seed=seed,
        )  # fmt: skip
    else:
        raise ModelError(f"unknown model family {family!r}; expected one of {FAMILIES}")
    return TrainedModel(family, dict(params), train.columns, est, seed, train.digest(), train.feature_set)
