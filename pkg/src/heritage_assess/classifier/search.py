"""Exhaustive hyperparameter search scored by validation macro F1."""

from __future__ import annotations

import csv
import itertools
import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Mapping, Sequence

import numpy as np

from ..geo_ingest import TARGET_CLASSES
from ..metrics import macro_f1
from .encoding import FeatureMatrix
from .model import KNN, LR, RF, XGB, TrainedModel, fit

logger = logging.getLogger(__name__)

# search spaces in the order their keys and values are enumerated
DEFAULT_GRIDS: dict[str, dict[str, list]] = {
    RF: {"n_estimators": [50, 100, 200], "max_depth": [None, 10, 20], "min_samples_split": [2, 5]},
    LR: {"C": [0.1, 1.0, 10], "penalty": ["l2"], "solver": ["lbfgs", "liblinear"], "max_iter": [1000]},
    KNN: {"n_neighbors": [3, 5, 10], "weights": ["uniform", "distance"], "p": [1, 2]},
    XGB: {
        "objective": ["multi:softmax"],
        "learning_rate": [0.01, 0.1, 0.2],
        "max_depth": [3, 6, 10],
        "n_estimators": [1000],
        "subsample": [0.8, 1.0],
        "early_stopping_rounds": [20],
        "num_class": [len(TARGET_CLASSES)],
        "enable_categorical": [True],
    },
}


class SearchError(RuntimeError):
    pass


def grid_points(grid: Mapping[str, Sequence]) -> list[dict[str, Any]]:
    if not grid or any(len(v) == 0 for v in grid.values()):
        raise SearchError("hyperparameter grid is empty")
    keys = list(grid)
    return [dict(zip(keys, combo)) for combo in itertools.product(*(grid[k] for k in keys))]


@dataclass
class SearchEntry:
    index: int
    params: dict[str, Any]
    score: float | None
    error: str = ""


def grid_search(
    family: str,
    grid: Mapping[str, Sequence],
    train: FeatureMatrix,
    validation: FeatureMatrix,
    weights: np.ndarray,
    seed: int = 0,
) -> tuple[TrainedModel, list[SearchEntry]]:
    """Fit every grid point and keep the best validation macro F1.

    Ties go to the earliest point. A point whose training raises is logged
    and skipped.
    """
    if validation.n_rows == 0:
        raise SearchError("validation split is empty")
    best: TrainedModel | None = None
    best_score = -np.inf
    log: list[SearchEntry] = []
    for i, params in enumerate(grid_points(grid)):
        try:
            model = fit(family, params, train, weights, validation, seed)
        except (ValueError, RuntimeError, ArithmeticError) as exc:
            logger.warning("%s grid point %d %s failed: %s", family, i, params, exc)
            log.append(SearchEntry(i, params, None, str(exc)))
            continue
        score = macro_f1(validation.y, model.predict(validation), len(TARGET_CLASSES))
        log.append(SearchEntry(i, params, score))
        if score > best_score:
            best, best_score = model, score
    if best is None:
        raise SearchError(f"every {family} grid point failed")
    return best, log


def write_search_log(log: Sequence[SearchEntry], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["index", "params", "val_macro_f1", "error"])
        for e in log:
            w.writerow([e.index, json.dumps(e.params, sort_keys=True), "" if e.score is None else repr(e.score), e.error])
