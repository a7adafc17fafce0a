"""Stratified partitioning and balanced class weights."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .encoding import FeatureMatrix


class SplitError(ValueError):
    pass


@dataclass(frozen=True)
class SplitSpec:
    fractions: tuple[float, float, float] = (0.8, 0.1, 0.1)
    seed: int = 0

    def __post_init__(self):
        fr = tuple(float(f) for f in self.fractions)
        object.__setattr__(self, "fractions", fr)
        if len(fr) != 3 or any(f < 0 for f in fr):
            raise SplitError("split needs three non-negative fractions (train, validation, test)")
        if not math.isclose(sum(fr), 1.0, abs_tol=1e-9):
            raise SplitError(f"split fractions must sum to 1, got {sum(fr)}")


def allocate(n: int, fractions: tuple[float, ...]) -> list[int]:
    """Split ``n`` items by largest remainder so every share is within one of ``n * f``.

    A partition whose exact share is fractional but floors to zero gets first
    claim on the leftover items, later partitions before earlier ones.
    """
    exact = [n * f for f in fractions]
    base = [math.floor(e) for e in exact]
    left = n - sum(base)
    rema = [e - b for e, b in zip(exact, base)]
    order = sorted(
        range(len(fractions)),
        key=lambda i: (not (base[i] == 0 and rema[i] > 0), -rema[i], -i),
    )
    for i in order[:left]:
        base[i] += 1
    return base


def stratified_indices(y: np.ndarray, spec: SplitSpec) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    y = np.asarray(y)
    rng = np.random.default_rng(spec.seed)
    parts: list[list[int]] = [[], [], []]
    for cls in np.unique(y):
        idx = np.flatnonzero(y == cls)
        if idx.size < 3:
            raise SplitError(f"class {int(cls)} has {idx.size} row(s); stratified splitting needs at least 3")
        idx = idx[rng.permutation(idx.size)]
        counts = allocate(idx.size, spec.fractions)
        start = 0
        for p, c in enumerate(counts):
            parts[p].extend(idx[start : start + c].tolist())
            start += c
    return tuple(np.array(sorted(p), dtype=np.int64) for p in parts)


def stratified_split(matrix: FeatureMatrix, spec: SplitSpec = SplitSpec()):
    """Partition rows into train, validation and test, stratified on the target."""
    tr, va, te = stratified_indices(matrix.y, spec)
    return matrix.subset(tr), matrix.subset(va), matrix.subset(te)


def class_weights(y: np.ndarray) -> np.ndarray:
    """Balanced per-row weights ``n / (k * n_c)`` over the classes present."""
    y = np.asarray(y)
    if y.size == 0:
        return np.zeros(0)
    classes, inverse, counts = np.unique(y, return_inverse=True, return_counts=True)
    per_class = y.size / (classes.size * counts)
    return per_class[inverse].astype(np.float64)
