"""Feature-quality analytics: year errors, era confusion, scale distributions, Cramér's V."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Hashable, Iterable, Mapping, Sequence

import numpy as np

from .geo_ingest import DEFAULT_ERA_SCHEME, TARGET_CLASSES, EraScheme, HeritageTarget, assign_era
from .llm.parsing import FacadeFeatures
from .llm.schema import FEATURE_SCHEMA, NA, SCALE_FIELDS, SCHEMA_BY_NAME, FieldSpec, Kind


class AnalyticsError(ValueError):
    pass


@dataclass(frozen=True)
class ContingencyTable:
    """Counts indexed (feature level, heritage category)."""

    row_labels: tuple
    col_labels: tuple
    counts: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.counts)
        if c.ndim != 2 or c.shape != (len(self.row_labels), len(self.col_labels)):
            raise AnalyticsError(f"counts shape {c.shape} does not match labels")
        if c.size and (c < 0).any():
            raise AnalyticsError("contingency counts must be non-negative")
        if c.size and not np.array_equal(c, np.round(c)):
            raise AnalyticsError("contingency counts must be integers")
        object.__setattr__(self, "counts", c.astype(np.int64))

    @classmethod
    def from_counts(cls, counts) -> "ContingencyTable":
        c = np.asarray(counts)
        return cls(tuple(range(c.shape[0])), tuple(range(c.shape[1])), c)

    @classmethod
    def from_pairs(
        cls,
        pairs: Iterable[tuple[Hashable, Hashable]],
        rows: Sequence | None = None,
        cols: Sequence | None = None,
    ) -> "ContingencyTable":
        pairs = list(pairs)
        rows = tuple(rows) if rows is not None else tuple(sorted({r for r, _ in pairs}, key=str))
        cols = tuple(cols) if cols is not None else tuple(sorted({c for _, c in pairs}, key=str))
        ri = {r: i for i, r in enumerate(rows)}
        ci = {c: j for j, c in enumerate(cols)}
        counts = np.zeros((len(rows), len(cols)), dtype=np.int64)
        for r, c in pairs:
            counts[ri[r], ci[c]] += 1
        return cls(rows, cols, counts)

    @property
    def n(self) -> int:
        return int(self.counts.sum())

    @property
    def shape(self) -> tuple[int, int]:
        return self.counts.shape

    def pruned(self) -> tuple["ContingencyTable", list, list]:
        """Drop all-zero rows and columns; returns the table and the dropped labels."""
        keep_r = self.counts.sum(axis=1) > 0
        keep_c = self.counts.sum(axis=0) > 0
        dropped_r = [lab for lab, k in zip(self.row_labels, keep_r) if not k]
        dropped_c = [lab for lab, k in zip(self.col_labels, keep_c) if not k]
        t = ContingencyTable(
            tuple(lab for lab, k in zip(self.row_labels, keep_r) if k),
            tuple(lab for lab, k in zip(self.col_labels, keep_c) if k),
            self.counts[np.ix_(keep_r, keep_c)],
        )
        return t, dropped_r, dropped_c


def _checked(table: ContingencyTable) -> np.ndarray:
    t, _, _ = table.pruned()
    c = t.counts.astype(np.float64)
    if c.size == 0 or t.n == 0:
        raise AnalyticsError("contingency table is empty")
    return c


def chi_square(table: ContingencyTable) -> float:
    """Pearson's X² on the pruned table (all-zero rows and columns removed)."""
    c = _checked(table)
    n = c.sum()
    expected = np.outer(c.sum(axis=1), c.sum(axis=0)) / n
    return float(((c - expected) ** 2 / expected).sum())


def cramers_v(table: ContingencyTable) -> float:
    """Cramér's V without bias correction, on the pruned table."""
    c = _checked(table)
    r, k = c.shape
    dof = min(k - 1, r - 1)
    if dof < 1:
        raise AnalyticsError(f"Cramér's V needs at least 2 rows and 2 columns, got {r}x{k}")
    v = math.sqrt(chi_square(table) / c.sum() / dof)
    # guard against float creep past 1 on perfectly associated tables
    return min(v, 1.0)


# --- construction year -------------------------------------------------------


@dataclass(frozen=True)
class EraErrorStats:
    mean_error: float
    mean_abs_error: float
    count: int


@dataclass
class YearErrorStats:
    errors: dict[str, int]
    per_era: dict[str, EraErrorStats]
    scheme: EraScheme = DEFAULT_ERA_SCHEME

    def to_json(self) -> dict:
        return {
            "errors": dict(sorted(self.errors.items())),
            "per_era": {k: vars(v).copy() for k, v in self.per_era.items()},
        }


def _join(predictions: Mapping[str, int], truth: Mapping[str, int]) -> list[tuple[str, int, int]]:
    rows = [(bid, int(predictions[bid]), int(truth[bid])) for bid in sorted(predictions) if bid in truth]
    if not rows:
        raise AnalyticsError("no building ids shared between predictions and truth")
    return rows


def year_errors(
    predictions: Mapping[str, int],
    truth: Mapping[str, int],
    scheme: EraScheme = DEFAULT_ERA_SCHEME,
) -> YearErrorStats:
    """Signed error ``predicted - actual`` per building, averaged per era of the actual year.

    A positive error means the building was judged younger than it is.
    """
    rows = _join(predictions, truth)
    errors = {bid: p - a for bid, p, a in rows}
    by_era: dict[str, list[int]] = {}
    for bid, _, a in rows:
        by_era.setdefault(assign_era(a, scheme), []).append(errors[bid])
    per_era = {
        label: EraErrorStats(
            math.fsum(by_era[label]) / len(by_era[label]),
            math.fsum(abs(e) for e in by_era[label]) / len(by_era[label]),
            len(by_era[label]),
        )
        for label in scheme.labels
        if label in by_era
    }
    return YearErrorStats(errors, per_era, scheme)


@dataclass
class EraConfusion:
    labels: tuple[str, ...]
    matrix: np.ndarray  # (actual, predicted)
    precision: dict[str, float | None]
    recall: dict[str, float | None]

    @property
    def n(self) -> int:
        return int(self.matrix.sum())

    def to_json(self) -> dict:
        return {
            "labels": list(self.labels),
            "matrix": self.matrix.tolist(),
            "precision": self.precision,
            "recall": self.recall,
        }


def era_confusion(
    predictions: Mapping[str, int],
    truth: Mapping[str, int],
    scheme: EraScheme = DEFAULT_ERA_SCHEME,
) -> EraConfusion:
    """Confusion of actual vs predicted era; empty denominators give ``None``."""
    rows = _join(predictions, truth)
    idx = {label: i for i, label in enumerate(scheme.labels)}
    m = np.zeros((len(idx), len(idx)), dtype=np.int64)
    for _, p, a in rows:
        m[idx[assign_era(a, scheme)], idx[assign_era(p, scheme)]] += 1
    col, row, diag = m.sum(axis=0), m.sum(axis=1), np.diag(m)
    precision = {lab: (float(diag[i] / col[i]) if col[i] else None) for lab, i in idx.items()}
    recall = {lab: (float(diag[i] / row[i]) if row[i] else None) for lab, i in idx.items()}
    return EraConfusion(scheme.labels, m, precision, recall)


# --- scale features ---------------------------------------------------------


@dataclass(frozen=True)
class ScaleDistribution:
    feature: str
    category: str
    n: int
    q25: float
    q50: float
    q75: float
    whisker_low: float
    whisker_high: float
    outliers: tuple[float, ...]


def box_stats(values: Sequence[float]) -> tuple[float, float, float, float, float, tuple[float, ...]]:
    """Linear-interpolation quartiles, Tukey whiskers and the points beyond them.

    Whiskers end at the most extreme observation inside ``1.5 * IQR`` of the box.
    """
    x = np.sort(np.asarray(values, dtype=np.float64))
    if x.size == 0:
        raise AnalyticsError("box statistics need at least one value")
    q25, q50, q75 = np.percentile(x, [25, 50, 75], method="linear")
    iqr = q75 - q25
    lo_fence, hi_fence = q25 - 1.5 * iqr, q75 + 1.5 * iqr
    inside = x[(x >= lo_fence) & (x <= hi_fence)]
    outliers = tuple(float(v) for v in x[(x < lo_fence) | (x > hi_fence)])
    return float(q25), float(q50), float(q75), float(inside.min()), float(inside.max()), outliers


def _label(v) -> str:
    return v.value if isinstance(v, HeritageTarget) else str(v)


def scale_distributions(
    features: Sequence[FacadeFeatures],
    labels: Mapping[str, HeritageTarget],
    fields: Sequence[str] = SCALE_FIELDS,
) -> list[ScaleDistribution]:
    """Box-plot statistics per scale feature and heritage category.

    Records without a label are skipped; categories with no records are omitted.
    """
    labelled = [(f, labels[f.building_id]) for f in features if labels.get(f.building_id) is not None]
    if not labelled:
        raise AnalyticsError("no labelled feature records")
    out = []
    for name in fields:
        for cat in TARGET_CLASSES:
            vals = [f[name] for f, lab in labelled if HeritageTarget(lab) is cat]
            if not vals:
                continue
            q25, q50, q75, wl, wh, outl = box_stats(vals)
            out.append(ScaleDistribution(name, cat.value, len(vals), q25, q50, q75, wl, wh, outl))
    return out


# --- association -------------------------------------------------------------


@dataclass
class Association:
    feature: str
    cramers_v: float | None
    chi_square: float | None
    n: int
    excluded_na: int
    dropped_levels: list = field(default_factory=list)
    note: str = ""


def categorical_variables(schema: Sequence[FieldSpec] = FEATURE_SCHEMA) -> list[str]:
    """Names of the categorical variables, with the element list exploded to ``element:<name>``."""
    out = []
    for spec in schema:
        if spec.kind in (Kind.ENUM, Kind.BOOL):
            out.append(spec.name)
        elif spec.kind is Kind.MULTI:
            out.extend(f"{spec.name}:{v}" for v in spec.values)
    return out


def variable_value(features: FacadeFeatures, variable: str):
    if ":" in variable:
        name, element = variable.split(":", 1)
        return element in features[name]
    return features[variable]


def association_table(
    features: Sequence[FacadeFeatures],
    labels: Mapping[str, HeritageTarget],
    variables: Sequence[str] | None = None,
) -> list[Association]:
    """Cramér's V of each categorical variable against the heritage category.

    N/A answers are left out and counted; variables that collapse to a single
    level or category after pruning get ``None`` with a note.
    """
    variables = categorical_variables() if variables is None else variables
    labelled = [(f, HeritageTarget(labels[f.building_id])) for f in features if labels.get(f.building_id) is not None]
    out = []
    for var in variables:
        pairs, na = [], 0
        for f, lab in labelled:
            v = variable_value(f, var)
            if v == NA:
                na += 1
                continue
            pairs.append((v, lab.value))
        spec = SCHEMA_BY_NAME.get(var.split(":", 1)[0])
        if spec is not None and spec.kind is Kind.ENUM:
            rows = spec.values
        else:
            rows = (False, True)
        table = ContingencyTable.from_pairs(pairs, rows=rows, cols=[c.value for c in TARGET_CLASSES])
        pruned, dropped_r, dropped_c = table.pruned()
        note = ""
        if dropped_r or dropped_c:
            note = f"pruned empty levels {[_label(x) for x in dropped_r + dropped_c]}"
        if min(pruned.shape) < 2:
            out.append(Association(var, None, None, pruned.n, na, dropped_r + dropped_c, "degenerate table"))
            continue
        out.append(Association(var, cramers_v(pruned), chi_square(pruned), pruned.n, na, dropped_r + dropped_c, note))
    return out


# --- writers -----------------------------------------------------------------


def write_csv(rows: Sequence[Mapping[str, Any]], path: str | Path, columns: Sequence[str]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(columns), extrasaction="ignore")
        w.writeheader()
        for r in rows:
            w.writerow({k: ("" if r.get(k) is None else r.get(k)) for k in columns})


def write_json(obj: Any, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True, ensure_ascii=False, default=_jsonable)
        fh.write("\n")


def _jsonable(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, tuple):
        return list(o)
    raise TypeError(f"{type(o).__name__} is not JSON serialisable")


ASSOCIATION_COLUMNS = ("feature", "cramers_v", "chi_square", "n", "excluded_na", "note")
DISTRIBUTION_COLUMNS = (
    "feature", "category", "n", "q25", "q50", "q75", "whisker_low", "whisker_high", "n_outliers",
)  # fmt: skip


def association_rows(assocs: Sequence[Association]) -> list[dict]:
    return [{k: getattr(a, k) for k in ASSOCIATION_COLUMNS} for a in assocs]


def distribution_rows(dists: Sequence[ScaleDistribution]) -> list[dict]:
    return [{**{k: getattr(d, k) for k in DISTRIBUTION_COLUMNS[:-1]}, "n_outliers": len(d.outliers)} for d in dists]
