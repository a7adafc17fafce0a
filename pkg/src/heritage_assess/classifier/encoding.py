"""Turn validated facade features and register attributes into a numeric design matrix."""

from __future__ import annotations

import hashlib
import logging
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from ..geo_ingest import DEFAULT_ERA_SCHEME, TARGET_CLASSES, BuildingType, EraScheme, HeritageTarget, assign_era
from ..llm.parsing import STRICT, FacadeFeatures, validate_values
from ..llm.schema import FEATURE_SCHEMA, FieldSpec, Kind

logger = logging.getLogger(__name__)

NUMERIC = "numeric"
BINARY = "binary"
INDICATOR = "indicator"

F = "F"
F_REGISTER = "F+cp+cy+t"
REGISTER = "cp+cy+t"
FEATURE_SETS = (F, F_REGISTER, REGISTER)

REGISTER_PREFIX = "register:"


class EncodingError(ValueError):
    pass


@dataclass(frozen=True)
class Column:
    name: str
    kind: str
    from_register: bool = False


@dataclass(frozen=True)
class RegisterInfo:
    construction_year: int | None
    construction_period: str | None
    building_type: BuildingType


@dataclass(frozen=True)
class FeatureMatrix:
    X: np.ndarray
    y: np.ndarray  # class indices into TARGET_CLASSES
    columns: tuple[Column, ...]
    building_ids: tuple[str, ...]
    feature_set: str = F

    def __post_init__(self):
        X = np.ascontiguousarray(self.X, dtype=np.float64)
        y = np.ascontiguousarray(self.y, dtype=np.int64)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)
        if X.ndim != 2 or X.shape[0] != y.shape[0] or X.shape[0] != len(self.building_ids):
            raise EncodingError("matrix, target and id lengths disagree")
        if X.shape[1] != len(self.columns):
            raise EncodingError("column metadata does not match matrix width")
        names = self.names
        if len(set(names)) != len(names):
            raise EncodingError("column names must be unique")
        if y.size and (y.min() < 0 or y.max() >= len(TARGET_CLASSES)):
            raise EncodingError("target index out of range")

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(c.name for c in self.columns)

    @property
    def n_rows(self) -> int:
        return self.X.shape[0]

    def subset(self, rows) -> "FeatureMatrix":
        rows = np.asarray(rows, dtype=np.int64)
        return FeatureMatrix(self.X[rows], self.y[rows], self.columns, tuple(self.building_ids[i] for i in rows), self.feature_set)

    def aligned(self, names: Sequence[str]) -> np.ndarray:
        """Columns reordered to ``names``; raises if any is missing."""
        pos = {n: i for i, n in enumerate(self.names)}
        missing = [n for n in names if n not in pos]
        if missing:
            raise EncodingError(f"matrix lacks columns the model was trained on: {missing[:5]}")
        return self.X[:, [pos[n] for n in names]]

    def digest(self) -> str:
        h = hashlib.sha256()
        h.update(self.X.tobytes())
        h.update(self.y.tobytes())
        h.update("\x1f".join(self.names).encode())
        h.update("\x1f".join(self.building_ids).encode())
        return h.hexdigest()[:16]


def schema_columns(schema: Sequence[FieldSpec] = FEATURE_SCHEMA) -> list[Column]:
    cols = []
    for spec in schema:
        if spec.kind.numeric:
            cols.append(Column(spec.name, NUMERIC))
        elif spec.kind is Kind.BOOL:
            cols.append(Column(spec.name, BINARY))
        elif spec.kind is Kind.ENUM:
            cols.extend(Column(f"{spec.name}={v}", INDICATOR) for v in spec.levels)
        else:
            cols.extend(Column(f"{spec.name}={v}", INDICATOR) for v in spec.values)
    return cols


def register_columns(scheme: EraScheme = DEFAULT_ERA_SCHEME) -> list[Column]:
    cols = [Column(f"{REGISTER_PREFIX}construction_year", NUMERIC, True)]
    cols += [Column(f"{REGISTER_PREFIX}construction_period={e}", INDICATOR, True) for e in scheme.labels]
    cols += [Column(f"{REGISTER_PREFIX}building_type={t.value}", INDICATOR, True) for t in BuildingType]
    return cols


def _encode_features(f: FacadeFeatures, schema: Sequence[FieldSpec]) -> list[float]:
    values, report = validate_values(f.response_dict(), schema, STRICT)
    if values is None:
        raise EncodingError(f"record {f.building_id!r} fails schema validation: {report.fields}")
    row: list[float] = []
    for spec in schema:
        v = values[spec.name]
        if spec.kind.numeric:
            row.append(float(v))
        elif spec.kind is Kind.BOOL:
            row.append(1.0 if v else 0.0)
        elif spec.kind is Kind.ENUM:
            row.extend(1.0 if v == level else 0.0 for level in spec.levels)
        else:
            row.extend(1.0 if level in v else 0.0 for level in spec.values)
    return row


def _encode_register(r: RegisterInfo, scheme: EraScheme) -> list[float]:
    period = r.construction_period or assign_era(r.construction_year, scheme)
    if period not in scheme.labels:
        raise EncodingError(f"construction period {period!r} is not in the era scheme")
    row = [float(r.construction_year)]
    row += [1.0 if period == e else 0.0 for e in scheme.labels]
    row += [1.0 if BuildingType(r.building_type) is t else 0.0 for t in BuildingType]
    return row


def encode(
    features: Sequence[FacadeFeatures] | Mapping[str, FacadeFeatures] | None,
    labels: Mapping[str, HeritageTarget],
    register: Mapping[str, RegisterInfo] | None = None,
    feature_set: str = F,
    schema: Sequence[FieldSpec] = FEATURE_SCHEMA,
    scheme: EraScheme = DEFAULT_ERA_SCHEME,
) -> FeatureMatrix:
    """Build the design matrix for one feature set.

    Rows are buildings that have a heritage label and whatever inputs the
    feature set needs, sorted by building id. Rows missing a required
    register year are dropped with a warning.
    """
    if feature_set not in FEATURE_SETS:
        raise EncodingError(f"unknown feature set {feature_set!r}; expected one of {FEATURE_SETS}")
    use_llm = feature_set != REGISTER
    use_register = feature_set != F
    if isinstance(features, Mapping):
        by_id = dict(features)
    else:
        by_id = {}
        for f in features or ():
            by_id.setdefault(f.building_id, f)
    if use_llm and features is None:
        raise EncodingError(f"feature set {feature_set} needs LLM features")
    if use_register and register is None:
        raise EncodingError(f"feature set {feature_set} needs register columns")
    ids = sorted(labels) if not use_llm else sorted(b for b in by_id if b in labels)
    if use_register:
        present = [b for b in ids if b in register]
        if len(present) < len(ids):
            logger.warning("%d labelled building(s) have no register entry", len(ids) - len(present))
        ids = present
        complete = [b for b in ids if register[b].construction_year is not None]
        if len(complete) < len(ids):
            logger.warning("dropping %d row(s) without a register construction year", len(ids) - len(complete))
        ids = complete
    ids = [b for b in ids if labels[b] is not None]

    columns: list[Column] = []
    if use_llm:
        columns += schema_columns(schema)
    if use_register:
        columns += register_columns(scheme)
    class_index = {c: i for i, c in enumerate(TARGET_CLASSES)}
    rows, y = [], []
    for b in ids:
        row: list[float] = []
        if use_llm:
            row += _encode_features(by_id[b], schema)
        if use_register:
            row += _encode_register(register[b], scheme)
        rows.append(row)
        y.append(class_index[HeritageTarget(labels[b])])
    X = np.array(rows, dtype=np.float64).reshape(len(rows), len(columns))
    return FeatureMatrix(X, np.array(y, dtype=np.int64), tuple(columns), tuple(ids), feature_set)
