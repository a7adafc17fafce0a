"""Strict and lenient validation of LLM JSON responses against the feature schema."""

from __future__ import annotations

import json
import math
import unicodedata
from dataclasses import dataclass, field
from typing import Any, Iterator, Mapping, Sequence

from .schema import FEATURE_SCHEMA, NA, FieldSpec, Kind

STRICT = "strict"
LENIENT = "lenient"


class ResponseParseError(ValueError):
    """The response text is not a JSON object; ``offset`` is a UTF-8 byte offset."""

    def __init__(self, message: str, offset: int):
        self.offset = offset
        super().__init__(f"{message} (byte offset {offset})")


@dataclass(frozen=True)
class Issue:
    field: str
    reason: str  # missing | out-of-range | unknown-enum | illegal-N/A | wrong-type | unexpected-field | duplicate
    detail: str = ""
    coerced: bool = False


@dataclass
class ValidationReport:
    issues: list[Issue] = field(default_factory=list)

    @property
    def errors(self) -> list[Issue]:
        return [i for i in self.issues if not i.coerced]

    @property
    def coercions(self) -> list[Issue]:
        return [i for i in self.issues if i.coerced]

    @property
    def fields(self) -> list[str]:
        return sorted({i.field for i in self.errors})

    def __bool__(self):
        return bool(self.issues)

    def __iter__(self) -> Iterator[Issue]:
        return iter(self.issues)

    def to_json(self) -> list[dict]:
        return [vars(i).copy() for i in self.issues]


@dataclass(frozen=True)
class FacadeFeatures:
    """One validated value per schema field plus provenance."""

    values: Mapping[str, Any]
    building_id: str = ""
    camera_id: str = ""
    backend_id: str = ""
    model_params: Mapping[str, Any] = field(default_factory=dict)
    attempts: int = 1

    def __getitem__(self, name: str) -> Any:
        return self.values[name]

    def response_dict(self) -> dict:
        """The feature values as a JSON-ready dict in schema order."""
        out = {}
        for name, v in self.values.items():
            out[name] = list(v) if isinstance(v, tuple) else v
        return out

    def to_json(self) -> dict:
        return {
            "building_id": self.building_id,
            "camera_id": self.camera_id,
            "backend_id": self.backend_id,
            "model_params": dict(self.model_params),
            "attempts": self.attempts,
            "features": self.response_dict(),
        }

    @classmethod
    def from_json(cls, d: Mapping, schema: Sequence[FieldSpec] = FEATURE_SCHEMA) -> "FacadeFeatures":
        outcome = parse_response(json.dumps(d["features"], ensure_ascii=False), schema)
        if outcome.features is None:
            raise ValueError(f"stored features for {d.get('building_id')} fail validation: {outcome.report.fields}")
        return cls(
            outcome.features.values,
            building_id=d.get("building_id", ""),
            camera_id=d.get("camera_id", ""),
            backend_id=d.get("backend_id", ""),
            model_params=d.get("model_params", {}),
            attempts=d.get("attempts", 1),
        )


@dataclass
class ParseOutcome:
    features: FacadeFeatures | None
    report: ValidationReport

    @property
    def ok(self) -> bool:
        return self.features is not None


def _norm(s: str) -> str:
    return unicodedata.normalize("NFC", s).strip().casefold()


def _is_number(v: Any) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool) and math.isfinite(v)


def _is_integral(v: Any) -> bool:
    return _is_number(v) and float(v).is_integer()


def _numeric(spec: FieldSpec, v: Any, lenient: bool, issues: list[Issue]):
    integer = spec.kind in (Kind.YEAR, Kind.COUNT, Kind.POSITIVE)
    if lenient and isinstance(v, str):
        try:
            num = float(v.strip().rstrip("%"))
        except ValueError:
            num = None
        if num is not None and math.isfinite(num):
            issues.append(Issue(spec.name, "wrong-type", f"parsed number from string {v!r}", coerced=True))
            v = num
    if not _is_number(v):
        issues.append(Issue(spec.name, "wrong-type", f"expected a number, got {v!r}"))
        return None
    if integer and not isinstance(v, int):
        if lenient or float(v).is_integer():
            if not float(v).is_integer():
                issues.append(Issue(spec.name, "wrong-type", f"rounded {v!r} to an integer", coerced=True))
            v = int(math.floor(v + 0.5))
        else:
            issues.append(Issue(spec.name, "wrong-type", f"expected an integer, got {v!r}"))
            return None
    lo = spec.lo if spec.lo is not None else -math.inf
    hi = spec.hi if spec.hi is not None else math.inf
    if not lo <= v <= hi:
        if lenient:
            clamped = min(hi, max(lo, v))
            clamped = int(clamped) if isinstance(v, int) else float(clamped)
            issues.append(Issue(spec.name, "out-of-range", f"clamped {v!r} to {clamped!r}", coerced=True))
            return clamped
        issues.append(Issue(spec.name, "out-of-range", f"{v!r} not in [{spec.lo}, {spec.hi}]"))
        return None
    return v


def _boolean(spec: FieldSpec, v: Any, lenient: bool, issues: list[Issue]):
    if isinstance(v, bool):
        return v
    if lenient and isinstance(v, str) and _norm(v) in ("true", "yes", "false", "no"):
        issues.append(Issue(spec.name, "wrong-type", f"read boolean from string {v!r}", coerced=True))
        return _norm(v) in ("true", "yes")
    issues.append(Issue(spec.name, "wrong-type", f"expected true/false, got {v!r}"))
    return None


def _enum(spec: FieldSpec, v: Any, lenient: bool, issues: list[Issue]):
    if v is None and lenient and spec.allow_na:
        issues.append(Issue(spec.name, "wrong-type", "read null as N/A", coerced=True))
        return NA
    if not isinstance(v, str):
        issues.append(Issue(spec.name, "wrong-type", f"expected a category string, got {v!r}"))
        return None
    key = _norm(v)
    if key == _norm(NA):
        if spec.allow_na:
            return NA
        issues.append(Issue(spec.name, "illegal-N/A", "N/A is not an allowed answer for this field"))
        return None
    for level in spec.values:
        if _norm(level) == key:
            return level
    issues.append(Issue(spec.name, "unknown-enum", f"{v!r} is not one of the allowed categories"))
    return None


def _multi(spec: FieldSpec, v: Any, lenient: bool, issues: list[Issue]):
    if not isinstance(v, list):
        issues.append(Issue(spec.name, "wrong-type", f"expected a list, got {type(v).__name__}"))
        return None
    lookup = {_norm(level): level for level in spec.values}
    out: list[str] = []
    ok = True
    for item in v:
        level = lookup.get(_norm(item)) if isinstance(item, str) else None
        if level is None:
            if lenient:
                issues.append(Issue(spec.name, "unknown-enum", f"dropped {item!r}", coerced=True))
                continue
            issues.append(Issue(spec.name, "unknown-enum", f"{item!r} is not an allowed element"))
            ok = False
            continue
        if level in out:
            if lenient:
                issues.append(Issue(spec.name, "duplicate", f"dropped repeated {item!r}", coerced=True))
                continue
            issues.append(Issue(spec.name, "duplicate", f"{item!r} listed twice"))
            ok = False
            continue
        out.append(level)
    return tuple(out) if ok else None


_VALIDATORS = {
    Kind.BOOL: _boolean,
    Kind.ENUM: _enum,
    Kind.MULTI: _multi,
}


def validate_values(obj: Mapping[str, Any], schema: Sequence[FieldSpec] = FEATURE_SCHEMA, mode: str = STRICT):
    """Validate a decoded response object; returns ``(values or None, report)``."""
    if mode not in (STRICT, LENIENT):
        raise ValueError(f"unknown parse mode {mode!r}")
    lenient = mode == LENIENT
    issues: list[Issue] = []
    values: dict[str, Any] = {}
    failed = False
    for spec in schema:
        if spec.name not in obj:
            issues.append(Issue(spec.name, "missing", "field absent from response"))
            failed = True
            continue
        check = _VALIDATORS.get(spec.kind, _numeric)
        v = check(spec, obj[spec.name], lenient, issues)
        if v is None:
            failed = True
        else:
            values[spec.name] = v
    known = {s.name for s in schema}
    for extra in obj:
        if extra not in known:
            issues.append(Issue(extra, "unexpected-field", "not part of the schema", coerced=lenient))
            failed = failed or not lenient
    report = ValidationReport(issues)
    return (None if failed else values), report


def _strip_fence(text: str) -> str:
    t = text.strip()
    if t.startswith("```"):
        t = t.split("\n", 1)[1] if "\n" in t else ""
        if t.rstrip().endswith("```"):
            t = t.rstrip()[:-3]
    return t


def parse_response(text: str, schema: Sequence[FieldSpec] = FEATURE_SCHEMA, mode: str = STRICT) -> ParseOutcome:
    """Decode and validate an LLM reply.

    Strict mode requires a single JSON object with every field legal. Lenient
    mode also accepts a fenced code block, clamps out-of-range numbers, drops
    unknown ``elements`` entries and records each coercion in the report.
    Raises :class:`ResponseParseError` when the text is not a JSON object.
    """
    body = _strip_fence(text) if mode == LENIENT else text
    try:
        obj = json.loads(body)
    except json.JSONDecodeError as exc:
        offset = len(body[: exc.pos].encode("utf-8"))
        raise ResponseParseError(f"malformed JSON: {exc.msg}", offset) from None
    if not isinstance(obj, dict):
        raise ResponseParseError("response is not a JSON object", 0)
    values, report = validate_values(obj, schema, mode)
    return ParseOutcome(None if values is None else FacadeFeatures(values), report)
