"""Prompt -> backend -> validated features, with retries and repeat-query statistics."""

from __future__ import annotations

import json
import logging
import math
from collections import Counter
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Iterable, Sequence

from .backends import BackendCall, LlmBackend, ModelParams
from .parsing import STRICT, FacadeFeatures, ResponseParseError, ValidationReport, parse_response
from .prompt import encode_image, render_prompt, with_construction_year
from .schema import FEATURE_SCHEMA, FieldSpec, Kind

logger = logging.getLogger(__name__)


class ExtractionFailed(RuntimeError):
    def __init__(self, building_id: str, attempts: int, report: ValidationReport | None, last_error: str = ""):
        self.building_id = building_id
        self.attempts = attempts
        self.report = report
        self.last_error = last_error
        fields = report.fields if report is not None else []
        super().__init__(
            f"extraction for {building_id!r} failed after {attempts} attempt(s)"
            + (f"; invalid fields: {', '.join(fields)}" if fields else "")
            + (f"; {last_error}" if last_error else "")
        )


@dataclass(frozen=True)
class ExtractionRequest:
    image: bytes
    address: str
    params: ModelParams = field(default_factory=ModelParams)
    retry_limit: int = 2

    def __post_init__(self):
        if not self.image:
            raise ValueError("image payload is empty")
        if self.retry_limit < 0:
            raise ValueError("retry_limit must be >= 0")


@dataclass(frozen=True)
class BuildingContext:
    building_id: str
    camera_id: str = ""
    construction_year: int | None = None


def build_call(
    request: ExtractionRequest,
    context: BuildingContext,
    template: str | None = None,
    inject_year: bool = False,
) -> BackendCall:
    prompt = render_prompt(request.address, template)
    if inject_year and context.construction_year is not None:
        prompt = with_construction_year(prompt, context.construction_year)
    return BackendCall(encode_image(request.image), prompt, request.params, context.building_id, context.camera_id)


def extract(
    request: ExtractionRequest,
    context: BuildingContext,
    backend: LlmBackend,
    schema: Sequence[FieldSpec] = FEATURE_SCHEMA,
    *,
    template: str | None = None,
    inject_year: bool = False,
    mode: str = STRICT,
) -> FacadeFeatures:
    """Query the backend until a response validates, at most ``retry_limit + 1`` times.

    Transport errors from the backend propagate immediately. Raises
    :class:`ExtractionFailed` carrying the last validation report when every
    attempt is rejected.
    """
    call = build_call(request, context, template, inject_year)
    report = None
    last_error = ""
    attempts = request.retry_limit + 1
    for attempt in range(1, attempts + 1):
        text = backend.complete(call)
        try:
            outcome = parse_response(text, schema, mode)
        except ResponseParseError as exc:
            report, last_error = None, str(exc)
            logger.info("attempt %d for %s: %s", attempt, context.building_id, exc)
            continue
        if outcome.ok:
            return replace(
                outcome.features,
                building_id=context.building_id,
                camera_id=context.camera_id,
                backend_id=getattr(backend, "name", type(backend).__name__),
                model_params=request.params.to_json(),
                attempts=attempt,
            )
        report, last_error = outcome.report, ""
        logger.info("attempt %d for %s rejected: %s", attempt, context.building_id, report.fields)
    raise ExtractionFailed(context.building_id, attempts, report, last_error)


@dataclass
class NumericStats:
    mean: float
    std: float
    n: int


@dataclass
class CategoricalStats:
    mode: Any
    agreement: float
    n: int


@dataclass
class ConsistencyReport:
    n_requested: int
    n_valid: int
    n_invalid: int
    numeric: dict[str, NumericStats]
    categorical: dict[str, CategoricalStats]

    def to_json(self) -> dict:
        def cat(v):
            return list(v) if isinstance(v, tuple) else v

        return {
            "n_requested": self.n_requested,
            "n_valid": self.n_valid,
            "n_invalid": self.n_invalid,
            "numeric": {k: vars(v) for k, v in self.numeric.items()},
            "categorical": {
                k: {"mode": cat(v.mode), "agreement": v.agreement, "n": v.n} for k, v in self.categorical.items()
            },
        }


def _mode(values: list) -> tuple[Any, float]:
    counts = Counter(values)
    top = max(counts.values())
    # ties resolve to the value seen first
    winner = next(v for v in values if counts[v] == top)
    return winner, top / len(values)


def consistency_run(
    request: ExtractionRequest,
    context: BuildingContext,
    n: int,
    backend: LlmBackend,
    schema: Sequence[FieldSpec] = FEATURE_SCHEMA,
    *,
    template: str | None = None,
    inject_year: bool = False,
) -> ConsistencyReport:
    """Ask the same question ``n`` times and summarise how much the answers move.

    Numeric fields get the mean and sample standard deviation; categorical
    fields get the modal answer and the share of responses agreeing with it.
    Calls are issued sequentially.
    """
    if n < 2:
        raise ValueError("consistency runs need n >= 2")
    call = build_call(request, context, template, inject_year)
    valid: list[FacadeFeatures] = []
    invalid = 0
    for _ in range(n):
        try:
            outcome = parse_response(backend.complete(call), schema, STRICT)
        except ResponseParseError:
            invalid += 1
            continue
        if outcome.ok:
            valid.append(outcome.features)
        else:
            invalid += 1
    if len(valid) < 2:
        raise ValueError(f"only {len(valid)} valid response(s) out of {n}; need at least 2")
    numeric, categorical = {}, {}
    for spec in schema:
        vals = [f[spec.name] for f in valid]
        if spec.kind.numeric:
            m = math.fsum(vals) / len(vals)
            var = math.fsum((v - m) ** 2 for v in vals) / (len(vals) - 1)
            numeric[spec.name] = NumericStats(m, math.sqrt(var), len(vals))
        else:
            if spec.kind is Kind.MULTI:
                vals = [tuple(sorted(v)) for v in vals]
            mode, agree = _mode(vals)
            categorical[spec.name] = CategoricalStats(mode, agree, len(vals))
    return ConsistencyReport(n, len(valid), invalid, numeric, categorical)


def write_features(records: Iterable[FacadeFeatures], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for r in records:
            fh.write(json.dumps(r.to_json(), ensure_ascii=False, sort_keys=True) + "\n")


def read_features(path: str | Path) -> list[FacadeFeatures]:
    with open(path, encoding="utf-8") as fh:
        return [FacadeFeatures.from_json(json.loads(line)) for line in fh if line.strip()]
