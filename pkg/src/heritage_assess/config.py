"""Pipeline configuration read from a TOML file and validated in one pass."""

from __future__ import annotations

import math
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib

from .camera_planner import GridProvider, IdentityProvider, PanoramaProvider, PlannerParams
from .classifier.data import SplitSpec
from .classifier.model import FAMILIES
from .classifier.search import DEFAULT_GRIDS
from .geo_ingest import DEFAULT_ERA_SCHEME, EraScheme
from .llm.backends import HttpChatBackend, LlmBackend, MockBackend, ModelParams, ReplayBackend
from .llm.parsing import LENIENT, STRICT

BACKENDS = ("http", "mock", "replay")
PROVIDERS = ("identity", "grid")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class Paths:
    buildings: Path
    roads: Path
    output: Path
    inventory: Path | None = None
    images: Path | None = None


@dataclass(frozen=True)
class ExtractionConfig:
    backend: str = "mock"
    params: ModelParams = field(default_factory=ModelParams)
    retry_limit: int = 2
    mode: str = STRICT
    inject_year: bool = False
    seed: int = 0
    replay_file: Path | None = None
    base_url: str = ""
    api_key_env: str = "OPENAI_API_KEY"
    timeout_s: float = 120.0

    def make_backend(self) -> LlmBackend:
        if self.backend == "mock":
            return MockBackend(self.seed)
        if self.backend == "replay":
            return ReplayBackend.from_file(self.replay_file)
        return HttpChatBackend(self.base_url, self.params.model, self.api_key_env, self.timeout_s)


@dataclass(frozen=True)
class CameraConfig:
    params: PlannerParams = field(default_factory=PlannerParams)
    provider: str = "identity"
    grid_spacing_m: float = 10.0
    max_snap_m: float | None = None

    def make_provider(self) -> PanoramaProvider:
        if self.provider == "grid":
            return GridProvider(self.grid_spacing_m, max_snap_m=self.max_snap_m)
        return IdentityProvider()


@dataclass(frozen=True)
class ModelsConfig:
    families: tuple[str, ...] = FAMILIES
    grids: Mapping[str, Mapping[str, list]] = field(default_factory=lambda: dict(DEFAULT_GRIDS))
    scenarios: tuple[str, ...] | None = None
    top_k: int = 10


@dataclass(frozen=True)
class PipelineConfig:
    paths: Paths
    camera: CameraConfig = field(default_factory=CameraConfig)
    extraction: ExtractionConfig = field(default_factory=ExtractionConfig)
    eras: EraScheme = DEFAULT_ERA_SCHEME
    split: SplitSpec = field(default_factory=SplitSpec)
    models: ModelsConfig = field(default_factory=ModelsConfig)
    source: Path | None = None


def _section(doc: Mapping, name: str) -> dict:
    sec = doc.get(name, {})
    if not isinstance(sec, dict):
        raise ConfigError(f"[{name}] must be a table")
    return dict(sec)


def _take(sec: dict, where: str, key: str, kind, default=None):
    if key not in sec:
        return default
    v = sec.pop(key)
    if kind is float and isinstance(v, int) and not isinstance(v, bool):
        v = float(v)
    if not isinstance(v, kind) or (kind in (int, float) and isinstance(v, bool)):
        raise ConfigError(f"{where}.{key} has the wrong type ({type(v).__name__})")
    return v


def _no_leftovers(sec: dict, where: str) -> None:
    if sec:
        raise ConfigError(f"unknown key(s) in [{where}]: {', '.join(sorted(sec))}")


def _nonneg(v: float, name: str) -> float:
    if not (math.isfinite(v) and v >= 0):
        raise ConfigError(f"{name} must be a non-negative number")
    return v


def _path(base: Path, v: str | None) -> Path | None:
    if v is None:
        return None
    p = Path(v)
    return p if p.is_absolute() else base / p


def parse_config(doc: Mapping[str, Any], base: Path = Path(".")) -> PipelineConfig:
    """Validate a decoded config document; relative paths resolve against ``base``."""
    unknown = set(doc) - {"paths", "camera", "extraction", "eras", "split", "models", "grids"}
    if unknown:
        raise ConfigError(f"unknown section(s): {', '.join(sorted(unknown))}")

    sec = _section(doc, "paths")
    for key in ("buildings", "roads", "output"):
        if key not in sec:
            raise ConfigError(f"paths.{key} is required")
    paths = Paths(
        buildings=_path(base, _take(sec, "paths", "buildings", str)),
        roads=_path(base, _take(sec, "paths", "roads", str)),
        output=_path(base, _take(sec, "paths", "output", str)),
        inventory=_path(base, _take(sec, "paths", "inventory", str)),
        images=_path(base, _take(sec, "paths", "images", str)),
    )
    _no_leftovers(sec, "paths")

    sec = _section(doc, "camera")
    defaults = PlannerParams()
    kw = {}
    for key in ("tolerance_m", "max_len_m", "perp_tol_deg", "camera_height_m", "fov_margin", "fov_min_deg", "fov_max_deg"):
        kw[key] = _nonneg(_take(sec, "camera", key, float, getattr(defaults, key)), f"camera.{key}")
    kw["default_floors"] = _take(sec, "camera", "default_floors", int, defaults.default_floors)
    try:
        planner = PlannerParams(**kw)
    except ValueError as exc:
        raise ConfigError(f"camera: {exc}") from None
    provider = _take(sec, "camera", "provider", str, "identity")
    if provider not in PROVIDERS:
        raise ConfigError(f"camera.provider must be one of {PROVIDERS}")
    spacing = _nonneg(_take(sec, "camera", "grid_spacing_m", float, 10.0), "camera.grid_spacing_m")
    max_snap = _take(sec, "camera", "max_snap_m", float)
    if max_snap is not None:
        _nonneg(max_snap, "camera.max_snap_m")
    if provider == "grid" and spacing <= 0:
        raise ConfigError("camera.grid_spacing_m must be positive")
    _no_leftovers(sec, "camera")
    camera = CameraConfig(planner, provider, spacing, max_snap)

    sec = _section(doc, "extraction")
    backend = _take(sec, "extraction", "backend", str, "mock")
    if backend not in BACKENDS:
        raise ConfigError(f"extraction.backend must be one of {BACKENDS}")
    if "api_key" in sec:
        raise ConfigError("API keys do not belong in the config; set the variable named by extraction.api_key_env")
    try:
        params = ModelParams(
            model=_take(sec, "extraction", "model", str, ModelParams.model),
            temperature=_take(sec, "extraction", "temperature", float, ModelParams.temperature),
            json_response=_take(sec, "extraction", "json_response", bool, True),
        )
    except ValueError as exc:
        raise ConfigError(f"extraction: {exc}") from None
    retry = _take(sec, "extraction", "retry_limit", int, 2)
    if retry < 0:
        raise ConfigError("extraction.retry_limit must be >= 0")
    mode = _take(sec, "extraction", "mode", str, STRICT)
    if mode not in (STRICT, LENIENT):
        raise ConfigError(f"extraction.mode must be {STRICT!r} or {LENIENT!r}")
    extraction = ExtractionConfig(
        backend=backend,
        params=params,
        retry_limit=retry,
        mode=mode,
        inject_year=_take(sec, "extraction", "inject_year", bool, False),
        seed=_take(sec, "extraction", "seed", int, 0),
        replay_file=_path(base, _take(sec, "extraction", "replay_file", str)),
        base_url=_take(sec, "extraction", "base_url", str, ""),
        api_key_env=_take(sec, "extraction", "api_key_env", str, "OPENAI_API_KEY"),
        timeout_s=_take(sec, "extraction", "timeout_s", float, 120.0),
    )
    if backend == "replay" and extraction.replay_file is None:
        raise ConfigError("extraction.replay_file is required for the replay backend")
    if backend == "http" and not extraction.base_url:
        raise ConfigError("extraction.base_url is required for the http backend")
    _no_leftovers(sec, "extraction")

    sec = _section(doc, "eras")
    eras = DEFAULT_ERA_SCHEME
    if sec:
        bp = _take(sec, "eras", "breakpoints", list)
        labels = _take(sec, "eras", "labels", list)
        _no_leftovers(sec, "eras")
        if bp is None:
            raise ConfigError("eras.breakpoints is required when [eras] is given")
        try:
            eras = EraScheme(tuple(bp), tuple(labels)) if labels is not None else EraScheme.from_breakpoints(bp)
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"eras: {exc}") from None

    sec = _section(doc, "split")
    try:
        split = SplitSpec(
            tuple(_take(sec, "split", "fractions", list, [0.8, 0.1, 0.1])),
            _take(sec, "split", "seed", int, 0),
        )
    except ValueError as exc:
        raise ConfigError(f"split: {exc}") from None
    _no_leftovers(sec, "split")

    sec = _section(doc, "models")
    families = tuple(_take(sec, "models", "families", list, list(FAMILIES)))
    bad = [f for f in families if f not in FAMILIES]
    if bad or not families:
        raise ConfigError(f"models.families must be drawn from {FAMILIES}, got {list(families)}")
    scenarios = _take(sec, "models", "scenarios", list)
    top_k = _take(sec, "models", "top_k", int, 10)
    _no_leftovers(sec, "models")

    grids = {k: dict(v) for k, v in DEFAULT_GRIDS.items()}
    gsec = _section(doc, "grids")
    for fam, override in gsec.items():
        if fam not in FAMILIES:
            raise ConfigError(f"[grids.{fam}] is not a model family")
        if not isinstance(override, dict):
            raise ConfigError(f"[grids.{fam}] must be a table")
        for key, values in override.items():
            if not isinstance(values, list) or not values:
                raise ConfigError(f"grids.{fam}.{key} must be a non-empty list")
            # TOML has no null; the string "none" stands for an unlimited depth
            grids[fam][key] = [None if v == "none" else v for v in values]
    models = ModelsConfig(families, grids, None if scenarios is None else tuple(scenarios), top_k)
    if models.scenarios is not None:
        from .evaluation import known_scenarios

        unknown = [s for s in models.scenarios if s not in known_scenarios(families)]
        if unknown:
            raise ConfigError(f"unknown scenario id(s): {unknown}")

    return PipelineConfig(paths, camera, extraction, eras, split, models)


def load_config(path: str | Path) -> PipelineConfig:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    try:
        doc = tomllib.loads(path.read_text(encoding="utf-8"))
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    cfg = parse_config(doc, path.parent)
    return PipelineConfig(cfg.paths, cfg.camera, cfg.extraction, cfg.eras, cfg.split, cfg.models, path)
