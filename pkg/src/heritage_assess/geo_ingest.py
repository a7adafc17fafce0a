"""Loading and validation of building footprints, roads and inventory labels.

Input files are GeoJSON-style FeatureCollections in projected metre
coordinates. The CRS name is carried through in the top-level ``crs`` member
and is never used for reprojection.
"""

from __future__ import annotations

import bisect
import csv
import enum
import json
import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

from .geometry import Point, is_simple, signed_area

logger = logging.getLogger(__name__)

YEAR_MIN = 1000
YEAR_MAX = 2100


class GeoDataError(ValueError):
    """Base class for input data problems."""


class FeatureParseError(GeoDataError):
    def __init__(self, path, index, message):
        self.path = str(path)
        self.index = index
        super().__init__(f"{path}: feature {index}: {message}")


class InvariantViolation(GeoDataError):
    def __init__(self, path, rejections):
        self.path = str(path)
        self.rejections = list(rejections)
        ids = ", ".join(r.feature_id for r in self.rejections)
        super().__init__(f"{path}: invalid features: {ids}")


class BuildingType(str, enum.Enum):
    MULTI_FAMILY = "multi_family"
    NON_RESIDENTIAL = "non_residential"


class RawHeritageCategory(str, enum.Enum):
    BLUE = "blue"
    GREEN = "green"
    YELLOW = "yellow"
    GREY = "grey"
    HATCHED = "hatched"


class HeritageTarget(str, enum.Enum):
    HIGH = "high"
    MEDIUM = "medium"
    LOW = "low"


# class index order used by every model and report
TARGET_CLASSES: tuple[HeritageTarget, ...] = (
    HeritageTarget.HIGH,
    HeritageTarget.MEDIUM,
    HeritageTarget.LOW,
)

_HERITAGE_MAP = {
    RawHeritageCategory.BLUE: HeritageTarget.HIGH,
    RawHeritageCategory.GREEN: HeritageTarget.HIGH,
    RawHeritageCategory.YELLOW: HeritageTarget.MEDIUM,
    RawHeritageCategory.GREY: HeritageTarget.LOW,
    RawHeritageCategory.HATCHED: None,
}


def map_heritage(raw: RawHeritageCategory | str) -> HeritageTarget | None:
    """Harmonise a Stockholm inventory colour to high/medium/low.

    Hatched (unclassified) buildings map to ``None`` and are left out of
    training and evaluation.
    """
    return _HERITAGE_MAP[RawHeritageCategory(raw)]


@dataclass(frozen=True)
class EraScheme:
    breakpoints: tuple[int, ...]
    labels: tuple[str, ...]

    def __post_init__(self):
        bp = tuple(int(b) for b in self.breakpoints)
        object.__setattr__(self, "breakpoints", bp)
        object.__setattr__(self, "labels", tuple(str(label) for label in self.labels))
        if any(b1 <= b0 for b0, b1 in zip(bp, bp[1:])):
            raise ValueError(f"era breakpoints must be strictly increasing: {bp}")
        if len(self.labels) != len(bp) + 1:
            raise ValueError("an era scheme needs exactly one label per bucket (len(breakpoints) + 1)")
        if len(set(self.labels)) != len(self.labels):
            raise ValueError("era labels must be unique")

    @classmethod
    def from_breakpoints(cls, breakpoints: Sequence[int]) -> "EraScheme":
        """Build a scheme with labels like ``pre-1700``, ``1700-1879``, ``2005-``."""
        bp = [int(b) for b in breakpoints]
        if not bp:
            return cls((), ("all",))
        labels = [f"pre-{bp[0]}"]
        labels += [f"{a}-{b - 1}" for a, b in zip(bp, bp[1:])]
        labels.append(f"{bp[-1]}-")
        return cls(tuple(bp), tuple(labels))


DEFAULT_ERA_SCHEME = EraScheme.from_breakpoints([1700, 1880, 1920, 1945, 1975, 1990, 2005])


def assign_era(year: int, scheme: EraScheme = DEFAULT_ERA_SCHEME) -> str:
    """Label of the bucket holding ``year``; a breakpoint year opens the later bucket."""
    if isinstance(year, bool) or not isinstance(year, (int, float)) or not math.isfinite(year):
        raise ValueError(f"year must be a number, got {year!r}")
    if not YEAR_MIN <= year <= YEAR_MAX:
        raise ValueError(f"year {year} outside [{YEAR_MIN}, {YEAR_MAX}]")
    return scheme.labels[bisect.bisect_right(scheme.breakpoints, year)]


@dataclass(frozen=True)
class BuildingRecord:
    id: str
    footprint: tuple[Point, ...]
    building_type: BuildingType
    address: str = ""
    construction_year: int | None = None
    construction_period: str | None = None
    floors: int | None = None
    heritage_raw: RawHeritageCategory | None = None

    @property
    def heritage_target(self) -> HeritageTarget | None:
        return None if self.heritage_raw is None else map_heritage(self.heritage_raw)


@dataclass(frozen=True)
class RoadSegment:
    id: str
    centerline: tuple[Point, ...]


@dataclass(frozen=True)
class Rejection:
    feature_id: str
    index: int
    reason: str


@dataclass
class FeatureCollection:
    features: list[dict]
    crs: str | None = None


def footprint_problems(ring: Sequence[Point]) -> list[str]:
    problems = []
    distinct = {tuple(p) for p in ring}
    if len(distinct) < 3:
        problems.append("footprint needs at least 3 distinct vertices")
        return problems
    if any(ring[i] == ring[(i + 1) % len(ring)] for i in range(len(ring))):
        problems.append("footprint has repeated consecutive vertices")
    if abs(signed_area(ring)) <= 1e-12:
        problems.append("footprint has zero area")
    if not is_simple(ring):
        problems.append("footprint is self-intersecting")
    return problems


def _read_collection(path: Path) -> FeatureCollection:
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"no such file: {path}")
    text = path.read_text(encoding="utf-8")
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise GeoDataError(f"{path}: invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    if not isinstance(doc, dict) or doc.get("type") != "FeatureCollection":
        raise GeoDataError(f"{path}: expected a FeatureCollection")
    features = doc.get("features")
    if not isinstance(features, list):
        raise GeoDataError(f"{path}: 'features' must be a list")
    crs = None
    if isinstance(doc.get("crs"), dict):
        crs = doc["crs"].get("properties", {}).get("name")
    return FeatureCollection(features, crs)


def _coords(raw: Any, index: int, path: Path) -> tuple[Point, ...]:
    try:
        pts = tuple((float(x), float(y)) for x, y, *_ in raw)
    except (TypeError, ValueError) as exc:
        raise FeatureParseError(path, index, f"bad coordinates ({exc})") from exc
    if not all(math.isfinite(v) for p in pts for v in p):
        raise FeatureParseError(path, index, "non-finite coordinate")
    return pts


def _optional_int(props: Mapping, key: str, index: int, path: Path) -> int | None:
    value = props.get(key)
    if value is None:
        return None
    if isinstance(value, bool) or not isinstance(value, (int, float)) or int(value) != value:
        raise FeatureParseError(path, index, f"{key} must be an integer, got {value!r}")
    return int(value)


def _parse_building(feat: Any, index: int, path: Path) -> tuple[str, BuildingRecord | None, list[str]]:
    if not isinstance(feat, dict) or feat.get("type") != "Feature":
        raise FeatureParseError(path, index, "not a GeoJSON Feature")
    props = feat.get("properties") or {}
    geom = feat.get("geometry") or {}
    fid = props.get("id", feat.get("id"))
    if fid is None:
        raise FeatureParseError(path, index, "missing id")
    fid = str(fid)
    if geom.get("type") != "Polygon" or not geom.get("coordinates"):
        raise FeatureParseError(path, index, f"feature {fid}: geometry must be a Polygon")
    ring = list(_coords(geom["coordinates"][0], index, path))
    if len(ring) > 1 and ring[0] == ring[-1]:
        ring.pop()
    problems = footprint_problems(ring)

    year = _optional_int(props, "construction_year", index, path)
    if year is not None and not YEAR_MIN <= year <= YEAR_MAX:
        problems.append(f"construction_year {year} outside [{YEAR_MIN}, {YEAR_MAX}]")
    floors = _optional_int(props, "floors", index, path)
    if floors is not None and floors < 1:
        problems.append(f"floors must be >= 1, got {floors}")
    try:
        btype = BuildingType(props.get("building_type"))
    except ValueError:
        raise FeatureParseError(path, index, f"feature {fid}: unknown building_type {props.get('building_type')!r}")
    raw = props.get("heritage_raw")
    try:
        heritage = None if raw is None else RawHeritageCategory(str(raw).lower())
    except ValueError:
        raise FeatureParseError(path, index, f"feature {fid}: unknown heritage_raw {raw!r}")
    period = props.get("construction_period")
    if problems:
        return fid, None, problems
    rec = BuildingRecord(
        id=fid,
        footprint=tuple(ring),
        building_type=btype,
        address=str(props.get("address", "")),
        construction_year=year,
        construction_period=None if period is None else str(period),
        floors=floors,
        heritage_raw=heritage,
    )
    return fid, rec, []


def read_buildings(path: str | Path) -> tuple[list[BuildingRecord], list[Rejection]]:
    """Parse a building file, collecting invariant violations instead of raising."""
    path = Path(path)
    coll = _read_collection(path)
    records, rejections = [], []
    seen = set()
    for i, feat in enumerate(coll.features):
        fid, rec, problems = _parse_building(feat, i, path)
        if rec is not None and rec.id in seen:
            problems, rec = ["duplicate id"], None
        if rec is None:
            rejections.append(Rejection(fid, i, "; ".join(problems)))
            continue
        seen.add(rec.id)
        records.append(rec)
    for r in rejections:
        logger.warning("rejected building %s (feature %d): %s", r.feature_id, r.index, r.reason)
    return records, rejections


def load_buildings(path: str | Path) -> list[BuildingRecord]:
    """Load all buildings; raise :class:`InvariantViolation` naming every bad feature."""
    records, rejections = read_buildings(path)
    if rejections:
        raise InvariantViolation(path, rejections)
    return records


def read_roads(path: str | Path) -> tuple[list[RoadSegment], list[Rejection]]:
    path = Path(path)
    coll = _read_collection(path)
    roads, rejections = [], []
    for i, feat in enumerate(coll.features):
        if not isinstance(feat, dict) or feat.get("type") != "Feature":
            raise FeatureParseError(path, i, "not a GeoJSON Feature")
        props = feat.get("properties") or {}
        geom = feat.get("geometry") or {}
        fid = str(props.get("id", feat.get("id", f"road-{i}")))
        if geom.get("type") != "LineString":
            raise FeatureParseError(path, i, f"feature {fid}: geometry must be a LineString")
        pts = _coords(geom.get("coordinates") or [], i, path)
        if len(pts) < 2:
            rejections.append(Rejection(fid, i, "centerline needs at least 2 vertices"))
        elif any(a == b for a, b in zip(pts, pts[1:])):
            rejections.append(Rejection(fid, i, "centerline has repeated consecutive vertices"))
        else:
            roads.append(RoadSegment(fid, pts))
    return roads, rejections


def load_roads(path: str | Path) -> list[RoadSegment]:
    roads, rejections = read_roads(path)
    if rejections:
        raise InvariantViolation(path, rejections)
    return roads


def building_to_feature(rec: BuildingRecord) -> dict:
    ring = [list(p) for p in rec.footprint]
    ring.append(list(rec.footprint[0]))
    props: dict[str, Any] = {"id": rec.id, "building_type": rec.building_type.value, "address": rec.address}
    if rec.construction_year is not None:
        props["construction_year"] = rec.construction_year
    if rec.construction_period is not None:
        props["construction_period"] = rec.construction_period
    if rec.floors is not None:
        props["floors"] = rec.floors
    if rec.heritage_raw is not None:
        props["heritage_raw"] = rec.heritage_raw.value
    return {"type": "Feature", "properties": props, "geometry": {"type": "Polygon", "coordinates": [ring]}}


def road_to_feature(road: RoadSegment) -> dict:
    return {
        "type": "Feature",
        "properties": {"id": road.id},
        "geometry": {"type": "LineString", "coordinates": [list(p) for p in road.centerline]},
    }


def _write_collection(features: list[dict], path: Path, crs: str | None) -> None:
    doc: dict[str, Any] = {"type": "FeatureCollection"}
    if crs:
        doc["crs"] = {"type": "name", "properties": {"name": crs}}
    doc["features"] = features
    Path(path).write_text(json.dumps(doc, indent=1) + "\n", encoding="utf-8")


def dump_buildings(records: Iterable[BuildingRecord], path: str | Path, crs: str | None = None) -> None:
    _write_collection([building_to_feature(r) for r in records], Path(path), crs)


def dump_roads(roads: Iterable[RoadSegment], path: str | Path, crs: str | None = None) -> None:
    _write_collection([road_to_feature(r) for r in roads], Path(path), crs)


def load_inventory(path: str | Path) -> dict[str, RawHeritageCategory]:
    """Read a ``building_id,category`` CSV of raw inventory colours."""
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"no such file: {path}")
    out = {}
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or not {"building_id", "category"} <= set(reader.fieldnames):
            raise GeoDataError(f"{path}: inventory needs columns building_id, category")
        for line, row in enumerate(reader, start=2):
            try:
                out[row["building_id"]] = RawHeritageCategory(row["category"].strip().lower())
            except ValueError:
                raise GeoDataError(f"{path}: line {line}: unknown category {row['category']!r}") from None
    return out
