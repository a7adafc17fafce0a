"""Camera shot planning for facade photography.

A footprint is generalised, cut into walls, and each wall midpoint is joined
to its closest road point. Sightlines that are obstructed, too long or too
oblique are dropped, duplicates are thinned, the survivors are snapped to
real panorama positions and checked again before a camera is emitted.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Iterable, Protocol, Sequence

from .geo_ingest import BuildingRecord, RoadSegment
from .geometry import (
    Point,
    angle_between_deg,
    closest_point_on_segment,
    heading_deg,
    is_simple,
    point_segment_distance,
    segment_enters_interior,
    signed_area,
)

logger = logging.getLogger(__name__)

FLOOR_HEIGHT_M = 3.0
# absorbs float noise so a sightline built at exactly the limit is kept
THRESHOLD_SLACK = 1e-9


class GeometryError(ValueError):
    pass


@dataclass(frozen=True)
class WallSegment:
    building_id: str
    wall_id: str
    start: Point
    end: Point
    midpoint: Point
    width_m: float
    outward_normal: Point


@dataclass(frozen=True)
class Sightline:
    wall: WallSegment
    camera_pos: Point
    length_m: float
    incidence_deg: float

    @property
    def heading_deg(self) -> float:
        """Camera heading: from the camera position toward the wall midpoint."""
        return heading_deg(self.camera_pos, self.wall.midpoint)


@dataclass(frozen=True)
class CameraPoint:
    building_id: str
    camera_id: str
    wall_id: str
    position: Point
    heading_deg: float
    pitch_deg: float
    fov_deg: float
    distance_m: float
    incidence_deg: float
    wall_width_m: float

    def to_json(self) -> dict:
        d = asdict(self)
        d["position"] = list(self.position)
        return d

    @classmethod
    def from_json(cls, d: dict) -> "CameraPoint":
        d = dict(d)
        d["position"] = tuple(d["position"])
        return cls(**d)


@dataclass(frozen=True)
class PlanRejection:
    building_id: str
    stage: str
    reason: str


@dataclass(frozen=True)
class PlannerParams:
    tolerance_m: float = 0.5
    max_len_m: float = 50.0
    perp_tol_deg: float = 3.0
    camera_height_m: float = 2.5
    fov_margin: float = 1.1
    fov_min_deg: float = 10.0
    fov_max_deg: float = 120.0
    default_floors: int = 1

    def __post_init__(self):
        if self.tolerance_m < 0 or self.max_len_m < 0 or self.perp_tol_deg < 0:
            raise ValueError("tolerances and limits must be non-negative")
        if not 0 < self.fov_min_deg <= self.fov_max_deg:
            raise ValueError("fov clamp must satisfy 0 < min <= max")
        if self.fov_margin <= 0:
            raise ValueError("fov margin must be positive")


class PanoramaProvider(Protocol):
    """Maps a requested camera point to the nearest available panorama position."""

    def nearest(self, point: Point) -> Point | None: ...


class IdentityProvider:
    """Every requested point has a panorama exactly there."""

    name = "identity"

    def nearest(self, point: Point) -> Point | None:
        return (float(point[0]), float(point[1]))


class GridProvider:
    """Panoramas sit on a square lattice; requests snap to the closest node.

    ``max_snap_m`` bounds the snapping distance; farther requests get ``None``.
    """

    name = "grid"

    def __init__(self, spacing_m: float = 10.0, origin: Point = (0.0, 0.0), max_snap_m: float | None = None):
        if spacing_m <= 0:
            raise ValueError("grid spacing must be positive")
        self.spacing_m = float(spacing_m)
        self.origin = (float(origin[0]), float(origin[1]))
        self.max_snap_m = max_snap_m

    def nearest(self, point: Point) -> Point | None:
        s, (ox, oy) = self.spacing_m, self.origin
        q = (ox + math.floor((point[0] - ox) / s + 0.5) * s, oy + math.floor((point[1] - oy) / s + 0.5) * s)
        if self.max_snap_m is not None and math.dist(q, point) > self.max_snap_m:
            return None
        return q


class UnavailableProvider:
    name = "unavailable"

    def nearest(self, point: Point) -> Point | None:
        return None


# ---------------------------------------------------------------------------
# footprint generalisation


def _dp_chain(pts: Sequence[Point], tolerance: float, critical: list | None = None) -> list[int]:
    """Douglas-Peucker over an open chain; returns kept indices (ends included).

    ``critical`` collects the farthest-vertex distance of every visited span.
    """
    keep = {0, len(pts) - 1}
    stack = [(0, len(pts) - 1)]
    while stack:
        lo, hi = stack.pop()
        best, best_i = -1.0, -1
        for i in range(lo + 1, hi):
            dist = point_segment_distance(pts[i], pts[lo], pts[hi])
            if dist > best:
                best, best_i = dist, i
        if best_i < 0:
            continue
        if critical is not None:
            critical.append(best)
        if best > tolerance:
            keep.add(best_i)
            stack.append((lo, best_i))
            stack.append((best_i, hi))
    return sorted(keep)


def _dp_ring(ring: Sequence[Point], tolerance: float, critical: list | None = None) -> list[Point]:
    n = len(ring)
    # the lexicographically smallest vertex and the vertex farthest from it are
    # both extreme points, so neither can be a removable collinear vertex
    a = min(range(n), key=lambda i: (ring[i][0], ring[i][1]))
    b = max(range(n), key=lambda i: math.dist(ring[a], ring[i]))
    rotated = [ring[(a + k) % n] for k in range(n)]
    split = (b - a) % n
    first = rotated[: split + 1]
    second = rotated[split:] + [rotated[0]]
    kept = [first[i] for i in _dp_chain(first, tolerance, critical)]
    kept += [second[i] for i in _dp_chain(second, tolerance, critical)[1:-1]]
    # keep the caller's starting vertex first when it survived
    start = ring[0]
    if start in kept:
        j = kept.index(start)
        kept = kept[j:] + kept[:j]
    return kept


def generalize_footprint(polygon: Sequence[Point], tolerance_m: float = 0.5) -> tuple[Point, ...]:
    """Douglas-Peucker simplification of a closed footprint ring.

    Tolerance 0 returns the input unchanged. If the simplified ring would
    self-intersect, the effective tolerance steps down through the split
    distances of the full recursion until the result is simple. Raises
    :class:`GeometryError` when fewer than 3 vertices (or no area) remain.
    """
    if tolerance_m < 0:
        raise ValueError("tolerance must be non-negative")
    ring = [(float(p[0]), float(p[1])) for p in polygon]
    if tolerance_m == 0 or len(ring) <= 3:
        return tuple(ring)
    out = _dp_ring(ring, tolerance_m)
    if len(out) < 3 or abs(signed_area(out)) <= 1e-12:
        raise GeometryError(f"simplification at tolerance {tolerance_m} collapses the footprint below 3 vertices")
    if is_simple(out):
        return tuple(out)
    critical: list[float] = []
    _dp_ring(ring, -1.0, critical)
    for tol in sorted({c for c in critical if c < tolerance_m}, reverse=True):
        out = _dp_ring(ring, tol)
        if len(out) >= 3 and is_simple(out):
            return tuple(out)
    return tuple(ring)


# ---------------------------------------------------------------------------
# walls and sightlines


def extract_walls(polygon: Sequence[Point], building_id: str = "") -> list[WallSegment]:
    """One wall per polygon edge, normals pointing away from the interior."""
    n = len(polygon)
    ccw = signed_area(polygon) > 0
    walls = []
    for i in range(n):
        a = tuple(map(float, polygon[i]))
        b = tuple(map(float, polygon[(i + 1) % n]))
        dx, dy = b[0] - a[0], b[1] - a[1]
        width = math.hypot(dx, dy)
        if width == 0:
            raise GeometryError(f"zero-length edge {i} in footprint {building_id!r}")
        normal = (dy / width, -dx / width) if ccw else (-dy / width, dx / width)
        mid = ((a[0] + b[0]) / 2, (a[1] + b[1]) / 2)
        walls.append(WallSegment(building_id, f"{building_id}/{i:03d}", a, b, mid, width, normal))
    return walls


def make_sightline(wall: WallSegment, camera_pos: Point) -> Sightline:
    v = (camera_pos[0] - wall.midpoint[0], camera_pos[1] - wall.midpoint[1])
    length = math.hypot(*v)
    # a camera sitting on the wall has no defined viewing direction
    incidence = 90.0 if length == 0 else angle_between_deg(v, wall.outward_normal)
    return Sightline(wall, (float(camera_pos[0]), float(camera_pos[1])), length, incidence)


def closest_road_point(p: Point, roads: Sequence[RoadSegment]) -> Point:
    best, best_d = None, math.inf
    for road in roads:
        pts = road.centerline
        for a, b in zip(pts, pts[1:]):
            q, _ = closest_point_on_segment(p, a, b)
            d = math.dist(p, q)
            if d < best_d:
                best, best_d = q, d
    return best


def build_sightlines(walls: Sequence[WallSegment], roads: Sequence[RoadSegment]) -> list[Sightline]:
    """Join every wall midpoint to the closest point over all road polylines."""
    if not roads:
        raise GeometryError("at least one road segment is required")
    return [make_sightline(w, closest_road_point(w.midpoint, roads)) for w in walls]


def _boxes_overlap(p: Point, q: Point, ring: Sequence[Point]) -> bool:
    xs = [v[0] for v in ring]
    ys = [v[1] for v in ring]
    return (
        min(p[0], q[0]) < max(xs)
        and max(p[0], q[0]) > min(xs)
        and min(p[1], q[1]) < max(ys)
        and max(p[1], q[1]) > min(ys)
    )


def is_obstructed(s: Sightline, footprints: Iterable[Sequence[Point]]) -> bool:
    p, q = s.wall.midpoint, s.camera_pos
    # a segment that cannot reach inside the ring's bounding box cannot enter its interior
    return any(_boxes_overlap(p, q, ring) and segment_enters_interior(p, q, ring) for ring in footprints)


def filter_sightlines(
    sightlines: Sequence[Sightline],
    all_buildings: Sequence[BuildingRecord | Sequence[Point]],
    max_len_m: float = 50.0,
    perp_tol_deg: float = 3.0,
) -> list[Sightline]:
    """Keep sightlines with length <= max_len_m, incidence <= perp_tol_deg and a clear view.

    A sightline is blocked when its open segment passes through the interior
    of any footprint, the building's own footprint included.
    """
    rings = [b.footprint if isinstance(b, BuildingRecord) else b for b in all_buildings]
    return [
        s
        for s in sightlines
        if s.length_m <= max_len_m + THRESHOLD_SLACK
        and s.incidence_deg <= perp_tol_deg + THRESHOLD_SLACK
        and not is_obstructed(s, rings)
    ]


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def select_best(sightlines: Sequence[Sightline]) -> list[Sightline]:
    """Shortest sightline per wall, then shortest per rounded heading per building."""
    per_wall: dict[str, Sightline] = {}
    for s in sightlines:
        cur = per_wall.get(s.wall.wall_id)
        if cur is None or s.length_m < cur.length_m:
            per_wall[s.wall.wall_id] = s
    groups: dict[tuple[str, int], Sightline] = {}
    for s in sorted(per_wall.values(), key=lambda s: s.wall.wall_id):
        key = (s.wall.building_id, _round_half_up(s.heading_deg) % 360)
        cur = groups.get(key)
        if cur is None or s.length_m < cur.length_m:
            groups[key] = s
    return sorted(groups.values(), key=lambda s: s.wall.wall_id)


# ---------------------------------------------------------------------------
# camera parameters


def compute_pitch(floors: int, distance_m: float, camera_height_m: float = 2.5) -> float:
    """Pitch in degrees that aims at the vertical middle of the facade."""
    if distance_m <= 0:
        raise ValueError("distance must be positive")
    if floors < 1:
        raise ValueError("floors must be >= 1")
    height = floors * FLOOR_HEIGHT_M
    return math.degrees(math.atan2(height / 2 - camera_height_m, distance_m))


def compute_fov(
    wall_width_m: float,
    distance_m: float,
    margin: float = 1.1,
    fov_min_deg: float = 10.0,
    fov_max_deg: float = 120.0,
) -> float:
    """Horizontal field of view covering the wall, widened by ``margin`` and clamped."""
    if wall_width_m <= 0 or distance_m <= 0:
        raise ValueError("wall width and distance must be positive")
    raw = math.degrees(2 * math.atan(wall_width_m / (2 * distance_m)))
    return min(fov_max_deg, max(fov_min_deg, raw * margin))


# ---------------------------------------------------------------------------
# composition


def plan_cameras(
    building: BuildingRecord,
    roads: Sequence[RoadSegment],
    all_buildings: Sequence[BuildingRecord],
    provider: PanoramaProvider,
    params: PlannerParams = PlannerParams(),
) -> tuple[list[CameraPoint], list[PlanRejection]]:
    """Plan the camera shots for one building.

    Returns the cameras and, when none survive, a rejection naming the stage
    that removed the last candidate.
    """
    bid = building.id

    def reject(stage, reason):
        return [], [PlanRejection(bid, stage, reason)]

    try:
        ring = generalize_footprint(building.footprint, params.tolerance_m)
    except GeometryError as exc:
        return reject("generalize", str(exc))
    walls = extract_walls(ring, bid)
    # the building blocks its own views through its generalised outline
    blockers = [ring if b.id == bid else b.footprint for b in all_buildings]
    if not any(b.id == bid for b in all_buildings):
        blockers.append(ring)
    candidates = build_sightlines(walls, roads)
    kept = filter_sightlines(candidates, blockers, params.max_len_m, params.perp_tol_deg)
    if not kept:
        return reject("filter", f"all {len(candidates)} sightlines obstructed, too long or oblique")
    best = select_best(kept)

    snapped = []
    for s in best:
        pos = provider.nearest(s.camera_pos)
        if pos is not None:
            snapped.append(make_sightline(s.wall, pos))
    if not snapped:
        return reject("snap", "no panorama available near any planned camera point")
    checked = filter_sightlines(snapped, blockers, params.max_len_m, params.perp_tol_deg)
    if not checked:
        return reject("recheck", "no snapped camera passes the sightline checks")

    floors = building.floors if building.floors is not None else params.default_floors
    cameras = []
    for s in checked:
        cameras.append(
            CameraPoint(
                building_id=bid,
                camera_id=s.wall.wall_id,
                wall_id=s.wall.wall_id,
                position=s.camera_pos,
                heading_deg=s.heading_deg,
                pitch_deg=compute_pitch(floors, s.length_m, params.camera_height_m),
                fov_deg=compute_fov(
                    s.wall.width_m, s.length_m, params.fov_margin, params.fov_min_deg, params.fov_max_deg
                ),
                distance_m=s.length_m,
                incidence_deg=s.incidence_deg,
                wall_width_m=s.wall.width_m,
            )
        )
    return cameras, []


def plan_all(
    buildings: Sequence[BuildingRecord],
    roads: Sequence[RoadSegment],
    provider: PanoramaProvider,
    params: PlannerParams = PlannerParams(),
) -> tuple[list[CameraPoint], list[PlanRejection]]:
    cameras, rejections = [], []
    for b in buildings:
        c, r = plan_cameras(b, roads, buildings, provider, params)
        cameras.extend(c)
        rejections.extend(r)
    return cameras, rejections


def write_cameras(cameras: Iterable[CameraPoint], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for c in cameras:
            fh.write(json.dumps(c.to_json(), sort_keys=True) + "\n")


def read_cameras(path: str | Path) -> list[CameraPoint]:
    with open(path, encoding="utf-8") as fh:
        return [CameraPoint.from_json(json.loads(line)) for line in fh if line.strip()]


def write_rejections(rejections: Iterable[PlanRejection], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for r in rejections:
            fh.write(json.dumps(asdict(r), sort_keys=True) + "\n")
