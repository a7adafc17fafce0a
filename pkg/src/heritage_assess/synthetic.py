"""A seeded toy city for offline end-to-end runs.

A latent heritage class per building drives its construction year and the
facade features a replayed "LLM" reports, so downstream models have a known
amount of signal to find. Nothing here models Stockholm; the layout is a
street grid with one row of rectangular buildings north of each street.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .geo_ingest import (
    BuildingRecord,
    BuildingType,
    HeritageTarget,
    RawHeritageCategory,
    RoadSegment,
    assign_era,
    dump_buildings,
    dump_roads,
)
from .llm.backends import random_features
from .llm.schema import STYLES

CLASS_PRIOR = {HeritageTarget.HIGH: 0.25, HeritageTarget.MEDIUM: 0.30, HeritageTarget.LOW: 0.45}
YEAR_BY_CLASS = {HeritageTarget.HIGH: (1885, 45), HeritageTarget.MEDIUM: (1915, 35), HeritageTarget.LOW: (1955, 35)}
LEVEL = {HeritageTarget.HIGH: 2, HeritageTarget.MEDIUM: 1, HeritageTarget.LOW: 0}

# fields whose reported value shifts with the latent class
SIGNAL_FIELDS = (
    "culture_historical", "aesthetic", "facade_decoration", "architectural_integrity",
    "rarity", "representative_time", "complexity",
)  # fmt: skip

_STYLE_BY_PERIOD = (
    (1700, ("barock", "rokoko")),
    (1800, ("klassicism", "rokoko")),
    (1880, ("nyklassicism", "nygotik", "klassicism")),
    (1920, ("nyrenässans", "sekelskifte", "nationalromantik", "jugend", "nyrbarock")),
    (1945, ("nyklassicism", "funktionalism")),
    (1975, ("funktionalism", "brutalism")),
    (2100, ("postmodernism", "nyfunktionalism", "high-tech")),
)
_ORNATE = ("nationalromantik", "jugend", "nyrenässans", "nybarock", "nygotik")


@dataclass
class SyntheticWorld:
    buildings: list[BuildingRecord]
    roads: list[RoadSegment]
    latent: dict[str, HeritageTarget]
    responses: dict[str, str]
    seed: int = 0
    invalid: list[str] = field(default_factory=list)

    @property
    def inventory(self) -> dict[str, RawHeritageCategory]:
        return {b.id: b.heritage_raw for b in self.buildings}

    def write(self, directory: str | Path) -> dict[str, Path]:
        d = Path(directory)
        d.mkdir(parents=True, exist_ok=True)
        paths = {
            "buildings": d / "buildings.geojson",
            "roads": d / "roads.geojson",
            "inventory": d / "inventory.csv",
            "responses": d / "responses.jsonl",
        }
        dump_buildings(self.buildings, paths["buildings"], crs="EPSG:3006")
        dump_roads(self.roads, paths["roads"], crs="EPSG:3006")
        with paths["inventory"].open("w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["building_id", "category"])
            for b in self.buildings:
                w.writerow([b.id, b.heritage_raw.value])
        write_responses(self.responses, paths["responses"])
        return paths


def write_responses(responses: dict[str, str], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for bid in sorted(responses):
            fh.write(json.dumps({"building_id": bid, "response": responses[bid]}, ensure_ascii=False) + "\n")


def _style(year: int, cls: HeritageTarget, rng: np.random.Generator, signal: float) -> str:
    for end, options in _STYLE_BY_PERIOD:
        if year < end:
            break
    if signal > 0 and cls is HeritageTarget.HIGH and rng.random() < 0.5 * signal:
        options = _ORNATE
    if rng.random() < 0.15:
        options = STYLES
    return options[int(rng.integers(len(options)))]


def facade_response(
    cls: HeritageTarget,
    year: int,
    floors: int,
    rng: np.random.Generator,
    signal: float = 1.0,
) -> dict:
    """A schema-valid feature dict whose informative fields depend on the class.

    ``signal = 0`` gives features independent of both class and year.
    """
    feats = random_features(rng)
    if signal <= 0:
        return feats
    feats["construction_year"] = int(np.clip(round(year + rng.normal(0, 20)), 1000, 2024))
    feats["style"] = _style(feats["construction_year"], cls, rng, signal)
    feats["floor_number"] = int(floors)
    feats["landmark"] = bool(rng.random() < (0.25 if cls is HeritageTarget.HIGH else 0.03))
    for name in SIGNAL_FIELDS:
        mean = 35 + 18 * signal * LEVEL[cls]
        feats[name] = int(np.clip(round(rng.normal(mean, 15)), 1, 100))
    return feats


def generate_world(
    n_buildings: int = 300,
    seed: int = 0,
    signal: float = 1.0,
    hatched_fraction: float = 0.05,
    invalid_fraction: float = 0.0,
    per_street: int = 20,
) -> SyntheticWorld:
    rng = np.random.default_rng(seed)
    classes = list(CLASS_PRIOR)
    probs = np.array([CLASS_PRIOR[c] for c in classes])
    n_streets = -(-n_buildings // per_street)
    roads = [
        RoadSegment(f"r{j:03d}", ((-20.0, 60.0 * j), (30.0 * per_street + 20.0, 60.0 * j)))
        for j in range(n_streets)
    ]
    buildings, latent, responses, invalid = [], {}, {}, []
    for k in range(n_buildings):
        j, i = divmod(k, per_street)
        bid = f"b{k:05d}"
        cls = classes[int(rng.choice(len(classes), p=probs))]
        mu, sd = YEAR_BY_CLASS[cls]
        year = int(np.clip(round(rng.normal(mu, sd)), 1600, 2023))
        floors = int(rng.integers(2, 8))
        width = float(rng.integers(14, 23))
        depth = float(rng.integers(10, 17))
        x0 = 30.0 * i + float(rng.integers(0, 5))
        y0 = 60.0 * j + float(rng.integers(6, 13))
        ring = ((x0, y0), (x0 + width, y0), (x0 + width, y0 + depth), (x0, y0 + depth))
        if rng.random() < hatched_fraction:
            raw = RawHeritageCategory.HATCHED
        elif cls is HeritageTarget.HIGH:
            raw = RawHeritageCategory.BLUE if rng.random() < 0.3 else RawHeritageCategory.GREEN
        elif cls is HeritageTarget.MEDIUM:
            raw = RawHeritageCategory.YELLOW
        else:
            raw = RawHeritageCategory.GREY
        btype = BuildingType.MULTI_FAMILY if rng.random() < 0.8 else BuildingType.NON_RESIDENTIAL
        buildings.append(
            BuildingRecord(
                id=bid,
                footprint=ring,
                building_type=btype,
                address=f"Syntetgatan {j + 1}:{i + 1}",
                construction_year=year,
                construction_period=assign_era(year),
                floors=floors,
                heritage_raw=raw,
            )
        )
        latent[bid] = cls
        feats = facade_response(cls, year, floors, rng, signal)
        if rng.random() < invalid_fraction:
            feats["style"] = "artdeco"
            invalid.append(bid)
        responses[bid] = json.dumps(feats, ensure_ascii=False)
    return SyntheticWorld(buildings, roads, latent, responses, seed, invalid)
