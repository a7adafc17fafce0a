"""The facade feature schema requested from, and validated against, the LLM.

This is the single authoritative field list: the prompt template, the
response parser and the classifier encoder all read from ``FEATURE_SCHEMA``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass


class Kind(str, enum.Enum):
    YEAR = "year"
    BOOL = "bool"
    SCALE = "scale"  # 1..100
    PERCENT = "percent"  # 0..100
    COUNT = "count"  # integer >= 0
    POSITIVE = "positive"  # integer >= 1
    ENUM = "enum"
    MULTI = "multi"

    @property
    def numeric(self) -> bool:
        return self in (Kind.YEAR, Kind.SCALE, Kind.PERCENT, Kind.COUNT, Kind.POSITIVE)


NA = "N/A"


@dataclass(frozen=True)
class FieldSpec:
    name: str
    kind: Kind
    lo: float | None = None
    hi: float | None = None
    values: tuple[str, ...] = ()
    allow_na: bool = False

    @property
    def levels(self) -> tuple[str, ...]:
        """Enum levels including the N/A level where admissible."""
        return self.values + ((NA,) if self.allow_na else ())


def _scale(name):
    return FieldSpec(name, Kind.SCALE, 1, 100)


STYLES = (
    "klassicism", "romansk", "gotik", "renässans", "barock", "rokoko", "nyklassicism",
    "nygotik", "nyrbarock", "nyrenässans", "nybarock", "sekelskifte", "nationalromantik",
    "jugend", "funktionalism", "brutalism", "high-tech", "postmodernism", "nyfunktionalism",
)  # fmt: skip
CONSTRUCTION_TECHNIQUES = (
    "stolpverkshus", "restimmerhus", "resvirkeshus", "plankhus", "landshövdingehus", "tegelhus",
    "tjockhus", "smalhus", "lamellhus", "punkthus", "skivhus", "burspråkshus",
)  # fmt: skip
ROOF_SHAPES = (
    "flat", "gabled", "skillion", "hipped", "gambrel", "pyramidal", "crosspitched",
    "sawtooth", "cone", "dome", "onion", "round", "mansard",
)  # fmt: skip
ROOF_MATERIALS = (
    "sheet metal", "concrete", "green", "clay", "copper", "wood", "straw", "slate",
    "bitumen", "glass", "asphalt",
)  # fmt: skip
ROOF_COLORS = ("red", "black", "brown", "green", "grey", "other")
FACADE_MATERIALS = ("brick", "concrete", "wood", "plaster", "stone", "metal", "glass")
FACADE_COLORS = ("red", "yellow", "white", "blue", "green", "black", "brown", "grey", "beige", "other")
WINDOW_SHAPES = ("round", "rectangular", "rounded", "square")
DOOR_TYPES = ("single", "double", "portal", "revolving", "dutch")
DOOR_MATERIALS = ("metal", "wood", "glass", "mixed", "other")
DOOR_SHAPES = ("rectangular", "arched")
ELEMENTS = (
    "balconies", "bay_windows", "dormers", "gable_peaks", "natural_stone_plinth",
    "half_timbered", "plaque", "gates", "colored_glass", "wood_shutters", "door_awning",
    "front_steps", "eave_decorations", "window_casings", "door_decorations",
    "recessed_doorway", "display_window", "decorative_moldings", "transom_window",
    "pilasters", "medallions", "columns", "cornice", "tympanum", "corbel", "pediment",
)  # fmt: skip

# field order follows the JSON dictionary of the default prompt
FEATURE_SCHEMA: tuple[FieldSpec, ...] = (
    FieldSpec("construction_year", Kind.YEAR, 1000, 2024),
    FieldSpec("famous_architect", Kind.BOOL),
    FieldSpec("landmark", Kind.BOOL),
    _scale("popularity"),
    _scale("state"),
    _scale("architectural_integrity"),
    _scale("rarity"),
    FieldSpec("style", Kind.ENUM, values=STYLES),
    FieldSpec("construction_technique", Kind.ENUM, values=CONSTRUCTION_TECHNIQUES),
    FieldSpec("roof_shape", Kind.ENUM, values=ROOF_SHAPES, allow_na=True),
    FieldSpec("roof_material", Kind.ENUM, values=ROOF_MATERIALS, allow_na=True),
    FieldSpec("roof_color", Kind.ENUM, values=ROOF_COLORS, allow_na=True),
    FieldSpec("facade_material", Kind.ENUM, values=FACADE_MATERIALS),
    FieldSpec("facade_color", Kind.ENUM, values=FACADE_COLORS),
    _scale("facade_decoration"),
    FieldSpec("window_area", Kind.PERCENT, 0, 100),
    FieldSpec("window_shape", Kind.ENUM, values=WINDOW_SHAPES, allow_na=True),
    FieldSpec("window_number", Kind.COUNT, 0),
    FieldSpec("window_avg_pane_number", Kind.POSITIVE, 1),
    FieldSpec("door_type", Kind.ENUM, values=DOOR_TYPES, allow_na=True),
    FieldSpec("door_material", Kind.ENUM, values=DOOR_MATERIALS, allow_na=True),
    FieldSpec("door_shape", Kind.ENUM, values=DOOR_SHAPES, allow_na=True),
    _scale("complexity"),
    _scale("symmetry"),
    FieldSpec("floor_number", Kind.POSITIVE, 1),
    FieldSpec("balcony_number", Kind.COUNT, 0),
    _scale("representative_time"),
    _scale("representative_place"),
    _scale("representative_culture"),
    _scale("emotional_reaction"),
    FieldSpec("elements", Kind.MULTI, values=ELEMENTS),
    _scale("culture_historical"),
    _scale("aesthetic"),
    _scale("social"),
    _scale("visibility_score"),
)

FIELD_NAMES: tuple[str, ...] = tuple(f.name for f in FEATURE_SCHEMA)
SCHEMA_BY_NAME: dict[str, FieldSpec] = {f.name: f for f in FEATURE_SCHEMA}
SCALE_FIELDS: tuple[str, ...] = tuple(f.name for f in FEATURE_SCHEMA if f.kind is Kind.SCALE)
