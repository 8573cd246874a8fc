"""Attribute schema: cuts, seasons, attribute/level definitions and coding.

Categorical attributes are effects coded: a K-level attribute produces K-1
columns, one per non-base level; the base level is -1 on every column so the
level effects sum to zero and stay orthogonal to the intercept.  Binary claim
attributes are the two-level special case (one +/-1 column).  Continuous
attributes pass through untransformed in their natural units.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .errors import SchemaError

EFFECTS = "effects_categorical"
BINARY = "binary_claim"
CONTINUOUS = "continuous"

KINDS = (EFFECTS, BINARY, CONTINUOUS)

#: column key used for the single coefficient of a continuous attribute
UNIT_COLUMN = "unit"


@dataclass(frozen=True)
class AttributeDef:
    """One product attribute: name, coding kind, and levels.

    ``levels`` are level identifiers for categorical/binary attributes (the
    base level is coded -1 on all columns).  Continuous attributes carry a
    ``unit`` label and optional ``design_levels`` used by the design
    generator; cut-specific level sets (price, weight) live on the schema.
    """

    name: str
    kind: str
    levels: tuple[str, ...] = ()
    base: str | None = None
    unit: str | None = None
    design_levels: tuple[float, ...] = ()

    def __post_init__(self):
        if self.kind not in KINDS:
            raise SchemaError(f"unknown attribute kind {self.kind!r} for {self.name!r}")
        if self.kind in (EFFECTS, BINARY):
            if len(self.levels) < 2:
                raise SchemaError(f"attribute {self.name!r} needs at least 2 levels")
            if self.kind == BINARY and len(self.levels) != 2:
                raise SchemaError(f"binary claim {self.name!r} must have exactly 2 levels")
            if self.base is None or self.base not in self.levels:
                raise SchemaError(f"attribute {self.name!r} needs exactly one base level")
            if len(set(self.levels)) != len(self.levels):
                raise SchemaError(f"attribute {self.name!r} has duplicate levels")

    @property
    def is_continuous(self) -> bool:
        return self.kind == CONTINUOUS

    def columns(self) -> tuple[str, ...]:
        """Coded column keys: non-base levels, or ``unit`` for continuous."""
        if self.is_continuous:
            return (UNIT_COLUMN,)
        return tuple(lv for lv in self.levels if lv != self.base)


def effects_code(attr: AttributeDef, level: str) -> np.ndarray:
    """Return the K-1 coded values for ``level`` of a categorical attribute.

    The non-base level sets +1 on its own column; the base level is -1 on
    every column, so the coded vectors of all K levels sum to zero exactly.
    """
    if attr.is_continuous:
        raise SchemaError(f"attribute {attr.name!r} is continuous, not coded")
    if level not in attr.levels:
        raise SchemaError(f"unknown level {level!r} for attribute {attr.name!r}")
    cols = attr.columns()
    if level == attr.base:
        return -np.ones(len(cols))
    out = np.zeros(len(cols))
    out[cols.index(level)] = 1.0
    return out


@dataclass(frozen=True)
class DesignRow:
    """One fully coded alternative: cut, season, coded columns, raw price/weight."""

    cut: str
    season: str
    coded: Mapping[tuple[str, str], float]
    price: float
    weight: float


@dataclass(frozen=True)
class AttributeSchema:
    """Cuts, seasons, attributes and the per-cut price/weight level sets."""

    cuts: tuple[str, ...]
    seasons: tuple[str, ...]
    attributes: tuple[AttributeDef, ...]
    not_applicable: frozenset[tuple[str, str]] = frozenset()  # (attribute, cut)
    price_levels: Mapping[str, tuple[float, ...]] = field(default_factory=dict)
    weight_levels: Mapping[str, tuple[float, ...]] = field(default_factory=dict)
    weight_unit: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self):
        if len(set(self.cuts)) != len(self.cuts) or not self.cuts:
            raise SchemaError("cuts must be a non-empty list of distinct identifiers")
        if len(set(self.seasons)) != len(self.seasons) or not self.seasons:
            raise SchemaError("seasons must be non-empty and distinct")
        names = [a.name for a in self.attributes]
        if len(set(names)) != len(names):
            raise SchemaError("duplicate attribute names")
        for attr, cut in self.not_applicable:
            if attr not in names or cut not in self.cuts:
                raise SchemaError(f"not_applicable entry ({attr}, {cut}) references unknown names")

    def attribute(self, name: str) -> AttributeDef:
        for a in self.attributes:
            if a.name == name:
                return a
        raise SchemaError(f"unknown attribute {name!r}")

    def has_attribute(self, name: str) -> bool:
        return any(a.name == name for a in self.attributes)

    def applies(self, attr: str, cut: str) -> bool:
        return (attr, cut) not in self.not_applicable

    def applicable(self, cut: str) -> tuple[AttributeDef, ...]:
        if cut not in self.cuts:
            raise SchemaError(f"unknown cut {cut!r}")
        return tuple(a for a in self.attributes if self.applies(a.name, cut))

    def check_cut_season(self, cut: str, season: str) -> None:
        if cut not in self.cuts:
            raise SchemaError(f"unknown cut {cut!r}")
        if season not in self.seasons:
            raise SchemaError(f"unknown season {season!r}")

    # -- serialization --------------------------------------------------

    def to_mapping(self) -> dict:
        """Plain-dict form, also served by the HTTP facade."""
        return {
            "cuts": list(self.cuts),
            "seasons": list(self.seasons),
            "attributes": [
                {
                    "name": a.name,
                    "kind": a.kind,
                    "levels": list(a.levels),
                    "base": a.base,
                    "unit": a.unit,
                    "design_levels": list(a.design_levels),
                    "applies_to": [c for c in self.cuts if self.applies(a.name, c)],
                }
                for a in self.attributes
            ],
            "price_levels": {c: list(v) for c, v in self.price_levels.items()},
            "weight_levels": {c: list(v) for c, v in self.weight_levels.items()},
            "weight_unit": dict(self.weight_unit),
        }

    @classmethod
    def from_mapping(cls, doc: Mapping) -> "AttributeSchema":
        cuts = tuple(doc["cuts"])
        attrs = []
        not_applicable = set()
        for a in doc["attributes"]:
            attrs.append(
                AttributeDef(
                    name=a["name"],
                    kind=a["kind"],
                    levels=tuple(a.get("levels", ())),
                    base=a.get("base"),
                    unit=a.get("unit"),
                    design_levels=tuple(a.get("design_levels", ())),
                )
            )
            applies = set(a.get("applies_to", cuts))
            for c in cuts:
                if c not in applies:
                    not_applicable.add((a["name"], c))
        return cls(
            cuts=cuts,
            seasons=tuple(doc["seasons"]),
            attributes=tuple(attrs),
            not_applicable=frozenset(not_applicable),
            price_levels={c: tuple(v) for c, v in doc.get("price_levels", {}).items()},
            weight_levels={c: tuple(v) for c, v in doc.get("weight_levels", {}).items()},
            weight_unit=dict(doc.get("weight_unit", {})),
        )

    @classmethod
    def loads(cls, text: str) -> "AttributeSchema":
        """Parse the line-oriented schema fixture format."""
        cuts: list[str] = []
        seasons: list[str] = []
        attrs: dict[str, dict] = {}
        order: list[str] = []
        not_applicable = set()
        price_levels: dict[str, tuple[float, ...]] = {}
        weight_levels: dict[str, tuple[float, ...]] = {}
        weight_unit: dict[str, str] = {}
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            tok = line.split()
            kw = tok[0]
            try:
                if kw == "cut":
                    cuts.append(tok[1])
                elif kw == "season":
                    seasons.append(tok[1])
                elif kw == "attribute":
                    name, kind = tok[1], tok[2]
                    attrs[name] = {
                        "kind": kind,
                        "levels": [],
                        "base": None,
                        "unit": tok[3] if len(tok) > 3 else None,
                        "design_levels": tuple(float(v) for v in tok[4:]),
                    }
                    order.append(name)
                elif kw == "level":
                    spec = attrs[tok[1]]
                    spec["levels"].append(tok[2])
                    if len(tok) > 3 and tok[3] == "base":
                        spec["base"] = tok[2]
                elif kw == "not_applicable":
                    not_applicable.add((tok[1], tok[2]))
                elif kw == "price_levels":
                    price_levels[tok[1]] = tuple(float(v) for v in tok[2:])
                elif kw == "weight_levels":
                    weight_unit[tok[1]] = tok[2]
                    weight_levels[tok[1]] = tuple(float(v) for v in tok[3:])
                else:
                    raise SchemaError(f"unknown schema directive {kw!r}")
            except (IndexError, ValueError, KeyError) as exc:
                raise SchemaError(f"schema fixture line {lineno}: {raw.strip()!r} ({exc})") from exc
        defs = tuple(
            AttributeDef(
                name=name,
                kind=spec["kind"],
                levels=tuple(spec["levels"]),
                base=spec["base"],
                unit=spec["unit"],
                design_levels=spec["design_levels"],
            )
            for name, spec in ((n, attrs[n]) for n in order)
        )
        return cls(
            cuts=tuple(cuts),
            seasons=tuple(seasons),
            attributes=defs,
            not_applicable=frozenset(not_applicable),
            price_levels=price_levels,
            weight_levels=weight_levels,
            weight_unit=weight_unit,
        )

    @classmethod
    def load(cls, path) -> "AttributeSchema":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.loads(fh.read())


def build_design_row(
    schema: AttributeSchema, cut: str, season: str, product: Mapping[str, object]
) -> DesignRow:
    """Code a product description into a DesignRow.

    ``product`` assigns a level to every categorical/binary attribute
    applicable to the cut, a numeric value to every other continuous
    attribute, and numeric ``price`` and ``weight``.  Attributes that do not
    apply to the cut (marbling for ground/diced) must be absent.
    """
    schema.check_cut_season(cut, season)
    known = {a.name for a in schema.attributes}
    for key in product:
        if key not in known:
            raise SchemaError(f"unknown attribute {key!r} in product description")
        if not schema.applies(key, cut):
            raise SchemaError(f"attribute {key!r} does not apply to cut {cut!r}")
    coded: dict[tuple[str, str], float] = {}
    price = weight = None
    for attr in schema.applicable(cut):
        if attr.name not in product:
            raise SchemaError(f"product is missing attribute {attr.name!r} for cut {cut!r}")
        value = product[attr.name]
        if attr.is_continuous:
            value = float(value)  # type: ignore[arg-type]
            if not np.isfinite(value):
                raise SchemaError(f"non-finite value for {attr.name!r}")
            if attr.name == "price":
                if value <= 0:
                    raise SchemaError("price must be positive")
                price = value
            elif attr.name == "weight":
                if value <= 0:
                    raise SchemaError("weight must be positive")
                weight = value
            coded[(attr.name, UNIT_COLUMN)] = value
        else:
            codes = effects_code(attr, str(value))
            for col, v in zip(attr.columns(), codes):
                coded[(attr.name, col)] = float(v)
    if price is None or weight is None:
        raise SchemaError("product must assign price and weight")
    return DesignRow(cut=cut, season=season, coded=coded, price=price, weight=weight)


def decode_design_row(schema: AttributeSchema, row: DesignRow) -> dict[str, object]:
    """Invert the coding: reconstruct the raw level assignment from a DesignRow."""
    product: dict[str, object] = {}
    for attr in schema.applicable(row.cut):
        if attr.is_continuous:
            product[attr.name] = row.coded[(attr.name, UNIT_COLUMN)]
            continue
        cols = attr.columns()
        vec = np.array([row.coded[(attr.name, c)] for c in cols])
        if np.all(vec == -1.0):
            product[attr.name] = attr.base
        else:
            hits = np.flatnonzero(vec == 1.0)
            if len(hits) != 1 or np.any(vec[vec != 1.0] != 0.0):
                raise SchemaError(f"coded values for {attr.name!r} are not a valid effects vector")
            product[attr.name] = cols[int(hits[0])]
    return product
