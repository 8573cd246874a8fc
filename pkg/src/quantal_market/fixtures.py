"""Bundled fixture access: schema, published parameter tables, WTP tables,
population marginals, and the common simulation scenario.

The fixture directory can be overridden with the QUANTAL_MARKET_FIXTURES
environment variable; files keep the same names either way.
"""

from __future__ import annotations

import os
from importlib import resources
from pathlib import Path

from .errors import DataError
from .schema import AttributeSchema

ENV_VAR = "QUANTAL_MARKET_FIXTURES"


def fixtures_dir() -> Path:
    override = os.environ.get(ENV_VAR)
    if override:
        return Path(override)
    return Path(resources.files("quantal_market") / "fixtures")  # type: ignore[arg-type]


def fixture_path(name: str) -> Path:
    path = fixtures_dir() / name
    if not path.exists():
        raise DataError(f"fixture {name!r} not found in {fixtures_dir()}")
    return path


def load_schema(path=None) -> AttributeSchema:
    return AttributeSchema.load(path or fixture_path("schema.txt"))


def load_params(path=None):
    from .likelihood import ParameterSet

    return ParameterSet.load(path or fixture_path("params_published.txt"), schema=load_schema())


def load_demographics(path=None) -> dict[str, dict[str, float]]:
    """Return population marginals: field -> {category: probability}."""
    marginals: dict[str, dict[str, float]] = {}
    with open(path or fixture_path("demographics.txt"), "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            tok = line.split()
            if tok[0] != "frequency" or len(tok) != 4:
                raise DataError(f"demographics fixture line {lineno}: {raw.strip()!r}")
            marginals.setdefault(tok[1], {})[tok[2]] = float(tok[3])
    for field, freq in marginals.items():
        total = sum(freq.values())
        if abs(total - 1.0) > 1e-6:
            raise DataError(f"demographics frequencies for {field!r} sum to {total}")
    return marginals


def load_wtp_table(season: str, path=None) -> dict[tuple[str, str, str, str], float]:
    """Published WTP cells: (cut, season, attribute, level) -> USD per lb."""
    if path is None:
        path = fixture_path(f"wtp_{season}.txt")
    table: dict[tuple[str, str, str, str], float] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            tok = line.split()
            if tok[0] != "wtp" or len(tok) != 5:
                raise DataError(f"wtp fixture line {lineno}: {raw.strip()!r}")
            _, attr, level, cut, value = tok
            table[(cut, season, attr, level)] = float(value)
    return table


def load_claim_ranges(path=None) -> dict[str, dict]:
    """Published per-claim WTP ranges: claim -> {low, high, cuts}."""
    ranges: dict[str, dict] = {}
    with open(path or fixture_path("claim_ranges.txt"), "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            tok = line.split()
            if tok[0] != "claim" or len(tok) < 5:
                raise DataError(f"claim fixture line {lineno}: {raw.strip()!r}")
            ranges[tok[1]] = {
                "low": float(tok[2]),
                "high": float(tok[3]),
                "cuts": tuple(tok[4:]),
            }
    return ranges


#: per-cut price ($/lb) and weight used by the common what-if scenario;
#: mid-range values standing in for the unpublished per-cut averages
SCENARIO_PRICE = {
    "ground": 15.0,
    "diced": 15.0,
    "roast": 17.0,
    "sirloin": 23.0,
    "tenderloin": 48.0,
    "flank": 15.0,
    "flap": 23.0,
    "new_york": 21.0,
    "cowboy": 23.0,
}

SCENARIO_WEIGHT = {
    "ground": 14.0,
    "diced": 14.0,
    "roast": 4.0,
    "sirloin": 10.0,
    "tenderloin": 6.5,
    "flank": 9.0,
    "flap": 14.0,
    "new_york": 9.0,
    "cowboy": 1.25,
}

#: attribute levels shared by all cuts in the common scenario
SCENARIO_LEVELS = {
    "fat_colour": "white",
    "meat_colour": "red",
    "marbling": "not_marbled",
    "packaging": "vacuum",
    "brand": "brand_5",
    "certified_logo": "self_assurance",
    "feed": "grass",
    "traceable": "yes",
    "antibiotic_free": "yes",
    "hormone_added": "no",
    "organic": "yes",
    "angus": "yes",
    "non_gmo": "yes",
    "pasture_raised": "yes",
    "natural": "yes",
    "use_by": 3.0,
}


def common_scenario(cut: str, season: str, schema: AttributeSchema | None = None):
    """The bundled what-if scenario: shared levels, per-cut price/weight."""
    from .simulate import Scenario

    schema = schema or load_schema()
    levels = {k: v for k, v in SCENARIO_LEVELS.items() if schema.applies(k, cut)}
    return Scenario(
        cut=cut,
        season=season,
        levels=levels,
        price=SCENARIO_PRICE[cut],
        weight=SCENARIO_WEIGHT[cut],
    )
