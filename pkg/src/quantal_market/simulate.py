"""What-if purchase simulation: quantity distributions, expected quantities,
zero-purchase probabilities, seasonal contrasts, and price sweeps.

A scenario fixes one product (cut, season, every attribute level, price,
weight) plus a covariate context: a single respondent profile, an explicit
weighted mixture of profiles, or the default population built from the
bundled marginals treated as independent.  Population forecasts average the
category probabilities over the covariate-utility distribution, which is
convolved exactly from the per-field increments.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from functools import lru_cache
from typing import Mapping, Sequence

import numpy as np

from .dataset import COVARIATE_COLUMNS, RespondentProfile, default_coder
from .errors import DataError, NumericalError, SchemaError
from .fixtures import load_demographics
from .likelihood import ParameterSet, _interval_log_prob, category_probs, systematic_utility
from .schema import build_design_row

ProfileMixture = Sequence[tuple[float, RespondentProfile]]


@dataclass(frozen=True)
class Scenario:
    """One hypothetical product plus the covariate context to average over."""

    cut: str
    season: str
    levels: Mapping[str, object]
    price: float
    weight: float
    profile: RespondentProfile | ProfileMixture | None = None
    weight_factor: float = 1.0

    def __post_init__(self):
        if not np.isfinite(self.price) or self.price <= 0:
            raise SchemaError(f"scenario price must be positive, got {self.price}")
        if not np.isfinite(self.weight) or self.weight <= 0:
            raise SchemaError(f"scenario weight must be positive, got {self.weight}")

    def with_season(self, season: str) -> "Scenario":
        return replace(self, season=season)

    def with_price(self, price: float) -> "Scenario":
        return replace(self, price=price)

    def product(self) -> dict:
        product = dict(self.levels)
        product["price"] = self.price
        product["weight"] = self.weight
        return product


@dataclass(frozen=True)
class PurchaseForecast:
    """Quantity distribution and its summary moments for one scenario."""

    cut: str
    season: str
    price: float
    probabilities: tuple[float, ...]
    expected_quantity: float
    zero_purchase_probability: float
    expected_revenue: float


@dataclass(frozen=True)
class SeasonalComparison:
    winter: PurchaseForecast
    summer: PurchaseForecast
    delta_probabilities: tuple[float, ...]  # summer minus winter
    delta_expected_quantity: float


@dataclass(frozen=True)
class PriceSweep:
    points: tuple[PurchaseForecast, ...]
    argmax_price: float
    argmax_index: int


def _category_probs_many(ws: np.ndarray, tau, lam: float) -> np.ndarray:
    """category_probs over a vector of utility indices; rows sum to one."""
    bounds = np.concatenate(([-np.inf], np.asarray(tau, dtype=float) / lam, [np.inf]))
    a = bounds[None, :-1] - ws[:, None]
    b = bounds[None, 1:] - ws[:, None]
    return np.exp(_interval_log_prob(a, b))


def _freeze(marginals: Mapping[str, Mapping[str, float]]):
    return tuple(
        (name, tuple(sorted(freq.items()))) for name, freq in sorted(marginals.items())
    )


def _covariate_utility_distribution(
    params: ParameterSet, marginals: Mapping[str, Mapping[str, float]]
) -> tuple[np.ndarray, np.ndarray]:
    gamma = tuple(params.gamma.get(c, 0.0) for c in COVARIATE_COLUMNS)
    return _cached_distribution(gamma, _freeze(marginals))


@lru_cache(maxsize=32)
def _cached_distribution(gamma_values: tuple, frozen_marginals: tuple):
    """Exact (delta, weight) distribution of gamma.z under independent marginals."""
    marginals = {name: dict(freq) for name, freq in frozen_marginals}
    coder = default_coder()
    gamma = np.array(gamma_values)

    def field_increments(fieldname: str, coded) -> tuple[np.ndarray, np.ndarray]:
        cats = sorted(marginals[fieldname])
        probs = np.array([marginals[fieldname][c] for c in cats], dtype=float)
        increments = np.array([float(gamma @ coded(c)) for c in cats])
        return increments, probs / probs.sum()

    def one_hot(offset_fn):
        def coded(category):
            z = np.zeros(len(COVARIATE_COLUMNS))
            offset_fn(z, category)
            return z

        return coded

    from .dataset import (
        DWELLING_BASE,
        DWELLING_LEVELS,
        EDUCATION_BASE,
        EDUCATION_LEVELS,
        FREQUENCY_BASE,
        FREQUENCY_LEVELS,
        GENDER_BASE,
        GENDER_LEVELS,
        HOUSEHOLD_TYPE_BASE,
        HOUSEHOLD_TYPES,
        STATE_BASE,
        STATE_LEVELS,
        _effects,
    )

    fields = (
        ("education", one_hot(lambda z, c: _effects(z, 0, EDUCATION_LEVELS, EDUCATION_BASE, c, 3))),
        ("dwelling", one_hot(lambda z, c: _effects(z, 3, DWELLING_LEVELS, DWELLING_BASE, c, 1))),
        ("household_size", one_hot(lambda z, c: z.__setitem__(4, float(c)))),
        ("income_bracket", one_hot(lambda z, c: z.__setitem__(5, coder.income_index(c) ** 2))),
        ("state", one_hot(lambda z, c: _effects(z, 6, STATE_LEVELS, STATE_BASE, c, 1))),
        (
            "purchase_frequency",
            one_hot(lambda z, c: _effects(z, 7, FREQUENCY_LEVELS, FREQUENCY_BASE, c, 3)),
        ),
        ("gender", one_hot(lambda z, c: _effects(z, 10, GENDER_LEVELS, GENDER_BASE, c, 1))),
        ("age_bracket", one_hot(lambda z, c: z.__setitem__(11, coder.age_index(c)))),
        (
            "household_type",
            one_hot(lambda z, c: _effects(z, 12, HOUSEHOLD_TYPES, HOUSEHOLD_TYPE_BASE, c, 3)),
        ),
    )
    deltas = np.zeros(1)
    weights = np.ones(1)
    for fieldname, coded in fields:
        incs, probs = field_increments(fieldname, coded)
        deltas = (deltas[:, None] + incs[None, :]).ravel()
        weights = (weights[:, None] * probs[None, :]).ravel()
        keys = np.round(deltas, 12)
        uniq, inverse = np.unique(keys, return_inverse=True)
        merged = np.zeros(len(uniq))
        np.add.at(merged, inverse, weights)
        deltas, weights = uniq, merged
    return deltas, weights


def _assemble(
    cut: str, season: str, price: float, weight_factor: float, probs: np.ndarray
) -> PurchaseForecast:
    quantities = np.arange(len(probs), dtype=float)
    expected = float(probs @ quantities)
    return PurchaseForecast(
        cut=cut,
        season=season,
        price=price,
        probabilities=tuple(float(p) for p in probs),
        expected_quantity=expected,
        zero_purchase_probability=float(probs[0]),
        expected_revenue=float(price * expected * weight_factor),
    )


def forecast(
    params: ParameterSet,
    scenario: Scenario,
    marginals: Mapping[str, Mapping[str, float]] | None = None,
) -> PurchaseForecast:
    """Quantity distribution for one scenario.

    With a profile the covariate utility is exact; with a mixture the
    forecast is the probability-weighted average of per-profile forecasts;
    with neither, the bundled population marginals are used.
    """
    schema = params.schema
    row = build_design_row(schema, scenario.cut, scenario.season, scenario.product())
    if (scenario.cut, scenario.season) not in params.asc or scenario.cut not in params.tau:
        raise NumericalError(
            f"parameters do not cover ({scenario.cut}, {scenario.season})"
        )
    w0 = systematic_utility(params, row)
    tau = params.tau[scenario.cut]
    lam = params.scale(scenario.cut, scenario.season)

    profile = scenario.profile
    if isinstance(profile, RespondentProfile):
        z = default_coder().covariate_row(profile)
        shift = float(
            np.array([params.gamma.get(c, 0.0) for c in COVARIATE_COLUMNS]) @ z
        )
        probs = category_probs(w0 + shift, tau, lam)
    elif profile is not None:
        weights = np.array([float(wt) for wt, _ in profile])
        if np.any(weights < 0) or weights.sum() <= 0:
            raise DataError("profile mixture weights must be non-negative and sum above zero")
        weights = weights / weights.sum()
        probs = np.zeros(params.n_categories)
        for wt, p in zip(weights, (p for _, p in profile)):
            probs = probs + wt * np.asarray(
                forecast(params, replace(scenario, profile=p), marginals).probabilities
            )
    else:
        deltas, weights = _covariate_utility_distribution(
            params, marginals or load_demographics()
        )
        probs = weights @ _category_probs_many(w0 + deltas, tau, lam)
    return _assemble(scenario.cut, scenario.season, scenario.price, scenario.weight_factor, probs)


def price_sweep(
    params: ParameterSet,
    scenario: Scenario,
    prices: Sequence[float],
    marginals: Mapping[str, Mapping[str, float]] | None = None,
) -> PriceSweep:
    """Forecast per grid price plus the revenue-maximizing grid point."""
    prices = [float(p) for p in prices]
    if not prices:
        raise DataError("price grid is empty")
    if any(p <= 0 for p in prices):
        raise DataError("price grid must be positive")
    if any(b <= a for a, b in zip(prices, prices[1:])):
        raise DataError("price grid must be strictly ascending")
    points = tuple(
        forecast(params, scenario.with_price(p), marginals) for p in prices
    )
    revenues = np.array([pt.expected_revenue for pt in points])
    best = int(np.argmax(revenues))
    return PriceSweep(points=points, argmax_price=prices[best], argmax_index=best)


def seasonal_compare(
    params: ParameterSet,
    scenario: Scenario,
    marginals: Mapping[str, Mapping[str, float]] | None = None,
) -> SeasonalComparison:
    """Winter and summer forecasts for the same product, with deltas."""
    winter = forecast(params, scenario.with_season("winter"), marginals)
    summer = forecast(params, scenario.with_season("summer"), marginals)
    deltas = tuple(s - w for w, s in zip(winter.probabilities, summer.probabilities))
    return SeasonalComparison(
        winter=winter,
        summer=summer,
        delta_probabilities=deltas,
        delta_expected_quantity=summer.expected_quantity - winter.expected_quantity,
    )


# -- scenario (de)serialization ------------------------------------------------

_PROFILE_FIELDS = (
    "education",
    "dwelling",
    "household_size",
    "income_bracket",
    "state",
    "purchase_frequency",
    "gender",
    "age_bracket",
    "household_type",
)


def _profile_from_mapping(doc: Mapping) -> RespondentProfile:
    missing = [f for f in _PROFILE_FIELDS if f not in doc]
    if missing:
        raise DataError(f"profile is missing fields: {', '.join(missing)}")
    kwargs = {f: doc[f] for f in _PROFILE_FIELDS}
    kwargs["household_size"] = int(kwargs["household_size"])
    return RespondentProfile(**kwargs)


def scenario_from_mapping(schema, doc: Mapping) -> Scenario:
    """Build a Scenario from a plain mapping (the JSON body layout)."""
    for key in ("cut", "season", "levels", "price", "weight"):
        if key not in doc:
            raise DataError(f"scenario is missing {key!r}")
    profile = doc.get("profile")
    if profile is not None:
        profile = _profile_from_mapping(profile)
    levels = dict(doc["levels"])
    for name, value in levels.items():
        if schema.has_attribute(name) and schema.attribute(name).is_continuous:
            levels[name] = float(value)
    return Scenario(
        cut=str(doc["cut"]),
        season=str(doc["season"]),
        levels=levels,
        price=float(doc["price"]),
        weight=float(doc["weight"]),
        profile=profile,
        weight_factor=float(doc.get("weight_factor", 1.0)),
    )


def scenario_to_mapping(scenario: Scenario) -> dict:
    doc = {
        "cut": scenario.cut,
        "season": scenario.season,
        "levels": {k: v for k, v in scenario.levels.items()},
        "price": scenario.price,
        "weight": scenario.weight,
        "weight_factor": scenario.weight_factor,
    }
    if isinstance(scenario.profile, RespondentProfile):
        doc["profile"] = {f: getattr(scenario.profile, f) for f in _PROFILE_FIELDS}
    return doc


def scenario_from_text(schema, text: str) -> Scenario:
    """Parse the flat key = value scenario file format."""
    doc: dict = {"levels": {}}
    profile: dict = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise DataError(f"scenario line {lineno}: expected 'key = value'")
        key, value = (part.strip() for part in line.split("=", 1))
        if key.startswith("profile."):
            profile[key[len("profile.") :]] = value
        elif key in ("cut", "season", "price", "weight", "weight_factor"):
            doc[key] = value
        else:
            doc["levels"][key] = value
    if profile:
        doc["profile"] = profile
    return scenario_from_mapping(schema, doc)


def forecast_to_mapping(fc: PurchaseForecast) -> dict:
    return {
        "cut": fc.cut,
        "season": fc.season,
        "price": fc.price,
        "probabilities": list(fc.probabilities),
        "expected_quantity": fc.expected_quantity,
        "zero_purchase_probability": fc.zero_purchase_probability,
        "expected_revenue": fc.expected_revenue,
    }
