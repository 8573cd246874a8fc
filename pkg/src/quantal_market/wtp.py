"""Willingness-to-pay derivation and reconciliation with published tables.

WTP for an attribute level is the marginal rate of substitution against
price: -beta / beta_price, in dollars per pound.  Published tables carry
three-decimal rounded coefficients, so reconciliation uses interval
arithmetic over the rounding bounds: a reported WTP is consistent when it
lies inside the ratio interval attainable by any unrounded pair.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable

from .errors import NumericalError
from .likelihood import ParameterSet
from .schema import AttributeSchema, UNIT_COLUMN


@dataclass
class WtpTable:
    """WTP cells keyed by (cut, season, attribute, level-or-'unit')."""

    entries: dict[tuple[str, str, str, str], float] = field(default_factory=dict)

    def get(self, cut: str, season: str, attribute: str, level: str) -> float | None:
        return self.entries.get((cut, season, attribute, level))

    def slice(self, cut: str, season: str) -> dict[tuple[str, str], float]:
        return {
            (attr, level): value
            for (c, s, attr, level), value in self.entries.items()
            if c == cut and s == season
        }

    def rows(self) -> Iterable[tuple[str, str, str, str, float]]:
        for (cut, season, attr, level), value in sorted(self.entries.items()):
            yield cut, season, attr, level, value


def price_coefficient(params: ParameterSet, cut: str, season: str) -> float:
    beta_price = params.column_beta("price", UNIT_COLUMN, cut, season)
    if beta_price is None or beta_price >= 0:
        raise NumericalError(
            f"price coefficient for ({cut}, {season}) must be negative, got {beta_price}"
        )
    return beta_price


def wtp(
    params: ParameterSet, cut: str, season: str, attribute: str, level: str | None = None
) -> float:
    """-beta / beta_price for one level (categorical) or one unit (continuous).

    Attributes or levels excluded from the model yield exactly zero.
    """
    params.schema.check_cut_season(cut, season)
    beta_price = price_coefficient(params, cut, season)
    effect = params.level_effect(cut, season, attribute, level)
    if effect == 0.0:
        return 0.0
    return -effect / beta_price


def wtp_table(params: ParameterSet, schema: AttributeSchema | None = None) -> WtpTable:
    """WTP for every included (cut, season, attribute, level) cell.

    Categorical cells cover every level including the base; continuous
    attributes are reported per unit.  Attributes the model excludes for a
    cut/season (all columns unbound) produce no cell.
    """
    schema = schema or params.schema
    table = WtpTable()
    for cut in schema.cuts:
        seasons = sorted({s for (c, s) in params.asc} or set(schema.seasons))
        for season in seasons:
            for attr in schema.attributes:
                if attr.name == "price" or not schema.applies(attr.name, cut):
                    continue
                if not params.includes(cut, season, attr.name):
                    continue
                if attr.is_continuous:
                    table.entries[(cut, season, attr.name, UNIT_COLUMN)] = wtp(
                        params, cut, season, attr.name, None
                    )
                else:
                    for level in attr.levels:
                        table.entries[(cut, season, attr.name, level)] = wtp(
                            params, cut, season, attr.name, level
                        )
    return table


def wtp_interval(
    beta_rounded: float, price_rounded: float, decimals: int = 3
) -> tuple[float, float]:
    """Ratio interval attainable by unrounded values behind two printed ones.

    ``price_rounded`` is the magnitude of the (negative) price coefficient.
    Raises when the price rounding interval touches zero.
    """
    if decimals < 1:
        raise NumericalError("decimals must be at least 1")
    h = 0.5 * 10.0 ** (-decimals)
    price_lo, price_hi = abs(price_rounded) - h, abs(price_rounded) + h
    if price_lo <= 0:
        raise NumericalError(
            f"price rounding interval [{price_lo}, {price_hi}] includes zero"
        )
    beta_lo, beta_hi = beta_rounded - h, beta_rounded + h
    corners = [
        beta_lo / price_lo,
        beta_lo / price_hi,
        beta_hi / price_lo,
        beta_hi / price_hi,
    ]
    return min(corners), max(corners)


def interval_consistency(
    beta_rounded: float, price_rounded: float, wtp_reported: float, decimals: int = 3
) -> bool:
    """True when the reported WTP is attainable given table rounding."""
    lo, hi = wtp_interval(beta_rounded, price_rounded, decimals)
    return lo - 1e-9 <= wtp_reported <= hi + 1e-9
