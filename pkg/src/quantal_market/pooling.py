"""Seasonal data-pooling (Chow-style) test with free scale factors.

Compares the summed log-likelihoods of separate per-season fits against a
pooled fit that shares every preference parameter across seasons while
freeing one scale factor per cut (the other season is the per-cut
reference, since each cut's thresholds absorb a common rescaling).  The
likelihood-ratio statistic is referred to a chi-squared distribution with
the parameter-count difference as degrees of freedom; passing at the
chosen level (failing to reject) supports combining the datasets.
"""

from __future__ import annotations

from dataclasses import dataclass
import numpy as np
from scipy import stats

from .dataset import Dataset
from .errors import DataError, SchemaError
from .estimate import EstimationResult, FitOptions, fit
from .likelihood import CUT_SEASON, ModelSpec, ParameterSet


@dataclass(frozen=True)
class PoolingReport:
    ll_winter: float
    ll_summer: float
    ll_pooled: float
    k_winter: int
    k_summer: int
    k_pooled: int
    statistic: float
    df: int
    p_value: float
    level: float
    poolable: bool  # True when the test fails to reject preference homogeneity

    def summary(self) -> str:
        decision = "pool (fail to reject)" if self.poolable else "do not pool (reject)"
        return "\n".join(
            [
                f"log-likelihood winter  {self.ll_winter:.6f}  (k={self.k_winter})",
                f"log-likelihood summer  {self.ll_summer:.6f}  (k={self.k_summer})",
                f"log-likelihood pooled  {self.ll_pooled:.6f}  (k={self.k_pooled})",
                f"LR statistic           {self.statistic:.6f}",
                f"degrees of freedom     {self.df}",
                f"p-value                {self.p_value:.6g}",
                f"decision at {self.level:.0%}        {decision}",
            ]
        )


def _check_season_free(spec: ModelSpec) -> None:
    if spec.asc == CUT_SEASON:
        raise SchemaError("pooling test needs season-shared ASCs (asc binding 'cut')")
    for attr, rule in spec.bindings.items():
        if rule == CUT_SEASON:
            raise SchemaError(
                f"pooling test needs season-shared preferences; {attr!r} is bound per season"
            )
    if spec.free_scales:
        raise SchemaError("pooling test manages the scale layout itself")


def merge_seasonal(winter: Dataset, summer: Dataset) -> Dataset:
    """Union of the two panels with respondent ids kept distinct."""
    from .dataset import ChoiceObservation

    def retag(ds: Dataset, tag: str):
        obs = tuple(
            ChoiceObservation(
                respondent_id=f"{tag}{o.respondent_id}",
                task_id=o.task_id,
                alt_index=o.alt_index,
                row=o.row,
                quantity=o.quantity,
            )
            for o in ds.observations
        )
        profiles = {f"{tag}{r}": p for r, p in ds.profiles.items()}
        seasons = {f"{tag}{r}": s for r, s in ds.seasons.items()}
        return obs, profiles, seasons

    w_obs, w_prof, w_seas = retag(winter, "w:")
    s_obs, s_prof, s_seas = retag(summer, "s:")
    merged = Dataset(
        schema=winter.schema,
        observations=w_obs + s_obs,
        profiles={**w_prof, **s_prof},
        seasons={**w_seas, **s_seas},
    )
    merged.validate()
    return merged


def pooling_test(
    winter: Dataset,
    summer: Dataset,
    spec: ModelSpec,
    level: float = 0.01,
    options: FitOptions | None = None,
) -> tuple[PoolingReport, dict[str, EstimationResult]]:
    """Run the three fits and assemble the report.

    ``spec`` must bind every preference parameter without season splits;
    the pooled fit frees one scale per cut for the summer dataset's season.
    """
    _check_season_free(spec)
    if winter.schema != summer.schema:
        raise DataError("seasonal datasets use different schemas")
    w_seasons = set(winter.seasons.values())
    s_seasons = set(summer.seasons.values())
    if len(w_seasons) != 1 or len(s_seasons) != 1 or w_seasons == s_seasons:
        raise DataError("each dataset must cover exactly one distinct season")
    season_w = next(iter(w_seasons))
    season_s = next(iter(s_seasons))

    options = options or FitOptions(compute_se=False)
    fit_w = fit(winter, spec.for_single_season(season_w), options)
    fit_s = fit(summer, spec.for_single_season(season_s), options)
    pooled_spec = spec.with_free_season_scales(season_s)
    fit_p = fit(merge_seasonal(winter, summer), pooled_spec, options)

    statistic = -2.0 * (fit_p.log_likelihood - (fit_w.log_likelihood + fit_s.log_likelihood))
    df = fit_w.n_parameters + fit_s.n_parameters - fit_p.n_parameters
    if df < 1:
        raise DataError(f"pooling degrees of freedom must be positive, got {df}")
    p_value = float(stats.chi2.sf(max(statistic, 0.0), df=df))
    report = PoolingReport(
        ll_winter=fit_w.log_likelihood,
        ll_summer=fit_s.log_likelihood,
        ll_pooled=fit_p.log_likelihood,
        k_winter=fit_w.n_parameters,
        k_summer=fit_s.n_parameters,
        k_pooled=fit_p.n_parameters,
        statistic=float(statistic),
        df=int(df),
        p_value=p_value,
        level=level,
        poolable=p_value >= level,
    )
    return report, {"winter": fit_w, "summer": fit_s, "pooled": fit_p}


@dataclass(frozen=True)
class PreferencePairs:
    pairs: tuple[tuple[str, float, float], ...]  # (parameter id, winter, summer)
    slope_through_origin: float

    def rows(self):
        return self.pairs


def preference_plot_data(winter, summer) -> PreferencePairs:
    """Paired per-season coefficients for the proportionality plot.

    Accepts per-season fits or parameter sets; entries pair every
    (attribute, column, cut) cell carrying a coefficient in both seasons.
    The through-origin least-squares slope summarizes proportionality.
    """
    params_w: ParameterSet = getattr(winter, "params", winter)
    params_s: ParameterSet = getattr(summer, "params", summer)
    schema = params_w.schema
    season_w = _single_season(params_w, default="winter")
    season_s = _single_season(params_s, default="summer")
    pairs: list[tuple[str, float, float]] = []
    for attr in schema.attributes:
        for column in attr.columns():
            for cut in schema.cuts:
                if not schema.applies(attr.name, cut):
                    continue
                bw = params_w.column_beta(attr.name, column, cut, season_w)
                bs = params_s.column_beta(attr.name, column, cut, season_s)
                if bw is None or bs is None:
                    continue
                pairs.append((f"b:{attr.name}:{column}:{cut}", bw, bs))
    if not pairs:
        raise DataError("the parameter sets share no coefficients")
    w = np.array([p[1] for p in pairs])
    s = np.array([p[2] for p in pairs])
    denom = float(w @ w)
    slope = float(w @ s) / denom if denom > 0 else float("nan")
    return PreferencePairs(pairs=tuple(pairs), slope_through_origin=slope)


def _single_season(params: ParameterSet, default: str) -> str:
    seasons = {s for (_, s) in params.asc}
    if len(seasons) == 1:
        return next(iter(seasons))
    return default
