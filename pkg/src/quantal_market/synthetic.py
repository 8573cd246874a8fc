"""Synthetic choice data generated from a known parameter set.

Supports the generate-then-recover checks and produces CSV fixtures in the
documented layouts.  Products are drawn uniformly over the schema's level
sets, respondents from the bundled population marginals, and quantities
from the model's category probabilities.
"""

from __future__ import annotations

from typing import Mapping, Sequence

import numpy as np

from .dataset import (
    ALTS_PER_TASK,
    TASKS_PER_RESPONDENT,
    ChoiceObservation,
    Dataset,
    RespondentProfile,
    default_coder,
)
from .fixtures import load_demographics
from .likelihood import ModelSpec, ParameterSet, category_probs, systematic_utility
from .schema import AttributeSchema, build_design_row


def random_product(schema: AttributeSchema, cut: str, rng: np.random.Generator) -> dict:
    product: dict[str, object] = {}
    for attr in schema.applicable(cut):
        if attr.name == "price":
            product["price"] = float(rng.choice(schema.price_levels[cut]))
        elif attr.name == "weight":
            product["weight"] = float(rng.choice(schema.weight_levels[cut]))
        elif attr.is_continuous:
            levels = attr.design_levels or (1.0,)
            product[attr.name] = float(rng.choice(levels))
        else:
            product[attr.name] = str(rng.choice(attr.levels))
    return product


def random_profile(marginals: Mapping[str, Mapping[str, float]], rng: np.random.Generator) -> RespondentProfile:
    def draw(fieldname: str) -> str:
        cats = sorted(marginals[fieldname])
        p = np.array([marginals[fieldname][c] for c in cats])
        return str(rng.choice(cats, p=p / p.sum()))

    return RespondentProfile(
        education=draw("education"),
        dwelling=draw("dwelling"),
        household_size=int(draw("household_size")),
        income_bracket=draw("income_bracket"),
        state=draw("state"),
        purchase_frequency=draw("purchase_frequency"),
        gender=draw("gender"),
        age_bracket=draw("age_bracket"),
        household_type=draw("household_type"),
    )


def simulate_dataset(
    truth: ParameterSet,
    spec: ModelSpec,
    n_respondents: int,
    seed: int,
    seasons: Sequence[str] | None = None,
    cuts: Sequence[str] | None = None,
    with_profiles: bool | None = None,
) -> Dataset:
    """Draw a panel of ``n_respondents`` x 4 tasks x 4 alternatives.

    Respondents alternate between ``seasons``; cuts are drawn uniformly per
    alternative.  Quantities are sampled from the truth's category
    probabilities, truncated to the spec's category count.
    """
    schema = spec.schema
    rng = np.random.default_rng(seed)
    seasons = tuple(seasons or spec.effective_seasons)
    cuts = tuple(cuts or schema.cuts)
    if with_profiles is None:
        with_profiles = bool(spec.covariates)
    marginals = load_demographics() if with_profiles else None
    coder = default_coder() if with_profiles else None

    observations: list[ChoiceObservation] = []
    profiles: dict[str, RespondentProfile] = {}
    season_of: dict[str, str] = {}
    n_cats = spec.n_categories
    quantities = np.arange(n_cats)
    for r in range(n_respondents):
        rid = f"r{r + 1:05d}"
        season = seasons[r % len(seasons)]
        season_of[rid] = season
        z = None
        if with_profiles:
            profile = random_profile(marginals, rng)
            profiles[rid] = profile
            z = coder.covariate_row(profile)
        for t in range(TASKS_PER_RESPONDENT):
            tid = f"t{t + 1}"
            for a in range(1, ALTS_PER_TASK + 1):
                cut = str(rng.choice(cuts))
                row = build_design_row(schema, cut, season, random_product(schema, cut, rng))
                w = systematic_utility(truth, row, z)
                tau = np.asarray(truth.tau[cut], dtype=float)[: n_cats - 1]
                probs = category_probs(w, tau, truth.scale(cut, season))
                y = int(rng.choice(quantities, p=probs / probs.sum()))
                observations.append(
                    ChoiceObservation(
                        respondent_id=rid, task_id=tid, alt_index=a, row=row, quantity=y
                    )
                )
    dataset = Dataset(
        schema=schema, observations=tuple(observations), profiles=profiles, seasons=season_of
    )
    dataset.validate()
    return dataset
