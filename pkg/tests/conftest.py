import numpy as np
import pytest

from quantal_market.likelihood import ModelSpec, ParameterSet
from quantal_market.schema import AttributeDef, AttributeSchema


def make_toy_schema(cuts=("strip", "cube")):
    return AttributeSchema(
        cuts=tuple(cuts),
        seasons=("winter", "summer"),
        attributes=(
            AttributeDef("colour", "effects_categorical", ("red", "blue"), base="blue"),
            AttributeDef("certified", "binary_claim", ("yes", "no"), base="no"),
            AttributeDef("use_by", "continuous", unit="days", design_levels=(1.0, 7.0)),
            AttributeDef("weight", "continuous", unit="oz"),
            AttributeDef("price", "continuous", unit="usd_per_lb"),
        ),
        price_levels={c: (6.0, 12.0, 18.0, 24.0) for c in cuts},
        weight_levels={c: (8.0, 16.0) for c in cuts},
        weight_unit={c: "oz" for c in cuts},
    )


def make_toy_spec(schema, *, covariates=(), free_scales=(), n_categories=11, asc="cut_season"):
    return ModelSpec(
        schema=schema,
        bindings={
            "colour": "generic",
            "certified": "cut",
            "use_by": "cut",
            "weight": "excluded",
            "price": "cut",
        },
        covariates=tuple(covariates),
        asc=asc,
        free_scales=tuple(free_scales),
        reference_scale=None,
        n_categories=n_categories,
    )


def make_toy_truth(schema, *, n_categories=11, mu=None):
    tau_full = np.array([0.0, 0.7, 1.3, 1.9, 2.5, 3.1, 3.7, 4.3, 4.9, 5.6])
    tau = tau_full[: n_categories - 1]
    params = ParameterSet(schema=schema, n_categories=n_categories)
    for cut in schema.cuts:
        for season in schema.seasons:
            params.asc[(cut, season)] = 0.4 if cut == schema.cuts[0] else 0.1
        params.tau[cut] = tau.copy()
    params.beta[("colour", "red", None, None)] = 0.25
    for cut in schema.cuts:
        params.beta[("certified", "yes", cut, None)] = 0.15 if cut == schema.cuts[0] else -0.1
        params.beta[("use_by", "unit", cut, None)] = 0.03
        params.beta[("price", "unit", cut, None)] = -0.05
    if mu:
        params.mu.update(mu)
    return params


@pytest.fixture
def toy_schema():
    return make_toy_schema()


@pytest.fixture
def toy_spec(toy_schema):
    return make_toy_spec(toy_schema)


@pytest.fixture
def toy_truth(toy_schema):
    return make_toy_truth(toy_schema)
