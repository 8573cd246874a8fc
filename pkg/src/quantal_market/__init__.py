"""Quantity-response choice experiment toolkit.

Design generation, scale-adjusted ordered-logit estimation, data-pooling
tests, willingness-to-pay derivation and what-if purchase simulation for
multi-product stated-preference studies, bundled with the published beef
study's schema and coefficient fixtures.
"""

__version__ = "0.1.0"

from .schema import AttributeSchema, AttributeDef, DesignRow, build_design_row, decode_design_row, effects_code
from .dataset import ChoiceObservation, Dataset, RespondentProfile, covariate_row, load_dataset
from .likelihood import (
    ModelSpec,
    ParameterSet,
    category_probs,
    gradient,
    log_likelihood,
    published_model_spec,
    systematic_utility,
)

__all__ = [
    "AttributeSchema",
    "AttributeDef",
    "DesignRow",
    "build_design_row",
    "decode_design_row",
    "effects_code",
    "ChoiceObservation",
    "Dataset",
    "RespondentProfile",
    "covariate_row",
    "load_dataset",
    "ModelSpec",
    "ParameterSet",
    "category_probs",
    "gradient",
    "log_likelihood",
    "published_model_spec",
    "systematic_utility",
]
