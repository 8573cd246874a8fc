"""Choice data ingestion, validation, and respondent covariate coding.

Two CSV files feed the estimator: a choices file with one row per
(respondent, task, alternative) carrying the raw attribute levels and the
0-10 quantity response, and a respondents file with one row per respondent
carrying the demographic profile.  Categorical covariates are effects coded
(base levels -1), household size enters as a count, income as a squared
standardized bracket index and age as a standardized bracket index.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import DataError, SchemaError
from .schema import AttributeSchema, DesignRow, build_design_row

MAX_QUANTITY = 10
TASKS_PER_RESPONDENT = 4
ALTS_PER_TASK = 4

EDUCATION_LEVELS = ("graduate", "bachelor", "associate", "college_or_less")
DWELLING_LEVELS = ("owned", "renting")
STATE_LEVELS = ("new_york", "other")
FREQUENCY_LEVELS = ("two_plus_week", "once_week", "two_three_month", "once_month")
GENDER_LEVELS = ("male", "female")
HOUSEHOLD_TYPES = ("couple_no_children", "couple_with_children", "one_parent", "single_person")
INCOME_BRACKETS = ("under_25k", "25k_50k", "50k_75k", "75k_100k", "100k_150k", "over_150k")
AGE_BRACKETS = ("18_24", "25_34", "35_44", "45_54", "55_64", "65_plus")

# effects-coding bases, matching the starred rows of the covariate table
EDUCATION_BASE = "associate"
DWELLING_BASE = "renting"
STATE_BASE = "other"
FREQUENCY_BASE = "once_month"
GENDER_BASE = "male"
HOUSEHOLD_TYPE_BASE = "couple_with_children"

#: covariate column ids in the order produced by covariate_row
COVARIATE_COLUMNS = (
    "edu_graduate",
    "edu_bachelor",
    "edu_college_or_less",
    "dwelling_owned",
    "household_size",
    "income_sq",
    "state_new_york",
    "freq_two_plus_week",
    "freq_once_week",
    "freq_two_three_month",
    "gender_female",
    "age_index",
    "htype_couple_no_children",
    "htype_one_parent",
    "htype_single_person",
)

CHOICE_COLUMNS = (
    "respondent_id",
    "task_id",
    "alt_index",
    "cut",
    "season",
    "fat_colour",
    "meat_colour",
    "marbling",
    "packaging",
    "brand",
    "certified_logo",
    "feed",
    "traceable",
    "antibiotic_free",
    "hormone_added",
    "organic",
    "angus",
    "non_gmo",
    "pasture_raised",
    "natural",
    "use_by",
    "weight",
    "price",
    "quantity",
)

RESPONDENT_COLUMNS = (
    "respondent_id",
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


@dataclass(frozen=True)
class RespondentProfile:
    """Demographic profile; every field is drawn from a closed category list."""

    education: str
    dwelling: str
    household_size: int
    income_bracket: str
    state: str
    purchase_frequency: str
    gender: str
    age_bracket: str
    household_type: str

    def __post_init__(self):
        checks = (
            ("education", EDUCATION_LEVELS),
            ("dwelling", DWELLING_LEVELS),
            ("income_bracket", INCOME_BRACKETS),
            ("state", STATE_LEVELS),
            ("purchase_frequency", FREQUENCY_LEVELS),
            ("gender", GENDER_LEVELS),
            ("age_bracket", AGE_BRACKETS),
            ("household_type", HOUSEHOLD_TYPES),
        )
        for name, allowed in checks:
            if getattr(self, name) not in allowed:
                raise DataError(f"invalid {name} {getattr(self, name)!r}")
        if not 1 <= int(self.household_size) <= 20:
            raise DataError(f"implausible household_size {self.household_size}")


@dataclass(frozen=True)
class ChoiceObservation:
    """One respondent x task x alternative record with its quantity response."""

    respondent_id: str
    task_id: str
    alt_index: int
    row: DesignRow
    quantity: int

    def __post_init__(self):
        if not 0 <= self.quantity <= MAX_QUANTITY:
            raise DataError(
                f"quantity {self.quantity} out of range 0..{MAX_QUANTITY} "
                f"(respondent {self.respondent_id}, task {self.task_id})"
            )


@dataclass(frozen=True)
class Dataset:
    """Validated choice observations plus respondent profiles and seasons."""

    schema: AttributeSchema
    observations: tuple[ChoiceObservation, ...]
    profiles: Mapping[str, RespondentProfile]
    seasons: Mapping[str, str]

    @property
    def n_respondents(self) -> int:
        return len(self.seasons)

    @property
    def n_tasks(self) -> int:
        return len({(o.respondent_id, o.task_id) for o in self.observations})

    @property
    def n_observations(self) -> int:
        return len(self.observations)

    def validate(self) -> None:
        """Enforce the structural invariants of the panel."""
        if not self.observations:
            raise DataError("dataset has no observations")
        seen: set[tuple[str, str, int]] = set()
        per_task: dict[tuple[str, str], int] = {}
        tasks_per_resp: dict[str, set[str]] = {}
        for obs in self.observations:
            key = (obs.respondent_id, obs.task_id, obs.alt_index)
            if key in seen:
                raise DataError(f"duplicate (respondent, task, alternative) {key}")
            seen.add(key)
            per_task[key[:2]] = per_task.get(key[:2], 0) + 1
            tasks_per_resp.setdefault(obs.respondent_id, set()).add(obs.task_id)
            season = self.seasons.get(obs.respondent_id)
            if season is None:
                raise DataError(f"respondent {obs.respondent_id} has no season assignment")
            if obs.row.season != season:
                raise DataError(
                    f"respondent {obs.respondent_id} appears in two seasons "
                    f"({season} and {obs.row.season})"
                )
        for task, count in per_task.items():
            if count != ALTS_PER_TASK:
                raise DataError(f"task {task} has {count} alternatives, expected {ALTS_PER_TASK}")
        for rid, tasks in tasks_per_resp.items():
            if len(tasks) != TASKS_PER_RESPONDENT:
                raise DataError(
                    f"respondent {rid} has {len(tasks)} tasks, expected {TASKS_PER_RESPONDENT}"
                )
        if self.profiles:
            missing = set(tasks_per_resp) - set(self.profiles)
            if missing:
                raise DataError(f"respondents without profiles: {sorted(missing)[:5]}")

    def subset_season(self, season: str) -> "Dataset":
        keep = {rid for rid, s in self.seasons.items() if s == season}
        return Dataset(
            schema=self.schema,
            observations=tuple(o for o in self.observations if o.respondent_id in keep),
            profiles={r: p for r, p in self.profiles.items() if r in keep},
            seasons={r: s for r, s in self.seasons.items() if r in keep},
        )


def load_dataset(choices_path, respondents_path, schema: AttributeSchema) -> Dataset:
    """Load and validate the two CSV files against ``schema``.

    Raises DataError on malformed rows, out-of-range quantities, duplicate
    (respondent, task, alternative) keys, or a respondent appearing in two
    seasons.
    """
    profiles: dict[str, RespondentProfile] = {}
    if respondents_path is not None:
        with open(respondents_path, newline="", encoding="utf-8") as fh:
            reader = csv.DictReader(fh)
            _check_header(reader.fieldnames, RESPONDENT_COLUMNS, respondents_path)
            for i, rec in enumerate(reader, start=2):
                rid = rec["respondent_id"]
                if rid in profiles:
                    raise DataError(f"{respondents_path}: duplicate respondent {rid!r}")
                try:
                    profiles[rid] = RespondentProfile(
                        education=rec["education"],
                        dwelling=rec["dwelling"],
                        household_size=int(rec["household_size"]),
                        income_bracket=rec["income_bracket"],
                        state=rec["state"],
                        purchase_frequency=rec["purchase_frequency"],
                        gender=rec["gender"],
                        age_bracket=rec["age_bracket"],
                        household_type=rec["household_type"],
                    )
                except (KeyError, ValueError, DataError) as exc:
                    raise DataError(f"{respondents_path} line {i}: {exc}") from exc

    observations: list[ChoiceObservation] = []
    seasons: dict[str, str] = {}
    with open(choices_path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        _check_header(reader.fieldnames, CHOICE_COLUMNS, choices_path)
        for i, rec in enumerate(reader, start=2):
            try:
                observations.append(_parse_choice_row(rec, schema))
            except (SchemaError, DataError, ValueError, KeyError) as exc:
                raise DataError(f"{choices_path} line {i}: {exc}") from exc
            obs = observations[-1]
            prior = seasons.setdefault(obs.respondent_id, obs.row.season)
            if prior != obs.row.season:
                raise DataError(
                    f"{choices_path} line {i}: respondent {obs.respondent_id} "
                    f"assigned to two seasons ({prior}, {obs.row.season})"
                )
    dataset = Dataset(
        schema=schema, observations=tuple(observations), profiles=profiles, seasons=seasons
    )
    dataset.validate()
    return dataset


def _check_header(found, expected: Sequence[str], path) -> None:
    if found is None or tuple(found) != tuple(expected):
        raise DataError(f"{path}: header mismatch; expected {','.join(expected)}")


def _parse_choice_row(rec: Mapping[str, str], schema: AttributeSchema) -> ChoiceObservation:
    cut = rec["cut"]
    season = rec["season"]
    product: dict[str, object] = {}
    for attr in schema.attributes:
        raw = rec.get(attr.name, "")
        if not schema.applies(attr.name, cut):
            if raw not in ("", None):
                raise DataError(f"attribute {attr.name!r} supplied for cut {cut!r}")
            continue
        if raw in ("", None):
            raise DataError(f"missing value for attribute {attr.name!r}")
        product[attr.name] = float(raw) if attr.is_continuous else raw
    quantity = int(rec["quantity"])
    if not 0 <= quantity <= MAX_QUANTITY:
        raise DataError(f"quantity {quantity} out of range 0..{MAX_QUANTITY}")
    return ChoiceObservation(
        respondent_id=rec["respondent_id"],
        task_id=rec["task_id"],
        alt_index=int(rec["alt_index"]),
        row=build_design_row(schema, cut, season, product),
        quantity=quantity,
    )


def write_choices_csv(path, schema: AttributeSchema, observations: Iterable[ChoiceObservation]) -> None:
    """Write observations in the documented choices CSV layout."""
    from .schema import decode_design_row

    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(CHOICE_COLUMNS)
        for obs in observations:
            row = obs.row
            rec: dict[str, object] = {
                "respondent_id": obs.respondent_id,
                "task_id": obs.task_id,
                "alt_index": obs.alt_index,
                "cut": row.cut,
                "season": row.season,
                "quantity": obs.quantity,
            }
            for attr, value in decode_design_row(schema, row).items():
                rec[attr] = value if isinstance(value, str) else repr(float(value))
            writer.writerow([rec.get(c, "") for c in CHOICE_COLUMNS])


def write_respondents_csv(path, profiles: Mapping[str, RespondentProfile]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(RESPONDENT_COLUMNS)
        for rid in profiles:
            p = profiles[rid]
            writer.writerow(
                [
                    rid,
                    p.education,
                    p.dwelling,
                    p.household_size,
                    p.income_bracket,
                    p.state,
                    p.purchase_frequency,
                    p.gender,
                    p.age_bracket,
                    p.household_type,
                ]
            )


# -- covariate coding ----------------------------------------------------


class CovariateCoder:
    """Effects coding of respondent profiles with fixed index standardization.

    The income and age bracket indices are centered and scaled using the
    bundled population marginals, so the coding is a pure function of the
    profile (the same profile always codes to the same vector).
    """

    def __init__(self, marginals: Mapping[str, Mapping[str, float]]):
        self.marginals = marginals
        self.income_mean, self.income_std = _index_moments(marginals["income_bracket"], INCOME_BRACKETS)
        self.age_mean, self.age_std = _index_moments(marginals["age_bracket"], AGE_BRACKETS)

    def income_index(self, bracket: str) -> float:
        return (INCOME_BRACKETS.index(bracket) + 1 - self.income_mean) / self.income_std

    def age_index(self, bracket: str) -> float:
        return (AGE_BRACKETS.index(bracket) + 1 - self.age_mean) / self.age_std

    def covariate_row(self, profile: RespondentProfile) -> np.ndarray:
        """Return the coded covariate vector z (order: COVARIATE_COLUMNS)."""
        z = np.zeros(len(COVARIATE_COLUMNS))
        _effects(z, 0, EDUCATION_LEVELS, EDUCATION_BASE, profile.education, 3)
        _effects(z, 3, DWELLING_LEVELS, DWELLING_BASE, profile.dwelling, 1)
        z[4] = float(profile.household_size)
        z[5] = self.income_index(profile.income_bracket) ** 2
        _effects(z, 6, STATE_LEVELS, STATE_BASE, profile.state, 1)
        _effects(z, 7, FREQUENCY_LEVELS, FREQUENCY_BASE, profile.purchase_frequency, 3)
        _effects(z, 10, GENDER_LEVELS, GENDER_BASE, profile.gender, 1)
        z[11] = self.age_index(profile.age_bracket)
        _effects(z, 12, HOUSEHOLD_TYPES, HOUSEHOLD_TYPE_BASE, profile.household_type, 3)
        return z


def _effects(z: np.ndarray, offset: int, levels: Sequence[str], base: str, value: str, width: int) -> None:
    columns = [lv for lv in levels if lv != base]
    assert len(columns) == width
    if value == base:
        z[offset : offset + width] = -1.0
    else:
        z[offset + columns.index(value)] = 1.0


def _index_moments(freq: Mapping[str, float], order: Sequence[str]) -> tuple[float, float]:
    ranks = np.arange(1, len(order) + 1, dtype=float)
    p = np.array([freq[name] for name in order])
    p = p / p.sum()
    mean = float(p @ ranks)
    std = float(np.sqrt(p @ (ranks - mean) ** 2))
    return mean, std


_default_coder: CovariateCoder | None = None


def default_coder() -> CovariateCoder:
    global _default_coder
    if _default_coder is None:
        from .fixtures import load_demographics

        _default_coder = CovariateCoder(load_demographics())
    return _default_coder


def covariate_row(profile: RespondentProfile) -> np.ndarray:
    """Code ``profile`` with the bundled standardization constants."""
    return default_coder().covariate_row(profile)
