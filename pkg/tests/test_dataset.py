import csv

import numpy as np
import pytest

from quantal_market.dataset import (
    CHOICE_COLUMNS,
    COVARIATE_COLUMNS,
    RespondentProfile,
    covariate_row,
    default_coder,
    load_dataset,
    write_choices_csv,
    write_respondents_csv,
)
from quantal_market.errors import DataError
from quantal_market.fixtures import load_schema
from quantal_market.likelihood import published_model_spec
from quantal_market.fixtures import load_params
from quantal_market.synthetic import simulate_dataset


@pytest.fixture(scope="module")
def schema():
    return load_schema()


@pytest.fixture(scope="module")
def small_dataset(schema):
    spec = published_model_spec(schema)
    return simulate_dataset(load_params(), spec, n_respondents=12, seed=99)


def _write(dataset, schema, tmp_path):
    choices = tmp_path / "choices.csv"
    respondents = tmp_path / "respondents.csv"
    write_choices_csv(choices, schema, dataset.observations)
    write_respondents_csv(respondents, dataset.profiles)
    return choices, respondents


def test_csv_round_trip(schema, small_dataset, tmp_path):
    choices, respondents = _write(small_dataset, schema, tmp_path)
    loaded = load_dataset(choices, respondents, schema)
    assert loaded.n_respondents == small_dataset.n_respondents
    assert loaded.n_tasks == small_dataset.n_tasks
    assert loaded.n_observations == small_dataset.n_observations
    assert loaded.n_observations == loaded.n_respondents * 4 * 4
    first = loaded.observations[0]
    orig = small_dataset.observations[0]
    assert first.row.coded == orig.row.coded
    assert first.quantity == orig.quantity


def test_empty_choices_rejected(schema, tmp_path):
    path = tmp_path / "choices.csv"
    with open(path, "w", newline="") as fh:
        csv.writer(fh).writerow(CHOICE_COLUMNS)
    with pytest.raises(DataError, match="no observations"):
        load_dataset(path, None, schema)


def test_quantity_out_of_range(schema, small_dataset, tmp_path):
    choices, respondents = _write(small_dataset, schema, tmp_path)
    rows = choices.read_text().splitlines()
    parts = rows[1].split(",")
    parts[-1] = "11"
    rows[1] = ",".join(parts)
    choices.write_text("\n".join(rows) + "\n")
    with pytest.raises(DataError, match="quantity"):
        load_dataset(choices, respondents, schema)


def test_duplicate_alternative_rejected(schema, small_dataset, tmp_path):
    choices, respondents = _write(small_dataset, schema, tmp_path)
    rows = choices.read_text().splitlines()
    rows.append(rows[1])
    choices.write_text("\n".join(rows) + "\n")
    with pytest.raises(DataError, match="duplicate|alternatives"):
        load_dataset(choices, respondents, schema)


def test_two_seasons_rejected(schema, small_dataset, tmp_path):
    choices, respondents = _write(small_dataset, schema, tmp_path)
    rows = choices.read_text().splitlines()
    header = rows[0].split(",")
    season_col = header.index("season")
    parts = rows[1].split(",")
    parts[season_col] = "summer" if parts[season_col] == "winter" else "winter"
    rows[1] = ",".join(parts)
    choices.write_text("\n".join(rows) + "\n")
    with pytest.raises(DataError, match="season"):
        load_dataset(choices, respondents, schema)


def test_study_scale_counts(schema):
    spec = published_model_spec(schema)
    dataset = simulate_dataset(load_params(), spec, n_respondents=946, seed=1)
    assert dataset.n_respondents == 946
    assert dataset.n_tasks == 946 * 4  # 3784 tasks
    assert dataset.n_observations == 946 * 4 * 4


class TestCovariateRow:
    def test_base_levels_code_minus_one(self):
        profile = RespondentProfile(
            education="associate",
            dwelling="renting",
            household_size=2,
            income_bracket="50k_75k",
            state="other",
            purchase_frequency="once_month",
            gender="male",
            age_bracket="35_44",
            household_type="one_parent",
        )
        z = covariate_row(profile)
        by_name = dict(zip(COVARIATE_COLUMNS, z))
        assert by_name["edu_graduate"] == -1.0
        assert by_name["edu_bachelor"] == -1.0
        assert by_name["edu_college_or_less"] == -1.0
        assert by_name["dwelling_owned"] == -1.0
        assert by_name["state_new_york"] == -1.0
        assert by_name["freq_two_plus_week"] == -1.0
        assert by_name["gender_female"] == -1.0
        assert by_name["htype_one_parent"] == 1.0
        assert by_name["htype_couple_no_children"] == 0.0

    def test_income_square_zero_at_mean(self):
        coder = default_coder()
        # centering: the squared index vanishes exactly at the population mean
        assert ((coder.income_mean - coder.income_mean) / coder.income_std) ** 2 == 0.0
        # and is strictly positive away from it
        assert coder.income_index("under_25k") ** 2 > 0.0
        assert coder.income_index("over_150k") ** 2 > 0.0

    def test_deterministic_and_stable(self):
        profile = RespondentProfile(
            education="graduate",
            dwelling="owned",
            household_size=4,
            income_bracket="75k_100k",
            state="new_york",
            purchase_frequency="once_week",
            gender="female",
            age_bracket="25_34",
            household_type="single_person",
        )
        z1 = covariate_row(profile)
        z2 = covariate_row(profile)
        np.testing.assert_array_equal(z1, z2)

    def test_invalid_category_rejected(self):
        with pytest.raises(DataError):
            RespondentProfile(
                education="phd",
                dwelling="owned",
                household_size=4,
                income_bracket="75k_100k",
                state="new_york",
                purchase_frequency="once_week",
                gender="female",
                age_bracket="25_34",
                household_type="single_person",
            )
