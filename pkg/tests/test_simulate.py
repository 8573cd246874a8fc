import numpy as np
import pytest

from quantal_market.dataset import RespondentProfile
from quantal_market.errors import DataError, NumericalError, SchemaError
from quantal_market.fixtures import common_scenario, load_params, load_schema
from quantal_market.likelihood import ParameterSet, category_probs
from quantal_market.simulate import Scenario, forecast, price_sweep, seasonal_compare


@pytest.fixture(scope="module")
def params():
    return load_params()


@pytest.fixture(scope="module")
def schema():
    return load_schema()


PROFILE = RespondentProfile(
    education="bachelor",
    dwelling="owned",
    household_size=3,
    income_bracket="75k_100k",
    state="new_york",
    purchase_frequency="once_week",
    gender="female",
    age_bracket="35_44",
    household_type="couple_with_children",
)


def test_zero_betas_gives_zero_utility_distribution(schema, params):
    flat = ParameterSet(schema=schema)
    flat.asc[("ground", "winter")] = 0.0
    flat.tau["ground"] = np.asarray(params.tau["ground"])
    scenario = common_scenario("ground", "winter", schema)
    result = forecast(flat, scenario)
    expected = category_probs(0.0, params.tau["ground"], 1.0)
    np.testing.assert_allclose(result.probabilities, expected, atol=1e-12)
    assert result.zero_purchase_probability == pytest.approx(0.5, abs=1e-12)


def test_moment_identities(params, schema):
    scenario = common_scenario("sirloin", "summer", schema)
    result = forecast(params, scenario)
    probs = np.asarray(result.probabilities)
    assert probs.sum() == pytest.approx(1.0, abs=1e-9)
    assert result.expected_quantity == pytest.approx(float(probs @ np.arange(11)), abs=1e-12)
    assert 0.0 <= result.expected_quantity <= 10.0
    assert result.zero_purchase_probability == probs[0]
    assert result.expected_revenue == pytest.approx(scenario.price * result.expected_quantity)


def test_profile_vs_population(params, schema):
    scenario = common_scenario("roast", "winter", schema)
    single = forecast(params, Scenario(**{**scenario.__dict__, "profile": PROFILE}))
    population = forecast(params, scenario)
    assert single.probabilities != population.probabilities


def test_mixture_linearity(params, schema):
    base = common_scenario("flank", "summer", schema)
    other = RespondentProfile(
        education="college_or_less",
        dwelling="renting",
        household_size=1,
        income_bracket="under_25k",
        state="other",
        purchase_frequency="once_month",
        gender="male",
        age_bracket="65_plus",
        household_type="single_person",
    )
    mixture = forecast(
        params, Scenario(**{**base.__dict__, "profile": ((0.3, PROFILE), (0.7, other))})
    )
    a = forecast(params, Scenario(**{**base.__dict__, "profile": PROFILE}))
    b = forecast(params, Scenario(**{**base.__dict__, "profile": other}))
    expected = 0.3 * np.asarray(a.probabilities) + 0.7 * np.asarray(b.probabilities)
    np.testing.assert_allclose(mixture.probabilities, expected, atol=1e-12)


def test_missing_parameters_rejected(params, schema):
    scenario = common_scenario("ground", "winter", schema)
    missing = ParameterSet(schema=schema)
    with pytest.raises(NumericalError):
        forecast(missing, scenario)


def test_invalid_scenario_rejected(schema):
    with pytest.raises(SchemaError):
        Scenario(cut="ground", season="winter", levels={}, price=-1.0, weight=12.0)


class TestPriceSweep:
    def test_single_point(self, params, schema):
        scenario = common_scenario("ground", "winter", schema)
        sweep = price_sweep(params, scenario, [8.0])
        assert len(sweep.points) == 1
        assert sweep.argmax_price == 8.0
        assert sweep.argmax_index == 0

    def test_monotone_expected_quantity(self, params, schema):
        scenario = common_scenario("ground", "winter", schema)
        sweep = price_sweep(params, scenario, np.linspace(6, 24, 19))
        quantities = [pt.expected_quantity for pt in sweep.points]
        assert all(b <= a + 1e-12 for a, b in zip(quantities, quantities[1:]))

    def test_argmax_matches_exhaustive(self, params, schema):
        scenario = common_scenario("ground", "winter", schema)
        grid = list(np.linspace(6, 24, 37))
        sweep = price_sweep(params, scenario, grid)
        revenues = [
            forecast(params, scenario.with_price(p)).expected_revenue for p in grid
        ]
        assert sweep.argmax_index == int(np.argmax(revenues))
        assert sweep.argmax_price == grid[int(np.argmax(revenues))]

    def test_grid_validation(self, params, schema):
        scenario = common_scenario("ground", "winter", schema)
        with pytest.raises(DataError):
            price_sweep(params, scenario, [])
        with pytest.raises(DataError):
            price_sweep(params, scenario, [5.0, 4.0])
        with pytest.raises(DataError):
            price_sweep(params, scenario, [-1.0, 4.0])


class TestSeasonalCompare:
    def test_identical_seasons_zero_delta(self, schema, params):
        same = ParameterSet(schema=schema)
        for cut in schema.cuts:
            same.tau[cut] = np.asarray(params.tau[cut])
            for season in schema.seasons:
                same.asc[(cut, season)] = 0.25
        scenario = common_scenario("roast", "winter", schema)
        result = seasonal_compare(same, scenario)
        assert all(d == pytest.approx(0.0, abs=1e-12) for d in result.delta_probabilities)
        assert result.delta_expected_quantity == pytest.approx(0.0, abs=1e-12)

    def test_published_directions(self, params, schema):
        # zero purchase more likely in summer for roast and diced;
        # at least one unit more likely in summer for New York strip
        for cut in ("roast", "diced"):
            result = seasonal_compare(params, common_scenario(cut, "winter", schema))
            assert result.summer.zero_purchase_probability > result.winter.zero_purchase_probability
        ny = seasonal_compare(params, common_scenario("new_york", "winter", schema))
        assert (1 - ny.summer.zero_purchase_probability) > (1 - ny.winter.zero_purchase_probability)

    def test_deltas_recomputable(self, params, schema):
        scenario = common_scenario("flap", "winter", schema)
        result = seasonal_compare(params, scenario)
        w = forecast(params, scenario.with_season("winter"))
        s = forecast(params, scenario.with_season("summer"))
        np.testing.assert_allclose(
            result.delta_probabilities,
            np.asarray(s.probabilities) - np.asarray(w.probabilities),
            atol=1e-15,
        )
