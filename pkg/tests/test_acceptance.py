"""Acceptance suite: one test per criterion, each printing a pass/fail line.

Run with `pytest tests/test_acceptance.py -v -s` to see the per-criterion
summary lines.  Monte Carlo criteria use pinned seeds so the suite is
deterministic.
"""

import json
import math
import threading
import time
import urllib.request

import numpy as np
import pytest

from quantal_market.design import diagnostics, generate, improve
from quantal_market.estimate import FitOptions, fit
from quantal_market.fixtures import (
    common_scenario,
    load_params,
    load_schema,
    load_wtp_table,
)
from quantal_market.likelihood import (
    LikelihoodProblem,
    ModelSpec,
    ParameterSet,
    category_probs,
    published_model_spec,
)
from quantal_market.pooling import pooling_test
from quantal_market.simulate import forecast, scenario_to_mapping, seasonal_compare
from quantal_market.synthetic import simulate_dataset
from quantal_market.wtp import interval_consistency, wtp, wtp_interval

from conftest import make_toy_schema, make_toy_spec, make_toy_truth


def _report(name: str, ok: bool, detail: str) -> None:
    print(f"\n[{'PASS' if ok else 'FAIL'}] {name}: {detail}")
    assert ok, f"{name}: {detail}"


def test_criterion_1_wtp_reconciliation():
    """Every populated published WTP cell is rounding-consistent with -b/b_price."""
    t0 = time.time()
    params = load_params()
    checked = failures = 0
    for season in ("winter", "summer"):
        published = load_wtp_table(season)
        for (cut, _, attr, level), reported in published.items():
            effect = params.level_effect(cut, season, attr, None if level == "unit" else level)
            price = abs(params.beta[("price", "unit", cut, None)])
            if effect == 0.0:
                if reported != 0.0:
                    failures += 1
                continue
            checked += 1
            if not interval_consistency(round(effect, 3), price, reported, 3):
                failures += 1
    spot = wtp(params, "ground", "winter", "fat_colour", "white")
    lo, hi = wtp_interval(0.196, 0.004, 3)
    elapsed = time.time() - t0
    ok = (
        failures == 0
        and checked >= 150
        and round(spot, 2) == 3.14
        and abs(lo - 43.4) < 0.1
        and abs(hi - 56.1) < 0.1
        and lo <= 47.52 <= hi
        and elapsed < 1.0
    )
    _report(
        "criterion 1 (WTP reconciliation)",
        ok,
        f"{checked} cells checked, {failures} failures, spot fat-white={spot:.2f}, "
        f"antibiotic interval [{lo:.1f}, {hi:.1f}], {elapsed:.2f}s",
    )


def test_criterion_2_probability_law():
    """10k random feasible points: unit mass, positivity, monotone shift."""
    rng = np.random.default_rng(20240801)
    worst_sum = 0.0
    min_prob = 1.0
    shift_violation = 0.0
    for _ in range(10_000):
        start = rng.uniform(-2.0, 2.0)
        tau = start + np.concatenate(([0.0], np.cumsum(rng.uniform(0.05, 1.5, size=9))))
        w = rng.uniform(-15.0, 15.0)
        lam = rng.uniform(0.2, 5.0)
        probs = category_probs(w, tau, lam)
        worst_sum = max(worst_sum, abs(float(probs.sum()) - 1.0))
        min_prob = min(min_prob, float(probs.min()))
        shifted = category_probs(w + 0.5, tau, lam)
        shift_violation = max(
            shift_violation, float(np.max(np.cumsum(shifted) - np.cumsum(probs)))
        )
    ok = worst_sum < 1e-12 and min_prob > 0.0 and shift_violation <= 1e-12
    _report(
        "criterion 2 (probability law)",
        ok,
        f"worst |sum-1|={worst_sum:.2e}, min p={min_prob:.2e}, "
        f"worst CDF increase under W+0.5 = {shift_violation:.2e}",
    )


def test_criterion_3_gradient_fidelity():
    """Analytic gradient vs central differences on a ~200-observation panel."""
    schema = make_toy_schema()
    spec = make_toy_spec(
        schema,
        covariates=("household_size", "gender_female"),
        free_scales=(("strip", "summer"),),
        n_categories=11,
    )
    truth = make_toy_truth(schema, mu={("strip", "summer"): 0.3})
    dataset = simulate_dataset(truth, spec, n_respondents=13, seed=31)  # 208 observations
    problem = LikelihoodProblem(dataset, spec)
    rng = np.random.default_rng(77)
    h = 1e-5
    worst = 0.0
    for _ in range(20):
        theta = rng.normal(scale=0.3, size=problem.n_parameters)
        _, analytic = problem.loglik_grad(theta)
        fd = np.empty_like(analytic)
        for i in range(len(theta)):
            up, down = theta.copy(), theta.copy()
            up[i] += h
            down[i] -= h
            fd[i] = (problem.loglik(up) - problem.loglik(down)) / (2 * h)
        rel = np.abs(analytic - fd) / np.maximum(1.0, np.abs(fd))
        worst = max(worst, float(rel.max()))
    ok = worst < 1e-5
    _report(
        "criterion 3 (gradient fidelity)",
        ok,
        f"{dataset.n_observations} observations, 20 random points, max relative error {worst:.2e}",
    )


def test_criterion_4_parameter_recovery():
    """Refit of published-model-sized synthetic data recovers the generating values."""
    t0 = time.time()
    schema = load_schema()
    spec = published_model_spec(schema)
    truth = load_params()
    dataset = simulate_dataset(truth, spec, n_respondents=1000, seed=7)
    result = fit(dataset, spec, FitOptions(max_iter=1500))
    problem = LikelihoodProblem(dataset, spec)
    truth_theta = dict(zip(problem.parameter_names(), problem.params_to_theta(truth)))
    estimates = result.natural_values()
    tested = 0
    out_of_band = []
    for name, true_value in truth_theta.items():
        if name.startswith("delta:") or abs(true_value) < 0.05:
            continue
        z = abs(estimates[name] - true_value) / result.se[name]
        tested += 1
        if z > 3.0:
            out_of_band.append((name, z))
    monotone = all(np.all(np.diff(result.params.tau[c]) > 0) for c in schema.cuts)
    elapsed = time.time() - t0
    ok = (
        result.converged
        and result.se_available
        and tested >= 100
        and not out_of_band
        and monotone
        and elapsed < 300.0
    )
    _report(
        "criterion 4 (parameter recovery)",
        ok,
        f"{dataset.n_observations} obs, {result.n_parameters} params, {tested} coefficients "
        f"tested, {len(out_of_band)} outside 3 SEs, thresholds increasing={monotone}, "
        f"{elapsed:.0f}s",
    )


N_CATS_POOL = 4


def _pooling_toy():
    schema = make_toy_schema(cuts=("strip",))
    spec = ModelSpec(
        schema=schema,
        bindings={
            "colour": "generic",
            "certified": "cut",
            "use_by": "excluded",
            "weight": "excluded",
            "price": "cut",
        },
        asc="cut",
        n_categories=N_CATS_POOL,
    )
    return schema, spec


def _pooling_truth(schema, *, summer_scale=1.0, colour_shift=0.0):
    params = ParameterSet(schema=schema, n_categories=N_CATS_POOL)
    for cut in schema.cuts:
        params.tau[cut] = np.array([0.0, 0.9, 1.8])
        for season in schema.seasons:
            params.asc[(cut, season)] = 0.8
        params.beta[("certified", "yes", cut, None)] = 0.4
        params.beta[("price", "unit", cut, None)] = -0.04
    params.beta[("colour", "red", None, None)] = 0.5
    if colour_shift:
        params.beta[("colour", "red", None, "summer")] = 0.5 + colour_shift
    if summer_scale != 1.0:
        for cut in schema.cuts:
            params.mu[(cut, "summer")] = math.log(summer_scale)
    return params


def test_criterion_5_pooling_monte_carlo():
    """Scale-only differences pool; a 5-SE beta shift is rejected."""
    schema, spec = _pooling_toy()
    options = FitOptions(compute_se=False)
    n_resp = 120

    # calibrate the between-season difference SE of the shifted beta once
    pilot = simulate_dataset(
        _pooling_truth(schema), spec, n_resp, seed=424242, seasons=("winter",)
    )
    pilot_fit = fit(pilot, spec.for_single_season("winter"))
    shift = 5.0 * math.sqrt(2.0) * pilot_fit.se["b:colour:red"]

    n_reps = 50
    pooled = rejected = 0
    for rep in range(n_reps):
        truth_null = _pooling_truth(schema, summer_scale=1.5)
        winter = simulate_dataset(truth_null, spec, n_resp, seed=1000 + rep, seasons=("winter",))
        summer = simulate_dataset(truth_null, spec, n_resp, seed=60_000 + rep, seasons=("summer",))
        report, _ = pooling_test(winter, summer, spec, level=0.01, options=options)
        pooled += report.poolable

        truth_alt = _pooling_truth(schema, colour_shift=shift)
        winter = simulate_dataset(truth_alt, spec, n_resp, seed=2000 + rep, seasons=("winter",))
        summer = simulate_dataset(truth_alt, spec, n_resp, seed=70_000 + rep, seasons=("summer",))
        report, _ = pooling_test(winter, summer, spec, level=0.01, options=options)
        rejected += not report.poolable

    ok = pooled >= 45 and rejected >= 45
    _report(
        "criterion 5 (pooling Monte Carlo)",
        ok,
        f"same-preference/scale-1.5 pooled {pooled}/50 (need >=45); "
        f"5-SE shift (delta={shift:.3f}) rejected {rejected}/50 (need >=45)",
    )


def test_criterion_6_seasonal_directions():
    """Published seasonal directions hold under the common scenario."""
    params = load_params()
    schema = load_schema()
    roast = seasonal_compare(params, common_scenario("roast", "winter", schema))
    diced = seasonal_compare(params, common_scenario("diced", "winter", schema))
    ny = seasonal_compare(params, common_scenario("new_york", "winter", schema))
    roast_ok = roast.summer.zero_purchase_probability > roast.winter.zero_purchase_probability
    diced_ok = diced.summer.zero_purchase_probability > diced.winter.zero_purchase_probability
    ny_ok = (1 - ny.summer.zero_purchase_probability) > (1 - ny.winter.zero_purchase_probability)
    ok = roast_ok and diced_ok and ny_ok
    _report(
        "criterion 6 (seasonal directions)",
        ok,
        f"P0 roast {roast.winter.zero_purchase_probability:.3f}->"
        f"{roast.summer.zero_purchase_probability:.3f}, "
        f"diced {diced.winter.zero_purchase_probability:.3f}->"
        f"{diced.summer.zero_purchase_probability:.3f}, "
        f"P(>=1) new_york {1 - ny.winter.zero_purchase_probability:.3f}->"
        f"{1 - ny.summer.zero_purchase_probability:.3f}",
    )


def test_criterion_7_design_quality():
    """200-task design: balance within one, cross-attribute |corr| <= 0.1."""
    schema = load_schema()
    design = generate(schema, n_tasks=200, n_alts=4, n_blocks=50, seed=20)
    improved = improve(design, max_iters=3000, seed=20)
    diag = diagnostics(improved)
    spreads_ok = all(
        max(counts.values()) - min(counts.values()) <= 1
        for counts in diag.frequencies.values()
    )
    again = improve(generate(schema, n_tasks=200, n_alts=4, n_blocks=50, seed=20),
                    max_iters=3000, seed=20)
    deterministic = again == improved
    ok = spreads_ok and diag.max_abs_correlation <= 0.1 and deterministic
    _report(
        "criterion 7 (design quality)",
        ok,
        f"per-level spread <= 1: {spreads_ok}, max |corr| = {diag.max_abs_correlation:.4f}, "
        f"deterministic: {deterministic}",
    )


def test_criterion_8_service_equivalence(tmp_path):
    """POST /simulate equals CLI simulate output at full serialized precision."""
    import csv

    from quantal_market.cli import run
    from quantal_market.service import ScenarioService, make_server

    schema = load_schema()
    params = load_params()
    server = make_server(ScenarioService(schema, params), "127.0.0.1", 0)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    host, port = server.server_address
    url = f"http://{host}:{port}/simulate"

    scenarios = []
    for i, cut in enumerate(schema.cuts):
        scenarios.append(common_scenario(cut, "winter", schema))
        scenarios.append(common_scenario(cut, "summer", schema))
    scenarios = scenarios[:18]
    for price in (8.0, 20.0):
        base = common_scenario("ground", "winter", schema)
        scenarios.append(base.with_price(price))
    assert len(scenarios) == 20

    mismatches = 0
    try:
        for k, scenario in enumerate(scenarios):
            text = [f"cut = {scenario.cut}", f"season = {scenario.season}",
                    f"price = {scenario.price!r}", f"weight = {scenario.weight!r}"]
            for attr, level in scenario.levels.items():
                text.append(f"{attr} = {level}")
            scenario_file = tmp_path / f"s{k}.txt"
            scenario_file.write_text("\n".join(text) + "\n")
            out = tmp_path / f"f{k}.csv"
            assert run(["simulate", "--scenario", str(scenario_file), "--out", str(out)]) == 0
            with open(out) as fh:
                row = next(csv.DictReader(fh))

            request = urllib.request.Request(
                url,
                data=json.dumps(scenario_to_mapping(scenario)).encode(),
                headers={"Content-Type": "application/json"},
                method="POST",
            )
            with urllib.request.urlopen(request, timeout=30) as response:
                payload = json.loads(response.read())["forecast"]

            fields = {
                "price": payload["price"],
                "expected_quantity": payload["expected_quantity"],
                "zero_purchase_probability": payload["zero_purchase_probability"],
                "expected_revenue": payload["expected_revenue"],
            }
            for name, value in fields.items():
                if row[name] != repr(float(value)):
                    mismatches += 1
            for j, p in enumerate(payload["probabilities"]):
                if row[f"p{j}"] != repr(float(p)):
                    mismatches += 1
    finally:
        server.shutdown()
        server.server_close()
        thread.join(timeout=5)
    ok = mismatches == 0
    _report(
        "criterion 8 (service equivalence)",
        ok,
        f"20 scenarios, {mismatches} serialized-number mismatches",
    )
