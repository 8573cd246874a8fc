"""Command-line entry point: design, synth, estimate, pooltest, wtp,
simulate, and serve subcommands.

All delimited outputs serialize floats with repr so runs are byte-identical
given the same inputs and seed; report commands optionally render a
matplotlib figure next to the delimited output.  Exit codes: 0 success,
1 usage error, 2 data/validation error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import sys

import numpy as np

from . import design as design_mod
from . import fixtures
from .dataset import load_dataset, write_choices_csv, write_respondents_csv
from .errors import DataError, NumericalError, SchemaError
from .estimate import FitOptions, fit, prune
from .likelihood import ModelSpec, ParameterSet, published_model_spec
from .pooling import pooling_test, preference_plot_data
from .schema import AttributeSchema, decode_design_row
from .simulate import (
    forecast,
    price_sweep,
    scenario_from_text,
    seasonal_compare,
)
from .synthetic import simulate_dataset
from .wtp import wtp_table

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NUMERIC = 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _float_str(x) -> str:
    return repr(float(x))


def _load_schema(path=None) -> AttributeSchema:
    return fixtures.load_schema(path)


def _load_spec(path, schema) -> ModelSpec:
    if path in (None, "published"):
        return published_model_spec(schema)
    return ModelSpec.load(path, schema)


def _load_params(path, schema) -> ParameterSet:
    if path in (None, "published"):
        return ParameterSet.load(fixtures.fixture_path("params_published.txt"), schema)
    return ParameterSet.load(path, schema)


# -- subcommands ---------------------------------------------------------


def _cmd_design(args) -> int:
    schema = _load_schema(args.schema)
    d = design_mod.generate(schema, args.tasks, args.alts, args.blocks, args.seed)
    if args.improve_iters:
        d = design_mod.improve(d, max_iters=args.improve_iters, seed=args.seed)
    diag = design_mod.diagnostics(d)
    with open(args.out, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        header = ["block", "task_id", "alt_index", "cut", "season"]
        attr_names = [a.name for a in schema.attributes]
        writer.writerow(header + attr_names)
        for t, task in enumerate(d.tasks):
            for a, row in enumerate(task, start=1):
                product = decode_design_row(schema, row)
                record = [d.blocks[t], f"t{t + 1}", a, row.cut, row.season]
                for name in attr_names:
                    value = product.get(name, "")
                    record.append(_float_str(value) if isinstance(value, float) else value)
                writer.writerow(record)
    print(f"wrote {d.n_tasks} tasks x {d.n_alts} alternatives to {args.out}")
    print(
        f"max |correlation| {diag.max_abs_correlation:.4f}"
        + (f" ({diag.worst_pair[0]} vs {diag.worst_pair[1]})" if diag.worst_pair else "")
    )
    print(f"imbalance {diag.imbalance} (exact balance possible: {diag.exact_balance_possible})")
    if args.plot:
        from .plots import save_design_correlation

        save_design_correlation(args.plot, d)
        print(f"wrote correlation heatmap to {args.plot}")
    return EXIT_OK


def _cmd_synth(args) -> int:
    schema = _load_schema(args.schema)
    spec = _load_spec(args.spec, schema)
    params = _load_params(args.params, schema)
    dataset = simulate_dataset(params, spec, args.respondents, seed=args.seed)
    write_choices_csv(args.out_choices, schema, dataset.observations)
    if args.out_respondents:
        write_respondents_csv(args.out_respondents, dataset.profiles)
    print(
        f"wrote {dataset.n_respondents} respondents, {dataset.n_tasks} tasks, "
        f"{dataset.n_observations} observations"
    )
    return EXIT_OK


def _summary_table(params: ParameterSet, schema: AttributeSchema) -> str:
    lines = []
    for season in schema.seasons:
        lines.append(f"== {season} ==")
        header = ["attribute/level"] + list(schema.cuts)
        lines.append("\t".join(header))
        asc_row = ["asc"] + [
            f"{params.asc.get((cut, season), float('nan')):.4f}" for cut in schema.cuts
        ]
        lines.append("\t".join(asc_row))
        scale_row = ["scale"] + [f"{params.scale(cut, season):.4f}" for cut in schema.cuts]
        lines.append("\t".join(scale_row))
        for attr in schema.attributes:
            keys = attr.columns() if not attr.is_continuous else ("unit",)
            for column in keys:
                row = [f"{attr.name}:{column}"]
                for cut in schema.cuts:
                    if not schema.applies(attr.name, cut):
                        row.append("n/a")
                        continue
                    beta = params.column_beta(attr.name, column, cut, season)
                    row.append("-" if beta is None else f"{beta:.4f}")
                lines.append("\t".join(row))
        lines.append("")
    return "\n".join(lines)


def _cmd_estimate(args) -> int:
    schema = _load_schema(args.schema)
    spec = _load_spec(args.spec, schema)
    dataset = load_dataset(args.choices, args.respondents, schema)
    options = FitOptions(max_iter=args.max_iter, grad_tol=args.grad_tol)
    result = fit(dataset, spec, options)
    if args.prune:
        if not result.converged:
            raise NumericalError("cannot prune a non-converged fit")
        spec, result = prune(dataset, spec, result, alpha=args.alpha)
    result.params.dump(args.out)
    status = "converged" if result.converged else "NOT converged (best-so-far)"
    print(f"{status}: log-likelihood {result.log_likelihood:.6f}")
    print(f"parameters {result.n_parameters}, iterations {result.n_iterations}, "
          f"gradient norm {result.grad_norm:.3g}")
    print(f"wrote parameters to {args.out}")
    if args.summary:
        with open(args.summary, "w", encoding="utf-8") as fh:
            fh.write(f"log-likelihood {result.log_likelihood!r}\n")
            fh.write(f"parameters {result.n_parameters}\n")
            fh.write(f"observations {dataset.n_observations}\n\n")
            fh.write(_summary_table(result.params, schema))
        print(f"wrote summary to {args.summary}")
    return EXIT_OK if result.converged else EXIT_NUMERIC


def _cmd_pooltest(args) -> int:
    schema = _load_schema(args.schema)
    spec = _load_spec(args.spec, schema)
    winter = load_dataset(args.winter_choices, args.winter_respondents, schema)
    summer = load_dataset(args.summer_choices, args.summer_respondents, schema)
    report, fits = pooling_test(winter, summer, spec, level=args.level)
    print(report.summary())
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(report.summary() + "\n")
    pairs = preference_plot_data(fits["winter"], fits["summer"])
    if args.pairs:
        with open(args.pairs, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["parameter", "winter", "summer"])
            for pid, bw, bs in pairs.rows():
                writer.writerow([pid, _float_str(bw), _float_str(bs)])
            writer.writerow(["slope_through_origin", _float_str(pairs.slope_through_origin), ""])
        print(f"wrote coefficient pairs to {args.pairs}")
    if args.plot:
        from .plots import save_preference_scatter

        save_preference_scatter(args.plot, pairs)
        print(f"wrote preference plot to {args.plot}")
    return EXIT_OK


def _cmd_wtp(args) -> int:
    schema = _load_schema(args.schema)
    params = _load_params(args.params, schema)
    table = wtp_table(params, schema)
    rows = [r for r in table.rows() if (args.cut is None or r[0] == args.cut)
            and (args.season is None or r[1] == args.season)]
    with open(args.out, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["cut", "season", "attribute", "level", "wtp_usd_per_lb"])
        for cut, season, attr, level, value in rows:
            writer.writerow([cut, season, attr, level, _float_str(value)])
    print(f"wrote {len(rows)} WTP cells to {args.out}")
    if args.plot:
        from .plots import save_wtp_bars

        cut = args.cut or schema.cuts[0]
        season = args.season or schema.seasons[0]
        save_wtp_bars(args.plot, table, cut, season)
        print(f"wrote WTP chart for {cut}/{season} to {args.plot}")
    return EXIT_OK


FORECAST_HEADER = [
    "cut",
    "season",
    "price",
    "expected_quantity",
    "zero_purchase_probability",
    "expected_revenue",
    "argmax",
] + [f"p{j}" for j in range(11)]


def _forecast_record(fc, argmax: int = 0) -> list[str]:
    return (
        [fc.cut, fc.season, _float_str(fc.price), _float_str(fc.expected_quantity),
         _float_str(fc.zero_purchase_probability), _float_str(fc.expected_revenue), str(argmax)]
        + [_float_str(p) for p in fc.probabilities]
    )


def _cmd_simulate(args) -> int:
    schema = _load_schema(args.schema)
    params = _load_params(args.params, schema)
    with open(args.scenario, "r", encoding="utf-8") as fh:
        scenario = scenario_from_text(schema, fh.read())
    records = []
    plot_payload = None
    if args.sweep:
        lo, hi, step = (float(v) for v in args.sweep.split(":"))
        grid = list(np.arange(lo, hi + 1e-9, step))
        sweep = price_sweep(params, scenario, grid)
        for k, pt in enumerate(sweep.points):
            records.append(_forecast_record(pt, argmax=int(k == sweep.argmax_index)))
        print(f"revenue-maximizing grid price: {sweep.argmax_price!r}")
        plot_payload = ("sweep", sweep)
    elif args.both_seasons:
        cmp = seasonal_compare(params, scenario)
        records.append(_forecast_record(cmp.winter))
        records.append(_forecast_record(cmp.summer))
        print(f"expected-quantity delta (summer - winter): {cmp.delta_expected_quantity!r}")
        plot_payload = ("compare", cmp)
    else:
        fc = forecast(params, scenario)
        records.append(_forecast_record(fc))
        print(
            f"expected quantity {fc.expected_quantity!r}, "
            f"zero-purchase probability {fc.zero_purchase_probability!r}"
        )
        plot_payload = ("single", fc)
    with open(args.out, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(FORECAST_HEADER)
        writer.writerows(records)
    print(f"wrote forecast to {args.out}")
    if args.plot:
        from .plots import save_forecast_distribution, save_revenue_curve

        kind, payload = plot_payload
        if kind == "sweep":
            save_revenue_curve(args.plot, payload)
        elif kind == "compare":
            save_forecast_distribution(args.plot, [payload.winter, payload.summer])
        else:
            save_forecast_distribution(args.plot, [payload])
        print(f"wrote figure to {args.plot}")
    return EXIT_OK


def _cmd_serve(args) -> int:
    from .service import ScenarioService, serve

    schema = _load_schema(args.schema)
    params = _load_params(args.params, schema)
    host, _, port = args.listen.rpartition(":")
    service = ScenarioService(schema, params)
    serve(service, host or "127.0.0.1", int(port), quiet=args.quiet)
    return EXIT_OK


# -- parser ----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="quantal-market",
        description="Quantity-response choice experiment toolkit",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("design", parents=[], help="generate a balanced blocked design")
    p.add_argument("--tasks", type=int, default=200)
    p.add_argument("--alts", type=int, default=4)
    p.add_argument("--blocks", type=int, default=50)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--improve-iters", type=int, default=2000)
    p.add_argument("--schema", default=None, help="schema fixture path (default: bundled)")
    p.add_argument("--out", required=True)
    p.add_argument("--plot", default=None, help="write a correlation heatmap PNG")
    p.set_defaults(func=_cmd_design)

    p = sub.add_parser("synth", help="simulate a synthetic dataset from parameters")
    p.add_argument("--params", default="published")
    p.add_argument("--spec", default="published")
    p.add_argument("--schema", default=None)
    p.add_argument("--respondents", type=int, default=946)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-choices", required=True)
    p.add_argument("--out-respondents", default=None)
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("estimate", help="fit the scale-adjusted ordered logit")
    p.add_argument("--choices", required=True)
    p.add_argument("--respondents", default=None)
    p.add_argument("--spec", default="published")
    p.add_argument("--schema", default=None)
    p.add_argument("--out", required=True)
    p.add_argument("--summary", default=None)
    p.add_argument("--prune", action="store_true")
    p.add_argument("--alpha", type=float, default=0.10)
    p.add_argument("--max-iter", type=int, default=500)
    p.add_argument("--grad-tol", type=float, default=1e-5)
    p.set_defaults(func=_cmd_estimate)

    p = sub.add_parser("pooltest", help="Swait-Louviere pooling test across seasons")
    p.add_argument("--winter-choices", required=True)
    p.add_argument("--winter-respondents", default=None)
    p.add_argument("--summer-choices", required=True)
    p.add_argument("--summer-respondents", default=None)
    p.add_argument("--spec", required=True)
    p.add_argument("--schema", default=None)
    p.add_argument("--level", type=float, default=0.01)
    p.add_argument("--out", default=None)
    p.add_argument("--pairs", default=None)
    p.add_argument("--plot", default=None)
    p.set_defaults(func=_cmd_pooltest)

    p = sub.add_parser("wtp", help="willingness-to-pay table")
    p.add_argument("--params", default="published")
    p.add_argument("--schema", default=None)
    p.add_argument("--cut", default=None)
    p.add_argument("--season", default=None)
    p.add_argument("--out", required=True)
    p.add_argument("--plot", default=None)
    p.set_defaults(func=_cmd_wtp)

    p = sub.add_parser("simulate", help="forecast purchases for a scenario")
    p.add_argument("--params", default="published")
    p.add_argument("--schema", default=None)
    p.add_argument("--scenario", required=True)
    p.add_argument("--sweep", default=None, metavar="LO:HI:STEP")
    p.add_argument("--both-seasons", action="store_true")
    p.add_argument("--out", required=True)
    p.add_argument("--plot", default=None)
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("serve", help="run the HTTP scenario service")
    p.add_argument("--params", default="published")
    p.add_argument("--schema", default=None)
    p.add_argument("--listen", default="127.0.0.1:8080")
    p.add_argument("--quiet", action="store_true")
    p.set_defaults(func=_cmd_serve)

    return parser


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (SchemaError, DataError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except NumericalError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
