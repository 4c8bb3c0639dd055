import argparse
import json
import sys
from dataclasses import replace
import numpy as np
import Windcast.ForecastController as ForecastCtrl
import Windcast.Views.ReportView as ReportView
from Windcast.Models import ForecastUtilities, Metrics, Pipeline
from Windcast.Models.Config import VARIANTS, load_config
from Windcast.Models.Errors import WindcastError, exit_code_for
from Windcast.Models.Logger import CSVLogger, set_verbose
from Windcast.Models.Svmd import decompose
from Windcast.Optimizers import Benchmarks
from Windcast.Optimizers.Swarms import SWARMS


def parse_arguments(argv=None):
    """ Parse the arguments provided with the start command

    Returns
    -------
    argparse.Namespace
        The parsed arguments
    """
    parser = argparse.ArgumentParser(prog="windcast", description="Decomposition-ensemble wind speed forecasting")
    parser.add_argument("--verbose", action="store_true", help="Trace progress to stderr.")
    commands = parser.add_subparsers(dest="command", required=True)

    command = commands.add_parser("decompose", help="Split a series into modes.")
    command.add_argument("--input", required=True, help="CSV file holding the series.")
    command.add_argument("--column", default=None, help="Column to read.")
    command.add_argument("--out-dir", required=True, help="Directory for modes and the summary.")
    command.add_argument("--config", default=None, help="YAML run configuration.")

    command = commands.add_parser("optimize", help="Tune the regressor of one series.")
    command.add_argument("--input", required=True, help="CSV file holding the series.")
    command.add_argument("--column", default=None, help="Column to read.")
    command.add_argument("--config", default=None, help="YAML run configuration.")
    command.add_argument("--out", default=None, help="Write the plan to this JSON file.")

    command = commands.add_parser("forecast", help="Run a configured forecast.")
    command.add_argument("--config", required=True, help="YAML run configuration.")
    command.add_argument("--variant", choices=VARIANTS, default=None, help="Model combination; defaults to the config.")
    command.add_argument("--out-dir", default=None, help="Artifact directory; defaults to io.out_dir.")
    command.add_argument("--trace", action="store_true", help="Also write loss_trace.csv.")

    command = commands.add_parser("bench-opt", help="Compare optimisers on a benchmark function.")
    command.add_argument("--function", required=True, choices=sorted(Benchmarks.BENCHMARKS))
    command.add_argument("--dim", type=int, default=None, help="Dimension; 2 for mccormick, 20 otherwise.")
    command.add_argument("--pop", type=int, default=25)
    command.add_argument("--gens", type=int, default=100)
    command.add_argument("--trials", type=int, default=5)
    command.add_argument("--algo", choices=sorted(SWARMS) + ["all"], default="ebqpso")
    command.add_argument("--seed", type=int, default=0)
    command.add_argument("--out", default=None, help="Write the report to this JSON file.")

    command = commands.add_parser("metrics", help="Score a forecast against actual values.")
    command.add_argument("--actual", required=True, help="CSV file with the actual values.")
    command.add_argument("--predicted", required=True, help="CSV file with the predicted values.")
    command.add_argument("--column", default=None, help="Column to read from both files.")

    command = commands.add_parser("synth", help="Write the synthetic wind speed series.")
    command.add_argument("--out", required=True, help="Destination CSV file.")
    command.add_argument("--length", type=int, default=1440)
    command.add_argument("--seed", type=int, default=0)
    command.add_argument("--missing-rate", type=float, default=0.0)
    return parser.parse_args(argv)


def emit(data, out=None):
    if out:
        ForecastUtilities.write_json(out, data)
    print(json.dumps(data, indent=2, sort_keys=True, default=ForecastUtilities.json_default))


def clean_series(args, config):
    series = Pipeline.load_series(args.input, args.column or config.io.column)
    split = Pipeline.SplitSpec.from_config(config.pipeline)
    n_train, _, _ = split.sizes(len(series))
    return Pipeline.impute(series, n_train, config.pipeline.outlier_sigma).values, split


def run_decompose(args):
    config = load_config(args.config)
    values, _ = clean_series(args, config)
    result = decompose(values, config.svmd)
    ReportView.ReportViewCLI(args.out_dir).write_decomposition(result)
    print(f"  + {len(result.modes)} modes written to {args.out_dir}")


def run_optimize(args):
    config = load_config(args.config)
    values, split = clean_series(args, config)
    swarm = replace(config.ebqpso, seed=config.pipeline.seed)
    plan = Pipeline.optimize_mode(values, split, swarm, config.pipeline)
    emit(plan.to_dict(), args.out)


def run_forecast(args):
    config = load_config(args.config)
    out_dir = args.out_dir or config.io.out_dir
    report = ForecastCtrl.ForecastController(config).run(args.variant)
    ReportView.ReportViewCLI(out_dir).start(report, trace=args.trace or config.io.trace)


def run_bench(args):
    dimension = args.dim or (2 if args.function == "mccormick" else 20)
    config = Benchmarks.benchmark_config(args.pop, args.gens, args.seed)
    if args.algo == "all":
        report = Benchmarks.compare(args.function, dimension, trials=args.trials, config=config)
    else:
        report = Benchmarks.run_trials(args.function, dimension, args.algo, args.trials, config)
    emit(report, args.out)


def run_metrics(args):
    actual = ForecastUtilities.read_csv_column(args.actual, args.column)
    predicted = ForecastUtilities.read_csv_column(args.predicted, args.column)
    emit(ReportView.rounded_metrics(Metrics.evaluate(actual, predicted)))


def run_synth(args):
    values = ForecastUtilities.synthetic_series(args.length, args.seed, args.missing_rate)
    with CSVLogger(args.out) as logger:
        for t, value in enumerate(values):
            logger.log({"timestamp": t, "wind_speed": float(value) if np.isfinite(value) else ""})
    print(f"  + {args.length} samples written to {args.out}")


COMMANDS = {
    "decompose": run_decompose,
    "optimize": run_optimize,
    "forecast": run_forecast,
    "bench-opt": run_bench,
    "metrics": run_metrics,
    "synth": run_synth,
}


def main(argv=None):
    """ The entry point into the application

    Returns
    -------
    int
        0 on success, 2 on invalid input, 3 on numerical failure
    """
    args = parse_arguments(argv)
    set_verbose(args.verbose)
    try:
        COMMANDS[args.command](args)
    except WindcastError as err:
        print(f"windcast: error: {err}", file=sys.stderr)
        return err.exit_code
    except (ArithmeticError, np.linalg.LinAlgError) as err:
        print(f"windcast: error: {type(err).__name__}: {err}", file=sys.stderr)
        return exit_code_for(err)
    return 0


if __name__ == "__main__":
    sys.exit(main())
