import os
from Windcast.Models import ForecastUtilities
from Windcast.Models.Logger import CSVLogger, write_table


def rounded_metrics(metrics, digits=6):
    return {name: ForecastUtilities.significant(value, digits) for name, value in metrics.items()}


class ReportViewCLI():
    """Writes run artifacts to a directory and a short summary to stdout.

    Parameters
    ----------
    out_dir : str
        Destination directory, created on demand.
    """

    def __init__(self, out_dir):
        self.out_dir = out_dir

    def path(self, *parts):
        return os.path.join(self.out_dir, *parts)

    def write_modes(self, decomposition):
        for k, mode in enumerate(decomposition.modes):
            write_table(self.path("modes", f"mode_{k}.csv"), {
                "index": range(decomposition.source_length),
                "value": mode.values,
            })

    def write_decomposition(self, decomposition):
        """``modes/mode_<k>.csv``, ``residual.csv`` and ``summary.json``."""
        self.write_modes(decomposition)
        write_table(self.path("residual.csv"), {
            "index": range(decomposition.source_length),
            "value": decomposition.residual,
        })
        ForecastUtilities.write_json(self.path("summary.json"), decomposition.summary())

    def write_report(self, report, trace=False):
        """Write every artifact of a forecast run.

        Parameters
        ----------
        report : ForecastReport
        trace : bool
            Also write the LSTM training losses as ``epoch,loss`` tables:
            ``loss_trace.csv`` for a single LSTM component, otherwise one
            ``loss_trace_<component>.csv`` per component.
        """
        with CSVLogger(self.path("predictions.csv")) as logger:
            for index, actual, predicted in zip(report.indices, report.actual, report.predicted):
                logger.log({
                    "index": int(index),
                    "actual": float(actual),
                    "predicted": float(predicted),
                    "abs_error": abs(float(actual) - float(predicted)),
                })
        if report.decomposition is not None:
            self.write_modes(report.decomposition)
        ForecastUtilities.write_json(self.path("metrics.json"), rounded_metrics(report.metrics))
        ForecastUtilities.write_json(self.path("manifest.json"), report.manifest)
        self.write_models(report.components)
        if trace:
            self.write_loss_traces(report.loss_traces)

    def write_models(self, components):
        """``models/<component>.json``: LSSVM duals and support set, or LSTM weights."""
        for component in components:
            if component.model is not None:
                ForecastUtilities.write_json(self.path("models", f"{component.name}.json"), component.model.to_dict())

    def write_loss_traces(self, traces):
        for name, history in traces.items():
            filename = "loss_trace.csv" if len(traces) == 1 else f"loss_trace_{name}.csv"
            with CSVLogger(self.path(filename)) as logger:
                for epoch, loss in enumerate(history, start=1):
                    logger.log({"epoch": epoch, "loss": float(loss)})

    def start(self, report, trace=False):
        print(f"Running variant {report.variant}")
        self.write_report(report, trace)
        metrics = rounded_metrics(report.metrics)
        print(f"  + {len(report.predicted)} test forecasts written to {self.out_dir}")
        print("  " + "  ".join(f"{name}={value}" for name, value in metrics.items()))
