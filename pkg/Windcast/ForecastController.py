from dataclasses import dataclass, field, replace
from typing import List, Optional
import numpy as np
from Windcast.Models import Metrics, Pipeline
from Windcast.Models.Config import VARIANTS, RunConfig, load_config
from Windcast.Models.Errors import DegenerateInputError, InvalidInputError, StageError
from Windcast.Models.ForecastUtilities import library_versions
from Windcast.Models.Logger import trace
from Windcast.Models.Svmd import Series, SvmdResult, decompose

DECOMPOSED_VARIANTS = ("svmd_lssvm_lstm", "svmd_lssvm", "svmd_lstm")
RETRAIN_DATA = "train+validation"


@dataclass
class ForecastReport:
    """Everything a forecast run produced.

    Attributes
    ----------
    variant : str
        Which model combination produced the forecast.
    indices : numpy.ndarray
        Positions in the input series of the aligned test targets.
    actual, predicted : numpy.ndarray
        Aligned test values and the aggregated forecast.
    components : list of ComponentForecast
        Per-component test predictions before alignment.
    metrics : dict
        The five forecast metrics on the aligned overlap.
    manifest : dict
        Seed, configuration digest, versions and data-handling choices.
    decomposition : SvmdResult, optional
        Present for the decomposed variants.
    imputation : Imputation
        Train-segment statistics used to clean the series.
    """

    variant: str
    indices: np.ndarray
    actual: np.ndarray
    predicted: np.ndarray
    components: List[Pipeline.ComponentForecast]
    metrics: dict
    manifest: dict
    decomposition: Optional[SvmdResult] = None
    imputation: Optional[Pipeline.Imputation] = None
    plans: List[Pipeline.ModePlan] = field(default_factory=list)

    @property
    def error_prediction(self):
        for component in self.components:
            if component.name == "residual":
                return component.predictions
        return None

    @property
    def loss_traces(self):
        """Per-epoch training loss of every LSTM component, keyed by name."""
        return {c.name: c.loss_history for c in self.components if c.loss_history}


class ForecastController:
    """Runs one configured forecast from ingestion to metrics.

    Parameters
    ----------
    config : RunConfig
        Merged and validated configuration.
    series : array_like or Series, optional
        Values to forecast instead of reading ``config.io.input``.
    """

    def __init__(self, config, series=None):
        self.config = config
        self.series = series
        self.split = Pipeline.SplitSpec.from_config(config.pipeline)

    def stage(self, name, function, *args, **kwargs):
        """Run one stage; any failure is re-raised tagged with ``name``."""
        trace(f"stage {name}")
        try:
            return function(*args, **kwargs)
        except StageError:
            raise
        except Exception as err:
            raise StageError(name, err) from err

    def load(self):
        if self.series is not None:
            if isinstance(self.series, Series):
                return self.series
            values = np.asarray(self.series, dtype=float)
            return Series(values=values, missing=~np.isfinite(values))
        if not self.config.io.input:
            raise InvalidInputError("io.input must name the CSV file to forecast")
        return Pipeline.load_series(self.config.io.input, self.config.io.column)

    def swarm_config(self, index):
        return replace(self.config.ebqpso, seed=int(self.config.pipeline.seed) ^ int(index))

    def lstm_config(self, index=0):
        return replace(self.config.lstm, seed=int(self.config.pipeline.seed) ^ int(index))

    def _lssvm_component(self, values, index, name):
        plan = self.stage(f"optimize[{name}]", Pipeline.optimize_mode, values, self.split, self.swarm_config(index),
                          self.config.pipeline, index)
        return self.stage(f"forecast[{name}]", Pipeline.forecast_mode, values, self.split, plan, name)

    def run(self, variant=None):
        """Execute ``variant`` (default: the configured one) and return its report."""
        config = self.config
        variant = variant or config.pipeline.variant
        if variant not in VARIANTS:
            raise InvalidInputError(f"Unknown variant '{variant}', expected one of {VARIANTS}")
        series = self.stage("load", self.load)
        n_train, n_val, n_test = self.stage("split", self.split.sizes, len(series))
        imputation = self.stage("impute", Pipeline.impute, series, n_train, config.pipeline.outlier_sigma)
        values = imputation.values

        decomposition = None
        if variant in DECOMPOSED_VARIANTS:
            decomposition = self.stage("decompose", decompose, values, config.svmd)
            if not decomposition.modes:
                raise StageError("decompose", DegenerateInputError("The decomposition produced no modes"))
            trace(f"decomposition: {len(decomposition.modes)} modes, residual ratio {decomposition.energy_ratio:.3g}")

        components = []
        if variant in ("svmd_lssvm_lstm", "svmd_lssvm"):
            for k, mode in enumerate(decomposition.modes):
                components.append(self._lssvm_component(mode.values, k, f"mode_{k}"))
        if variant == "svmd_lssvm_lstm":
            errors = self.stage("error_sequence", Pipeline.error_sequence, values, decomposition)
            components.append(self.stage("residual", Pipeline.forecast_lstm, errors, self.split, self.lstm_config(), "residual"))
        if variant == "svmd_lstm":
            for k, mode in enumerate(decomposition.modes):
                components.append(self.stage(f"forecast[mode_{k}]", Pipeline.forecast_lstm, mode.values, self.split,
                                             self.lstm_config(k), f"mode_{k}"))
        if variant == "lssvm_ebqpso":
            components.append(self._lssvm_component(values, 0, "series"))
        if variant == "lstm":
            components.append(self.stage("forecast[series]", Pipeline.forecast_lstm, values, self.split,
                                         self.lstm_config(), "series"))

        m_max = max(component.window for component in components)
        predicted = self.stage("aggregate", Pipeline.align_and_aggregate,
                               [(c.window, c.predictions) for c in components], m_max)
        start = n_train + n_val + m_max
        actual = values[start:]
        metrics = self.stage("evaluate", Metrics.evaluate, actual, predicted)
        plans = [c.plan for c in components if c.plan is not None]
        manifest = {
            "seed": int(config.pipeline.seed),
            "config_digest": config.digest,
            "versions": library_versions(),
            "variant": variant,
            "input": config.io.input,
            "column": config.io.column,
            "series_length": int(len(series)),
            "split": {"train": n_train, "validation": n_val, "test": n_test},
            "m_max": int(m_max),
            "retrain_data": RETRAIN_DATA,
            "decomposition_before_split": variant in DECOMPOSED_VARIANTS,
            "num_modes": len(decomposition.modes) if decomposition else 0,
            "imputed": imputation.missing_count,
            "outliers": imputation.outlier_count,
            "mode_plans": [plan.to_dict() for plan in plans],
        }
        trace(f"{variant}: rmse={metrics['rmse']:.5g} mape={metrics['mape_pct']:.4g}%")
        return ForecastReport(
            variant=variant,
            indices=np.arange(start, len(values)),
            actual=actual,
            predicted=predicted,
            components=components,
            metrics=metrics,
            manifest=manifest,
            decomposition=decomposition,
            imputation=imputation,
            plans=plans,
        )



def run_ablation(config_file, variant, overrides=None):
    """Run one model combination of the configured forecast."""
    config = config_file if isinstance(config_file, RunConfig) else load_config(config_file, overrides)
    return ForecastController(config).run(variant)


def run_pipeline(config_file, overrides=None):
    """Run the full decomposition, swarm-tuned regression and residual network."""
    return run_ablation(config_file, "svmd_lssvm_lstm", overrides)
