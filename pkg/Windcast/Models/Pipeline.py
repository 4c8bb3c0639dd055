"""
Building blocks of the decomposition-ensemble forecaster.

Series are split chronologically into train, validation and test segments.
Every statistic used to clean or scale data (imputation mean, outlier band,
standardisation) is computed on the train segment only. Lagged-window
samples are built inside each segment, so a segment of length ``n`` with
window ``m`` yields ``n - m`` one-step-ahead targets.
"""
from dataclasses import dataclass, field, replace
from typing import List, NamedTuple, Optional
import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from Windcast.Models import Lssvm, Lstm
from Windcast.Models.Errors import ConditioningError, InvalidInputError
from Windcast.Models.ForecastUtilities import read_csv_column
from Windcast.Models.Logger import trace
from Windcast.Models.Svmd import Series, SvmdResult
from Windcast.Optimizers.Swarms import ElitistQuantumSwarm, SearchSpace

# Standard deviations below this are treated as 1 when scaling
_FLAT = 1e-12


@dataclass(frozen=True)
class SplitSpec:
    train_frac: float = 0.70
    val_frac: float = 0.15
    test_frac: float = 0.15

    def __post_init__(self):
        fractions = (self.train_frac, self.val_frac, self.test_frac)
        if any(not 0 < f < 1 for f in fractions) or abs(sum(fractions) - 1.0) > 1e-9:
            raise InvalidInputError("Split fractions must be positive and sum to 1")

    @classmethod
    def from_config(cls, pipeline):
        return cls(pipeline.train_frac, pipeline.val_frac, pipeline.test_frac)

    def sizes(self, length):
        """``(n_train, n_val, n_test)``; train and validation are floored."""
        n_train = int(np.floor(self.train_frac * length))
        n_val = int(np.floor(self.val_frac * length))
        n_test = length - n_train - n_val
        if min(n_train, n_val, n_test) < 1:
            raise InvalidInputError(f"Series of length {length} leaves an empty segment")
        return n_train, n_val, n_test

    def segments(self, values):
        values = np.asarray(values)
        n_train, n_val, _ = self.sizes(values.shape[-1])
        return values[..., :n_train], values[..., n_train:n_train + n_val], values[..., n_train + n_val:]


@dataclass(frozen=True)
class WindowedSet:
    window: int
    inputs: np.ndarray
    targets: np.ndarray

    def __len__(self):
        return self.targets.size


class Scaler(NamedTuple):
    mean: float
    scale: float

    @classmethod
    def fit(cls, values):
        values = np.asarray(values, dtype=float)
        std = float(np.std(values))
        return cls(float(np.mean(values)), std if std > _FLAT else 1.0)

    def transform(self, values):
        return (np.asarray(values, dtype=float) - self.mean) / self.scale

    def inverse(self, values):
        return np.asarray(values, dtype=float) * self.scale + self.mean


class Imputation(NamedTuple):
    values: np.ndarray
    mean: float
    std: float
    missing_count: int
    outlier_count: int


@dataclass
class ModePlan:
    """Tuned hyperparameters of one component and their validation score.

    Attributes
    ----------
    mode_index : int
        Position of the component in the decomposition.
    gamma_opt, sigma2_opt : float
        Regularisation and squared kernel width.
    window_opt : int
        Number of lagged inputs.
    validation_mse : float
        Validation mean squared error in signal units.
    evaluation_count : int
        Fitness evaluations spent by the search.
    fitness_history : list of float
        Best validation error (scaled units) after each generation.
    """

    mode_index: int
    gamma_opt: float
    sigma2_opt: float
    window_opt: int
    validation_mse: float
    evaluation_count: int = 0
    fitness_history: List[float] = field(default_factory=list, repr=False)

    def to_dict(self):
        return {
            "mode_index": int(self.mode_index),
            "gamma_opt": float(self.gamma_opt),
            "sigma2_opt": float(self.sigma2_opt),
            "window_opt": int(self.window_opt),
            "validation_mse": float(self.validation_mse),
            "evaluation_count": int(self.evaluation_count),
        }


@dataclass
class ComponentForecast:
    """Test-segment one-step predictions of one component."""

    name: str
    window: int
    predictions: np.ndarray
    plan: Optional[ModePlan] = None
    scaler: Optional[Scaler] = None
    loss_history: List[float] = field(default_factory=list, repr=False)
    model: Optional[object] = field(default=None, repr=False)


def load_series(path, column=None):
    """Read one column of a CSV file; empty or ``NaN`` cells are flagged missing.

    Imputation is left to :func:`impute`, once the train segment is known.
    """
    values = read_csv_column(path, column)
    return Series(values=values, missing=~np.isfinite(values))


def impute(series, train_length, outlier_sigma=5.0):
    """Fill missing values and outliers with the train-segment mean.

    Outliers are values outside ``mean +/- outlier_sigma * std`` of the
    observed train values.
    """
    values = np.array(series.values if isinstance(series, Series) else series, dtype=float).reshape(-1)
    if not 1 <= train_length <= values.size:
        raise InvalidInputError(f"Train length {train_length} outside 1..{values.size}")
    missing = ~np.isfinite(values)
    observed = values[:train_length][~missing[:train_length]]
    if observed.size == 0:
        raise InvalidInputError("The train segment holds no observed values")
    mean, std = float(np.mean(observed)), float(np.std(observed))
    with np.errstate(invalid="ignore"):
        outliers = ~missing & (np.abs(values - mean) > outlier_sigma * std) if std > 0 else np.zeros_like(missing)
    kept = observed[np.abs(observed - mean) <= outlier_sigma * std] if std > 0 else observed
    fill = float(np.mean(kept))
    values[missing | outliers] = fill
    if missing.any() or outliers.any():
        trace(f"impute: {int(missing.sum())} missing, {int(outliers.sum())} outliers -> {fill:.6g}")
    return Imputation(values, fill, std, int(missing.sum()), int(outliers.sum()))


def make_windows(series, m):
    """Lagged inputs ``series[k:k+m]`` and targets ``series[k+m]``."""
    values = np.asarray(series.values if isinstance(series, Series) else series, dtype=float).reshape(-1)
    m = int(m)
    if m < 1:
        raise InvalidInputError("Window size must be positive")
    if m >= values.size:
        raise InvalidInputError(f"Window {m} needs a series longer than {values.size}")
    inputs = sliding_window_view(values[:-1], m).copy()
    return WindowedSet(window=m, inputs=inputs, targets=values[m:].copy())


def error_sequence(original, result):
    """Original series minus the sum of the decomposed modes."""
    values = np.asarray(original.values if isinstance(original, Series) else original, dtype=float).reshape(-1)
    modes = result.mode_matrix() if isinstance(result, SvmdResult) else np.atleast_2d(np.asarray(result, dtype=float))
    if modes.shape[1] != values.size:
        raise InvalidInputError(f"Modes of length {modes.shape[1]} do not match the series length {values.size}")
    return values - modes.sum(axis=0)


def align_and_aggregate(component_predictions, m_max=None):
    """Trim ``m_max - m_i`` leading values from each component and sum them.

    Parameters
    ----------
    component_predictions : list of (int, array_like)
        Window size and test predictions of each component.
    m_max : int, optional
        Largest window; defaults to the largest ``m_i``.
    """
    if not component_predictions:
        raise InvalidInputError("Nothing to aggregate")
    windows = [int(m) for m, _ in component_predictions]
    m_max = max(windows) if m_max is None else int(m_max)
    trimmed = []
    for m, predictions in component_predictions:
        predictions = np.asarray(predictions, dtype=float).reshape(-1)
        drop = m_max - int(m)
        if drop < 0 or predictions.size < drop:
            raise InvalidInputError(f"Component with window {m} cannot be trimmed by {drop}")
        trimmed.append(predictions[drop:])
    lengths = {t.size for t in trimmed}
    if len(lengths) != 1:
        raise InvalidInputError(f"Aligned components differ in length: {sorted(lengths)}")
    return np.sum(trimmed, axis=0)


def segment_windows(values, m, start, stop):
    """Windows built from ``values[start:stop]`` only."""
    return make_windows(values[start:stop], m)


def search_space(pipeline):
    lower = [pipeline.gamma_range[0], pipeline.sigma2_range[0], pipeline.window_range[0]]
    upper = [pipeline.gamma_range[1], pipeline.sigma2_range[1], pipeline.window_range[1]]
    return SearchSpace(lower, upper, log_scale=[True, True, False], integer_dims=[False, False, True])


class ModeFitness:
    """Validation error of an LSSVM trained on the train segment.

    Called with a decoded ``(gamma, sigma2, window)`` vector; ill-conditioned
    candidates score ``inf``.
    """

    def __init__(self, values, split, scaler):
        self.scaled = scaler.transform(values)
        self.n_train, self.n_val, _ = split.sizes(self.scaled.size)

    def __call__(self, position):
        gamma, sigma2, window = float(position[0]), float(position[1]), int(position[2])
        train = segment_windows(self.scaled, window, 0, self.n_train)
        validation = segment_windows(self.scaled, window, self.n_train, self.n_train + self.n_val)
        try:
            model = Lssvm.train(Lssvm.TrainingSet(train.inputs, train.targets), Lssvm.LssvmHyper(gamma, sigma2))
        except ConditioningError:
            return np.inf
        predictions = Lssvm.predict_many(model, validation.inputs)
        return float(np.mean((predictions - validation.targets) ** 2))


def _check_lengths(length, split, window):
    n_train, n_val, n_test = split.sizes(length)
    if min(n_train, n_val, n_test) <= window:
        raise InvalidInputError(
            f"Segments ({n_train}, {n_val}, {n_test}) must each be longer than the largest window {window}"
        )
    return n_train, n_val, n_test


def optimize_mode(mode, split, opt_config, pipeline, mode_index=0):
    """Search ``(gamma, sigma2, window)`` minimising validation MSE.

    Features are standardised with train statistics. The search runs the
    elitist-breeding swarm with ``opt_config`` as given (the caller owns the
    seed).

    Returns
    -------
    ModePlan
    """
    values = np.asarray(mode.values if isinstance(mode, Series) else mode, dtype=float).reshape(-1)
    n_train, _, _ = _check_lengths(values.size, split, pipeline.max_window)
    scaler = Scaler.fit(values[:n_train])
    fitness = ModeFitness(values, split, scaler)
    result = ElitistQuantumSwarm(fitness, search_space(pipeline), replace(opt_config, dimension=3)).run()
    gamma, sigma2, window = result.best_position
    plan = ModePlan(
        mode_index=mode_index,
        gamma_opt=float(gamma),
        sigma2_opt=float(sigma2),
        window_opt=int(window),
        validation_mse=float(result.best_fitness) * scaler.scale ** 2,
        evaluation_count=result.evaluation_count,
        fitness_history=list(result.fitness_history),
    )
    trace(f"mode {mode_index}: gamma={plan.gamma_opt:.4g} sigma2={plan.sigma2_opt:.4g} "
          f"window={plan.window_opt} validation_mse={plan.validation_mse:.4g}")
    return plan


def forecast_mode(values, split, plan, name=None):
    """Retrain on train+validation with ``plan`` and predict the test segment.

    Returns
    -------
    ComponentForecast
        ``len(test) - window_opt`` one-step predictions in signal units.
    """
    values = np.asarray(values, dtype=float).reshape(-1)
    n_train, n_val, _ = split.sizes(values.size)
    scaler = Scaler.fit(values[:n_train])
    scaled = scaler.transform(values)
    fit = segment_windows(scaled, plan.window_opt, 0, n_train + n_val)
    test = segment_windows(scaled, plan.window_opt, n_train + n_val, values.size)
    model = Lssvm.train(Lssvm.TrainingSet(fit.inputs, fit.targets), Lssvm.LssvmHyper(plan.gamma_opt, plan.sigma2_opt))
    predictions = scaler.inverse(Lssvm.predict_many(model, test.inputs))
    return ComponentForecast(
        name=name or f"mode_{plan.mode_index}",
        window=plan.window_opt,
        predictions=predictions,
        plan=plan,
        scaler=scaler,
        model=model,
    )


def forecast_lstm(values, split, config, name="residual"):
    """Train an LSTM on the train+validation segment and predict the test segment.

    Values are standardised with train statistics; windows never cross the
    boundary into the test segment.
    """
    values = np.asarray(values, dtype=float).reshape(-1)
    n_train, n_val, n_test = _check_lengths(values.size, split, config.window)
    scaler = Scaler.fit(values[:n_train])
    scaled = scaler.transform(values)
    model = Lstm.train(scaled[:n_train + n_val], config)
    test = segment_windows(scaled, config.window, n_train + n_val, values.size)
    predictions = scaler.inverse(model.predict_windows(test.inputs))
    return ComponentForecast(
        name=name,
        window=config.window,
        predictions=predictions,
        scaler=scaler,
        loss_history=list(model.loss_history),
        model=model,
    )
