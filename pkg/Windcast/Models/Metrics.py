import numpy as np
from scipy.stats import pearsonr
from sklearn.metrics import mean_absolute_error, mean_absolute_percentage_error, mean_squared_error, r2_score
from Windcast.Models.Errors import DegenerateInputError, DomainError, InvalidInputError

METRIC_NAMES = ("rmse", "mae", "mape_pct", "r2", "cc")


def _pair(actual, predicted):
    actual = np.asarray(actual, dtype=float).reshape(-1)
    predicted = np.asarray(predicted, dtype=float).reshape(-1)
    if actual.size == 0 or actual.size != predicted.size:
        raise InvalidInputError(f"Metric inputs need equal non-zero lengths, got {actual.size} and {predicted.size}")
    if not (np.all(np.isfinite(actual)) and np.all(np.isfinite(predicted))):
        raise InvalidInputError("Metric inputs must be finite")
    return actual, predicted


def _require_variance(values, message):
    if np.all(values == values[0]) or np.sum((values - values.mean()) ** 2) == 0:
        raise DegenerateInputError(message)


def mae(actual, predicted):
    actual, predicted = _pair(actual, predicted)
    return float(mean_absolute_error(actual, predicted))


def rmse(actual, predicted):
    actual, predicted = _pair(actual, predicted)
    return float(np.sqrt(mean_squared_error(actual, predicted)))


def mape(actual, predicted):
    """Mean absolute percentage error, in percent."""
    actual, predicted = _pair(actual, predicted)
    zeros = np.flatnonzero(actual == 0)
    if zeros.size:
        raise DomainError("MAPE needs non-zero actual values", zeros.tolist())
    return float(100.0 * mean_absolute_percentage_error(actual, predicted))


def r2(actual, predicted):
    actual, predicted = _pair(actual, predicted)
    _require_variance(actual, "R2 is undefined for a constant actual series")
    return float(r2_score(actual, predicted))


def cc(actual, predicted):
    """Pearson correlation between the actual and predicted series."""
    actual, predicted = _pair(actual, predicted)
    _require_variance(actual, "CC is undefined for a constant actual series")
    _require_variance(predicted, "CC is undefined for a constant predicted series")
    return float(np.clip(pearsonr(actual, predicted)[0], -1.0, 1.0))


def evaluate(actual, predicted):
    """All five metrics, keyed as in ``metrics.json``."""
    return {
        "rmse": rmse(actual, predicted),
        "mae": mae(actual, predicted),
        "mape_pct": mape(actual, predicted),
        "r2": r2(actual, predicted),
        "cc": cc(actual, predicted),
    }
