import hashlib
import json
import numpy as np
import pandas as pd
import scipy
import sklearn
import yaml
import Windcast
from Windcast.Models.Errors import InvalidInputError
from Windcast.Models.Logger import CSVLogger


def load_yaml(infile):
    with open(infile, "r") as stream:
        return yaml.safe_load(stream) or {}


def recursive_key_update(configuration, update_dict):
    for key, value in update_dict.items():
        if type(value) is dict:
            if key not in configuration or type(configuration[key]) is not dict:
                configuration[key] = {}
            configuration[key] = recursive_key_update(configuration[key], value)
        else:
            configuration[key] = value
    return configuration


def expand_dotted_keys(flat):
    """Turn ``{"svmd.alpha": 1}`` style keys into nested dictionaries.

    Keys without a dot and nested dictionaries pass through unchanged, so a
    document may mix both notations.
    """
    nested = {}
    for key, value in flat.items():
        if type(value) is dict:
            value = expand_dotted_keys(value)
        parts = str(key).split(".")
        target = nested
        for part in parts[:-1]:
            target = target.setdefault(part, {})
            if type(target) is not dict:
                raise InvalidInputError(f"Config key '{key}' collides with a scalar value")
        if type(value) is dict and type(target.get(parts[-1])) is dict:
            recursive_key_update(target[parts[-1]], value)
        else:
            target[parts[-1]] = value
    return nested


def canonical_json(data):
    return json.dumps(data, sort_keys=True, separators=(",", ":"), default=json_default)


def digest(data):
    """SHA-256 of the canonical JSON form of ``data``."""
    return hashlib.sha256(canonical_json(data).encode("utf-8")).hexdigest()


def write_json(filename, data):
    CSVLogger.ensure_directories_exist(filename)
    with open(filename, "w") as stream:
        json.dump(data, stream, indent=2, sort_keys=True, default=json_default)
        stream.write("\n")


def json_default(value):
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, np.generic):
        return value.item()
    raise TypeError(f"Object of type {type(value).__name__} is not JSON serializable")


def significant(value, digits=6):
    """Round ``value`` to ``digits`` significant digits."""
    if not np.isfinite(value) or value == 0:
        return float(value)
    return float(f"{value:.{digits}g}")


def library_versions():
    return {
        "windcast": Windcast.__version__,
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "pandas": pd.__version__,
        "scikit-learn": sklearn.__version__,
    }


def read_csv_column(path, column=None):
    """Read one numeric column from a CSV file with a header row.

    Parameters
    ----------
    path : str
        CSV file to read.
    column : str, optional
        Column name. When omitted, a ``value`` column is used, or the only
        non-timestamp column if there is exactly one.

    Returns
    -------
    numpy.ndarray
        The column as floats; empty and ``NaN`` cells become ``nan``.
    """
    try:
        frame = pd.read_csv(path, skipinitialspace=True, float_precision="round_trip")
    except FileNotFoundError as err:
        raise InvalidInputError(f"Cannot read '{path}': file not found") from err
    except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as err:
        raise InvalidInputError(f"Cannot parse '{path}': {err}") from err
    if column is None:
        candidates = [c for c in frame.columns if c not in ("timestamp", "index")]
        if "value" in frame.columns:
            column = "value"
        elif len(candidates) == 1:
            column = candidates[0]
        else:
            raise InvalidInputError(f"'{path}' has several columns {list(frame.columns)}; name one")
    if column not in frame.columns:
        raise InvalidInputError(f"Column '{column}' not found in '{path}' (columns: {list(frame.columns)})")
    if len(frame) == 0:
        raise InvalidInputError(f"'{path}' contains no data rows")
    values = pd.to_numeric(frame[column], errors="coerce")
    return values.to_numpy(dtype=float)


def synthetic_series(length=1440, seed=0, missing_rate=0.0):
    """Generate the documented synthetic wind-speed-like series.

    s(t) = 9 + 1.8 sin(2 pi t / 72) + 0.9 sin(2 pi t / 18 + 1) + 0.0003 t + N(0, 0.35^2)

    The scale mimics a month of 20-minute wind speed samples (mean about 9,
    standard deviation about 1.8).

    Parameters
    ----------
    length : int
        Number of samples.
    seed : int
        Seed of the noise generator.
    missing_rate : float
        Fraction of samples replaced by ``nan`` to exercise imputation.

    Returns
    -------
    numpy.ndarray
    """
    if length < 1:
        raise InvalidInputError("Synthetic series length must be positive")
    if not 0.0 <= missing_rate < 1.0:
        raise InvalidInputError("missing_rate must lie in [0, 1)")
    rng = np.random.default_rng(seed)
    t = np.arange(length, dtype=float)
    values = (
        9.0
        + 1.8 * np.sin(2.0 * np.pi * t / 72.0)
        + 0.9 * np.sin(2.0 * np.pi * t / 18.0 + 1.0)
        + 0.0003 * t
        + rng.normal(0.0, 0.35, size=length)
    )
    if missing_rate > 0:
        holes = rng.random(length) < missing_rate
        values[holes] = np.nan
    return values
