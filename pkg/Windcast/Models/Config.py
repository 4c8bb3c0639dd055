"""
Run configuration.

A run is described by a YAML document with the sections ``svmd``,
``ebqpso``, ``lstm``, ``pipeline`` and ``io``. Keys may be nested under
their section or written flat as ``section.key``. User values are merged
over the defaults below, coerced to the type of the default and validated.
"""
from dataclasses import asdict, dataclass, field, fields
from typing import Optional
from Windcast.Models.Errors import InvalidInputError
from Windcast.Models.ForecastUtilities import digest, expand_dotted_keys, load_yaml, recursive_key_update
from Windcast.Models.Lstm import LstmConfig
from Windcast.Models.Svmd import SvmdConfig
from Windcast.Optimizers.Swarms import EbqpsoConfig

VARIANTS = ("svmd_lssvm_lstm", "svmd_lssvm", "lssvm_ebqpso", "lstm", "svmd_lstm")


@dataclass(frozen=True)
class PipelineConfig:
    """Data handling and per-mode search settings.

    ``seed`` is the master seed: mode ``k`` searches with ``seed ^ k`` and
    the residual network is initialised from ``seed``.
    """

    train_frac: float = 0.70
    val_frac: float = 0.15
    test_frac: float = 0.15
    seed: int = 0
    gamma_range: tuple = (1e-4, 1e4)
    sigma2_range: tuple = (1e-4, 1e4)
    window_range: tuple = (1, 25)
    outlier_sigma: float = 5.0
    variant: str = "svmd_lssvm_lstm"

    def validate(self):
        fractions = (self.train_frac, self.val_frac, self.test_frac)
        if any(not 0 < f < 1 for f in fractions) or abs(sum(fractions) - 1.0) > 1e-9:
            raise InvalidInputError("pipeline fractions must be positive and sum to 1")
        for name in ("gamma_range", "sigma2_range", "window_range"):
            low, high = getattr(self, name)
            if not 0 < low <= high:
                raise InvalidInputError(f"pipeline.{name} must satisfy 0 < low <= high")
        if self.window_range[0] != int(self.window_range[0]) or self.window_range[1] != int(self.window_range[1]):
            raise InvalidInputError("pipeline.window_range must hold integers")
        if not self.outlier_sigma > 0:
            raise InvalidInputError("pipeline.outlier_sigma must be positive")
        if self.variant not in VARIANTS:
            raise InvalidInputError(f"pipeline.variant must be one of {VARIANTS}")
        if not 0 <= int(self.seed) < 2 ** 64:
            raise InvalidInputError("pipeline.seed must be an unsigned 64-bit integer")
        return self

    @property
    def max_window(self):
        return int(self.window_range[1])


@dataclass(frozen=True)
class IoConfig:
    input: Optional[str] = None
    column: str = "wind_speed"
    out_dir: str = "runs/latest"
    trace: bool = False

    def validate(self):
        if not self.column:
            raise InvalidInputError("io.column must not be empty")
        return self


SECTIONS = {
    "svmd": SvmdConfig,
    "ebqpso": EbqpsoConfig,
    "lstm": LstmConfig,
    "pipeline": PipelineConfig,
    "io": IoConfig,
}


@dataclass(frozen=True)
class RunConfig:
    svmd: SvmdConfig = field(default_factory=SvmdConfig)
    ebqpso: EbqpsoConfig = field(default_factory=EbqpsoConfig)
    lstm: LstmConfig = field(default_factory=LstmConfig)
    pipeline: PipelineConfig = field(default_factory=PipelineConfig)
    io: IoConfig = field(default_factory=IoConfig)

    def validate(self):
        for name in SECTIONS:
            getattr(self, name).validate()
        return self

    def to_dict(self):
        return {name: asdict(getattr(self, name)) for name in SECTIONS}

    @property
    def digest(self):
        """SHA-256 of the merged configuration, leaving out file locations and tracing."""
        data = self.to_dict()
        data["io"] = {key: value for key, value in data["io"].items() if key not in ("input", "out_dir", "trace")}
        return digest(data)


def default_dict():
    return RunConfig().to_dict()


def _coerce(default, value, key):
    if value is None or default is None:
        return value
    try:
        if isinstance(default, bool):
            if isinstance(value, str):
                return value.strip().lower() in ("1", "true", "yes", "on")
            return bool(value)
        if isinstance(default, int):
            if isinstance(value, int) and not isinstance(value, bool):
                return value
            number = float(value)
            if number != int(number):
                raise ValueError(f"{value} is not an integer")
            return int(number)
        if isinstance(default, float):
            return float(value)
        if isinstance(default, tuple):
            if len(value) != len(default):
                raise ValueError(f"expected {len(default)} values")
            return tuple(_coerce(d, v, key) for d, v in zip(default, value))
        return type(default)(value)
    except (TypeError, ValueError) as err:
        raise InvalidInputError(f"Config key '{key}' has an invalid value {value!r}: {err}") from err


def _build_section(name, values):
    cls = SECTIONS[name]
    defaults = cls()
    known = {f.name for f in fields(cls)}
    unknown = sorted(set(values) - known)
    if unknown:
        raise InvalidInputError(f"Unknown config key(s) {', '.join(f'{name}.{k}' for k in unknown)}")
    kwargs = {}
    for f in fields(cls):
        default = getattr(defaults, f.name)
        value = values.get(f.name, default)
        if f.name == "dimension" and value is not None:
            value = _coerce(1, value, f"{name}.{f.name}")
        else:
            value = _coerce(default, value, f"{name}.{f.name}")
        kwargs[f.name] = value
    return cls(**kwargs)


def build_config(data=None):
    """Merge a (possibly flat) mapping over the defaults and validate it."""
    data = expand_dotted_keys(data or {})
    unknown = sorted(set(data) - set(SECTIONS))
    if unknown:
        raise InvalidInputError(f"Unknown config section(s) {unknown}")
    for name, section in data.items():
        if section is not None and type(section) is not dict:
            raise InvalidInputError(f"Config section '{name}' must be a mapping")
    merged = recursive_key_update(default_dict(), {k: v for k, v in data.items() if v is not None})
    config = RunConfig(**{name: _build_section(name, merged[name]) for name in SECTIONS})
    return config.validate()


def load_config(path=None, overrides=None):
    """Load a YAML run configuration.

    Parameters
    ----------
    path : str, optional
        YAML file; the defaults are used when omitted.
    overrides : dict, optional
        Extra keys (nested or dotted) applied on top of the file.

    Returns
    -------
    RunConfig
    """
    data = {}
    if path is not None:
        try:
            data = load_yaml(path)
        except FileNotFoundError as err:
            raise InvalidInputError(f"Config file '{path}' not found") from err
        except Exception as err:
            raise InvalidInputError(f"Cannot parse config file '{path}': {err}") from err
        if type(data) is not dict:
            raise InvalidInputError(f"Config file '{path}' must hold a mapping")
    data = expand_dotted_keys(data)
    if overrides:
        recursive_key_update(data, expand_dotted_keys(overrides))
    return build_config(data)


