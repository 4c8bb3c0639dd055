"""
Successive variational mode decomposition.

Modes are extracted one at a time from a working residual. Each extraction
runs an ADMM loop on the one-sided spectrum: a Wiener-like update of the mode
spectrum, a spectral-centroid update of its centre frequency and an optional
dual ascent on the Lagrange multiplier. Previously accepted centre
frequencies are pushed away through the ``1 / (alpha^2 (w - w_i)^4)`` filter
terms. The number of modes is not fixed in advance; extraction stops once
the residual energy, or the energy of the next mode, falls below a fraction
of the input energy.

Frequencies are handled internally in cycles per sample (``[0, 0.5]``), the
grid the balancing parameter ``alpha`` is conventionally tuned for, and are
reported in radians per sample (``[0, pi]``).
"""
from dataclasses import dataclass, field
from typing import List, NamedTuple, Optional
import numpy as np
import scipy.fft
from Windcast.Models.Errors import InvalidInputError
from Windcast.Models.Logger import trace

# Denominator energy below which the centroid update keeps the previous frequency
SILENT_ENERGY = 1e-30
# Floor on alpha^2 (w - w_i)^4 so an exact hit on a prior frequency stays finite
_FILTER_FLOOR = 1e-280
# Two centre frequencies closer than this (rad/sample) are the same mode
_SAME_FREQUENCY = 1e-12


@dataclass(frozen=True)
class Series:
    """A uniformly sampled real-valued sequence.

    Attributes
    ----------
    values : numpy.ndarray
        Samples in signal units. May hold ``nan`` before imputation.
    sample_interval : float
        Spacing of the samples in time units; informational only.
    missing : numpy.ndarray, optional
        Boolean mask of samples that were missing in the source.
    """

    values: np.ndarray
    sample_interval: float = 1.0
    missing: Optional[np.ndarray] = None

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float).reshape(-1)
        if values.size == 0:
            raise InvalidInputError("Series must not be empty")
        if not self.sample_interval > 0:
            raise InvalidInputError("sample_interval must be positive")
        object.__setattr__(self, "values", values)
        if self.missing is not None:
            mask = np.asarray(self.missing, dtype=bool).reshape(-1)
            if mask.size != values.size:
                raise InvalidInputError("Missing mask length differs from the series length")
            object.__setattr__(self, "missing", mask)

    def __len__(self):
        return self.values.size

    def require_finite(self):
        if not np.all(np.isfinite(self.values)):
            bad = np.flatnonzero(~np.isfinite(self.values))
            raise InvalidInputError(f"Series holds non-finite values at {bad[:10].tolist()}")
        return self.values


@dataclass(frozen=True)
class Mode:
    """One extracted intrinsic mode.

    Attributes
    ----------
    values : numpy.ndarray
        Time-domain mode, same length as the source.
    center_frequency : float
        Centre frequency in radians per sample.
    spectrum : numpy.ndarray
        One-sided spectrum of the mode.
    converged : bool
        False when the ADMM loop hit ``max_inner_iters``.
    iterations : int
        ADMM iterations used.
    """

    values: np.ndarray
    center_frequency: float
    spectrum: np.ndarray = field(repr=False, default=None)
    converged: bool = True
    iterations: int = 0


@dataclass(frozen=True)
class SvmdConfig:
    alpha: float = 5000.0
    tau: float = 0.0
    inner_tol: float = 1e-7
    max_inner_iters: int = 500
    max_modes: int = 10
    residual_energy_ratio: float = 1e-3

    def validate(self):
        if not self.alpha > 0:
            raise InvalidInputError("svmd.alpha must be positive")
        if not self.tau >= 0:
            raise InvalidInputError("svmd.tau must be non-negative")
        if not self.inner_tol > 0:
            raise InvalidInputError("svmd.inner_tol must be positive")
        if int(self.max_inner_iters) < 1:
            raise InvalidInputError("svmd.max_inner_iters must be a positive integer")
        if int(self.max_modes) < 1:
            raise InvalidInputError("svmd.max_modes must be a positive integer")
        if not 0 < self.residual_energy_ratio < 1:
            raise InvalidInputError("svmd.residual_energy_ratio must lie in (0, 1)")
        return self


@dataclass(frozen=True)
class SvmdResult:
    """Output of :func:`decompose`.

    Attributes
    ----------
    modes : list of Mode
        Modes in extraction order.
    residual : numpy.ndarray
        Input minus the sum of the modes.
    source_length : int
        Length of the decomposed series.
    energy_ratio : float
        Residual energy divided by input energy.
    """

    modes: List[Mode]
    residual: np.ndarray
    source_length: int
    energy_ratio: float = 0.0

    @property
    def center_frequencies(self):
        return [mode.center_frequency for mode in self.modes]

    def mode_matrix(self):
        if not self.modes:
            return np.zeros((0, self.source_length))
        return np.vstack([mode.values for mode in self.modes])

    def reconstruct(self):
        return self.mode_matrix().sum(axis=0) + self.residual

    def summary(self):
        summary = {
            "num_modes": len(self.modes),
            "center_frequencies": [float(w) for w in self.center_frequencies],
            "residual_energy_ratio": float(self.energy_ratio),
            "converged": [bool(mode.converged) for mode in self.modes],
            "correlation_matrix": [],
        }
        if self.modes:
            summary["correlation_matrix"] = mode_correlation_matrix(self).matrix.tolist()
        return summary


class CorrelationMatrix(NamedTuple):
    matrix: np.ndarray
    degenerate: np.ndarray


def _as_values(series):
    if isinstance(series, Series):
        return series.require_finite()
    values = np.asarray(series, dtype=float).reshape(-1)
    if values.size == 0:
        raise InvalidInputError("Series must not be empty")
    if not np.all(np.isfinite(values)):
        raise InvalidInputError("Series holds non-finite values")
    return values


def spectrum(series):
    """One-sided spectrum of a real series over ``[0, pi]``.

    Bin ``k`` sits at ``2 pi k / N`` radians per sample. Feeding the result,
    unmodified, to :func:`inverse_spectrum` recovers the input.
    """
    return scipy.fft.rfft(_as_values(series))


def inverse_spectrum(one_sided, length):
    return scipy.fft.irfft(one_sided, n=length)


def bin_frequencies(length):
    """Radian frequency of each one-sided bin for a series of ``length``."""
    return 2.0 * np.pi * np.arange(length // 2 + 1) / length


def extract_mode(residual_spectrum, prior_center_freqs, config, omega_init, length=None):
    """Extract one compact mode from a working-residual spectrum by ADMM.

    Parameters
    ----------
    residual_spectrum : numpy.ndarray
        One-sided spectrum of the working residual (prior modes removed).
    prior_center_freqs : list of float
        Centre frequencies (rad/sample) of the modes already accepted.
    config : SvmdConfig
        Balancing parameter, dual step and stopping rule.
    omega_init : float
        Starting centre frequency in ``[0, pi]``.
    length : int, optional
        Length of the time-domain series; defaults to ``2 * (bins - 1)``.

    Returns
    -------
    (Mode, numpy.ndarray)
        The mode and the final Lagrange multiplier spectrum.
    """
    g = np.asarray(residual_spectrum, dtype=complex).reshape(-1)
    if g.size == 0:
        raise InvalidInputError("Residual spectrum must not be empty")
    if not 0.0 <= omega_init <= np.pi:
        raise InvalidInputError(f"omega_init {omega_init} outside [0, pi]")
    length = 2 * (g.size - 1) if length is None else int(length)
    if length // 2 + 1 != g.size:
        raise InvalidInputError(f"Spectrum of {g.size} bins does not match length {length}")
    priors = np.asarray(prior_center_freqs, dtype=float).reshape(-1)
    if np.any(np.abs(priors - omega_init) <= _SAME_FREQUENCY):
        raise InvalidInputError("omega_init coincides with a prior centre frequency")

    alpha = float(config.alpha)
    freqs = np.arange(g.size) / length
    omega = omega_init / (2.0 * np.pi)
    if priors.size:
        distance4 = (freqs[None, :] - priors[:, None] / (2.0 * np.pi)) ** 4
        prior_filter = np.sum(1.0 / np.maximum(alpha ** 2 * distance4, _FILTER_FLOOR), axis=0)
    else:
        prior_filter = np.zeros(g.size)

    u = np.zeros_like(g)
    lam = np.zeros_like(g)
    converged = False
    iterations = 0
    for iterations in range(1, int(config.max_inner_iters) + 1):
        d2 = (freqs - omega) ** 2
        a4 = alpha ** 2 * d2 ** 2
        u_next = (g + a4 * u + lam / 2.0) / ((1.0 + a4) * (1.0 + 2.0 * alpha * d2 + prior_filter))

        power = np.abs(u_next) ** 2
        total = power.sum()
        omega_next = float(np.dot(freqs, power) / total) if total >= SILENT_ENERGY else omega

        if config.tau > 0:
            # Dual ascent with the prior modes already removed from g
            a4_next = alpha ** 2 * (freqs - omega_next) ** 4
            residual_estimate = a4_next * (g - u_next + lam / 2.0) / (1.0 + a4_next)
            lam = lam + config.tau * (g - (u_next + residual_estimate))

        change = float(np.sum(np.abs(u_next - u) ** 2))
        reference = float(np.sum(np.abs(u) ** 2))
        u, omega = u_next, omega_next
        if reference > 0:
            relative = change / reference
        else:
            relative = 0.0 if change == 0 else np.inf
        if relative < config.inner_tol:
            converged = True
            break

    mode = Mode(
        values=inverse_spectrum(u, length),
        center_frequency=2.0 * np.pi * omega,
        spectrum=u,
        converged=converged,
        iterations=iterations,
    )
    return mode, lam


def _dominant_frequency(one_sided, length, priors):
    magnitude = np.abs(one_sided)
    freqs = bin_frequencies(length)
    for prior in priors:
        magnitude[np.abs(freqs - prior) <= _SAME_FREQUENCY] = -1.0
    return float(freqs[int(np.argmax(magnitude))])


def decompose(series, config=None):
    """Decompose a series into successive compact modes plus a residual.

    Each new mode starts from the strongest bin of the working residual.
    Extraction stops when the residual holds less than
    ``config.residual_energy_ratio`` of the input energy or when
    ``config.max_modes`` modes were accepted. A new mode is discarded, and
    extraction ends, when it lands on an already accepted centre frequency or
    carries less than ``config.residual_energy_ratio`` of the input energy.
    The returned residual is the input minus the sum of the accepted modes.

    Parameters
    ----------
    series : Series or array_like
        Finite input of at least 8 samples.
    config : SvmdConfig, optional

    Returns
    -------
    SvmdResult
    """
    config = (config or SvmdConfig()).validate()
    values = _as_values(series)
    length = values.size
    if length < 8:
        raise InvalidInputError(f"Decomposition needs at least 8 samples, got {length}")

    energy = float(np.sum(values ** 2))
    if energy == 0.0:
        return SvmdResult(modes=[], residual=np.zeros(length), source_length=length, energy_ratio=0.0)

    modes = []
    residual = values.copy()
    ratio = 1.0
    while len(modes) < int(config.max_modes):
        ratio = float(np.sum(residual ** 2)) / energy
        if ratio < config.residual_energy_ratio:
            break
        priors = [mode.center_frequency for mode in modes]
        working = scipy.fft.rfft(residual)
        omega_init = _dominant_frequency(working, length, priors)
        mode, _ = extract_mode(working, priors, config, omega_init, length=length)
        if any(abs(mode.center_frequency - prior) <= _SAME_FREQUENCY for prior in priors):
            trace("svmd: new mode repeats an accepted centre frequency, stopping")
            break
        if float(np.sum(mode.values ** 2)) < config.residual_energy_ratio * energy:
            trace("svmd: new mode carries less than the residual energy ratio, stopping")
            break
        modes.append(mode)
        residual = values - np.sum([m.values for m in modes], axis=0)
        trace(f"svmd: mode {len(modes)} at {mode.center_frequency:.5f} rad/sample "
              f"({mode.iterations} iterations, converged={mode.converged})")
    ratio = float(np.sum(residual ** 2)) / energy
    return SvmdResult(modes=modes, residual=residual, source_length=length, energy_ratio=ratio)


def mode_correlation_matrix(result):
    """Pearson correlation between every pair of modes.

    Zero-variance modes are flagged degenerate; their off-diagonal entries
    are reported as 0.

    Returns
    -------
    CorrelationMatrix
        ``matrix`` (symmetric, unit diagonal) and the boolean ``degenerate``
        flags, one per mode.
    """
    stacked = result.mode_matrix() if isinstance(result, SvmdResult) else np.atleast_2d(np.asarray(result, dtype=float))
    if stacked.shape[0] < 1:
        raise InvalidInputError("Correlation needs at least one mode")
    centered = stacked - stacked.mean(axis=1, keepdims=True)
    norms = np.sqrt(np.sum(centered ** 2, axis=1))
    degenerate = norms <= 1e-12 * (1.0 + np.abs(stacked).max(axis=1))
    safe = np.where(degenerate, 1.0, norms)
    matrix = (centered @ centered.T) / np.outer(safe, safe)
    matrix[degenerate, :] = 0.0
    matrix[:, degenerate] = 0.0
    matrix = np.clip((matrix + matrix.T) / 2.0, -1.0, 1.0)
    np.fill_diagonal(matrix, 1.0)
    return CorrelationMatrix(matrix=matrix, degenerate=degenerate)
