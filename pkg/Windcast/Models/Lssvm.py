"""
Least-squares support vector regression with a Gaussian RBF kernel.

Training solves the bordered KKT system

    [ 0   1^T          ] [b]   [0]
    [ 1   Omega + I/g  ] [a] = [y]

directly. ``H = Omega + I/gamma`` is symmetric positive definite, so the
system is reduced to two Cholesky solves with ``H`` and a scalar Schur
complement for the bias.
"""
from dataclasses import dataclass
import numpy as np
import scipy.linalg
from scipy.spatial.distance import cdist
from Windcast.Models.Errors import ConditioningError, InvalidInputError

CONDITION_LIMIT = 1e12


@dataclass(frozen=True)
class TrainingSet:
    inputs: np.ndarray
    targets: np.ndarray

    def __post_init__(self):
        inputs = np.asarray(self.inputs, dtype=float)
        if inputs.ndim == 1:
            inputs = inputs.reshape(-1, 1)
        targets = np.asarray(self.targets, dtype=float).reshape(-1)
        if inputs.ndim != 2 or inputs.shape[0] < 1 or inputs.shape[1] < 1:
            raise InvalidInputError("Training inputs must be a non-empty N x m matrix")
        if inputs.shape[0] != targets.size:
            raise InvalidInputError(f"{inputs.shape[0]} input rows but {targets.size} targets")
        if not (np.all(np.isfinite(inputs)) and np.all(np.isfinite(targets))):
            raise InvalidInputError("Training data must be finite")
        object.__setattr__(self, "inputs", inputs)
        object.__setattr__(self, "targets", targets)

    def __len__(self):
        return self.targets.size


@dataclass(frozen=True)
class LssvmHyper:
    gamma: float
    sigma2: float

    def __post_init__(self):
        if not (np.isfinite(self.gamma) and self.gamma > 0):
            raise InvalidInputError(f"gamma must be positive, got {self.gamma}")
        if not (np.isfinite(self.sigma2) and self.sigma2 > 0):
            raise InvalidInputError(f"sigma2 must be positive, got {self.sigma2}")


@dataclass(frozen=True)
class LssvmModel:
    """A trained regressor ``f(x) = sum_i a_i k(x, x_i) + b``.

    Attributes
    ----------
    support_inputs : numpy.ndarray
        Training inputs, one row per dual coefficient.
    duals : numpy.ndarray
        Dual coefficients ``a``.
    bias : float
        Bias ``b``.
    hyper : LssvmHyper
    kkt_residual : float
        Relative residual of the stored solution in the KKT system.
    condition : float
        Condition estimate of ``Omega + I/gamma``.
    """

    support_inputs: np.ndarray
    duals: np.ndarray
    bias: float
    hyper: LssvmHyper
    kkt_residual: float = 0.0
    condition: float = 1.0

    @property
    def dimension(self):
        return self.support_inputs.shape[1]

    def to_dict(self):
        return {
            "gamma": float(self.hyper.gamma),
            "sigma2": float(self.hyper.sigma2),
            "bias": float(self.bias),
            "duals": self.duals.tolist(),
            "support_inputs": self.support_inputs.tolist(),
        }

    @classmethod
    def from_dict(cls, data):
        return cls(
            support_inputs=np.asarray(data["support_inputs"], dtype=float),
            duals=np.asarray(data["duals"], dtype=float),
            bias=float(data["bias"]),
            hyper=LssvmHyper(float(data["gamma"]), float(data["sigma2"])),
        )


def rbf_kernel(x, x2, sigma2):
    """Gaussian similarity ``exp(-|x - x2|^2 / (2 sigma2))``."""
    x = np.asarray(x, dtype=float).reshape(-1)
    x2 = np.asarray(x2, dtype=float).reshape(-1)
    if x.shape != x2.shape:
        raise InvalidInputError(f"Kernel arguments differ in dimension: {x.size} vs {x2.size}")
    if not sigma2 > 0:
        raise InvalidInputError("sigma2 must be positive")
    return float(np.exp(-np.sum((x - x2) ** 2) / (2.0 * sigma2)))


def kernel_matrix(inputs, others, sigma2):
    return np.exp(-cdist(inputs, others, "sqeuclidean") / (2.0 * sigma2))


def _bordered_residual(omega, gamma, bias, duals, targets):
    top = np.sum(duals)
    rows = omega @ duals + duals / gamma + bias - targets
    return top, rows


def train(data, hyper):
    """Fit the regressor by solving the KKT system.

    Raises
    ------
    ConditioningError
        If ``Omega + I/gamma`` cannot be factorised, its condition estimate
        exceeds ``1e12`` or the solution is not finite.
    """
    inputs, targets = data.inputs, data.targets
    size = targets.size
    omega = kernel_matrix(inputs, inputs, hyper.sigma2)
    system = omega + np.eye(size) / hyper.gamma
    # Smallest eigenvalue >= 1/gamma, largest <= max row sum + 1/gamma
    condition = 1.0 + hyper.gamma * float(np.max(np.sum(omega, axis=1)))
    if condition > CONDITION_LIMIT:
        raise ConditioningError("Kernel system too ill-conditioned", condition)
    try:
        factor = scipy.linalg.cho_factor(system, lower=True, check_finite=True)
    except (np.linalg.LinAlgError, ValueError) as err:
        raise ConditioningError(f"Cholesky factorisation failed: {err}", condition) from err

    def solve(rhs_top, rhs_rows):
        eta = scipy.linalg.cho_solve(factor, np.ones(size))
        nu = scipy.linalg.cho_solve(factor, rhs_rows)
        bias = (np.sum(nu) - rhs_top) / np.sum(eta)
        return bias, nu - bias * eta

    bias, duals = solve(0.0, targets)
    # One step of iterative refinement
    top, rows = _bordered_residual(omega, hyper.gamma, bias, duals, targets)
    bias_fix, duals_fix = solve(top, rows)
    bias, duals = bias - bias_fix, duals - duals_fix

    if not (np.isfinite(bias) and np.all(np.isfinite(duals))):
        raise ConditioningError("Kernel system produced a non-finite solution", condition)
    top, rows = _bordered_residual(omega, hyper.gamma, bias, duals, targets)
    scale = max(float(np.linalg.norm(targets)), np.finfo(float).tiny)
    residual = float(np.sqrt(top ** 2 + np.sum(rows ** 2))) / scale
    return LssvmModel(
        support_inputs=inputs.copy(),
        duals=duals,
        bias=float(bias),
        hyper=hyper,
        kkt_residual=residual,
        condition=condition,
    )


def predict_many(model, inputs):
    inputs = np.asarray(inputs, dtype=float)
    if inputs.ndim == 1:
        inputs = inputs.reshape(1, -1)
    if inputs.shape[1] != model.dimension:
        raise InvalidInputError(f"Input dimension {inputs.shape[1]} differs from the trained dimension {model.dimension}")
    return kernel_matrix(inputs, model.support_inputs, model.hyper.sigma2) @ model.duals + model.bias


def predict(model, x):
    x = np.asarray(x, dtype=float).reshape(-1)
    if x.size != model.dimension:
        raise InvalidInputError(f"Input dimension {x.size} differs from the trained dimension {model.dimension}")
    return float(predict_many(model, x.reshape(1, -1))[0])
