"""
Single-layer LSTM regressor with a linear head, written against numpy.

Each gate matrix acts on the concatenation ``[h_{t-1}, x_t]``. A window of
values is unrolled from a zero state and the last hidden state is mapped to
a scalar. Training is full-batch backpropagation through time with Adam.
"""
from dataclasses import dataclass, field, fields
from typing import List, NamedTuple
import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from Windcast.Models.Errors import InvalidInputError
from Windcast.Models.Logger import trace

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPSILON = 1e-8


@dataclass(frozen=True)
class LstmConfig:
    input_size: int = 1
    hidden_size: int = 200
    window: int = 5
    learning_rate: float = 1e-5
    epochs: int = 500
    seed: int = 0

    def validate(self):
        for name in ("input_size", "hidden_size", "window", "epochs"):
            if int(getattr(self, name)) < 1:
                raise InvalidInputError(f"lstm.{name} must be a positive integer")
        if not self.learning_rate > 0:
            raise InvalidInputError("lstm.learning_rate must be positive")
        if not 0 <= int(self.seed) < 2 ** 64:
            raise InvalidInputError("lstm.seed must be an unsigned 64-bit integer")
        return self


@dataclass
class LstmWeights:
    """Gate matrices of shape ``(hidden, hidden + input)``, gate biases of
    shape ``(hidden,)``, a head row of shape ``(hidden,)`` and a head bias of
    shape ``(1,)``. A gradient has the same layout."""

    W_f: np.ndarray
    W_i: np.ndarray
    W_c: np.ndarray
    W_o: np.ndarray
    b_f: np.ndarray
    b_i: np.ndarray
    b_c: np.ndarray
    b_o: np.ndarray
    head_W: np.ndarray
    head_b: np.ndarray

    @property
    def hidden_size(self):
        return self.W_f.shape[0]

    @property
    def input_size(self):
        return self.W_f.shape[1] - self.W_f.shape[0]

    def names(self):
        return [f.name for f in fields(self)]

    def tensors(self):
        return [getattr(self, name) for name in self.names()]

    def copy(self):
        return LstmWeights(*(tensor.copy() for tensor in self.tensors()))

    def to_dict(self):
        return {name: getattr(self, name).tolist() for name in self.names()}

    @classmethod
    def zeros(cls, hidden_size, input_size=1):
        gate = (hidden_size, hidden_size + input_size)
        return cls(
            *(np.zeros(gate) for _ in range(4)),
            *(np.zeros(hidden_size) for _ in range(4)),
            np.zeros(hidden_size),
            np.zeros(1),
        )

    @classmethod
    def initialize(cls, config):
        """Uniform ``[-1/sqrt(hidden), 1/sqrt(hidden)]`` draws from ``config.seed``."""
        rng = np.random.default_rng(int(config.seed))
        bound = 1.0 / np.sqrt(config.hidden_size)
        template = cls.zeros(config.hidden_size, config.input_size)
        return cls(*(rng.uniform(-bound, bound, size=t.shape) for t in template.tensors()))

    def check(self):
        hidden = self.hidden_size
        if self.input_size < 1:
            raise InvalidInputError("Gate matrices must have more columns than rows")
        expected = LstmWeights.zeros(hidden, self.input_size)
        for name, tensor, shape in zip(self.names(), self.tensors(), (t.shape for t in expected.tensors())):
            if tensor.shape != shape:
                raise InvalidInputError(f"{name} has shape {tensor.shape}, expected {shape}")
        return self


class CellState(NamedTuple):
    h: np.ndarray
    c: np.ndarray


def sigmoid(x):
    return 0.5 * (1.0 + np.tanh(0.5 * x))


def _gates(z, w):
    f = sigmoid(z @ w.W_f.T + w.b_f)
    i = sigmoid(z @ w.W_i.T + w.b_i)
    candidate = np.tanh(z @ w.W_c.T + w.b_c)
    o = sigmoid(z @ w.W_o.T + w.b_o)
    return f, i, candidate, o


def cell_forward(x_t, prev, w):
    """Advance one time step from ``prev`` with input ``x_t``."""
    x_t = np.asarray(x_t, dtype=float).reshape(-1)
    h_prev = np.asarray(prev.h, dtype=float).reshape(-1)
    c_prev = np.asarray(prev.c, dtype=float).reshape(-1)
    if x_t.size != w.input_size:
        raise InvalidInputError(f"Input has {x_t.size} features, the cell expects {w.input_size}")
    if h_prev.size != w.hidden_size or c_prev.size != w.hidden_size:
        raise InvalidInputError(f"State size differs from the hidden size {w.hidden_size}")
    f, i, candidate, o = _gates(np.concatenate([h_prev, x_t]), w)
    c = f * c_prev + i * candidate
    return CellState(h=o * np.tanh(c), c=c)


def _as_batch(windows, input_size):
    windows = np.asarray(windows, dtype=float)
    if windows.ndim == 2 and input_size == 1:
        windows = windows[:, :, None]
    if windows.ndim != 3 or windows.shape[2] != input_size:
        raise InvalidInputError(f"Windows must have shape (batch, length, {input_size})")
    if windows.shape[0] == 0 or windows.shape[1] == 0:
        raise InvalidInputError("Windows must be non-empty")
    return windows


def _forward(windows, w):
    batch, length, _ = windows.shape
    hidden = w.hidden_size
    h = np.zeros((batch, hidden))
    c = np.zeros((batch, hidden))
    cache = []
    for t in range(length):
        z = np.concatenate([h, windows[:, t, :]], axis=1)
        f, i, candidate, o = _gates(z, w)
        c_prev = c
        c = f * c_prev + i * candidate
        tanh_c = np.tanh(c)
        h = o * tanh_c
        cache.append((z, f, i, candidate, o, c_prev, tanh_c))
    predictions = h @ w.head_W + w.head_b[0]
    return predictions, h, cache


def sequence_forward(window_values, w):
    """Unroll one window from a zero state and apply the linear head."""
    window = np.asarray(window_values, dtype=float)
    if window.size == 0:
        raise InvalidInputError("Window must not be empty")
    window = window.reshape(1, -1, w.input_size)
    return float(_forward(window, w)[0][0])


def predict_windows(windows, w):
    return _forward(_as_batch(windows, w.input_size), w)[0]


def loss(windows, targets, w):
    predictions = predict_windows(windows, w)
    return float(np.mean((predictions - np.asarray(targets, dtype=float).reshape(-1)) ** 2))


def gradients(windows, targets, w):
    """Exact gradient of the batch mean squared error by BPTT.

    Returns
    -------
    (LstmWeights, float)
        The gradient, laid out like the weights, and the batch loss.
    """
    windows = _as_batch(windows, w.input_size)
    targets = np.asarray(targets, dtype=float).reshape(-1)
    if targets.size != windows.shape[0]:
        raise InvalidInputError(f"{windows.shape[0]} windows but {targets.size} targets")
    predictions, h_last, cache = _forward(windows, w)
    errors = predictions - targets
    batch_loss = float(np.mean(errors ** 2))

    grad = LstmWeights.zeros(w.hidden_size, w.input_size)
    d_prediction = 2.0 * errors / targets.size
    grad.head_W = h_last.T @ d_prediction
    grad.head_b = np.array([d_prediction.sum()])

    hidden = w.hidden_size
    dh = np.outer(d_prediction, w.head_W)
    dc = np.zeros_like(dh)
    for z, f, i, candidate, o, c_prev, tanh_c in reversed(cache):
        do = dh * tanh_c
        dc = dc + dh * o * (1.0 - tanh_c ** 2)
        da_f = dc * c_prev * f * (1.0 - f)
        da_i = dc * candidate * i * (1.0 - i)
        da_c = dc * i * (1.0 - candidate ** 2)
        da_o = do * o * (1.0 - o)
        for gate, da in (("f", da_f), ("i", da_i), ("c", da_c), ("o", da_o)):
            getattr(grad, f"W_{gate}")[...] += da.T @ z
            getattr(grad, f"b_{gate}")[...] += da.sum(axis=0)
        dz = da_f @ w.W_f + da_i @ w.W_i + da_c @ w.W_c + da_o @ w.W_o
        dh = dz[:, :hidden]
        dc = dc * f
    return grad, batch_loss


def series_windows(series, window):
    """Stride-1 windows of ``series`` and the value following each one."""
    series = np.asarray(series, dtype=float).reshape(-1)
    if series.size <= window + 1:
        raise InvalidInputError(f"Series of length {series.size} is too short for window {window}")
    windows = sliding_window_view(series[:-1], window)
    return windows.copy(), series[window:].copy()


@dataclass
class LstmModel:
    """Trained weights together with the per-epoch loss history."""

    weights: LstmWeights
    config: LstmConfig
    loss_history: List[float] = field(default_factory=list)
    final_loss: float = float("nan")

    def predict_windows(self, windows):
        return predict_windows(windows, self.weights)

    def predict_series(self, series):
        """One-step predictions for every full window of ``series``.

        Prediction ``k`` uses ``series[k:k+window]``, so the output is
        ``len(series) - window + 1`` long; the last entry forecasts one step
        past the end.
        """
        series = np.asarray(series, dtype=float).reshape(-1)
        if series.size < self.config.window:
            raise InvalidInputError(f"Series shorter than the window {self.config.window}")
        return self.predict_windows(sliding_window_view(series, self.config.window))

    def to_dict(self):
        return {
            "config": {f.name: getattr(self.config, f.name) for f in fields(self.config)},
            "weights": self.weights.to_dict(),
            "final_loss": float(self.final_loss),
        }


def train(series, config=None):
    """Fit an LSTM to one-step-ahead prediction of ``series``.

    Parameters
    ----------
    series : array_like
        Training values, longer than ``config.window + 1``.
    config : LstmConfig, optional

    Returns
    -------
    LstmModel
        ``loss_history[e]`` is the batch loss before update ``e``;
        ``final_loss`` is measured after the last update.
    """
    config = (config or LstmConfig()).validate()
    if config.input_size != 1:
        raise InvalidInputError("Training on a scalar series needs input_size 1")
    windows, targets = series_windows(series, config.window)
    if not (np.all(np.isfinite(windows)) and np.all(np.isfinite(targets))):
        raise InvalidInputError("LSTM training series must be finite")
    weights = LstmWeights.initialize(config)
    first = [np.zeros_like(t) for t in weights.tensors()]
    second = [np.zeros_like(t) for t in weights.tensors()]
    history = []
    for epoch in range(1, config.epochs + 1):
        grad, batch_loss = gradients(windows, targets, weights)
        history.append(batch_loss)
        for k, (param, g) in enumerate(zip(weights.tensors(), grad.tensors())):
            first[k] = ADAM_BETA1 * first[k] + (1.0 - ADAM_BETA1) * g
            second[k] = ADAM_BETA2 * second[k] + (1.0 - ADAM_BETA2) * g ** 2
            m_hat = first[k] / (1.0 - ADAM_BETA1 ** epoch)
            v_hat = second[k] / (1.0 - ADAM_BETA2 ** epoch)
            param -= config.learning_rate * m_hat / (np.sqrt(v_hat) + ADAM_EPSILON)
    final = loss(windows, targets, weights)
    trace(f"lstm: {config.epochs} epochs, loss {history[0]:.6g} -> {final:.6g}")
    return LstmModel(weights=weights, config=config, loss_history=history, final_loss=final)
