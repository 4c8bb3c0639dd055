import math
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from Windcast.Models import Lssvm
from Windcast.Models.Errors import ConditioningError, InvalidInputError


def gaussian_elimination(matrix, rhs):
    # Dense solve with partial pivoting, written out long-hand
    a = [list(map(float, row)) + [float(b)] for row, b in zip(matrix, rhs)]
    n = len(a)
    for col in range(n):
        pivot = max(range(col, n), key=lambda r: abs(a[r][col]))
        a[col], a[pivot] = a[pivot], a[col]
        for row in range(col + 1, n):
            factor = a[row][col] / a[col][col]
            for k in range(col, n + 1):
                a[row][k] -= factor * a[col][k]
    x = [0.0] * n
    for row in range(n - 1, -1, -1):
        x[row] = (a[row][n] - sum(a[row][k] * x[k] for k in range(row + 1, n))) / a[row][row]
    return np.array(x)


def oracle(inputs, targets, gamma, sigma2):
    size = len(targets)
    omega = [[Lssvm.rbf_kernel(inputs[i], inputs[j], sigma2) for j in range(size)] for i in range(size)]
    system = [[0.0] + [1.0] * size]
    for i in range(size):
        system.append([1.0] + [omega[i][j] + (1.0 / gamma if i == j else 0.0) for j in range(size)])
    solution = gaussian_elimination(system, [0.0] + list(targets))
    return solution[0], solution[1:]


def test_rbf_kernel_examples():
    assert Lssvm.rbf_kernel([1.0, 2.0], [1.0, 2.0], 0.7) == 1.0
    assert Lssvm.rbf_kernel([0.0], [3.0], 4.5) == pytest.approx(math.exp(-1))
    assert Lssvm.rbf_kernel([0.0, 0.0], [1.0, 1.0], 1.0) == pytest.approx(0.367879, abs=1e-6)


def test_rbf_kernel_dimension_mismatch():
    with pytest.raises(InvalidInputError):
        Lssvm.rbf_kernel([0.0], [0.0, 1.0], 1.0)


@settings(max_examples=50, deadline=None)
@given(
    st.lists(st.floats(-10, 10), min_size=3, max_size=3),
    st.lists(st.floats(-10, 10), min_size=3, max_size=3),
    st.floats(1e-3, 1e3),
)
def test_rbf_kernel_symmetric_and_bounded(x, x2, sigma2):
    value = Lssvm.rbf_kernel(x, x2, sigma2)
    assert value == Lssvm.rbf_kernel(x2, x, sigma2)
    assert 0.0 <= value <= 1.0


def test_single_sample_is_constant():
    data = Lssvm.TrainingSet(np.array([[0.3, -1.2]]), np.array([7.0]))
    model = Lssvm.train(data, Lssvm.LssvmHyper(gamma=10.0, sigma2=1.0))
    assert model.duals[0] == pytest.approx(0.0, abs=1e-12)
    assert model.bias == pytest.approx(7.0)
    assert Lssvm.predict(model, [5.0, 5.0]) == pytest.approx(7.0)


def test_zero_targets_give_zero_solution():
    rng = np.random.default_rng(1)
    data = Lssvm.TrainingSet(rng.normal(size=(10, 2)), np.zeros(10))
    model = Lssvm.train(data, Lssvm.LssvmHyper(gamma=5.0, sigma2=2.0))
    assert not np.any(model.duals)
    assert model.bias == 0.0
    assert Lssvm.predict(model, [0.1, 0.2]) == 0.0


def test_matches_elimination_oracle():
    rng = np.random.default_rng(2024)
    for trial in range(20):
        size = int(rng.integers(2, 51))
        inputs = rng.normal(size=(size, 3))
        targets = rng.normal(size=size)
        gamma = float(10 ** rng.uniform(-1, 2))
        sigma2 = float(10 ** rng.uniform(-0.5, 1))
        model = Lssvm.train(Lssvm.TrainingSet(inputs, targets), Lssvm.LssvmHyper(gamma, sigma2))
        bias, duals = oracle(inputs, targets, gamma, sigma2)
        np.testing.assert_allclose(model.duals, duals, rtol=1e-9, atol=1e-9)
        assert model.bias == pytest.approx(bias, rel=1e-9, abs=1e-9)
        assert model.kkt_residual < 1e-8
        assert abs(np.sum(model.duals)) < 1e-8 * np.sum(np.abs(model.duals)) + 1e-12


def test_near_interpolation_with_large_gamma():
    x = np.linspace(0.0, 1.0, 20).reshape(-1, 1)
    y = np.sin(2 * np.pi * x[:, 0])
    model = Lssvm.train(Lssvm.TrainingSet(x, y), Lssvm.LssvmHyper(gamma=1e9, sigma2=1e-3))
    np.testing.assert_allclose(Lssvm.predict_many(model, x), y, atol=1e-3)


def test_zero_dual_model_predicts_zero():
    model = Lssvm.LssvmModel(np.ones((3, 2)), np.zeros(3), 0.0, Lssvm.LssvmHyper(1.0, 1.0))
    assert Lssvm.predict(model, [4.0, -2.0]) == 0.0


def test_predict_dimension_mismatch():
    data = Lssvm.TrainingSet(np.eye(3), np.arange(3.0))
    model = Lssvm.train(data, Lssvm.LssvmHyper(1.0, 1.0))
    with pytest.raises(InvalidInputError):
        Lssvm.predict(model, [1.0, 2.0])
    with pytest.raises(InvalidInputError):
        Lssvm.predict_many(model, np.ones((2, 4)))


def test_ill_conditioned_system_raises():
    rng = np.random.default_rng(5)
    data = Lssvm.TrainingSet(rng.normal(size=(50, 2)), rng.normal(size=50))
    with pytest.raises(ConditioningError) as info:
        Lssvm.train(data, Lssvm.LssvmHyper(gamma=1e12, sigma2=1.0))
    assert info.value.condition > 1e12
    assert info.value.exit_code == 3


def test_invalid_training_data():
    with pytest.raises(InvalidInputError):
        Lssvm.TrainingSet(np.ones((3, 2)), np.ones(2))
    with pytest.raises(InvalidInputError):
        Lssvm.TrainingSet(np.array([[np.nan]]), np.ones(1))
    with pytest.raises(InvalidInputError):
        Lssvm.LssvmHyper(gamma=0.0, sigma2=1.0)


def test_dict_round_trip_predicts_identically():
    rng = np.random.default_rng(9)
    data = Lssvm.TrainingSet(rng.normal(size=(15, 2)), rng.normal(size=15))
    model = Lssvm.train(data, Lssvm.LssvmHyper(3.0, 0.5))
    restored = Lssvm.LssvmModel.from_dict(model.to_dict())
    queries = rng.normal(size=(5, 2))
    np.testing.assert_array_equal(Lssvm.predict_many(restored, queries), Lssvm.predict_many(model, queries))
