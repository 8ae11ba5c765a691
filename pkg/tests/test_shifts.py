import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cfbkit.errors import OutOfDomain, TruncationInsufficient
from cfbkit.kernels import kernel_from_coeffs, lambda_kernel
from cfbkit.shifts import (
    WeightSequence,
    operator_norm_power,
    section,
    section_derivative,
    shift_from_kernel,
    weight_product_asymptotics,
    weights_from_kernel,
)


def test_hardy_weights():
    np.testing.assert_array_equal(shift_from_kernel(lambda_kernel(1), 3).weights.weights, [1, 1])


def test_bergman_weights():
    w = shift_from_kernel(lambda_kernel(2), 3).weights.weights
    np.testing.assert_allclose(w, [1 / np.sqrt(2), np.sqrt(2 / 3)], rtol=1e-14)


def test_explicit_coefficients():
    np.testing.assert_allclose(shift_from_kernel(kernel_from_coeffs([1, 4]), 2).weights.weights, [0.5])


def test_insufficient_coefficients():
    with pytest.raises(TruncationInsufficient):
        shift_from_kernel(kernel_from_coeffs([1, 2, 3]), 5)


def test_matrix_is_upper_bidiagonal():
    T = shift_from_kernel(lambda_kernel(2.5), 8).matrix
    assert np.all(np.diag(T, 1) > 0)
    assert np.count_nonzero(T - np.diag(np.diag(T, 1), 1)) == 0


def test_section_values():
    np.testing.assert_array_equal(section(lambda_kernel(1), 0, 4), [1, 0, 0, 0])
    np.testing.assert_allclose(section(lambda_kernel(2), 0.5, 3), [1, np.sqrt(2) * 0.5, np.sqrt(3) * 0.25])


def test_eigen_residual_example():
    T = shift_from_kernel(lambda_kernel(1), 8).matrix
    t = section(lambda_kernel(1), 0.5, 8)
    assert np.linalg.norm(T @ t - 0.5 * t) == pytest.approx(0.5**8, rel=1e-12)


@pytest.mark.parametrize("lam", [1, 1.5, 2, 3])
@pytest.mark.parametrize("r", [0, 0.3, 0.7])
@pytest.mark.parametrize("N", [4, 16, 64])
def test_eigen_residual_law(lam, r, N):
    k = lambda_kernel(lam, 80)
    w = r * np.exp(0.4j)
    T = shift_from_kernel(k, N).matrix
    t = section(k, w, N)
    expected = r**N * np.sqrt(k.coeffs[N - 1])
    # roundoff of the cancelling entries sets an absolute floor
    assert np.linalg.norm(T @ t - w * t) == pytest.approx(expected, rel=1e-12, abs=1e-15)


def test_section_derivative_relation():
    k = lambda_kernel(2)
    N, w = 32, 0.3 + 0.1j
    T = shift_from_kernel(k, N).matrix
    dt = section_derivative(k, w, N)
    t = section(k, w, N)
    # (T - w) t' = t away from the last coordinate
    np.testing.assert_allclose((T @ dt - w * dt)[:-1], t[:-1], atol=1e-14)


@given(st.floats(0.5, 4), st.integers(2, 30), st.integers(1, 20))
def test_section_padding(lam, N, extra):
    k = lambda_kernel(lam)
    w = 0.4 - 0.2j
    np.testing.assert_allclose(section(k, w, N + extra)[:N], section(k, w, N), rtol=1e-15)


def test_section_out_of_domain():
    with pytest.raises(OutOfDomain):
        section(lambda_kernel(1), 1.2, 4)


@pytest.mark.parametrize("lam", [1, 1.5, 2, 3])
def test_telescoping(lam):
    k = lambda_kernel(lam, 2000)
    rows = weight_product_asymptotics(weights_from_kernel(k), 1500)
    prods = np.array([p for _, p, _ in rows])
    np.testing.assert_allclose(prods, 1 / np.sqrt(k.coeffs[1:1502]), rtol=1e-12)


def test_hardy_products_are_one():
    rows = weight_product_asymptotics(weights_from_kernel(lambda_kernel(1, 100)), 50)
    assert all(p == pytest.approx(1) and q == pytest.approx(1) for _, p, q in rows)


def test_bergman_products():
    rows = weight_product_asymptotics(weights_from_kernel(lambda_kernel(2, 100)), 50)
    np.testing.assert_allclose([p for _, p, _ in rows], 1 / np.sqrt(np.arange(51) + 2), rtol=1e-13)


def test_norm_power_hardy():
    assert operator_norm_power(weights_from_kernel(lambda_kernel(1, 20)), 5) == 1


def test_norm_power_window_ends():
    ws = weights_from_kernel(lambda_kernel(2, 20))
    d = ws.weights
    assert operator_norm_power(ws, 3) == pytest.approx(np.prod(d[-3:]))
    assert operator_norm_power(ws, 3, right_inverse=True) == pytest.approx(np.prod(1 / d[:3]))


@given(st.lists(st.floats(0.2, 3.0), min_size=6, max_size=30), st.integers(1, 5))
def test_norm_power_matches_matrix(weights, n):
    ws = WeightSequence(np.array(weights))
    N = len(weights) + 1
    T = np.diag(weights, 1)
    assert operator_norm_power(ws, n) == pytest.approx(np.linalg.norm(np.linalg.matrix_power(T, n), 2), rel=1e-10)


def test_norm_power_window_too_large():
    with pytest.raises(TruncationInsufficient):
        operator_norm_power(weights_from_kernel(lambda_kernel(2, 5)), 4)


def test_norm_bounded_by_sup_weight():
    T = shift_from_kernel(lambda_kernel(0.5), 20)
    assert np.linalg.norm(T.matrix, 2) <= T.weights.bounds[1] * (1 + 1e-12)
