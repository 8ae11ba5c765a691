import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cfbkit.errors import InvalidParameter, OutOfDomain, TruncationInsufficient
from cfbkit.kernels import (
    classify_growth,
    eval_diag,
    kernel_from_coeffs,
    kernel_ratio_profile,
    lambda_kernel,
)

lams = st.floats(0.1, 6.0)


def test_hardy_coefficients():
    assert np.array_equal(lambda_kernel(1, 4).coeffs, [1, 1, 1, 1])


def test_bergman_coefficients():
    np.testing.assert_allclose(lambda_kernel(2, 4).coeffs, [1, 2, 3, 4], rtol=1e-14)


def test_fractional_coefficients():
    # 1.5 * 2.5 / 2 = 1.875
    np.testing.assert_allclose(lambda_kernel(1.5, 3).coeffs, [1, 1.5, 1.875], rtol=1e-14)


@pytest.mark.parametrize("lam, M", [(0, 4), (-1, 4), (1, 1)])
def test_lambda_kernel_rejects(lam, M):
    with pytest.raises(InvalidParameter):
        lambda_kernel(lam, M)


@given(lams)
def test_coefficient_ratio_law(lam):
    a = lambda_kernel(lam, 200).coeffs
    n = np.arange(199)
    np.testing.assert_allclose(a[1:] / a[:-1], (lam + n) / (n + 1), rtol=1e-12)


@given(st.floats(1.0, 6.0))
def test_log_concave_for_lambda_at_least_one(lam):
    # the ratio 1 + (lam - 1)/(n + 1) is non-increasing
    a = lambda_kernel(lam, 100).coeffs
    assert np.all(a[:-2] * a[2:] <= a[1:-1] ** 2 * (1 + 1e-13))


@given(st.floats(0.1, 1.0))
def test_log_convex_for_lambda_at_most_one(lam):
    a = lambda_kernel(lam, 100).coeffs
    assert np.all(a[:-2] * a[2:] >= a[1:-1] ** 2 * (1 - 1e-13))


def test_eval_at_origin():
    assert eval_diag(lambda_kernel(1), 0) == 1


def test_bergman_at_half_matches_partial_sums():
    k = lambda_kernel(2, 200)
    closed = eval_diag(k, 0.5)
    partial = np.sum(k.coeffs * 0.25 ** np.arange(200))
    assert closed == pytest.approx(16 / 9, rel=1e-14)
    assert partial == pytest.approx(closed, rel=1e-12)


def test_coefficient_kernel_is_certified():
    k = kernel_from_coeffs(lambda_kernel(2, 400).coeffs)
    assert eval_diag(k, 0.5) == pytest.approx(16 / 9, rel=1e-12)


def test_uncertifiable_tail():
    with pytest.raises(TruncationInsufficient):
        eval_diag(kernel_from_coeffs(np.ones(64)), 0.999)


def test_out_of_domain():
    with pytest.raises(OutOfDomain):
        eval_diag(lambda_kernel(1), 1.0)


@given(lams, st.floats(0, 0.95))
def test_closed_form_identity(lam, r):
    w = r * np.exp(0.7j)
    assert eval_diag(lambda_kernel(lam), w) * (1 - r**2) ** lam == pytest.approx(1, abs=1e-12)


def test_rescaling_normalizes():
    k = kernel_from_coeffs([2.0, 4.0, 6.0])
    np.testing.assert_allclose(k.coeffs, [1, 2, 3])


def test_extension_needs_tail():
    with pytest.raises(TruncationInsufficient):
        kernel_from_coeffs([1, 2, 3]).extended(10)
    assert lambda_kernel(2, 4).extended(10).size == 10


def test_ratio_profile_diverges():
    p = kernel_ratio_profile(lambda_kernel(2), lambda_kernel(1), [0.5, 0.9, 0.99, 0.999])
    assert p.tag == "diverges"


def test_ratio_profile_identical():
    p = kernel_ratio_profile(lambda_kernel(1), lambda_kernel(1), [0.1, 0.5, 0.9])
    assert p.tag == "bounded"
    assert all(v == pytest.approx(1) for _, v in p.samples)


def test_ratio_profile_vanishes():
    p = kernel_ratio_profile(lambda_kernel(1), lambda_kernel(2), [0.5, 0.9, 0.99])
    np.testing.assert_allclose([v for _, v in p.samples], [0.75, 0.19, 0.0199], rtol=1e-12)
    assert p.tag == "vanishes"


def test_ratio_profile_rejects_bad_radii():
    with pytest.raises(InvalidParameter):
        kernel_ratio_profile(lambda_kernel(1), lambda_kernel(2), [0.9, 0.5])


def test_growth_classifier_band():
    r = np.array([0.9, 0.99, 0.999])
    assert classify_growth(r, (1 - r) ** 0.05)[0] == "bounded"
    assert classify_growth(r, (1 - r) ** -0.5)[0] == "diverges"
