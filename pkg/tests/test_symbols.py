import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cfbkit.errors import DegenerateSymbol, NearSingular, TruncationInsufficient, Unsupported
from cfbkit.kernels import lambda_kernel
from cfbkit.shifts import section, shift_from_kernel
from cfbkit.symbols import (
    AnalyticSymbol,
    Location,
    MobiusMap,
    RatioBound,
    SymbolKind,
    composition_operator,
    mobius_of_operator,
    multiplication_operator,
    ratio_bounded_both_ways,
    ratio_series,
    symbol_operator,
    zeros_in_disk,
)

cplx = st.complex_numbers(max_magnitude=2, allow_nan=False, allow_infinity=False)
small_poly = st.lists(cplx, min_size=1, max_size=4).filter(lambda c: abs(c[-1]) > 0.1)


def test_constant_symbol_gives_identity():
    k = lambda_kernel(2)
    np.testing.assert_allclose(symbol_operator(AnalyticSymbol.constant(1), k, k, 6), np.eye(6), atol=1e-15)


def test_z_gives_hardy_backward_shift():
    k = lambda_kernel(1)
    np.testing.assert_array_equal(symbol_operator(AnalyticSymbol.z(), k, k, 4), shift_from_kernel(k, 4).matrix)


def test_section_intertwining():
    k2, k1 = lambda_kernel(2), lambda_kernel(1)
    phi = AnalyticSymbol([-0.5, 1.0])
    w = 0.3
    M = symbol_operator(phi, k2, k1, 32)
    t1 = section(k1, w, 32)
    lhs = M @ section(k2, w, 32)
    assert np.linalg.norm(lhs - phi.conj_symbol()(w) * t1) <= 1e-6 * np.linalg.norm(t1)


def test_degree_too_large():
    with pytest.raises(TruncationInsufficient):
        symbol_operator(AnalyticSymbol([0, 0, 0, 1]), lambda_kernel(1), lambda_kernel(1), 3)


def test_operator_is_upper_banded():
    M = symbol_operator(AnalyticSymbol([1, 2, 3]), lambda_kernel(1.5), lambda_kernel(2.5), 8)
    assert np.allclose(np.tril(M, -1), 0)
    assert np.allclose(np.triu(M, 3), 0)


def test_conjugation_convention():
    phi = AnalyticSymbol([1j, 2 - 1j])
    w = 0.2 + 0.3j
    assert phi.conj_symbol()(w) == pytest.approx(np.conj(phi(np.conj(w))))


@given(small_poly, small_poly, st.sampled_from([1.0, 2.0, 2.5]))
def test_multiplicative_on_leading_block(c1, c2, lam):
    k = lambda_kernel(lam)
    N = 12
    p, q = AnalyticSymbol(c1), AnalyticSymbol(c2)
    d = p.degree + q.degree
    prod = symbol_operator(p * q, k, k, N)
    comp = symbol_operator(p, k, k, N) @ symbol_operator(q, k, k, N)
    # upper triangular compressions multiply exactly
    np.testing.assert_allclose(prod[: N - d, : N - d], comp[: N - d, : N - d], atol=1e-12)


def test_multiplication_is_adjoint():
    k = lambda_kernel(2)
    phi = AnalyticSymbol([0.5, 1j, -2])
    np.testing.assert_allclose(multiplication_operator(phi, k, 10), symbol_operator(phi, k, k, 10).conj().T)


def test_zeros_double_root():
    z = zeros_in_disk(AnalyticSymbol.from_roots([0.5, 0.5]))
    assert len(z) == 1
    assert z[0].root == pytest.approx(0.5, abs=1e-8)
    assert (z[0].multiplicity, z[0].location) == (2, Location.INTERIOR)


def test_zeros_of_constant():
    assert zeros_in_disk(AnalyticSymbol.constant(1)) == []


def test_boundary_zeros():
    z = sorted(zeros_in_disk(AnalyticSymbol([-1, 0, 1])), key=lambda r: r.root.real)
    assert [(round(r.root.real, 8), r.multiplicity, r.location) for r in z] == [
        (-1.0, 1, Location.BOUNDARY),
        (1.0, 1, Location.BOUNDARY),
    ]


def test_zero_polynomial_is_degenerate():
    with pytest.raises(DegenerateSymbol):
        zeros_in_disk(AnalyticSymbol([0.0]))


def test_truncated_series_unsupported():
    s = AnalyticSymbol([1, 0.5, 0.25], kind=SymbolKind.TRUNCATED_SERIES, tail_bound=1e-3, r_cert=0.5)
    with pytest.raises(Unsupported):
        zeros_in_disk(s)


# lattice points either coincide exactly or sit well apart
lattice = [complex(x, y) / 4 for x in range(-7, 8) for y in range(-7, 8) if abs(abs(complex(x, y) / 4) - 1) > 0.05]
roots = st.lists(st.sampled_from(lattice), min_size=1, max_size=3)


@given(roots, roots)
def test_zeros_of_product_merge(ra, rb):
    a, b = AnalyticSymbol.from_roots(ra), AnalyticSymbol.from_roots(rb)
    merged = {}
    for z in zeros_in_disk(a) + zeros_in_disk(b):
        key = next((k for k in merged if abs(k - z.root) < 1e-6), z.root)
        merged[key] = merged.get(key, 0) + z.multiplicity
    got = zeros_in_disk(a * b)
    assert sum(z.multiplicity for z in got) == sum(merged.values())
    for z in got:
        key = min(merged, key=lambda k: abs(k - z.root))
        assert abs(key - z.root) < 1e-6
        assert merged[key] == z.multiplicity


@given(roots, st.complex_numbers(min_magnitude=0.1, max_magnitude=5, allow_nan=False, allow_infinity=False))
def test_roots_reproduce_polynomial(rs, c):
    p = AnalyticSymbol.from_roots(rs, c)
    rebuilt = AnalyticSymbol.from_roots(
        [z.root for z in zeros_in_disk(p) for _ in range(z.multiplicity)], p.coeffs[-1]
    )
    np.testing.assert_allclose(rebuilt.coeffs, p.coeffs, atol=1e-8 * np.max(np.abs(p.coeffs)))


def test_ratio_examples():
    p = AnalyticSymbol.from_roots([0.5, 0.5])
    assert ratio_bounded_both_ways(p, AnalyticSymbol.from_roots([0.5, 0.5], 3)) == RatioBound.BOUNDED
    assert ratio_bounded_both_ways(AnalyticSymbol.from_roots([0.5]), AnalyticSymbol.from_roots([1 / 3])) == RatioBound.UNBOUNDED
    assert ratio_bounded_both_ways(p, p) == RatioBound.BOUNDED


def test_ratio_exterior_zeros_do_not_matter():
    assert ratio_bounded_both_ways(AnalyticSymbol.from_roots([0.5, 3]), AnalyticSymbol.from_roots([0.5])) == RatioBound.BOUNDED


def test_ratio_boundary_is_inconclusive():
    v = ratio_bounded_both_ways(AnalyticSymbol.from_roots([1]), AnalyticSymbol.from_roots([0.2]), explain=True)
    assert v.status == RatioBound.INCONCLUSIVE
    assert v.reason


def test_ratio_degenerate():
    with pytest.raises(DegenerateSymbol):
        ratio_bounded_both_ways(AnalyticSymbol([0.0]), AnalyticSymbol.z())


def test_ratio_series_divides():
    num = AnalyticSymbol.from_roots([0.5, 0.5], 3)
    den = AnalyticSymbol.from_roots([0.5, 0.5])
    np.testing.assert_allclose(ratio_series(num, den, 8).series(3), [3, 0, 0], atol=1e-12)


def test_ratio_series_with_exterior_factor():
    num = AnalyticSymbol.from_roots([0.5, 2.0])
    den = AnalyticSymbol.from_roots([0.5])
    # (z - 2) after cancelling the shared zero
    np.testing.assert_allclose(ratio_series(num, den, 6).series(6), [-2, 1, 0, 0, 0, 0], atol=1e-10)


def test_mobius_identity_and_rotation():
    T = shift_from_kernel(lambda_kernel(2), 5).matrix
    np.testing.assert_allclose(mobius_of_operator(MobiusMap(0, 0), T), T, atol=1e-15)
    np.testing.assert_allclose(mobius_of_operator(MobiusMap(0, np.pi), T), -T, atol=1e-15)


def test_mobius_on_eigen_sections():
    k = lambda_kernel(1)
    N = 24
    m = MobiusMap(0.5, 0.0)
    A = mobius_of_operator(m, shift_from_kernel(k, N).matrix)
    w = 0.3 - 0.2j
    t = section(k, w, N)
    r = A @ t - m(w) * t
    assert np.linalg.norm(r[: N // 2]) < 1e-10


def test_mobius_three_by_three():
    T = shift_from_kernel(lambda_kernel(1), 3).matrix
    # (T - a)(1 + a T + a^2 T^2) for nilpotent T
    expected = (T - 0.5 * np.eye(3)) @ (np.eye(3) + 0.5 * T + 0.25 * T @ T)
    np.testing.assert_allclose(mobius_of_operator(MobiusMap(0.5, 0), T), expected, atol=1e-15)


def test_mobius_near_singular():
    with pytest.raises(NearSingular):
        mobius_of_operator(MobiusMap(0.5, 0), 2 * np.eye(3))


disk = st.complex_numbers(max_magnitude=0.7, allow_nan=False, allow_infinity=False)


@given(disk, st.floats(-3, 3))
def test_mobius_inverse_roundtrip(a, theta):
    m = MobiusMap(a, theta)
    grid = 0.9 * np.exp(1j * np.linspace(0, 6, 13)) * np.linspace(0, 1, 13)
    np.testing.assert_allclose(m.inverse()(m(grid)), grid, atol=1e-12)


@given(disk, st.floats(-3, 3), disk, st.floats(-3, 3))
def test_mobius_composition_on_operator(a1, t1, a2, t2):
    T = shift_from_kernel(lambda_kernel(2), 6).matrix * 0.8
    m1, m2 = MobiusMap(a1, t1), MobiusMap(a2, t2)
    lhs = mobius_of_operator(m2, mobius_of_operator(m1, T))
    rhs = mobius_of_operator(m2.compose(m1), T)
    np.testing.assert_allclose(lhs, rhs, atol=1e-8)


def test_composition_identity_and_rotation():
    k = lambda_kernel(2)
    np.testing.assert_allclose(composition_operator(MobiusMap(0, 0), k, 6), np.eye(6), atol=1e-15)
    th = 0.7
    np.testing.assert_allclose(composition_operator(MobiusMap(0, th), k, 6), np.diag(np.exp(1j * th * np.arange(6))), atol=1e-14)


def test_composition_intertwines_multiplication():
    k = lambda_kernel(1)
    N = 16
    m = MobiusMap(0.3, 0.0)
    C = composition_operator(m, k, N)
    Mz = multiplication_operator(AnalyticSymbol.z(), k, N)
    Mpsi = multiplication_operator(AnalyticSymbol(m.series(N), kind=SymbolKind.TRUNCATED_SERIES, tail_bound=0.0, r_cert=0.9), k, N)
    # z e_{N-1} leaves the span, so the last column is not interior
    np.testing.assert_allclose((C @ Mz)[:, : N - 1], (Mpsi @ C)[:, : N - 1], atol=1e-12)


def test_composition_rejects_boundary_center():
    with pytest.raises(TruncationInsufficient):
        composition_operator(MobiusMap(0.97, 0), lambda_kernel(1), 8)


@pytest.mark.parametrize(
    "rs, expected",
    [
        ([0, 1e-5], [(0, 1), (1e-5, 1)]),
        ([0.5, 0.5001], [(0.5, 1), (0.5001, 1)]),
        ([0.3] * 5 + [0.31], [(0.3, 5), (0.31, 1)]),
        ([0.3] * 3 + [0.31] * 2, [(0.3, 3), (0.31, 2)]),
        ([-1.75 - 1.75j] * 6, [(-1.75 - 1.75j, 6)]),
        ([0.9j] * 4 + [0.2] * 3, [(0.2, 3), (0.9j, 4)]),
    ],
)
def test_clustered_multiplicities(rs, expected):
    got = zeros_in_disk(AnalyticSymbol.from_roots(rs, 3))
    assert [z.multiplicity for z in got] == [m for _, m in expected]
    for z, (r, _) in zip(got, expected):
        assert abs(z.root - r) <= 1e-6
