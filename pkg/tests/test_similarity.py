import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cfbkit.cfb import build_cfb
from cfbkit.curvature import disk_grid
from cfbkit.errors import OutOfScopeParameters, PreconditionError, StructureViolation
from cfbkit.kernels import lambda_kernel
from cfbkit.oracle import direct_intertwiner
from cfbkit.similarity import (
    MAX_WITNESS_COND,
    HomogeneityStatus,
    Status,
    curvature_similarity_check,
    decide_multiplication_family,
    interior_residual,
    j21_intertwiner,
    j3_diagonal_reduction,
    main1_witness_check,
    uk_decompose,
    weak_homogeneity,
    witness_to_bundle_maps,
)
from cfbkit.symbols import AnalyticSymbol, MobiusMap

from conftest import family_operator

ONE = AnalyticSymbol.constant(1)


def test_similar_family(similar_pair):
    A, B = similar_pair
    v = decide_multiplication_family(A, B)
    assert v.status == Status.SIMILAR
    assert v.residual <= 1e-8
    assert v.witness_cond <= MAX_WITNESS_COND
    assert interior_residual(A, B, v.witness) <= 1e-8


def test_not_similar_family():
    A = build_cfb([lambda_kernel(1)] * 2, [AnalyticSymbol.from_roots([0.5])], N=12)
    B = build_cfb([lambda_kernel(1)] * 2, [AnalyticSymbol.from_roots([1 / 3])], N=12)
    v = decide_multiplication_family(A, B)
    assert v.status == Status.NOT_SIMILAR
    assert "0.5" in v.obstruction and "unmatched" in v.obstruction


def test_reflexive_identity_witness(similar_pair):
    A, _ = similar_pair
    v = decide_multiplication_family(A, A)
    assert v.status == Status.SIMILAR
    np.testing.assert_allclose(v.witness, np.eye(A.size), atol=1e-12)


roots = st.sampled_from([0.5, 1 / 3, -0.25j, 0.0, 2.0])


@settings(max_examples=15)
@given(roots, roots, st.integers(1, 2), st.integers(1, 2), st.floats(0.5, 3))
def test_symmetry(r1, r2, m1, m2, c):
    A = family_operator(r1, m1, N=10)
    B = family_operator(r2, m2, scale=c, N=10)
    v1 = decide_multiplication_family(A, B)
    v2 = decide_multiplication_family(B, A)
    assert (v1.status == Status.SIMILAR) == (v2.status == Status.SIMILAR)
    for v in (v1, v2):
        if v.status == Status.SIMILAR:
            assert v.residual <= 1e-8 and v.witness_cond <= MAX_WITNESS_COND


def test_family_with_differing_cofactors():
    h = AnalyticSymbol.from_roots([0.5])
    A = build_cfb([lambda_kernel(1)] * 3, [h, h], {(1, 3): AnalyticSymbol.z()}, N=12)
    B = build_cfb([lambda_kernel(1)] * 3, [h, AnalyticSymbol(2 * h.coeffs)], N=12)
    v = decide_multiplication_family(A, B)
    assert v.status == Status.SIMILAR
    assert "j21_stage_residuals" in v.evidence


def test_family_needs_shared_kernels():
    A = build_cfb([lambda_kernel(1), lambda_kernel(2)], [ONE], N=8)
    B = build_cfb([lambda_kernel(1), lambda_kernel(1.5)], [ONE], N=8)
    with pytest.raises(PreconditionError):
        decide_multiplication_family(A, B)


def hardy3(cof=None, N=12):
    return build_cfb([lambda_kernel(1)] * 3, [ONE, ONE], cof, N=N)


def test_j21_trivial():
    T = build_cfb([lambda_kernel(1), lambda_kernel(2)], [ONE], N=10)
    r = j21_intertwiner(T, T)
    assert np.all(r.K == 0) and r.residual == 0


def test_j21_cofactor_pair_matches_direct_solve():
    A = hardy3({(1, 3): AnalyticSymbol.z()})
    B = hardy3()
    r = j21_intertwiner(A, B)
    assert r.status == Status.SIMILAR
    assert r.residual <= 1e-8
    N = A.N
    for i in range(3):
        for j in range(i + 1):
            assert np.all(r.K[i * N : (i + 1) * N, j * N : (j + 1) * N] == 0)
    d = direct_intertwiner(A.matrix, B.matrix, "strict-upper", N)
    assert abs(interior_residual(A, B, d.particular) - r.residual) <= 1e-7


def test_j21_precondition():
    A = hardy3()
    B = build_cfb([lambda_kernel(1)] * 3, [ONE, AnalyticSymbol.constant(2)], N=12)
    with pytest.raises(PreconditionError):
        j21_intertwiner(A, B)


def test_j3_identity():
    A = hardy3()
    for _, r in j3_diagonal_reduction(A, A, np.eye(A.size)):
        assert all(v == 0 for v in r.values())


def test_j3_on_family_witness(similar_pair):
    A, B = similar_pair
    v = decide_multiplication_family(A, B)
    for _, r in j3_diagonal_reduction(A, B, v.witness):
        assert all(x <= 1e-8 for x in r.values())


def test_j3_rejects_lower_blocks():
    A = hardy3()
    X = np.eye(A.size)
    X[A.N + 1, 0] = 0.5
    with pytest.raises(StructureViolation):
        j3_diagonal_reduction(A, A, X)


def test_curvature_check_unitary():
    k = lambda_kernel(1)
    cert, v = curvature_similarity_check(k, k, np.zeros((64, 64)), grid=disk_grid(0.7, 9))
    np.testing.assert_allclose(cert.psi, 1)
    assert cert.max_residual == pytest.approx(0, abs=1e-12)
    assert v.status == Status.SIMILAR


def test_curvature_check_index_obstruction():
    rng = np.random.default_rng(3)
    Phi = 0.3 * rng.normal(size=(64, 64))
    cert, v = curvature_similarity_check(lambda_kernel(2), lambda_kernel(1), Phi, grid=disk_grid(0.7, 9))
    assert v.status == Status.NOT_SIMILAR
    assert cert.max_residual > 1e-2


def test_curvature_check_holomorphic_modulus():
    k = lambda_kernel(2)
    phi = AnalyticSymbol([2.0, 0.5j, 0.25])
    cert, v = curvature_similarity_check(k, k, phi, grid=disk_grid(0.7, 9))
    assert cert.max_residual <= 1e-5
    assert v.status == Status.SIMILAR


def test_uk_unitary():
    d = uk_decompose(np.eye(4))
    np.testing.assert_allclose(d.X, np.sqrt(d.alpha) * np.eye(4))
    assert 0 < d.alpha < 1


def test_uk_one_eigenvalue():
    d = uk_decompose(np.diag([1, 1.2, 1, 1]))
    # G = diag(0, 0.44, 0, 0) so the admissible interval is (0, 1)
    assert d.alpha == 0.5
    np.testing.assert_allclose(np.diag(d.X).real, np.sqrt([0.5, 0.94, 0.5, 0.5]))
    assert d.check <= 1e-10


@given(st.integers(0, 2**32 - 1))
def test_uk_identity(seed):
    r = np.random.default_rng(seed)
    Y = np.eye(5) + 0.3 * (r.normal(size=(5, 5)) + 1j * r.normal(size=(5, 5)))
    try:
        d = uk_decompose(Y)
    except PreconditionError:
        return
    assert 0 < d.alpha < 1
    assert d.check <= 1e-10 * max(1, np.linalg.norm(Y) ** 2)


def test_uk_singular():
    with pytest.raises(PreconditionError):
        uk_decompose(np.diag([1.0, 0.0]))


def test_main1_trivial(similar_pair):
    A, _ = similar_pair
    v = main1_witness_check(A, A, [np.zeros((A.N, A.N))] * 3, grid=disk_grid(0.6, 7))
    assert v.status == Status.SIMILAR


def test_main1_missing_witness(similar_pair):
    A, _ = similar_pair
    assert main1_witness_check(A, A, [None] * 3).status == Status.INCONCLUSIVE


def family_bundle_maps():
    A = family_operator(0.5, 2, N=32)
    B = family_operator(0.5, 2, scale=3.0, N=32)
    v = decide_multiplication_family(A, B)
    N = A.N
    Ys = [v.witness[i * N : (i + 1) * N, i * N : (i + 1) * N] for i in range(3)]
    Phis, _ = witness_to_bundle_maps(Ys)
    return A, B, Phis


def test_main1_family_witness():
    A, B, Phis = family_bundle_maps()
    v = main1_witness_check(A, B, Phis, grid=disk_grid(0.6, 7))
    assert v.status == Status.SIMILAR, v.evidence


def test_main1_perturbed_witness():
    A, B, Phis = family_bundle_maps()
    v = main1_witness_check(A, B, [2 * Phis[0]] + Phis[1:], grid=disk_grid(0.6, 7))
    assert v.status == Status.INCONCLUSIVE
    assert max(v.evidence["condition2"]) > 1e-6


def homog(sym, lams=(1, 1), N=32):
    return build_cfb([lambda_kernel(l) for l in lams], [sym], N=N)


def test_homogeneous_constant_symbol():
    v = weak_homogeneity(homog(ONE), [MobiusMap(0.3, 0.0)])
    assert v.status == HomogeneityStatus.WEAKLY_HOMOGENEOUS
    assert v.residuals[0] <= 1e-6


def test_not_homogeneous_with_zero():
    v = weak_homogeneity(homog(AnalyticSymbol.z()), [MobiusMap(0.3, 0.0)])
    assert v.status == HomogeneityStatus.NOT_WEAKLY_HOMOGENEOUS


def test_homogeneous_exterior_root():
    v = weak_homogeneity(homog(AnalyticSymbol([2.0, 1.0]), (1, 2)), [MobiusMap(0.3, 0.5)])
    assert v.status == HomogeneityStatus.WEAKLY_HOMOGENEOUS


def test_homogeneity_boundary_root():
    v = weak_homogeneity(homog(AnalyticSymbol([1.0, 1.0])), [MobiusMap(0.3, 0.0)])
    assert v.status == HomogeneityStatus.INCONCLUSIVE


def test_homogeneity_chain_checked():
    with pytest.raises(OutOfScopeParameters):
        weak_homogeneity(homog(ONE, (2, 1)), [])


def random_maps(seed, count=5, amax=0.6):
    r = np.random.default_rng(seed)
    return [MobiusMap(amax * np.sqrt(r.random()) * np.exp(2j * np.pi * r.random()), 2 * np.pi * r.random()) for _ in range(count)]


@settings(max_examples=3)
@given(st.integers(0, 2**32 - 1))
def test_homogeneity_sample_stability(seed):
    T = build_cfb([lambda_kernel(1), lambda_kernel(1.5), lambda_kernel(2)], [AnalyticSymbol([3.0, 1.0]), ONE], N=12)
    statuses = {weak_homogeneity(T, [m]).status for m in random_maps(seed)}
    assert statuses == {HomogeneityStatus.WEAKLY_HOMOGENEOUS}
