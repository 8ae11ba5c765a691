"""Similarity decisions and explicit intertwiners for block shift operators.

Witnesses follow the convention ``X T = T~ X``.  Residuals are measured on
the ``EdgeMask`` interior and relative to ``||X|| ||T||``.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np
import scipy.linalg as sla

from .cfb import CfbOperator, build_cfb
from .curvature import DEFAULT_STEP, curvature_rank1, dd_bar, disk_grid, sff_ratio
from .errors import (
    DimensionCap,
    InvalidParameter,
    InvalidWitness,
    OutOfScopeParameters,
    PreconditionError,
    StructureViolation,
    Unsupported,
)
from .kernels import DiagonalKernel
from .oracle import MAX_UNKNOWNS, svd_solve, unvec, vec
from .shifts import section
from .symbols import (
    AnalyticSymbol,
    Location,
    MobiusMap,
    RatioBound,
    composition_operator,
    mobius_of_operator,
    multiplication_operator,
    ratio_bounded_both_ways,
    ratio_series,
    series_compose,
    series_div,
    series_mul,
    symbol_operator,
    zeros_in_disk,
)

__all__ = [
    "Status",
    "SimilarityVerdict",
    "CurvatureMatchCertificate",
    "J21Result",
    "UKDecomposition",
    "HomogeneityStatus",
    "HomogeneityVerdict",
    "interior_residual",
    "verify_witness",
    "decide_multiplication_family",
    "j21_intertwiner",
    "j3_diagonal_reduction",
    "curvature_similarity_check",
    "uk_decompose",
    "witness_to_bundle_maps",
    "main1_witness_check",
    "weak_homogeneity",
    "homogeneity_intertwiner",
]

WITNESS_RTOL = 1e-8
MAX_WITNESS_COND = 1e6
CURVATURE_TOL = 1e-5
SFF_RTOL = 1e-6
HOMOGENEITY_TOL = 1e-6


class Status(str, enum.Enum):
    SIMILAR = "Similar"
    NOT_SIMILAR = "NotSimilar"
    INCONCLUSIVE = "Inconclusive"


@dataclass(frozen=True)
class SimilarityVerdict:
    status: Status
    witness: Optional[np.ndarray] = field(default=None, repr=False)
    witness_cond: Optional[float] = None
    residual: Optional[float] = None
    obstruction: str = ""
    evidence: dict = field(default_factory=dict)

    def to_record(self) -> dict:
        return {
            "status": self.status.value,
            "witness_cond": self.witness_cond,
            "residual": self.residual,
            "obstruction": self.obstruction,
            "evidence": self.evidence,
        }


@dataclass(frozen=True)
class CurvatureMatchCertificate:
    grid: np.ndarray
    psi: np.ndarray
    residual: np.ndarray
    max_residual: float
    y_check: float = 0.0
    witness_norm: float = 0.0


# ---------------------------------------------------------------- helpers ---

def interior_residual(T: CfbOperator, T_tilde: CfbOperator, X: np.ndarray) -> float:
    """``||X T - T~ X||`` on the interior, relative to ``||X|| ||T||``."""
    R = T.interior(X @ T.matrix - T_tilde.matrix @ X)
    scale = np.linalg.norm(X, 2) * max(np.linalg.norm(T.matrix, 2), 1e-300)
    return float(np.linalg.norm(R, 2) / scale)


def verify_witness(T: CfbOperator, T_tilde: CfbOperator, X: np.ndarray, rtol: float = WITNESS_RTOL):
    """Return ``(ok, residual, cond)`` for a candidate intertwiner."""
    res = interior_residual(T, T_tilde, X)
    cond = float(np.linalg.cond(X))
    ok = res <= rtol and np.isfinite(cond) and cond <= MAX_WITNESS_COND
    return ok, res, cond


def _same_kernels(T: CfbOperator, Tt: CfbOperator) -> bool:
    if T.n != Tt.n or T.N != Tt.N:
        return False
    return all(np.allclose(a.take(T.N), b.take(T.N), rtol=1e-14, atol=0) for a, b in zip(T.kernels, Tt.kernels))


def _same_symbol(a: AnalyticSymbol, b: AnalyticSymbol, tol: float = 1e-12) -> bool:
    m = max(a.coeffs.size, b.coeffs.size)
    return bool(np.max(np.abs(a.series(m) - b.series(m))) <= tol * max(1.0, np.max(np.abs(a.coeffs))))


def _block_diag(blocks) -> np.ndarray:
    return sla.block_diag(*blocks).astype(complex)


# ----------------------------------------------------- multiplication family ---

def decide_multiplication_family(T: CfbOperator, T_tilde: CfbOperator) -> SimilarityVerdict:
    """Similarity of two operators that differ only in their symbols.

    Similar exactly when every pair of superdiagonal symbols has bounded
    ratios both ways, i.e. identical zeros with multiplicity.  The witness is
    ``D = diag(M_{chi_i}^*)`` with ``chi_i = prod_{k>=i} phi~_k / phi_k``;
    differing cofactors are then absorbed by an ``I + K`` factor.
    """
    if not _same_kernels(T, T_tilde):
        raise PreconditionError("operators must share kernels and truncation blockwise")
    for s in T.superdiag + T_tilde.superdiag:
        if not s.is_polynomial:
            raise Unsupported("superdiagonal symbols must be polynomials")
    reasons, inconclusive = [], []
    for i, (p, q) in enumerate(zip(T.superdiag, T_tilde.superdiag), start=1):
        if p.is_zero() or q.is_zero():
            if p.is_zero() and q.is_zero():
                continue
            reasons.append(f"block ({i},{i + 1}): exactly one symbol vanishes")
            continue
        rep = ratio_bounded_both_ways(p, q, explain=True)
        if rep.status == RatioBound.UNBOUNDED:
            reasons.append(f"block ({i},{i + 1}): {rep.reason}")
        elif rep.status == RatioBound.INCONCLUSIVE:
            inconclusive.append(f"block ({i},{i + 1}): {rep.reason}")
    if reasons:
        return SimilarityVerdict(Status.NOT_SIMILAR, obstruction="; ".join(reasons))
    if inconclusive:
        return SimilarityVerdict(Status.INCONCLUSIVE, obstruction="; ".join(inconclusive))

    N, n = T.N, T.n
    chis = [AnalyticSymbol.constant(1.0)]
    for i in range(n - 2, -1, -1):
        p, q = T.superdiag[i], T_tilde.superdiag[i]
        if p.is_zero():
            r = AnalyticSymbol.constant(1.0)
        else:
            r = ratio_series(q, p, N)
        chis.append(AnalyticSymbol(series_mul(chis[-1].series(N), r.series(N), N), r.kind, r.tail_bound))
    chis = chis[::-1]
    D = _block_diag([symbol_operator(c, k, k, N) for c, k in zip(chis, T.kernels)])

    X = D
    stages = None
    if any(not _same_symbol(T.cofactors.get(key, AnalyticSymbol.constant(0)), T_tilde.cofactors.get(key, AnalyticSymbol.constant(0)))
           for key in set(T.cofactors) | set(T_tilde.cofactors)):
        mid = build_cfb(T.kernels, T_tilde.superdiag, T.cofactors, N, verify=False)
        j = j21_intertwiner(mid, T_tilde)
        stages = j.stage_residuals
        X = j.X @ D
    ok, res, cond = verify_witness(T, T_tilde, X)
    ev = {"chi_tail_bounds": [float(c.tail_bound) for c in chis]}
    if stages is not None:
        ev["j21_stage_residuals"] = stages
    if ok:
        return SimilarityVerdict(Status.SIMILAR, X, cond, res, "", ev)
    return SimilarityVerdict(Status.INCONCLUSIVE, X, cond, res, "witness failed verification", ev)


# -------------------------------------------------------------------- I + K ---

@dataclass(frozen=True)
class J21Result:
    K: np.ndarray = field(repr=False)
    X: np.ndarray = field(repr=False)
    stage_residuals: list
    residual: float
    status: Status


def _offset_blocks(n: int, d: int):
    return [(i, i + d) for i in range(n - d)]


def _stage_system(T, Tt, K, unknowns, equations):
    """Linear system for the unknown blocks of ``(I+K) T = T~ (I+K)``.

    Equation block ``(i, j)``: ``sum_l K_il T_lj - T~_il K_lj = T~_ij - T_ij``
    with the known part of ``K`` moved to the right-hand side.  Blocks are
    0-based here.
    """
    N = T.N
    Tb = lambda i, j: T.matrix[i * N : (i + 1) * N, j * N : (j + 1) * N]
    Ttb = lambda i, j: Tt.matrix[i * N : (i + 1) * N, j * N : (j + 1) * N]
    col = {b: k for k, b in enumerate(unknowns)}
    I = np.eye(N)
    rows, rhs = [], []
    for (i, j) in equations:
        row = np.zeros((N * N, N * N * len(unknowns)), dtype=complex)
        r = Ttb(i, j) - Tb(i, j)
        for l in range(i + 1, j + 1):
            # K_il T_lj
            if (i, l) in col:
                c = col[(i, l)]
                row[:, c * N * N : (c + 1) * N * N] += np.kron(Tb(l, j).T, I)
            else:
                r = r - K[i * N : (i + 1) * N, l * N : (l + 1) * N] @ Tb(l, j)
        for l in range(i, j):
            # - T~_il K_lj
            if (l, j) in col:
                c = col[(l, j)]
                row[:, c * N * N : (c + 1) * N * N] -= np.kron(I, Ttb(i, l))
            else:
                r = r + Ttb(i, l) @ K[l * N : (l + 1) * N, j * N : (j + 1) * N]
        rows.append(row)
        rhs.append(vec(r))
    return np.vstack(rows), np.concatenate(rhs)


def j21_intertwiner(T: CfbOperator, T_tilde: CfbOperator, rtol: float = WITNESS_RTOL) -> J21Result:
    """Intertwiner ``X = I + K`` with ``K`` strictly block upper triangular.

    Offsets are processed in increasing order.  Stage ``d`` re-solves the
    offset ``d - 1`` blocks together with the offset ``d`` blocks, subject to
    the equations at both offsets; the offset ``d - 1`` equations only see
    those blocks through ``tau``, so every earlier equation stays satisfied.
    Each stage takes the minimum-norm least-squares solution.
    """
    if not _same_kernels(T, T_tilde):
        raise PreconditionError("diagonal blocks differ")
    for p, q in zip(T.superdiag, T_tilde.superdiag):
        if not _same_symbol(p, q):
            raise PreconditionError("superdiagonal blocks differ")
    n, N = T.n, T.N
    K = np.zeros((n * N, n * N), dtype=complex)
    stages = []
    for d in range(1, n):
        lo = max(1, d - 1)
        unknowns = [b for e in range(lo, d + 1) for b in _offset_blocks(n, e)]
        if len(unknowns) * N * N > 2 * MAX_UNKNOWNS:
            raise DimensionCap(f"stage {d} has {len(unknowns) * N * N} unknowns")
        for (i, j) in unknowns:
            K[i * N : (i + 1) * N, j * N : (j + 1) * N] = 0
        L, b = _stage_system(T, T_tilde, K, unknowns, unknowns)
        x, _, rep = svd_solve(L, b)
        for c, (i, j) in enumerate(unknowns):
            K[i * N : (i + 1) * N, j * N : (j + 1) * N] = unvec(x[c * N * N : (c + 1) * N * N], (N, N))
        stages.append(float(rep.residual))
    X = np.eye(n * N, dtype=complex) + K
    res = interior_residual(T, T_tilde, X) if n > 1 else 0.0
    status = Status.SIMILAR if res <= rtol else Status.INCONCLUSIVE
    return J21Result(K, X, stages, res, status)


def j3_diagonal_reduction(T: CfbOperator, T_tilde: CfbOperator, X: np.ndarray, rtol: float = WITNESS_RTOL):
    """Diagonal blocks of an upper-triangular intertwiner and their residuals.

    Returns a list of ``(X_ii, {"diag": r, "super": r})`` where ``diag`` is
    ``||X_ii T_ii - T~_ii X_ii||`` and ``super`` is
    ``||X_ii T_{i,i+1} - T~_{i,i+1} X_{i+1,i+1}||`` (absent for the last
    block), both on the interior and relative to ``||X||``.
    """
    n, N = T.n, T.N
    X = np.asarray(X, dtype=complex)
    nrm = max(np.linalg.norm(X, 2), 1e-300)
    for i in range(n):
        for j in range(i):
            if np.linalg.norm(X[i * N : (i + 1) * N, j * N : (j + 1) * N]) > 1e-10 * nrm:
                raise StructureViolation(f"block ({i + 1}, {j + 1}) of the intertwiner is not zero")
    if interior_residual(T, T_tilde, X) > rtol:
        raise PreconditionError("X does not intertwine the operators on the interior")
    m = T.edge.interior_dim
    blk = lambda A, i, j: A[i * N : (i + 1) * N, j * N : (j + 1) * N]
    out = []
    for i in range(n):
        Xi = blk(X, i, i)
        r = {"diag": float(np.linalg.norm((Xi @ blk(T.matrix, i, i) - blk(T_tilde.matrix, i, i) @ Xi)[:m, :m], 2) / nrm)}
        if i < n - 1:
            Xn = blk(X, i + 1, i + 1)
            R = Xi @ blk(T.matrix, i, i + 1) - blk(T_tilde.matrix, i, i + 1) @ Xn
            r["super"] = float(np.linalg.norm(R[:m, :m], 2) / nrm)
        out.append((Xi.copy(), r))
    return out


# ------------------------------------------------------- curvature criteria ---

def _ratio_field(Phi: np.ndarray, k: DiagonalKernel, N: int):
    def f(w):
        t = section(k, w, N)
        return np.sum(np.abs(t @ Phi.T) ** 2, axis=-1) / np.sum(np.abs(t) ** 2, axis=-1)

    return f


def curvature_similarity_check(k1: DiagonalKernel, k2: DiagonalKernel, Phi: Union[np.ndarray, AnalyticSymbol], grid=None, N: int = 64, tol: float = CURVATURE_TOL):
    """Test ``K_1 - K_2 = d dbar log Psi`` for a supplied witness.

    A matrix ``Phi`` gives ``Psi = ||Phi t||^2 / ||t||^2 + 1`` and the check
    operator ``Y = (I + Phi^* Phi)^{1/2}``.  A symbol ``phi`` stands for the
    multiplication witness ``M_phi^*`` itself, giving ``Psi = |phi*|^2``.
    ``t`` is the section of ``k1``.  The verdict is relative to the witness:
    ``NotSimilar`` means this ``Phi`` does not certify similarity.
    """
    grid = disk_grid(0.7, 21) if grid is None else np.asarray(grid, dtype=complex)
    if isinstance(Phi, AnalyticSymbol):
        ps = Phi.conj_symbol()

        def psi(w):
            return np.abs(ps(w)) ** 2

        Y = symbol_operator(Phi, k1, k1, N)
        norm = float(np.linalg.norm(Y, 2))
    else:
        Phi = np.asarray(Phi, dtype=complex)
        if Phi.shape[1] != N:
            N = Phi.shape[1]
        norm = float(np.linalg.norm(Phi, 2))
        base = _ratio_field(Phi, k1, N)

        def psi(w):
            return base(w) + 1.0

        Y = sla.sqrtm(np.eye(N) + Phi.conj().T @ Phi)
    vals = psi(grid)
    if np.any(~np.isfinite(vals)) or np.any(vals <= 0):
        raise InvalidWitness("Psi is not positive on the grid")
    K1 = curvature_rank1(k1, grid).values
    K2 = curvature_rank1(k2, grid).values
    resid = K1 - K2 - dd_bar(lambda w: np.log(psi(w)), grid).real

    # curvature of the transported bundle Y t against K_2
    def logh(w):
        t = section(k1, w, N)
        return np.log(np.sum(np.abs(t @ Y.T) ** 2, axis=-1))

    y_check = float(np.max(np.abs(-dd_bar(logh, grid).real - K2)))
    cert = CurvatureMatchCertificate(grid, vals, resid, float(np.max(np.abs(resid))), y_check, norm)
    ok = cert.max_residual <= tol and y_check <= tol
    status = Status.SIMILAR if ok else Status.NOT_SIMILAR
    obstruction = "" if ok else "curvature mismatch for the supplied witness"
    ev = {"max_residual": cert.max_residual, "y_check": y_check, "witness_norm": norm}
    return cert, SimilarityVerdict(status, None, None, cert.max_residual, obstruction, ev)


@dataclass(frozen=True)
class UKDecomposition:
    alpha: float
    X: np.ndarray = field(repr=False)
    eigenvalues: np.ndarray = field(repr=False)
    k1_spectrum: np.ndarray = field(repr=False)
    check: float = 0.0


def uk_decompose(Y: np.ndarray) -> UKDecomposition:
    """Write ``Y^* Y = X^* X + (1 - alpha) I`` with ``X = (alpha I + G)^{1/2}``.

    ``G = Y^* Y - I``.  ``alpha`` is the midpoint of the admissible interval
    ``(max(0, -lambda_min(G)), 1)``; the spectrum of ``X - alpha^{1/2} I`` is
    ``(alpha + lambda_k)^{1/2} - alpha^{1/2}``.
    """
    Y = np.atleast_2d(np.asarray(Y, dtype=complex))
    s = np.linalg.svd(Y, compute_uv=False)
    if s[-1] <= 1e-12 * max(s[0], 1.0):
        raise PreconditionError("Y is singular at this truncation")
    G = Y.conj().T @ Y - np.eye(Y.shape[0])
    G = 0.5 * (G + G.conj().T)
    lam, V = np.linalg.eigh(G)
    low = max(0.0, -float(lam[0]))
    if low >= 1:
        raise PreconditionError("no admissible alpha in (0, 1)")
    alpha = 0.5 * (low + 1.0)
    root = np.sqrt(alpha + lam)
    X = (V * root) @ V.conj().T
    check = float(np.linalg.norm(X.conj().T @ X + (1 - alpha) * np.eye(Y.shape[0]) - Y.conj().T @ Y))
    return UKDecomposition(alpha, X, lam, root - np.sqrt(alpha), check)


def witness_to_bundle_maps(blocks: Sequence[np.ndarray]):
    """Turn diagonal witness blocks ``Y_i`` into bundle maps ``Phi_i``.

    All blocks are scaled by a common ``k`` with ``k^2 Y_i^* Y_i >= I`` and
    ``Phi_i = (k^2 Y_i^* Y_i - I)^{1/2}``, so that
    ``||Phi_i t||^2 / ||t||^2 + 1 = k^2 ||Y_i t||^2 / ||t||^2``.
    """
    grams = [B.conj().T @ B for B in blocks]
    low = min(float(np.linalg.eigvalsh(0.5 * (g + g.conj().T))[0]) for g in grams)
    if low <= 0:
        raise PreconditionError("witness blocks must be invertible")
    k2 = max(1.0, 1.0 / low)
    out = []
    for g in grams:
        H = k2 * 0.5 * (g + g.conj().T) - np.eye(g.shape[0])
        lam, V = np.linalg.eigh(H)
        out.append((V * np.sqrt(np.clip(lam, 0, None))) @ V.conj().T)
    return out, float(np.sqrt(k2))


def main1_witness_check(T: CfbOperator, T_tilde: CfbOperator, Phi_list, grid=None, step: float = DEFAULT_STEP) -> SimilarityVerdict:
    """Check the curvature and second-fundamental-form conditions for given maps.

    With ``phi_i = ||Phi_i t_i||^2 / ||t_i||^2 + 1``:

    1. ``K_{T_ii} - K_{T~_ii} - d dbar log phi_i`` vanishes (``<= 1e-5``);
    2. ``(phi_i / phi_{i+1}) theta_i(T) = theta_i(T~)`` (relative ``<= 1e-6``).

    Only supplied witnesses are checked; nothing is searched for.
    """
    grid = disk_grid(0.7, 21) if grid is None else np.asarray(grid, dtype=complex)
    if Phi_list is None or len(Phi_list) != T.n or any(P is None for P in Phi_list):
        return SimilarityVerdict(Status.INCONCLUSIVE, obstruction="missing witness")
    if T.n != T_tilde.n or T.N != T_tilde.N:
        raise PreconditionError("operators must have matching block structure")
    N = T.N
    fields = [(lambda f: (lambda w: f(w) + 1.0))(_ratio_field(np.asarray(P, dtype=complex), k, N)) for P, k in zip(Phi_list, T.kernels)]
    phis = [f(grid) for f in fields]
    if any(np.any(p <= 0) for p in phis):
        raise InvalidWitness("metric ratio not positive")
    cond1 = []
    for i in range(T.n):
        K = curvature_rank1(T.kernels[i], grid, step=step).values
        Kt = curvature_rank1(T_tilde.kernels[i], grid, step=step).values
        r = K - Kt - dd_bar(lambda w, f=fields[i]: np.log(f(w)), grid, step).real
        cond1.append(float(np.max(np.abs(r))))
    cond2 = []
    for i in range(T.n - 1):
        th = sff_ratio(T.block(i + 1, i + 2), T.kernels[i + 1], grid)
        tht = sff_ratio(T_tilde.block(i + 1, i + 2), T_tilde.kernels[i + 1], grid)
        lhs = phis[i] / phis[i + 1] * th
        floor = 1e-12 * max(float(np.max(np.abs(tht))), 1e-300)
        cond2.append(float(np.max(np.abs(lhs - tht) / (np.abs(tht) + floor))))
    ok1 = all(c <= CURVATURE_TOL for c in cond1)
    ok2 = all(c <= SFF_RTOL for c in cond2)
    ev = {"condition1": cond1, "condition2": cond2}
    if ok1 and ok2:
        return SimilarityVerdict(Status.SIMILAR, residual=max(cond1 + cond2 + [0.0]), evidence=ev)
    failed = [name for name, ok in (("condition 1", ok1), ("condition 2", ok2)) if not ok]
    return SimilarityVerdict(Status.INCONCLUSIVE, residual=max(cond1 + cond2), obstruction=", ".join(failed) + " not met by the witness", evidence=ev)


# -------------------------------------------------------- weak homogeneity ---

class HomogeneityStatus(str, enum.Enum):
    WEAKLY_HOMOGENEOUS = "WeaklyHomogeneous"
    NOT_WEAKLY_HOMOGENEOUS = "NotWeaklyHomogeneous"
    INCONCLUSIVE = "Inconclusive"


@dataclass(frozen=True)
class HomogeneityVerdict:
    status: HomogeneityStatus
    obstruction: str = ""
    residuals: list = field(default_factory=list)
    conditions: list = field(default_factory=list)

    def to_record(self) -> dict:
        return {"status": self.status.value, "obstruction": self.obstruction, "residuals": self.residuals, "witness_cond": self.conditions}


def _check_chain(T: CfbOperator):
    lams = [k.lam for k in T.kernels]
    if any(l is None for l in lams):
        raise OutOfScopeParameters("weak homogeneity needs lambda-family kernels")
    for a, b in zip(lams, lams[1:]):
        if not (1 <= a <= b < a + 2):
            raise OutOfScopeParameters(f"lambda chain {lams} violates 1 <= l_i <= l_(i+1) < l_i + 2")
    if lams[0] < 1:
        raise OutOfScopeParameters("lambda must be at least 1")


def homogeneity_intertwiner(T: CfbOperator, m: MobiusMap):
    """Intertwiner ``X`` with ``m(T^*) X = X T^*`` built from composition operators.

    ``X_i = M_{G_i} C_m`` on block ``i`` with ``G_n = 1`` and
    ``G_i = G_{i+1} (psi_i o m) / (psi_i m')``, ``psi_i`` the superdiagonal
    symbols; for ``n >= 3`` a strictly lower block correction is fitted by
    least squares on the interior columns.  Returns ``(X, residual, cond)``.
    """
    n, N = T.n, T.N
    ms = m.series(N)
    inv_dm = series_div(np.array([1.0]), m.derivative_series(N), N)
    G = [np.zeros(N, dtype=complex) for _ in range(n)]
    G[-1][0] = 1.0
    for i in range(n - 2, -1, -1):
        psi = T.superdiag[i].series(N)
        num = series_mul(G[i + 1], series_compose(psi, ms, N), N)
        G[i] = series_div(series_mul(num, inv_dm, N), psi, N)
    blocks = []
    for i, k in enumerate(T.kernels):
        g = AnalyticSymbol(G[i], "TruncatedSeries")
        blocks.append(multiplication_operator(g, k, N) @ composition_operator(m, k, N))
    X = _block_diag(blocks)
    Ts = T.matrix.conj().T
    F = mobius_of_operator(m, Ts)
    # column j of T^* reaches rows below the truncation within the band of
    # the blocks (j, i) of T, i >= j; those columns of X T^* are dropped
    width = [N - min(T.edge.interior.get((j + 1, i + 1), N) for i in range(j, n)) for j in range(n)]
    keep = [np.arange(N - max(1, w)) for w in width]
    if n >= 3:
        X = _lower_correction(F, Ts, X, n, N, keep)
    cols = np.concatenate([b * N + k for b, k in enumerate(keep)])
    R = (F @ X - X @ Ts)[:, cols]
    res = float(np.linalg.norm(R, 2) / (np.linalg.norm(X, 2) * max(1.0, np.linalg.norm(Ts, 2))))
    return X, res, float(np.linalg.cond(X))


def _lower_correction(F, Ts, X, n, N, keep):
    """Least-squares correction in the blocks ``(i, j)``, ``i - j >= 2``."""
    unknowns = [(i, j) for i in range(n) for j in range(i - 1)]
    if len(unknowns) * N * N > 2 * MAX_UNKNOWNS:
        raise DimensionCap("lower correction exceeds the unknown cap")
    blk = lambda A, i, j: A[i * N : (i + 1) * N, j * N : (j + 1) * N]
    col = {b: c for c, b in enumerate(unknowns)}
    R0 = F @ X - X @ Ts
    I = np.eye(N)
    rows, rhs = [], []
    for (i, j) in unknowns:
        sel = (np.arange(N)[None, :] + N * keep[j][:, None]).ravel()
        row = np.zeros((N * N, N * N * len(unknowns)), dtype=complex)
        for k in range(n):
            # F_ik L_kj - L_ik Ts_kj
            if (k, j) in col:
                c = col[(k, j)]
                row[:, c * N * N : (c + 1) * N * N] += np.kron(I, blk(F, i, k))
            if (i, k) in col:
                c = col[(i, k)]
                row[:, c * N * N : (c + 1) * N * N] -= np.kron(blk(Ts, k, j).T, I)
        rows.append(row[sel])
        rhs.append(-vec(blk(R0, i, j))[sel])
    y, _, _ = svd_solve(np.vstack(rows), np.concatenate(rhs))
    X = X.copy()
    for (i, j), c in col.items():
        X[i * N : (i + 1) * N, j * N : (j + 1) * N] += unvec(y[c * N * N : (c + 1) * N * N], (N, N))
    return X


def weak_homogeneity(T: CfbOperator, mobius_samples: Sequence[MobiusMap], tol: float = HOMOGENEITY_TOL) -> HomogeneityVerdict:
    """Weak homogeneity from the zeros of the superdiagonal symbols.

    Any zero inside the open disk rules it out, a zero in the boundary band
    leaves the question open, and zero-free symbols are confirmed by building
    and checking an explicit intertwiner for every sample map.
    """
    for s in T.superdiag:
        if not s.is_polynomial:
            raise Unsupported("superdiagonal symbols must be polynomials")
    _check_chain(T)
    interior, boundary = [], []
    for i, s in enumerate(T.superdiag, start=1):
        if s.is_zero():
            interior.append(f"symbol ({i},{i + 1}) vanishes identically")
            continue
        for z in zeros_in_disk(s):
            if z.location == Location.INTERIOR:
                interior.append(f"symbol ({i},{i + 1}) vanishes at {z.root:.6g}")
            elif z.location == Location.BOUNDARY:
                boundary.append(f"symbol ({i},{i + 1}) vanishes at {z.root:.6g} on the circle")
    if interior:
        return HomogeneityVerdict(HomogeneityStatus.NOT_WEAKLY_HOMOGENEOUS, "; ".join(interior))
    if boundary:
        return HomogeneityVerdict(HomogeneityStatus.INCONCLUSIVE, "; ".join(boundary))
    residuals, conds = [], []
    for m in mobius_samples:
        _, res, cond = homogeneity_intertwiner(T, m)
        residuals.append(res)
        conds.append(cond)
    if all(r <= tol for r in residuals):
        return HomogeneityVerdict(HomogeneityStatus.WEAKLY_HOMOGENEOUS, "", residuals, conds)
    return HomogeneityVerdict(HomogeneityStatus.INCONCLUSIVE, "intertwiner residual above tolerance", residuals, conds)
