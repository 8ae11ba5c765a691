"""Block upper-triangular operators built from shifts and symbol operators.

Block ``(i, i)`` is the backward shift on the ``i``-th kernel space, block
``(i, i+1)`` is ``M_phi^*`` from space ``i+1`` into space ``i`` and a longer
block ``(i, j)`` is ``M_{phi_ij}^* T_{i,i+1} ... T_{j-1,j}``, the product of
the truncated factors.  Block indices are 1-based throughout the public API.

Every block is upper triangular in the monomial bases, and compressing
upper-triangular operators to the first ``N`` coordinates is multiplicative,
so the defining identities hold exactly at truncation.  ``EdgeMask`` still
records a conservative interior for consumers that mix in full matrices.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

import numpy as np

from .errors import ConstructionRejected, InvalidParameter, StructureViolation, TruncationInsufficient
from .kernels import DiagonalKernel
from .property_h import Criterion, HStatus, PropertyHVerdict, check_lambda_gap, check_norm_limit, check_weight_product
from .shifts import TruncatedShift, shift_from_kernel, weights_from_kernel
from .symbols import AnalyticSymbol, symbol_operator

__all__ = [
    "EdgeMask",
    "CfbOperator",
    "build_cfb",
    "SplitReport",
    "strongly_irreducible",
    "diag_part",
]

BUILD_TOL = 1e-12


@dataclass(frozen=True)
class EdgeMask:
    """Rows and columns of each block that are clear of truncation effects."""

    N: int
    interior: Mapping = field(default_factory=dict)  # (i, j) -> count

    @property
    def interior_dim(self) -> int:
        return min(self.interior.values()) if self.interior else self.N

    def indices(self, n: int) -> np.ndarray:
        """Global indices of the common interior of all ``n`` blocks."""
        m = self.interior_dim
        return np.concatenate([np.arange(b * self.N, b * self.N + m) for b in range(n)])


def _degree(s: AnalyticSymbol) -> int:
    return s.degree if s.is_polynomial else 0


@dataclass(frozen=True)
class CfbOperator:
    n: int
    kernels: tuple
    superdiag: tuple
    cofactors: Mapping
    N: int
    matrix: np.ndarray = field(repr=False)
    edge: EdgeMask = field(repr=False)
    shifts: tuple = field(repr=False, default=())
    property_h: tuple = field(repr=False, default=())

    def block(self, i: int, j: int) -> np.ndarray:
        if not (1 <= i <= self.n and 1 <= j <= self.n):
            raise InvalidParameter(f"block index ({i}, {j}) outside 1..{self.n}")
        N = self.N
        return self.matrix[(i - 1) * N : i * N, (j - 1) * N : j * N]

    @property
    def size(self) -> int:
        return self.n * self.N

    def interior(self, M: np.ndarray) -> np.ndarray:
        """Restriction of a size-compatible matrix to the interior indices."""
        idx = self.edge.indices(self.n)
        return M[np.ix_(idx, idx)]

    def to_config(self) -> dict:
        return {
            "kernels": [k.to_config() for k in self.kernels],
            "superdiag": [s.to_config() for s in self.superdiag],
            "cofactors": {f"{i},{j}": s.to_config() for (i, j), s in self.cofactors.items()},
            "N": self.N,
        }


def _property_h_evidence(k1: DiagonalKernel, k2: DiagonalKernel) -> PropertyHVerdict:
    if k1.lam is not None and k2.lam is not None and min(k1.lam, k2.lam) >= 1:
        v = check_lambda_gap(k1.lam, k2.lam)
        if v.holds:
            return v
    # coefficient-list kernels only offer their stored weights
    try:
        M = max(k1.size, k2.size, 2048) if k1.tail and k2.tail else min(k1.size, k2.size)
        a = weights_from_kernel(k1.extended(M), M)
        b = weights_from_kernel(k2.extended(M), M)
        n_max = (min(len(a), len(b)) - 1) // 2
        v = check_weight_product(a, b, n_max)
        if v.holds:
            return v
        return check_norm_limit(a, b, n_max)
    except (TruncationInsufficient, InvalidParameter) as exc:
        return PropertyHVerdict(HStatus.INCONCLUSIVE, Criterion.WEIGHT_PRODUCT, {"error": str(exc)})


def build_cfb(
    kernels: Sequence[DiagonalKernel],
    superdiag: Sequence[AnalyticSymbol] = (),
    cofactors: Optional[Mapping] = None,
    N: int = 16,
    verify: bool = True,
    property_h: Optional[Sequence[PropertyHVerdict]] = None,
) -> CfbOperator:
    """Assemble and validate an ``n x n`` block operator.

    Parameters
    ----------
    kernels : sequence of DiagonalKernel
        One kernel per diagonal block.
    superdiag : sequence of AnalyticSymbol
        ``n - 1`` symbols for the blocks ``(i, i+1)``.
    cofactors : mapping, optional
        ``{(i, j): symbol}`` for ``j - i >= 2`` (1-based); missing entries
        default to the zero symbol.
    N : int
        Truncation dimension of every block.
    verify : bool
        Run the build-time checks (intertwining, cofactor commutation,
        Property (H) evidence).  Turning this off is meant for experiments.
    property_h : sequence of PropertyHVerdict, optional
        Supplied evidence for the adjacent pairs; computed when omitted.

    Raises
    ------
    ConstructionRejected
        With the failing 1-based block index.
    """
    kernels = tuple(kernels)
    n = len(kernels)
    if n < 1:
        raise InvalidParameter("need at least one diagonal block")
    superdiag = tuple(superdiag)
    if len(superdiag) != n - 1:
        raise InvalidParameter(f"expected {n - 1} superdiagonal symbols, got {len(superdiag)}")
    cof = {}
    for key, s in (cofactors or {}).items():
        i, j = (int(x) for x in key)
        if not (1 <= i and j <= n and j - i >= 2):
            raise InvalidParameter(f"cofactor index ({i}, {j}) must satisfy j - i >= 2 inside 1..{n}")
        cof[(i, j)] = s
    for s in list(superdiag) + list(cof.values()):
        if s.is_polynomial and s.degree >= N:
            raise TruncationInsufficient(f"symbol degree {s.degree} needs N > {s.degree}")

    shifts = tuple(shift_from_kernel(k, N) for k in kernels)
    kernels = tuple(s.kernel for s in shifts)
    Tsup = [symbol_operator(superdiag[i], kernels[i + 1], kernels[i], N) for i in range(n - 1)]
    M = np.zeros((n * N, n * N), dtype=complex)
    interior = {}
    for i in range(n):
        M[i * N : (i + 1) * N, i * N : (i + 1) * N] = shifts[i].matrix
        interior[(i + 1, i + 1)] = N - 1
    for i in range(n):
        prod = np.eye(N, dtype=complex)
        deg = 0
        for j in range(i + 1, n):
            prod = prod @ Tsup[j - 1]
            deg += _degree(superdiag[j - 1])
            if j == i + 1:
                blk = prod
                extra = 0
            else:
                phi = cof.get((i + 1, j + 1))
                if phi is None or phi.is_zero():
                    continue
                blk = symbol_operator(phi, kernels[i], kernels[i], N) @ prod
                extra = _degree(phi)
            M[i * N : (i + 1) * N, j * N : (j + 1) * N] = blk
            interior[(i + 1, j + 1)] = N - deg - extra - (j - i)
    edge = EdgeMask(N, interior)
    if edge.interior_dim < 1:
        bad = min(interior, key=interior.get)
        raise ConstructionRejected(f"no interior left in block {bad}", block=bad[0])
    M.setflags(write=False)

    evidence = tuple(property_h) if property_h is not None else ()
    T = CfbOperator(n, kernels, superdiag, cof, N, M, edge, shifts, evidence)
    if verify:
        _verify(T, Tsup)
        if property_h is None:
            evidence = tuple(_property_h_evidence(kernels[i], kernels[i + 1]) for i in range(n - 1))
            T = CfbOperator(n, kernels, superdiag, cof, N, M, edge, shifts, evidence)
        for i, v in enumerate(evidence):
            if not v.holds:
                raise ConstructionRejected(f"no Property (H) evidence for blocks ({i + 1}, {i + 2})", block=i + 1)
    return T


def _verify(T: CfbOperator, Tsup) -> None:
    m = T.edge.interior_dim
    for i in range(T.n - 1):
        A, B = T.shifts[i].matrix, T.shifts[i + 1].matrix
        R = (A @ Tsup[i] - Tsup[i] @ B)[:m, :m]
        scale = max(1.0, np.linalg.norm(Tsup[i]))
        if np.linalg.norm(R) > BUILD_TOL * scale:
            raise ConstructionRejected(f"block ({i + 1}, {i + 2}) does not intertwine the diagonal", block=i + 1)
    for (i, j), phi in T.cofactors.items():
        k = T.kernels[i - 1]
        P = symbol_operator(phi, k, k, T.N)
        A = T.shifts[i - 1].matrix
        R = (A @ P - P @ A)[:m, :m]
        if np.linalg.norm(R) > BUILD_TOL * max(1.0, np.linalg.norm(P)):
            raise ConstructionRejected(f"cofactor ({i}, {j}) does not commute with block ({i}, {i})", block=i)


@dataclass(frozen=True)
class SplitReport:
    irreducible: bool
    witness: Optional[int] = None
    groups: tuple = ()
    pieces: tuple = field(default=(), repr=False)


def strongly_irreducible(T: CfbOperator) -> SplitReport:
    """Strongly irreducible exactly when no superdiagonal symbol vanishes.

    When block ``(k, k+1)`` is zero every block ``(i, j)`` with
    ``i <= k < j`` contains that factor, so the operator splits as the direct
    sum of its leading ``k`` blocks and the rest; ``pieces`` holds the two
    diagonal matrices of that split.
    """
    for k, s in enumerate(T.superdiag, start=1):
        if s.is_zero():
            cut = k * T.N
            left = T.matrix[:cut, :cut]
            right = T.matrix[cut:, cut:]
            off = T.matrix[:cut, cut:]
            if np.any(off != 0):
                raise StructureViolation("split block is not zero across the cut")
            groups = (tuple(range(1, k + 1)), tuple(range(k + 1, T.n + 1)))
            return SplitReport(False, k, groups, (left, right))
    return SplitReport(True, None, (tuple(range(1, T.n + 1)),))


def diag_part(T: CfbOperator, check: bool = True) -> list[TruncatedShift]:
    """Diagonal shifts; optionally confirm that ``diag{T}`` commutes with ``T``."""
    if check:
        D = np.zeros_like(T.matrix)
        for i, s in enumerate(T.shifts):
            D[i * T.N : (i + 1) * T.N, i * T.N : (i + 1) * T.N] = s.matrix
        R = T.interior(D @ T.matrix - T.matrix @ D)
        if np.linalg.norm(R) > BUILD_TOL * max(1.0, np.linalg.norm(T.matrix)) ** 2:
            raise StructureViolation("diagonal part does not commute with the operator")
    return list(T.shifts)
