"""Brute-force numerical backends used to cross-check the structured code.

Everything here works on fully vectorized linear systems or on plain
finite differences, so that it shares as little code as possible with the
algorithms it validates.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import DimensionCap, InvalidParameter, NotFound, OutOfDomain

__all__ = [
    "MAX_BLOCK_DIM",
    "MAX_UNKNOWNS",
    "LinearSolveReport",
    "vec",
    "unvec",
    "rosenblum_matrix",
    "svd_solve",
    "sylvester_solve",
    "IntertwinerSolution",
    "direct_intertwiner",
    "structure_mask",
    "fd_dbar_dlog",
]

MAX_BLOCK_DIM = 64
MAX_UNKNOWNS = 4096
RANK_RTOL = 1e-10
DRAWS = 50
SEED = 20240531


@dataclass(frozen=True)
class LinearSolveReport:
    residual: float
    rank: int
    nullity: int
    condition: float
    solution_dim: int = 0


def vec(X: np.ndarray) -> np.ndarray:
    """Column-major vectorization."""
    return np.asarray(X).reshape(-1, order="F")


def unvec(x: np.ndarray, shape) -> np.ndarray:
    return np.asarray(x).reshape(shape, order="F")


def rosenblum_matrix(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Matrix of ``X -> A X - X B`` acting on column-major ``vec(X)``."""
    A = np.asarray(A, dtype=complex)
    B = np.asarray(B, dtype=complex)
    n, m = A.shape[0], B.shape[0]
    return np.kron(np.eye(m), A) - np.kron(B.T, np.eye(n))


def svd_solve(L: np.ndarray, b: np.ndarray, rtol: float = RANK_RTOL):
    """Minimum-norm least-squares solution of ``L x = b`` through the SVD.

    Returns ``(x, null_basis, report)``; ``null_basis`` has orthonormal columns.
    """
    L = np.asarray(L, dtype=complex)
    b = np.asarray(b, dtype=complex)
    U, s, Vh = np.linalg.svd(L, full_matrices=True)
    smax = s[0] if s.size else 0.0
    r = int(np.sum(s > rtol * smax)) if smax > 0 else 0
    coef = (U[:, :r].conj().T @ b) / s[:r]
    x = Vh[:r].conj().T @ coef
    null = Vh[r:].conj().T
    res = float(np.linalg.norm(L @ x - b) / max(1.0, np.linalg.norm(b)))
    cond = float(smax / s[r - 1]) if r else np.inf
    rep = LinearSolveReport(res, r, L.shape[1] - r, cond, null.shape[1])
    return x, null, rep


def _cap(*dims):
    if max(dims) > MAX_BLOCK_DIM:
        raise DimensionCap(f"block dimension {max(dims)} exceeds {MAX_BLOCK_DIM}")


def sylvester_solve(A, B, C):
    """Solve ``A X - X B = C`` in the minimum-norm least-squares sense.

    Examples
    --------
    >>> X, rep = sylvester_solve(np.diag([1, 2]), np.diag([3, 4]), np.ones((2, 2)))
    >>> np.round(X.real, 6).tolist()
    [[-0.5, -0.333333], [-1.0, -0.5]]
    """
    A = np.atleast_2d(np.asarray(A, dtype=complex))
    B = np.atleast_2d(np.asarray(B, dtype=complex))
    C = np.atleast_2d(np.asarray(C, dtype=complex))
    _cap(A.shape[0], B.shape[0])
    if C.shape != (A.shape[0], B.shape[0]):
        raise InvalidParameter(f"right-hand side must be {A.shape[0]}x{B.shape[0]}")
    L = rosenblum_matrix(A, B)
    x, _, rep = svd_solve(L, vec(C))
    X = unvec(x, C.shape)
    # residual recomputed from the matrix equation, not the vectorized one
    res = float(np.linalg.norm(A @ X - X @ B - C) / max(1.0, np.linalg.norm(C)))
    return X, LinearSolveReport(res, rep.rank, rep.nullity, rep.condition, rep.solution_dim)


def structure_mask(size: int, block: int, structure: str) -> np.ndarray:
    """Boolean mask of the entries a structured intertwiner may occupy."""
    if size % block:
        raise InvalidParameter(f"matrix size {size} is not a multiple of the block size {block}")
    bi = np.arange(size) // block
    if structure == "full":
        return np.ones((size, size), dtype=bool)
    if structure == "upper":
        return bi[:, None] <= bi[None, :]
    if structure == "strict-upper":
        return bi[:, None] < bi[None, :]
    if structure == "diagonal":
        return bi[:, None] == bi[None, :]
    raise InvalidParameter(f"unknown structure {structure!r}")


@dataclass(frozen=True)
class IntertwinerSolution:
    """Solution space of ``X T = T~ X`` under a structure constraint.

    For ``strict-upper`` the space is affine, ``X = I + K``; ``particular`` is
    the minimum-norm member and ``basis`` spans the homogeneous directions.
    """

    X: np.ndarray
    particular: np.ndarray
    basis: list = field(repr=False, default_factory=list)
    report: Optional[LinearSolveReport] = None
    condition: float = np.inf
    structure: str = "full"


def direct_intertwiner(T, T_tilde, structure: str = "full", block: Optional[int] = None, draws: int = DRAWS, seed: int = SEED) -> IntertwinerSolution:
    """All intertwiners ``X T = T~ X`` with the requested block pattern.

    ``structure`` is one of ``full``, ``upper``, ``strict-upper`` (solved as
    ``X = I + K`` with ``K`` strictly block upper) and ``diagonal``.  An
    invertible member is picked by scoring ``draws`` random combinations of
    the solution basis by condition number with a fixed seed.
    """
    T = np.asarray(T, dtype=complex)
    Tt = np.asarray(T_tilde, dtype=complex)
    size = T.shape[0]
    block = size if block is None else int(block)
    _cap(block)
    mask = structure_mask(size, block, structure)
    cols = np.flatnonzero(vec(mask))
    if cols.size > MAX_UNKNOWNS:
        raise DimensionCap(f"{cols.size} unknowns exceed the cap of {MAX_UNKNOWNS}")
    # X T - T~ X = 0  <=>  (T^T kron I - I kron T~) vec X = 0
    L_full = np.kron(T.T, np.eye(size)) - np.kron(np.eye(size), Tt)
    L = L_full[:, cols]
    if structure == "strict-upper":
        rhs = -(L_full @ vec(np.eye(size, dtype=complex)))
    else:
        rhs = np.zeros(size * size, dtype=complex)
    y, null, rep = svd_solve(L, rhs)

    def embed(v):
        x = np.zeros(size * size, dtype=complex)
        x[cols] = v
        return unvec(x, (size, size))

    offset = np.eye(size, dtype=complex) if structure == "strict-upper" else 0
    particular = offset + embed(y)
    basis = [embed(null[:, k]) for k in range(null.shape[1])]
    if structure != "strict-upper" and not basis:
        raise NotFound("the structured solution space is {0}")

    rng = np.random.default_rng(seed)
    best, best_cond = particular, np.linalg.cond(particular) if structure == "strict-upper" else np.inf
    if basis:
        B = np.stack(basis)
        for _ in range(draws):
            c = rng.standard_normal(len(basis)) + 1j * rng.standard_normal(len(basis))
            cand = particular + np.tensordot(c, B, axes=1)
            k = np.linalg.cond(cand)
            if k < best_cond:
                best, best_cond = cand, k
    return IntertwinerSolution(best, particular, basis, rep, float(best_cond), structure)


def fd_dbar_dlog(f: Callable, grid, step: float = 1e-3, take_log: bool = True):
    """``d/dwbar d/dw`` of ``log f`` (or of ``f`` itself) by nested differences.

    Both derivatives are first-order Wirtinger central differences with one
    Richardson level, deliberately independent of the Laplacian stencil used
    in the curvature module.
    """
    grid = np.asarray(grid, dtype=complex)
    if np.any(np.abs(grid) + 4 * step >= 1):
        raise OutOfDomain("grid needs a margin of at least two steps to the circle")
    g = (lambda w: np.log(f(w))) if take_log else f

    def d(fun, direction):
        sign = -1 if direction == "w" else 1

        def out(w):
            def D(s):
                fx = (fun(w + s) - fun(w - s)) / (2 * s)
                fy = (fun(w + 1j * s) - fun(w - 1j * s)) / (2 * s)
                return 0.5 * (fx + sign * 1j * fy)

            return (4 * D(step / 2) - D(step)) / 3

        return out

    return d(d(g, "w"), "wbar")(grid)
