"""Curvature, covariant derivatives and second fundamental forms.

Scalar fields on the disk are differentiated with Wirtinger combinations of
central differences, ``d/dw = (d/dx - i d/dy)/2`` and
``d/dwbar = (d/dx + i d/dy)/2``, and ``d^2/dw dwbar`` is a quarter of the
five-point Laplacian.  Every stencil carries one Richardson level.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import InvalidParameter, OutOfDomain, SingularFrame
from .kernels import DiagonalKernel, eval_diag
from .shifts import section

__all__ = [
    "DEFAULT_STEP",
    "disk_grid",
    "laplacian",
    "dd_bar",
    "wirtinger",
    "CurvatureField",
    "SecondFundamentalForm",
    "curvature_rank1",
    "curvature_closed_form",
    "covariant_derivative",
    "curvature_rank_n",
    "covariant_derivative_rank_n",
    "gram_matrix",
    "sff_ratio",
    "sff_classical",
    "sff_generalized",
]

DEFAULT_STEP = 1e-3
MAX_RADIUS = 0.95
MAX_FRAME_COND = 1e8


def disk_grid(radius: float = 0.8, points: int = 21) -> np.ndarray:
    """Square ``points x points`` lattice on ``[-radius, radius]^2`` clipped to the disk."""
    if not 0 < radius < 1:
        raise InvalidParameter("grid radius must lie in (0, 1)")
    x = np.linspace(-radius, radius, points)
    W = (x[None, :] + 1j * x[:, None]).ravel()
    return W[np.abs(W) <= radius * (1 + 1e-12)]


def _check_margin(grid, step: float, levels: int = 1):
    g = np.asarray(grid, dtype=complex)
    if np.any(np.abs(g) + 2 * levels * step >= 1):
        raise OutOfDomain("grid too close to the circle for the stencil")
    return g


def laplacian(f: Callable, w, h: float = DEFAULT_STEP):
    """Five-point Laplacian of ``f`` at ``w`` with one Richardson level."""

    def L(s):
        return (f(w + s) + f(w - s) + f(w + 1j * s) + f(w - 1j * s) - 4 * f(w)) / s**2

    return (4 * L(h / 2) - L(h)) / 3


def dd_bar(f: Callable, w, h: float = DEFAULT_STEP):
    """``d^2 f / dw dwbar`` as a quarter of the Laplacian."""
    return 0.25 * laplacian(f, w, h)


def wirtinger(f: Callable, w, direction: str, h: float = DEFAULT_STEP):
    """``df/dw`` (``direction='w'``) or ``df/dwbar`` (``'wbar'``)."""

    def D(s):
        fx = (f(w + s) - f(w - s)) / (2 * s)
        fy = (f(w + 1j * s) - f(w - 1j * s)) / (2 * s)
        return fx, fy

    fx1, fy1 = D(h)
    fx2, fy2 = D(h / 2)
    fx = (4 * fx2 - fx1) / 3
    fy = (4 * fy2 - fy1) / 3
    if direction == "w":
        return 0.5 * (fx - 1j * fy)
    if direction == "wbar":
        return 0.5 * (fx + 1j * fy)
    raise InvalidParameter(f"direction must be 'w' or 'wbar', got {direction!r}")


@dataclass(frozen=True)
class CurvatureField:
    """Values of a curvature (or covariant derivative) on a grid.

    ``values`` has shape ``(P,)`` for line bundles and ``(P, n, n)`` for rank
    ``n``.  ``evaluator`` recomputes the field at arbitrary points and is what
    covariant derivatives difference.
    """

    grid: np.ndarray
    values: np.ndarray
    order: tuple = (0, 0)
    provenance: str = "ClosedForm"
    note: str = ""
    evaluator: Optional[Callable] = field(default=None, repr=False, compare=False)
    step: float = DEFAULT_STEP
    connection: Optional[Callable] = field(default=None, repr=False, compare=False)

    @property
    def rank(self) -> int:
        return 1 if self.values.ndim == 1 else self.values.shape[-1]

    def max_abs_difference(self, other: "CurvatureField") -> float:
        return float(np.max(np.abs(self.values - other.values)))


def curvature_closed_form(lam: float, w):
    """``-lam (1 - |w|^2)^{-2}``."""
    w = np.asarray(w, dtype=complex)
    return -lam / (1 - np.abs(w) ** 2) ** 2


def curvature_rank1(k: DiagonalKernel, grid, method: str = "auto", step: float = DEFAULT_STEP) -> CurvatureField:
    """Curvature ``-d^2/dw dwbar log K(w, w)`` of the kernel's line bundle.

    ``method='auto'`` uses the closed form for ``lam``-family kernels and the
    Laplacian stencil otherwise; ``'fd'`` forces the stencil.
    """
    grid = np.asarray(grid, dtype=complex)
    if np.any(np.abs(grid) > MAX_RADIUS):
        raise OutOfDomain(f"curvature grids must stay inside |w| <= {MAX_RADIUS}")
    if method not in ("auto", "closed", "fd"):
        raise InvalidParameter(f"unknown method {method!r}")
    if method != "fd" and k.tail is not None:
        lam = k.tail.lam

        def ev(w):
            return curvature_closed_form(lam, w).real

        return CurvatureField(grid, ev(grid), (0, 0), "ClosedForm", evaluator=ev, step=step)
    if method == "closed":
        raise InvalidParameter("closed form only exists for lambda-family kernels")
    _check_margin(grid, step)

    def logk(w):
        return np.log(eval_diag(k, w))

    def ev(w):
        return -dd_bar(logk, w, step).real

    return CurvatureField(grid, ev(grid), (0, 0), f"FiniteDifference({step:g})", evaluator=ev, step=step)


def covariant_derivative(fld: CurvatureField, k: Optional[DiagonalKernel] = None, direction: str = "wbar", step: Optional[float] = None) -> CurvatureField:
    """Next covariant derivative of a line-bundle curvature field.

    For line bundles the commutator term of the ``w`` recursion vanishes, so
    both directions are plain Wirtinger derivatives.
    """
    if fld.rank != 1:
        raise InvalidParameter("use covariant_derivative_rank_n for matrix-valued fields")
    if fld.evaluator is None:
        raise InvalidParameter("field carries no evaluator to differentiate")
    h = fld.step if step is None else step
    i, j = fld.order
    levels = i + j + 2
    _check_margin(fld.grid, h, levels)
    base = fld.evaluator

    def ev(w):
        return wirtinger(base, w, direction, h)

    order = (i + 1, j) if direction == "w" else (i, j + 1)
    return CurvatureField(
        fld.grid,
        ev(fld.grid),
        order,
        f"FiniteDifference({h:g})",
        note="line bundle: commutator term vanishes identically",
        evaluator=ev,
        step=h,
    )


# ------------------------------------------------------------------ rank n ---

def gram_matrix(frame: Callable, w: complex) -> np.ndarray:
    """``h_{ij}(w) = <gamma_j(w), gamma_i(w)>`` for a frame given as columns."""
    G = np.asarray(frame(w), dtype=complex)
    if G.ndim == 1:
        G = G[:, None]
    return G.conj().T @ G


def curvature_rank_n(frame: Callable, grid, step: float = DEFAULT_STEP, max_order: int = 2) -> CurvatureField:
    """Matrix curvature ``-d/dwbar (h^{-1} dh/dw)`` of a holomorphic frame.

    ``frame(w)`` returns the ``N x n`` matrix whose columns are the frame
    vectors at ``w``.
    """
    grid = _check_margin(np.asarray(grid, dtype=complex), step, 2)
    for w in grid:
        c = np.linalg.cond(gram_matrix(frame, w))
        if not np.isfinite(c) or c >= MAX_FRAME_COND:
            raise SingularFrame(f"Gram matrix condition {c:.3g} at w={w:.4g}")

    def h(w):
        return gram_matrix(frame, w)

    def conn(w):
        return np.linalg.solve(h(w), wirtinger(h, w, "w", step))

    def ev(w):
        return -wirtinger(conn, w, "wbar", step)

    vals = np.array([ev(w) for w in grid])
    return CurvatureField(grid, vals, (0, 0), f"FiniteDifference({step:g})", note=f"max_order={max_order}", evaluator=ev, step=step, connection=conn)


def covariant_derivative_rank_n(fld: CurvatureField, direction: str = "wbar", max_order: int = 2) -> CurvatureField:
    """Covariant derivative of a matrix curvature field.

    ``wbar``: plain derivative.  ``w``: derivative plus ``[h^{-1} dh, K]``.
    """
    if fld.evaluator is None or fld.connection is None:
        raise InvalidParameter("field must come from curvature_rank_n")
    i, j = fld.order
    if i + j + 1 > max_order:
        raise InvalidParameter(f"total order {i + j + 1} exceeds max_order={max_order}")
    h = fld.step
    _check_margin(fld.grid, h, i + j + 3)
    base, conn = fld.evaluator, fld.connection

    if direction == "wbar":
        def ev(w):
            return wirtinger(base, w, "wbar", h)
        order = (i, j + 1)
    elif direction == "w":
        def ev(w):
            Kw = base(w)
            A = conn(w)
            return wirtinger(base, w, "w", h) + A @ Kw - Kw @ A
        order = (i + 1, j)
    else:
        raise InvalidParameter(f"direction must be 'w' or 'wbar', got {direction!r}")
    vals = np.array([ev(w) for w in fld.grid])
    return CurvatureField(fld.grid, vals, order, fld.provenance, fld.note, ev, h, conn)


# --------------------------------------------------- second fundamental form ---

@dataclass(frozen=True)
class SecondFundamentalForm:
    grid: np.ndarray
    values: np.ndarray
    variant: str = "Generalized"
    truncation_bound: Optional[np.ndarray] = None


def _section_deficit(k: DiagonalKernel, grid, N: int) -> np.ndarray:
    """Relative mass of the kernel section lost beyond the truncation."""
    t = section(k, grid, N)
    part = np.sum(np.abs(t) ** 2, axis=-1)
    try:
        full = eval_diag(k, grid)
    except Exception:
        return np.full(part.shape, np.nan)
    return np.abs(1 - part / full)


def sff_ratio(block: np.ndarray, k_next: DiagonalKernel, grid) -> np.ndarray:
    """``||B t(w)||^2 / ||t(w)||^2`` with ``t`` the section of ``k_next``."""
    N = block.shape[1]
    t = section(k_next, np.asarray(grid, dtype=complex), N)
    num = np.sum(np.abs(t @ block.T) ** 2, axis=-1)
    den = np.sum(np.abs(t) ** 2, axis=-1)
    return num / den


def sff_classical(k_diag: DiagonalKernel, block: np.ndarray, k_next: DiagonalKernel, grid) -> SecondFundamentalForm:
    """Coefficient of the second fundamental form of a 2x2 intertwined block.

    ``K(w) / (ratio(w) - K(w))^{1/2}`` where ``K`` is the curvature of the
    upper diagonal entry and ``ratio`` the generalized form; the ``dwbar``
    factor is dropped.
    """
    grid = np.asarray(grid, dtype=complex)
    K = curvature_rank1(k_diag, grid).values
    ratio = sff_ratio(block, k_next, grid)
    vals = K / np.sqrt(ratio - K)
    return SecondFundamentalForm(grid, vals, "Classical", _section_deficit(k_next, grid, block.shape[1]))


def sff_generalized(T, i: int, grid) -> SecondFundamentalForm:
    """Generalized form ``||T_{i,i+1} t_{i+1}||^2 / ||t_{i+1}||^2`` (1-based ``i``)."""
    if not 1 <= i <= T.n - 1:
        raise InvalidParameter(f"block index must satisfy 1 <= i <= {T.n - 1}, got {i}")
    grid = np.asarray(grid, dtype=complex)
    k_next = T.kernels[i]
    vals = sff_ratio(T.block(i, i + 1), k_next, grid)
    return SecondFundamentalForm(grid, vals, "Generalized", _section_deficit(k_next, grid, T.N))
