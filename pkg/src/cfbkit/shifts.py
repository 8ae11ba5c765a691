"""Weighted backward shifts realizing ``M_z^*`` on diagonal kernel spaces.

In the orthonormal basis ``e_n = sqrt(a_n) z^n`` the adjoint of
multiplication by ``z`` acts as ``e_{n+1} -> d_n e_n`` with
``d_n = sqrt(a_n / a_{n+1})``.  Truncation keeps the span of the first ``N``
basis vectors, which is invariant for the backward shift.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import InvalidParameter, TruncationInsufficient
from .kernels import DiagonalKernel, check_disk_point

__all__ = [
    "WeightSequence",
    "TruncatedShift",
    "weights_from_kernel",
    "shift_from_kernel",
    "section",
    "section_derivative",
    "weight_product_asymptotics",
    "operator_norm_power",
]


@dataclass(frozen=True)
class WeightSequence:
    weights: np.ndarray
    lam: Optional[float] = None

    def __post_init__(self):
        d = np.asarray(self.weights, dtype=float)
        if d.ndim != 1 or d.size == 0:
            raise InvalidParameter("weight sequence must be non-empty")
        if np.any(d <= 0) or not np.all(np.isfinite(d)):
            raise InvalidParameter("weights must be finite and positive")
        d.setflags(write=False)
        object.__setattr__(self, "weights", d)

    @property
    def bounds(self) -> tuple[float, float]:
        return float(self.weights.min()), float(self.weights.max())

    def __len__(self):
        return self.weights.size


def weights_from_kernel(k: DiagonalKernel, M: Optional[int] = None) -> WeightSequence:
    """``d_n = sqrt(a_n / a_{n+1})`` for ``n < M - 1``."""
    a = k.coeffs if M is None else k.take(M)
    return WeightSequence(np.sqrt(a[:-1] / a[1:]), k.lam)


@dataclass(frozen=True)
class TruncatedShift:
    """``N x N`` compression of a weighted backward shift."""

    matrix: np.ndarray
    weights: WeightSequence
    kernel: Optional[DiagonalKernel] = None

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


def shift_from_kernel(k: DiagonalKernel, N: int) -> TruncatedShift:
    if N < 1:
        raise InvalidParameter("truncation dimension must be positive")
    ws = weights_from_kernel(k, N) if N > 1 else WeightSequence(np.ones(1), k.lam)
    T = np.zeros((N, N), dtype=complex)
    if N > 1:
        T[np.arange(N - 1), np.arange(1, N)] = ws.weights
    return TruncatedShift(T, ws, k.extended(N))


def section(k: DiagonalKernel, w, N: int) -> np.ndarray:
    """Truncated kernel section ``t(w)`` with coordinates ``sqrt(a_n) w^n``.

    For a vector of points the result has shape ``(len(w), N)``.
    """
    w = check_disk_point(w)
    a = k.take(N)
    return np.sqrt(a) * w[..., None] ** np.arange(N)


def section_derivative(k: DiagonalKernel, w, N: int) -> np.ndarray:
    """Holomorphic derivative ``t'(w)``; ``(T - w) t'(w) = t(w)`` off the edge."""
    w = check_disk_point(w)
    a = k.take(N)
    n = np.arange(N)
    wp = np.where(n > 0, w[..., None] ** np.maximum(n - 1, 0), 0.0)
    return np.sqrt(a) * n * wp


def weight_product_asymptotics(ws: WeightSequence, n_max: int):
    """Running products ``prod_{k<=n} d_k`` with the power-law normalization.

    For a ``lam``-family sequence the third entry is
    ``prod * (n + 1)^{(lam - 1)/2}``, which tends to ``sqrt(Gamma(lam))``.
    Products are accumulated as sums of logarithms.
    """
    if n_max >= len(ws) or n_max < 0:
        raise TruncationInsufficient(f"n_max={n_max} outside the stored range {len(ws)}")
    logs = np.cumsum(np.log(ws.weights[: n_max + 1]))
    n = np.arange(n_max + 1)
    prods = np.exp(logs)
    if ws.lam is None:
        return [(int(i), float(p), None) for i, p in zip(n, prods)]
    norm = np.exp(logs + 0.5 * (ws.lam - 1.0) * np.log(n + 1.0))
    return [(int(i), float(p), float(q)) for i, p, q in zip(n, prods, norm)]


def _monotone(d: np.ndarray) -> int:
    diff = np.diff(d)
    if np.all(diff >= 0):
        return 1
    if np.all(diff <= 0):
        return -1
    return 0


def operator_norm_power(ws: WeightSequence, n: int, right_inverse: bool = False) -> float:
    """``||T^n||`` for the backward shift, or ``||S^n||`` for its right inverse.

    ``S e_k = e_{k+1} / d_k``.  Both powers are weighted shifts, so the norm is
    the largest product of ``n`` consecutive (reciprocal) weights.  Monotone
    sequences use the window at the growing end directly.
    """
    d = ws.weights
    if n < 0:
        raise InvalidParameter("power must be non-negative")
    if n == 0:
        return 1.0
    if n + 1 > d.size:
        raise TruncationInsufficient(f"window of {n} weights needs {n + 1} stored, have {d.size}")
    logs = -np.log(d) if right_inverse else np.log(d)
    trend = _monotone(logs)
    if trend > 0:
        return float(np.exp(logs[-n:].sum()))
    if trend < 0:
        return float(np.exp(logs[:n].sum()))
    c = np.concatenate(([0.0], np.cumsum(logs)))
    return float(np.exp(np.max(c[n:] - c[:-n])))
