"""Diagonal reproducing kernels on the unit disk.

A diagonal kernel is ``K(z, w) = sum_n a_n z^n conj(w)^n`` with ``a_0 = 1``
and ``a_n > 0``.  The family ``(1 - z conj(w))^{-lam}`` is carried with a
closed-form tail so that it can be extended and evaluated exactly.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import InvalidParameter, OutOfDomain, TruncationInsufficient

__all__ = [
    "LambdaPower",
    "DiagonalKernel",
    "lambda_kernel",
    "kernel_from_coeffs",
    "eval_diag",
    "check_disk_point",
    "kernel_ratio_profile",
    "classify_growth",
    "RatioProfile",
]

TAIL_TERM_BOUND = 1e-16
GROWTH_BAND = 0.1


@dataclass(frozen=True)
class LambdaPower:
    """Closed-form tail marker for ``(1 - z conj(w))^{-lam}``."""

    lam: float


def _lambda_coeffs(lam: float, M: int) -> np.ndarray:
    # a_n = prod_{k<n} (lam + k)/(k + 1), accumulated in log space
    k = np.arange(M - 1, dtype=float)
    logs = np.concatenate(([0.0], np.cumsum(np.log1p((lam - 1.0) / (k + 1.0)))))
    return np.exp(logs)


@dataclass(frozen=True)
class DiagonalKernel:
    """Coefficient sequence of a diagonal kernel.

    Use :func:`lambda_kernel` or :func:`kernel_from_coeffs` rather than the
    constructor; they normalize ``a_0`` and validate positivity.
    """

    coeffs: np.ndarray
    tail: Optional[LambdaPower] = None
    label: str = ""

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=float)
        if c.ndim != 1 or c.size < 1:
            raise InvalidParameter("kernel needs a non-empty 1-d coefficient list")
        if np.any(c <= 0) or not np.all(np.isfinite(c)):
            raise InvalidParameter("kernel coefficients must be finite and positive")
        if abs(c[0] - 1.0) > 1e-14:
            raise InvalidParameter("kernel coefficients must satisfy a_0 = 1")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @property
    def size(self) -> int:
        return self.coeffs.size

    @property
    def lam(self) -> Optional[float]:
        return None if self.tail is None else self.tail.lam

    def extended(self, M: int) -> "DiagonalKernel":
        """Return a kernel holding at least ``M`` coefficients.

        Only kernels with a closed-form tail can be extended.
        """
        if M <= self.size:
            return self
        if self.tail is None:
            raise TruncationInsufficient(
                f"kernel {self.label!r} stores {self.size} coefficients, {M} requested"
            )
        return lambda_kernel(self.tail.lam, M)

    def take(self, M: int) -> np.ndarray:
        """First ``M`` coefficients, extending through the tail if needed."""
        return self.extended(M).coeffs[:M]

    def to_config(self) -> dict:
        if self.tail is not None:
            return {"lambda": float(self.tail.lam)}
        return {"coeffs": [float(x) for x in self.coeffs]}


def lambda_kernel(lam: float, M: int = 64) -> DiagonalKernel:
    """Kernel of ``(1 - z conj(w))^{-lam}`` with ``M`` stored coefficients.

    ``lam = 1`` is the Hardy kernel, ``lam = 2`` the Bergman kernel.
    """
    lam = float(lam)
    if not lam > 0 or not np.isfinite(lam):
        raise InvalidParameter(f"lambda must be positive, got {lam}")
    if int(M) != M or M < 2:
        raise InvalidParameter(f"need at least two coefficients, got M={M}")
    return DiagonalKernel(_lambda_coeffs(lam, int(M)), LambdaPower(lam), f"lambda={lam:g}")


def kernel_from_coeffs(coeffs: Sequence[float], label: str = "") -> DiagonalKernel:
    """Kernel from an explicit coefficient list, rescaled so that ``a_0 = 1``."""
    c = np.asarray(coeffs, dtype=float)
    if c.ndim != 1 or c.size < 1:
        raise InvalidParameter("coefficient list must be non-empty")
    if np.any(c <= 0):
        raise InvalidParameter("kernel coefficients must be positive")
    return DiagonalKernel(c / c[0], None, label or f"coeffs[{c.size}]")


def check_disk_point(w, radius: float = 1.0) -> np.ndarray:
    """Validate points against ``|w| < radius`` and return them as an array."""
    arr = np.asarray(w, dtype=complex)
    if np.any(~np.isfinite(arr)) or np.any(np.abs(arr) >= radius):
        raise OutOfDomain(f"point(s) outside |w| < {radius}")
    return arr


def eval_diag(k: DiagonalKernel, w):
    """``K(w, w) = sum_n a_n |w|^{2n}`` for points in the disk.

    Closed form for :class:`LambdaPower` kernels.  For coefficient-list kernels
    the truncated sum is returned after certifying the remainder with a
    ratio-test bound built from the last stored ratio; if the last term is not
    below ``1e-16`` or the bound exceeds ``1e-12`` relative, the evaluation is
    refused with :class:`TruncationInsufficient`.
    """
    w = check_disk_point(w)
    r2 = np.abs(w) ** 2
    if k.tail is not None:
        return (1.0 - r2) ** (-k.tail.lam)
    a = k.coeffs
    M = a.size
    if M < 2:
        raise TruncationInsufficient("need at least two coefficients to bound the tail")
    last = a[-1] * r2 ** (M - 1)
    q = (a[-1] / a[-2]) * r2
    if np.any(last >= TAIL_TERM_BOUND) or np.any(q >= 1):
        raise TruncationInsufficient(
            f"tail of {k.label!r} not certified at |w|={np.sqrt(np.max(r2)):.6g} with M={M}"
        )
    powers = r2[..., None] ** np.arange(M)
    partial = powers @ a
    remainder = last * q / (1.0 - q)
    if np.any(remainder > 1e-12 * partial):
        raise TruncationInsufficient("tail remainder exceeds 1e-12 relative")
    return partial


def classify_growth(radii, values) -> tuple[str, float]:
    """Slope of ``log(value)`` against ``log(1 - r)`` over the three largest radii.

    Slopes below ``-0.1`` mean the values diverge as ``r -> 1``; above ``0.1``
    they vanish; otherwise they stay bounded.
    """
    r = np.asarray(radii, dtype=float)[-3:]
    v = np.asarray(values, dtype=float)[-3:]
    if r.size < 2:
        raise InvalidParameter("need at least two radii to fit a growth slope")
    slope = float(np.polyfit(np.log1p(-r), np.log(v), 1)[0])
    if slope < -GROWTH_BAND:
        return "diverges", slope
    if slope > GROWTH_BAND:
        return "vanishes", slope
    return "bounded", slope


@dataclass(frozen=True)
class RatioProfile:
    samples: list = field(default_factory=list)  # (r, K1(r,r)/K2(r,r))
    tag: str = "bounded"
    slope: float = 0.0


def kernel_ratio_profile(k1: DiagonalKernel, k2: DiagonalKernel, radii) -> RatioProfile:
    """Sample ``K1(r, r) / K2(r, r)`` along the positive radius and tag its growth."""
    r = np.asarray(radii, dtype=float)
    if r.ndim != 1 or r.size < 2:
        raise InvalidParameter("need at least two radii")
    if np.any(np.diff(r) <= 0) or r[0] < 0 or r[-1] >= 1:
        raise InvalidParameter("radii must be strictly increasing inside [0, 1)")
    vals = eval_diag(k1, r) / eval_diag(k2, r)
    tag, slope = classify_growth(r, vals)
    return RatioProfile([(float(a), float(b)) for a, b in zip(r, vals)], tag, slope)
