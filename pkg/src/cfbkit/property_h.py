"""Sufficient criteria for Property (H) and a brute-force truncation oracle.

A pair ``(A, B)`` has Property (H) when the Rosenblum operator
``tau(X) = A X - X B`` satisfies ``ker tau ∩ ran tau = {0}``.  The
sequence-based criteria below are sufficient only, so a failed criterion is
reported as ``CriterionNotMet`` rather than as a failure of the property.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import subspace_angles

from .errors import DimensionCap, InvalidParameter, TruncationInsufficient
from .oracle import MAX_BLOCK_DIM, rosenblum_matrix, unvec, vec
from .shifts import WeightSequence, operator_norm_power

__all__ = [
    "HStatus",
    "Criterion",
    "PropertyHVerdict",
    "SylvesterSystem",
    "check_lambda_gap",
    "check_weight_product",
    "check_norm_limit",
    "brute_force_tau",
    "NILPOTENT_2X2",
    "nilpotent_caveat",
    "entry_law_prediction",
]

SLOPE_BAND = 0.05
ANGLE_TOL = 1e-6
RANK_RTOL = 1e-10


class HStatus(str, enum.Enum):
    HOLDS = "Holds"
    NOT_MET = "CriterionNotMet"
    INCONCLUSIVE = "Inconclusive"


class Criterion(str, enum.Enum):
    KERNEL_RATIO = "KernelRatio"
    NORM_LIMIT = "NormLimit"
    WEIGHT_PRODUCT = "WeightProduct"
    LAMBDA_GAP = "LambdaGap"
    BRUTE_FORCE = "BruteForce"


@dataclass(frozen=True)
class PropertyHVerdict:
    status: HStatus
    criterion: Criterion
    evidence: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.status == HStatus.HOLDS and not self.evidence:
            raise InvalidParameter("a Holds verdict needs an evidence trace")
        if self.criterion == Criterion.LAMBDA_GAP and self.status == HStatus.INCONCLUSIVE:
            raise InvalidParameter("the lambda-gap test is exact")

    @property
    def holds(self) -> bool:
        return self.status == HStatus.HOLDS

    def to_record(self) -> dict:
        return {"status": self.status.value, "criterion": self.criterion.value, "evidence": self.evidence}


@dataclass(frozen=True)
class SylvesterSystem:
    """Vectorized ``X -> A X - X B`` with column-major ``vec``."""

    A: np.ndarray
    B: np.ndarray

    @property
    def lhs(self) -> np.ndarray:
        return rosenblum_matrix(self.A, self.B)

    @property
    def shape(self) -> tuple:
        return (np.shape(self.A)[0], np.shape(self.B)[0])

    def apply(self, X: np.ndarray) -> np.ndarray:
        return unvec(self.lhs @ vec(X), self.shape)


def check_lambda_gap(lam1: float, lam2: float) -> PropertyHVerdict:
    """Shifts on the ``lam1`` and ``lam2`` spaces have (H) when ``lam2 - lam1 < 2``."""
    if lam1 < 1 or lam2 < 1:
        raise InvalidParameter("the gap criterion assumes lam1, lam2 >= 1")
    gap = float(lam2 - lam1)
    status = HStatus.HOLDS if gap < 2 else HStatus.NOT_MET
    return PropertyHVerdict(status, Criterion.LAMBDA_GAP, {"lam1": float(lam1), "lam2": float(lam2), "gap": gap})


def _dyadic(n_max: int, start: int = 8) -> np.ndarray:
    n = start
    out = []
    while n <= n_max:
        out.append(n)
        n *= 2
    if not out or out[-1] != n_max:
        out.append(n_max)
    return np.array(out)


def _classify_slope(slope: float, decaying_is_good: bool) -> HStatus:
    good = slope < -SLOPE_BAND if decaying_is_good else slope > SLOPE_BAND
    bad = slope > SLOPE_BAND if decaying_is_good else slope < -SLOPE_BAND
    if good:
        return HStatus.HOLDS
    if bad:
        return HStatus.NOT_MET
    return HStatus.INCONCLUSIVE


def check_weight_product(a: WeightSequence, b: WeightSequence, n_max: int) -> PropertyHVerdict:
    """Growth of ``s_n = n * prod_{k<=n} b_k / prod_{k<=n} a_k``.

    The slope of ``log s_n`` against ``log n`` is fitted over dyadic samples
    from the upper half of the range; a positive slope means ``s_n`` grows
    without bound.
    """
    if n_max < 16:
        raise InvalidParameter("n_max must be at least 16 for a slope fit")
    if n_max > min(len(a), len(b)):
        raise TruncationInsufficient(f"n_max={n_max} exceeds the stored weights")
    logr = np.cumsum(np.log(b.weights[:n_max]) - np.log(a.weights[:n_max]))
    ns = _dyadic(n_max)
    logs = np.log(ns) + logr[ns - 1]
    tail = ns >= max(8, n_max // 64)
    slope = float(np.polyfit(np.log(ns[tail]), logs[tail], 1)[0])
    status = _classify_slope(slope, decaying_is_good=False)
    samples = [(int(n), float(np.exp(v))) for n, v in zip(ns, logs)]
    return PropertyHVerdict(status, Criterion.WEIGHT_PRODUCT, {"samples": samples, "slope": slope})


def check_norm_limit(t1: WeightSequence, t2: WeightSequence, n_max: int) -> PropertyHVerdict:
    """Decay of ``q_n = ||T1^n|| ||S2^n|| / n``, ``S2`` the right inverse of ``T2``.

    Norms of powers are window products of the stored weights, so the stored
    sequences should be several times longer than ``n_max``.
    """
    if n_max < 16:
        raise InvalidParameter("n_max must be at least 16 for a slope fit")
    if n_max + 1 > min(len(t1), len(t2)):
        raise TruncationInsufficient(f"n_max={n_max} needs {n_max + 1} stored weights")
    if t2.bounds[0] <= 0:
        raise InvalidParameter("right inverse needs weights bounded below")
    ns = _dyadic(n_max)
    q = np.array([operator_norm_power(t1, n) * operator_norm_power(t2, n, right_inverse=True) / n for n in ns])
    tail = ns >= max(8, n_max // 64)
    slope = float(np.polyfit(np.log(ns[tail]), np.log(q[tail]), 1)[0])
    status = _classify_slope(slope, decaying_is_good=True)
    samples = [(int(n), float(v)) for n, v in zip(ns, q)]
    return PropertyHVerdict(status, Criterion.NORM_LIMIT, {"samples": samples, "slope": slope})


def brute_force_tau(A, B, angle_tol: float = ANGLE_TOL):
    """Truncation oracle: intersect ``ker tau`` and ``ran tau`` numerically.

    Returns ``(verdict, ker_basis, ran_basis)`` with orthonormal columns in
    the column-major ``vec`` coordinates.  The verdict is evidence about the
    finite matrices only; nilpotent truncations typically share kernel and
    range directions even when the infinite operators do not.
    """
    A = np.atleast_2d(np.asarray(A, dtype=complex))
    B = np.atleast_2d(np.asarray(B, dtype=complex))
    if max(A.shape[0], B.shape[0]) > MAX_BLOCK_DIM:
        raise DimensionCap(f"brute force is capped at {MAX_BLOCK_DIM}x{MAX_BLOCK_DIM} blocks")
    L = rosenblum_matrix(A, B)
    U, s, Vh = np.linalg.svd(L)
    smax = s[0] if s.size else 0.0
    r = int(np.sum(s > RANK_RTOL * smax)) if smax > 0 else 0
    ker = Vh[r:].conj().T
    ran = U[:, :r]
    ev = {"dim": [int(A.shape[0]), int(B.shape[0])], "rank": r, "nullity": int(ker.shape[1])}
    if ker.shape[1] == 0 or ran.shape[1] == 0:
        ev.update(min_angle=float(np.pi / 2), intersection_dim=0)
        return PropertyHVerdict(HStatus.HOLDS, Criterion.BRUTE_FORCE, ev), ker, ran
    angles = subspace_angles(ker, ran)
    inter = int(np.sum(angles <= angle_tol))
    ev.update(min_angle=float(np.min(angles)), intersection_dim=inter)
    status = HStatus.HOLDS if inter == 0 else HStatus.NOT_MET
    return PropertyHVerdict(status, Criterion.BRUTE_FORCE, ev), ker, ran


NILPOTENT_2X2 = np.array([[0.0, 1.0], [0.0, 0.0]])


def nilpotent_caveat() -> PropertyHVerdict:
    """Brute force on ``A = B = [[0, 1], [0, 0]]``.

    ``ker tau`` is spanned by ``I`` and ``A`` while ``A = tau(E_22)`` lies in
    the range as well, so the finite oracle reports ``CriterionNotMet`` even
    though the untruncated shift pairs with itself do have Property (H).
    """
    return brute_force_tau(NILPOTENT_2X2, NILPOTENT_2X2)[0]


def entry_law_prediction(a: WeightSequence, b: WeightSequence, first_row: np.ndarray) -> np.ndarray:
    """Intertwiner ``A X = X B`` of backward shifts from its first row.

    ``x_{n, n+j} = prod_{k<n} b_{k+j} / a_k * x_{0, j}`` (0-based), zero below
    the diagonal.
    """
    x0 = np.asarray(first_row, dtype=complex)
    N = x0.size
    if len(a) < N - 1 or len(b) < N - 1:
        raise TruncationInsufficient("need N-1 weights in each sequence")
    la = np.log(a.weights[: N - 1])
    lb = np.log(b.weights[: N - 1])
    X = np.zeros((N, N), dtype=complex)
    for j in range(N):
        X[0, j] = x0[j]
        for n in range(1, N - j):
            X[n, n + j] = np.exp(lb[j : j + n].sum() - la[:n].sum()) * x0[j]
    return X
