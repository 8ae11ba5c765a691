"""Analytic symbols on the disk and the operators they induce.

Coefficients are stored in increasing degree, ``phi(z) = sum_j c_j z^j``.
The conjugate symbol is ``phi*(w) = conj(phi(conj(w)))``; its coefficients are
``conj(c_j)`` and it is the eigenvalue of ``M_phi^*`` on the kernel section
``t(w)``.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np
from scipy.special import comb

from .errors import (
    DegenerateSymbol,
    InvalidParameter,
    NearSingular,
    PreconditionError,
    TruncationInsufficient,
    Unsupported,
)
from .kernels import DiagonalKernel

__all__ = [
    "SymbolKind",
    "AnalyticSymbol",
    "Location",
    "Zero",
    "RatioBound",
    "MobiusMap",
    "symbol_operator",
    "multiplication_operator",
    "zeros_in_disk",
    "ratio_bounded_both_ways",
    "ratio_series",
    "series_mul",
    "series_div",
    "series_compose",
    "mobius_of_operator",
    "composition_operator",
]

BOUNDARY_BAND = 1e-6
CLUSTER_RADIUS = 1e-6
MATCH_RADIUS = 1e-6
_ZERO_COEFF = 1e-14


class SymbolKind(str, enum.Enum):
    POLYNOMIAL = "Polynomial"
    TRUNCATED_SERIES = "TruncatedSeries"


@dataclass(frozen=True)
class AnalyticSymbol:
    """Polynomial or truncated power series.

    For ``TruncatedSeries`` the stored partial sum differs from the function by
    at most ``tail_bound`` on ``|z| <= r_cert``.
    """

    coeffs: np.ndarray
    kind: SymbolKind = SymbolKind.POLYNOMIAL
    tail_bound: float = 0.0
    r_cert: float = 1.0

    def __post_init__(self):
        c = np.atleast_1d(np.asarray(self.coeffs, dtype=complex))
        if c.ndim != 1 or c.size == 0:
            raise InvalidParameter("symbol needs a non-empty coefficient list")
        if self.kind == SymbolKind.POLYNOMIAL and c.size > 1:
            scale = np.max(np.abs(c))
            nz = np.nonzero(np.abs(c) > _ZERO_COEFF * max(scale, 1.0))[0]
            c = c[: nz[-1] + 1] if nz.size else c[:1] * 0
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)
        object.__setattr__(self, "kind", SymbolKind(self.kind))

    @classmethod
    def constant(cls, c=1.0) -> "AnalyticSymbol":
        return cls(np.array([c], dtype=complex))

    @classmethod
    def z(cls) -> "AnalyticSymbol":
        return cls(np.array([0, 1], dtype=complex))

    @classmethod
    def from_roots(cls, roots: Sequence[complex], scale: complex = 1.0) -> "AnalyticSymbol":
        """``scale * prod (z - r)``."""
        c = np.array([scale], dtype=complex)
        for r in roots:
            c = np.convolve(c, [-r, 1.0])
        return cls(c)

    @property
    def degree(self) -> int:
        return self.coeffs.size - 1

    @property
    def is_polynomial(self) -> bool:
        return self.kind == SymbolKind.POLYNOMIAL

    def is_zero(self, tol: float = 0.0) -> bool:
        return bool(np.all(np.abs(self.coeffs) <= tol))

    def __call__(self, z):
        z = np.asarray(z, dtype=complex)
        return np.polyval(self.coeffs[::-1], z)

    def derivative(self) -> "AnalyticSymbol":
        if self.coeffs.size == 1:
            return AnalyticSymbol(np.zeros(1), self.kind)
        return AnalyticSymbol(self.coeffs[1:] * np.arange(1, self.coeffs.size), self.kind)

    def conj_symbol(self) -> "AnalyticSymbol":
        """``phi*(w) = conj(phi(conj(w)))``."""
        return AnalyticSymbol(np.conj(self.coeffs), self.kind, self.tail_bound, self.r_cert)

    def series(self, N: int) -> np.ndarray:
        """First ``N`` Taylor coefficients, zero padded."""
        out = np.zeros(N, dtype=complex)
        m = min(N, self.coeffs.size)
        out[:m] = self.coeffs[:m]
        return out

    def __mul__(self, other: "AnalyticSymbol") -> "AnalyticSymbol":
        if not isinstance(other, AnalyticSymbol):
            return AnalyticSymbol(self.coeffs * complex(other), self.kind, self.tail_bound, self.r_cert)
        kind = SymbolKind.POLYNOMIAL
        if not (self.is_polynomial and other.is_polynomial):
            kind = SymbolKind.TRUNCATED_SERIES
        c = np.convolve(self.coeffs, other.coeffs)
        if kind == SymbolKind.TRUNCATED_SERIES:
            c = c[: max(self.coeffs.size, other.coeffs.size)]
        return AnalyticSymbol(c, kind)

    __rmul__ = __mul__

    def to_config(self):
        return [[float(c.real), float(c.imag)] for c in self.coeffs]


class Location(str, enum.Enum):
    INTERIOR = "Interior"
    BOUNDARY = "Boundary"
    EXTERIOR = "Exterior"


@dataclass(frozen=True)
class Zero:
    root: complex
    multiplicity: int
    location: Location


class RatioBound(str, enum.Enum):
    BOUNDED = "Bounded"
    UNBOUNDED = "Unbounded"
    INCONCLUSIVE = "Inconclusive"


# ---------------------------------------------------------------- series ---

def series_mul(a: np.ndarray, b: np.ndarray, N: int) -> np.ndarray:
    return np.convolve(a[:N], b[:N])[:N]


def series_div(num: np.ndarray, den: np.ndarray, N: int) -> np.ndarray:
    """Taylor coefficients of ``num / den``; needs ``den[0] != 0``."""
    num = np.pad(np.asarray(num, dtype=complex)[:N], (0, max(0, N - len(num))))
    den = np.pad(np.asarray(den, dtype=complex)[:N], (0, max(0, N - len(den))))
    if abs(den[0]) == 0:
        raise NearSingular("series denominator vanishes at the origin")
    q = np.zeros(N, dtype=complex)
    for n in range(N):
        q[n] = (num[n] - np.dot(q[:n][::-1], den[1 : n + 1])) / den[0]
    return q


def series_compose(outer: np.ndarray, inner: np.ndarray, N: int) -> np.ndarray:
    """Coefficients of ``outer(inner(z))`` truncated to ``N`` terms (Horner)."""
    out = np.zeros(N, dtype=complex)
    inner = np.pad(np.asarray(inner, dtype=complex)[:N], (0, max(0, N - len(inner))))
    for c in np.asarray(outer, dtype=complex)[::-1]:
        out = series_mul(out, inner, N)
        out[0] += c
    return out


# --------------------------------------------------------------- operators ---

def symbol_operator(phi: AnalyticSymbol, source: DiagonalKernel, target: DiagonalKernel, N: int) -> np.ndarray:
    """Matrix of ``M_phi^*`` from the source space into the target space.

    Entry ``(m, m + j)`` is ``conj(c_j) sqrt(a_m^tgt / a_{m+j}^src)`` in the
    orthonormal monomial bases, so ``M_phi^* t_src(w) = phi*(w) t_tgt(w)`` away
    from the last ``deg(phi)`` coordinates.
    """
    if phi.is_polynomial and phi.degree >= N:
        raise TruncationInsufficient(f"symbol degree {phi.degree} needs N > {phi.degree}, got N={N}")
    c = np.conj(phi.series(N))
    a_src = source.take(N)
    a_tgt = target.take(N)
    M = np.zeros((N, N), dtype=complex)
    m = np.arange(N)
    for j in range(N):
        if c[j] == 0:
            continue
        rows = m[: N - j]
        M[rows, rows + j] = c[j] * np.sqrt(a_tgt[rows] / a_src[rows + j])
    return M


def multiplication_operator(phi: AnalyticSymbol, k: DiagonalKernel, N: int, target: Optional[DiagonalKernel] = None) -> np.ndarray:
    """Matrix of ``M_phi`` from the space of ``k`` into ``target`` (default ``k``).

    Lower triangular; the adjoint of :func:`symbol_operator` with the spaces
    swapped.
    """
    target = k if target is None else target
    return symbol_operator(phi, target, k, N).conj().T


# ------------------------------------------------------------------- zeros ---

def _classify(r: complex) -> Location:
    d = abs(r) - 1.0
    if abs(d) <= BOUNDARY_BAND:
        return Location.BOUNDARY
    return Location.INTERIOR if d < 0 else Location.EXTERIOR


def _taylor_at(hi: np.ndarray, c: complex, m: int) -> np.ndarray:
    """Coefficients ``b_0..b_m`` of ``p(c + h) = sum b_k h^k``."""
    p = np.poly1d(hi)
    out, fact = [], 1.0
    for k in range(m + 1):
        out.append(p(c) / fact)
        p = p.deriv()
        fact *= k + 1
    return np.array(out)


def _is_multiple(hi: np.ndarray, members: list, c: complex) -> bool:
    """Is ``p`` within rounding of a polynomial with an m-fold root at ``c``?

    The low Taylor coefficients ``b_0..b_{m-1}`` at the centroid must vanish
    up to the error of evaluating them there.
    """
    m = len(members)
    if max(abs(r - c) for r in members) <= CLUSTER_RADIUS * (1 + abs(c)):
        return True
    # the centroid can be poor near other roots; the m-fold candidate is a
    # simple root of the (m-1)-th derivative, so Newton there is well posed
    c = _refine(hi, c, m)
    b = _taylor_at(hi, c, m)
    if b[m] == 0:
        return False
    deg = len(hi) - 1
    powers = np.arange(deg, -1, -1)
    mag = np.abs(hi)
    ac = abs(c)

    def scale(k):
        keep = powers >= k
        return float(np.sum(mag[keep] * comb(powers[keep], k) * ac ** (powers[keep] - k)))

    # the centroid itself is only accurate to about eps * ||companion||
    shift = np.finfo(float).eps * float(np.max(mag) / mag[0]) * (1 + ac)
    for k in range(m):
        tol = 1e3 * np.finfo(float).eps * scale(k) + (m - k) * shift ** (m - k) * abs(b[m]) * 10
        if abs(b[k]) > tol:
            return False
    return True


def _cluster(hi: np.ndarray, roots: np.ndarray, radius: Optional[float] = None) -> list[tuple[complex, int]]:
    if radius is None:
        # a d-fold root scatters by about eps^(1/d)
        radius = max(1e-3, 10 * np.finfo(float).eps ** (1.0 / max(len(hi) - 1, 1)))
    left = list(roots)
    out = []
    while left:
        members = [left.pop(0)]
        changed = True
        while changed:
            changed = False
            for r in list(left):
                if min(abs(r - x) for x in members) <= radius * (1 + abs(r)):
                    members.append(r)
                    left.remove(r)
                    changed = True
        out.extend(_split(hi, members, radius))
    return out


def _split(hi: np.ndarray, members: list, radius: float) -> list[tuple[complex, int]]:
    """Peel far members off a cluster until the rest is one multiple root."""
    rest, peeled = list(members), []
    while len(rest) > 1:
        c = complex(np.mean(rest))
        if _is_multiple(hi, rest, c):
            break
        far = max(rest, key=lambda r: abs(r - c))
        rest.remove(far)
        peeled.append(far)
    out = [(complex(np.mean(rest)), len(rest))]
    if peeled:
        out.extend(_cluster(hi, np.array(peeled), radius))
    return out


def _refine(hi: np.ndarray, r: complex, m: int) -> complex:
    """Newton on the (m-1)-th derivative, where the root is simple."""
    p = np.poly1d(hi)
    for _ in range(m - 1):
        p = p.deriv()
    dp = p.deriv()
    for _ in range(5):
        d = dp(r)
        if d == 0:
            break
        step = p(r) / d
        r = r - step
        if abs(step) < 1e-16 * (1 + abs(r)):
            break
    return complex(r)


def zeros_in_disk(phi: AnalyticSymbol) -> list[Zero]:
    """All roots of a polynomial symbol with multiplicities and locations.

    Roots come from companion-matrix eigenvalues.  Nearby eigenvalues are
    merged when their spread matches the ``eps^(1/m)`` scatter of an m-fold
    root (the centroid of such a cluster is well conditioned), and each
    cluster is refined by Newton steps on the derivative in which it is
    simple.  A root is ``Boundary`` when ``||r| - 1| <= 1e-6``.
    """
    if not phi.is_polynomial:
        raise Unsupported("zero extraction needs a polynomial symbol")
    if phi.is_zero():
        raise DegenerateSymbol("the zero polynomial has no zero set")
    if phi.degree == 0:
        return []
    hi = phi.coeffs[::-1]
    raw = np.roots(hi)
    out = []
    for c, m in _cluster(hi, raw):
        r = _refine(hi, c, m)
        if abs(r - c) > 1e-4 * (1 + abs(c)):
            r = c
        out.append(Zero(r, m, _classify(r)))
    out.sort(key=lambda z: (abs(z.root), np.angle(z.root)))
    return out


def _match(za: list[Zero], zb: list[Zero]):
    """Pair roots of two zero lists; returns (pairs, unmatched_a, unmatched_b)."""
    used = set()
    pairs, ua = [], []
    for x in za:
        best = None
        for j, y in enumerate(zb):
            if j in used:
                continue
            if abs(x.root - y.root) <= MATCH_RADIUS * (1 + abs(x.root)):
                best = j
                break
        if best is None:
            ua.append(x)
        else:
            used.add(best)
            pairs.append((x, zb[best]))
    ub = [y for j, y in enumerate(zb) if j not in used]
    return pairs, ua, ub


def _proportional(a: AnalyticSymbol, b: AnalyticSymbol) -> bool:
    if a.coeffs.size != b.coeffs.size:
        return False
    i = int(np.argmax(np.abs(a.coeffs)))
    if b.coeffs[i] == 0:
        return False
    s = a.coeffs[i] / b.coeffs[i]
    return bool(np.allclose(a.coeffs, s * b.coeffs, rtol=0, atol=1e-13 * np.abs(a.coeffs).max()))


@dataclass(frozen=True)
class RatioReport:
    status: RatioBound
    reason: str = ""


def ratio_bounded_both_ways(phi: AnalyticSymbol, psi: AnalyticSymbol, explain: bool = False):
    """Decide whether ``phi/psi`` and ``psi/phi`` are both bounded on the disk.

    Bounded exactly when the interior zeros agree with multiplicity.  Any root
    in the boundary band makes the answer ``Inconclusive`` unless the two
    symbols are exact scalar multiples of one another.
    """
    for s in (phi, psi):
        if not s.is_polynomial:
            raise Unsupported("ratio test needs polynomial symbols")
        if s.is_zero():
            raise DegenerateSymbol("ratio test with an identically zero symbol")
    if _proportional(phi, psi):
        rep = RatioReport(RatioBound.BOUNDED, "symbols are proportional")
        return rep if explain else rep.status
    za, zb = zeros_in_disk(phi), zeros_in_disk(psi)
    inside_a = [z for z in za if z.location != Location.EXTERIOR]
    inside_b = [z for z in zb if z.location != Location.EXTERIOR]
    pairs, ua, ub = _match(inside_a, inside_b)
    mismatch = []
    for x, y in pairs:
        if x.multiplicity != y.multiplicity:
            mismatch.append(f"zero {x.root:.6g} has multiplicity {x.multiplicity} vs {y.multiplicity}")
    for x in ua:
        mismatch.append(f"zero {x.root:.6g} of the first symbol unmatched")
    for y in ub:
        mismatch.append(f"zero {y.root:.6g} of the second symbol unmatched")
    boundary = any(z.location == Location.BOUNDARY for z in inside_a + inside_b)
    if boundary:
        rep = RatioReport(RatioBound.INCONCLUSIVE, "root in the boundary band")
    elif mismatch:
        rep = RatioReport(RatioBound.UNBOUNDED, "; ".join(mismatch))
    else:
        rep = RatioReport(RatioBound.BOUNDED, "interior zeros coincide")
    return rep if explain else rep.status


def ratio_series(num: AnalyticSymbol, den: AnalyticSymbol, N: int) -> AnalyticSymbol:
    """Taylor coefficients of ``num/den`` after cancelling shared interior zeros.

    Requires ``ratio_bounded_both_ways(num, den) == Bounded``: what is left in
    the denominator then only vanishes outside the closed disk, so the series
    converges on a disk of radius greater than one.
    """
    if _proportional(num, den):
        i = int(np.argmax(np.abs(den.coeffs)))
        return AnalyticSymbol(np.array([num.coeffs[i] / den.coeffs[i]]))
    zn = [z for z in zeros_in_disk(num) if z.location == Location.INTERIOR]
    zd = [z for z in zeros_in_disk(den) if z.location == Location.INTERIOR]
    pairs, ua, ub = _match(zn, zd)
    if ua or ub or any(x.multiplicity != y.multiplicity for x, y in pairs):
        raise PreconditionError("interior zeros do not cancel")
    n_hi, d_hi = num.coeffs[::-1], den.coeffs[::-1]
    for x, y in pairs:
        r = 0.5 * (x.root + y.root)
        for _ in range(x.multiplicity):
            n_hi, _rn = np.polydiv(n_hi, np.array([1.0, -r]))
            d_hi, _rd = np.polydiv(d_hi, np.array([1.0, -r]))
    q = series_div(n_hi[::-1], d_hi[::-1], N)
    poles = np.roots(d_hi) if len(d_hi) > 1 else np.array([])
    rho = float(np.min(np.abs(poles))) if poles.size else np.inf
    if np.isfinite(rho) and rho > 1:
        tail = float(np.abs(q[-1]) / (1 - 1 / rho) / rho)
    else:
        tail = 0.0
    return AnalyticSymbol(q, SymbolKind.TRUNCATED_SERIES, tail, 1.0)


# ------------------------------------------------------------------ Mobius ---

@dataclass(frozen=True)
class MobiusMap:
    """Disk automorphism ``z -> e^{i theta} (z - a) / (1 - conj(a) z)``."""

    a: complex = 0j
    theta: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "a", complex(self.a))
        object.__setattr__(self, "theta", float(self.theta))
        if not abs(self.a) < 1:
            raise InvalidParameter(f"Mobius parameter must satisfy |a| < 1, got {self.a}")

    @property
    def rotation(self) -> complex:
        return np.exp(1j * self.theta)

    def __call__(self, z):
        z = np.asarray(z, dtype=complex)
        return self.rotation * (z - self.a) / (1 - np.conj(self.a) * z)

    def inverse(self) -> "MobiusMap":
        return MobiusMap(-self.a * self.rotation, -self.theta)

    def derivative(self, z):
        z = np.asarray(z, dtype=complex)
        return self.rotation * (1 - abs(self.a) ** 2) / (1 - np.conj(self.a) * z) ** 2

    def series(self, N: int) -> np.ndarray:
        geo = np.conj(self.a) ** np.arange(N)
        return self.rotation * series_mul(np.array([-self.a, 1.0]), geo, N)

    def derivative_series(self, N: int) -> np.ndarray:
        s = self.series(N + 1)
        return s[1:] * np.arange(1, N + 1)

    def compose(self, other: "MobiusMap") -> "MobiusMap":
        """``self o other`` as a single Mobius map."""
        a = complex(other.inverse()(self.a))
        m = MobiusMap(a, 0.0)
        z0 = 0.0 if a != 0 else 0.5
        val = complex(self(other(z0)))
        base = complex(m(z0))
        theta = float(np.angle(val / base))
        return MobiusMap(a, theta)


def mobius_of_operator(m: MobiusMap, T: np.ndarray, max_cond: float = 1e8) -> np.ndarray:
    """``e^{i theta} (T - a I)(I - conj(a) T)^{-1}``."""
    T = np.asarray(T, dtype=complex)
    I = np.eye(T.shape[0], dtype=complex)
    R = I - np.conj(m.a) * T
    cond = np.linalg.cond(R)
    if not np.isfinite(cond) or cond >= max_cond:
        raise NearSingular(f"resolvent condition number {cond:.3g} exceeds {max_cond:.0e}")
    return m.rotation * np.linalg.solve(R.T, (T - m.a * I).T).T


def composition_operator(psi: Union[MobiusMap, AnalyticSymbol], k: DiagonalKernel, N: int) -> np.ndarray:
    """Matrix of ``f -> f o psi`` in the basis ``e_n = sqrt(a_n) z^n``.

    Column ``m`` holds the expansion of ``sqrt(a_m) psi^m``, so entry
    ``(n, m)`` is ``sqrt(a_m / a_n) [psi^m]_n``; powers come from iterated
    truncated series products, which are exact for the coefficients kept.
    """
    if isinstance(psi, MobiusMap):
        c = psi.series(N)
    else:
        c = psi.series(N)
        ring = np.exp(2j * np.pi * np.arange(256) / 256)
        if np.max(np.abs(psi(ring))) > 1 + 1e-9:
            raise InvalidParameter("composition symbol does not map the disk into itself")
    if abs(c[0]) > 0.95:
        raise TruncationInsufficient(f"|psi(0)| = {abs(c[0]):.3g} too close to the circle for N={N}")
    a = k.take(N)
    P = np.zeros((N, N), dtype=complex)
    col = np.zeros(N, dtype=complex)
    col[0] = 1.0
    for m in range(N):
        P[:, m] = col
        col = series_mul(col, c, N)
    return P * np.sqrt(a[None, :] / a[:, None])
