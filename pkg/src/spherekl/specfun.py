"""Orthogonal polynomials, spherical harmonics, quadrature and sphere-time metrics.

Every routine here is pure and accepts numpy arrays where that makes sense.
Polynomial families are evaluated by three-term recurrences; nothing is
obtained by symbolic differentiation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Literal

import numpy as np
from numpy.polynomial.hermite_e import hermegauss
from numpy.polynomial.legendre import leggauss
from scipy.special import gammaln, roots_jacobi

__all__ = [
    "DomainError",
    "QuadratureRule",
    "SphereTimePoint",
    "legendre_p",
    "gegenbauer_c",
    "gegenbauer_table",
    "assoc_legendre",
    "norm_assoc_legendre",
    "unit_legendre_table",
    "hermite_h",
    "hermite_table",
    "sph_harm_real",
    "sph_harm_dim",
    "surface_area",
    "geodesic_distance",
    "quadrature",
    "jacobi_rule",
]

# rounding slack admitted on [-1, 1] arguments before they are rejected
DOMAIN_SLACK = 1e-12

QuadratureKind = Literal["gauss-legendre", "gauss-hermite"]


class DomainError(ValueError):
    """Argument outside the domain of a special function."""


def _check_unit_interval(x, name="x"):
    x = np.asarray(x, dtype=float)
    if np.any(np.abs(x) > 1.0 + DOMAIN_SLACK):
        raise DomainError(f"{name} must lie in [-1, 1]")
    return np.clip(x, -1.0, 1.0)


def _scalar_or_array(value, like):
    if np.ndim(like) == 0:
        return float(value)
    return value


# ---------------------------------------------------------------------------
# Legendre / Gegenbauer
# ---------------------------------------------------------------------------


def legendre_p(j: int, x):
    """Classical Legendre polynomial P_j(x), normalized so that P_j(1) = 1."""
    return gegenbauer_c(j, 2, x)


def gegenbauer_c(j: int, d: int, x):
    """Standardized Gegenbauer polynomial c_j(d, x) = C_j^{(d-1)/2}(x) / C_j^{(d-1)/2}(1).

    The recurrence is run directly on the standardized values,

        c_{n+1} = (2(n + lam) x c_n - n c_{n-1}) / (n + 2 lam),   lam = (d - 1)/2,

    which never forms C_j(1) and so does not overflow for large j.  d = 2
    gives the Legendre polynomials and d = 1 the Chebyshev polynomials T_j.
    """
    if j < 0:
        raise DomainError("degree must be non-negative")
    if d < 1:
        raise DomainError("sphere dimension must be >= 1")
    xa = _check_unit_interval(x)
    lam = 0.5 * (d - 1)
    prev = np.ones_like(xa)
    if j == 0:
        return _scalar_or_array(prev, x)
    cur = xa.copy()
    for n in range(1, j):
        prev, cur = cur, (2.0 * (n + lam) * xa * cur - n * prev) / (n + 2.0 * lam)
    return _scalar_or_array(cur, x)


def gegenbauer_table(J: int, d: int, x) -> np.ndarray:
    """c_0(d, x) .. c_J(d, x) stacked on a trailing axis of length J + 1."""
    if J < 0:
        raise DomainError("degree must be non-negative")
    xa = _check_unit_interval(x)
    lam = 0.5 * (d - 1)
    out = np.empty(xa.shape + (J + 1,))
    out[..., 0] = 1.0
    if J >= 1:
        out[..., 1] = xa
    for n in range(1, J):
        out[..., n + 1] = (2.0 * (n + lam) * xa * out[..., n] - n * out[..., n - 1]) / (n + 2.0 * lam)
    return out


def unit_legendre_table(J: int, x) -> np.ndarray:
    """Unit-norm associated Legendre values for all 0 <= m <= j <= J.

    Returns an array of shape ``x.shape + (J + 1, J + 1)`` indexed ``[..., j, m]``
    holding

        sqrt((2j+1)/(4 pi) * (j-m)!/(j+m)!) * P_{j,m}(x)

    with the Condon-Shortley phase, zero for m > j.  The sectoral start values
    come from a product recurrence and every column is then advanced upward in
    j with the standard normalized three-term recurrence, so no factorial is
    ever formed.
    """
    xa = _check_unit_interval(x)
    s = np.sqrt(np.clip(1.0 - xa * xa, 0.0, None))
    out = np.zeros(xa.shape + (J + 1, J + 1))
    m = np.arange(J + 1)
    # sectoral terms Y_mm = -sqrt((2m+1)/(2m)) s Y_{m-1,m-1}
    diag = np.empty(xa.shape + (J + 1,))
    diag[..., 0] = 1.0 / math.sqrt(4.0 * math.pi)
    for mm in range(1, J + 1):
        diag[..., mm] = -math.sqrt((2.0 * mm + 1.0) / (2.0 * mm)) * s * diag[..., mm - 1]
    out[..., m, m] = diag
    if J == 0:
        return out
    # first off-diagonal Y_{m+1,m} = sqrt(2m+3) x Y_mm
    mm = np.arange(J)
    out[..., mm + 1, mm] = np.sqrt(2.0 * mm + 3.0) * xa[..., None] * diag[..., :J]
    for j in range(2, J + 1):
        mm = np.arange(j - 1)
        a = np.sqrt((4.0 * j * j - 1.0) / (j * j - mm * mm))
        b = np.sqrt(((j - 1.0) ** 2 - mm * mm) / (4.0 * (j - 1.0) ** 2 - 1.0))
        out[..., j, mm] = a * (xa[..., None] * out[..., j - 1, mm] - b * out[..., j - 2, mm])
    return out


def _check_order(j, m):
    if j < 0 or m < 0 or m > j:
        raise DomainError(f"need 0 <= m <= j, got j={j}, m={m}")


def _unit_legendre(j: int, m: int, mu):
    """Single unit-norm associated Legendre value, via the column recurrence."""
    xa = _check_unit_interval(mu, "mu")
    s = np.sqrt(np.clip(1.0 - xa * xa, 0.0, None))
    y = np.full_like(xa, 1.0 / math.sqrt(4.0 * math.pi))
    for mm in range(1, m + 1):
        y = -math.sqrt((2.0 * mm + 1.0) / (2.0 * mm)) * s * y
    if j == m:
        return y
    prev, cur = y, math.sqrt(2.0 * m + 3.0) * xa * y
    for n in range(m + 2, j + 1):
        a = math.sqrt((4.0 * n * n - 1.0) / (n * n - m * m))
        b = math.sqrt(((n - 1.0) ** 2 - m * m) / (4.0 * (n - 1.0) ** 2 - 1.0))
        prev, cur = cur, a * (xa * cur - b * prev)
    return cur


def assoc_legendre(j: int, m: int, mu):
    """Associated Legendre function P_{j,m}(mu) including the (-1)^m phase."""
    _check_order(j, m)
    y = _unit_legendre(j, m, mu)
    log_scale = 0.5 * (math.log(4.0 * math.pi / (2 * j + 1)) + gammaln(j + m + 1) - gammaln(j - m + 1))
    return _scalar_or_array(y * math.exp(log_scale), mu)


def norm_assoc_legendre(j: int, m: int, mu):
    """sqrt(4 pi/(2j+1) * (j-m)!/(j+m)!) * P_{j,m}(mu).

    Equal to ``4 pi/(2j+1)`` times the unit-norm value, so the factorial ratio
    never appears explicitly and large orders stay finite.
    """
    _check_order(j, m)
    y = _unit_legendre(j, m, mu)
    return _scalar_or_array(y * (4.0 * math.pi / (2 * j + 1)), mu)


# ---------------------------------------------------------------------------
# Hermite
# ---------------------------------------------------------------------------

HermiteScaling = Literal["probability", "lebesgue"]


def hermite_table(K: int, u, scaling: HermiteScaling = "probability") -> np.ndarray:
    """All orthonormal Hermite values H_0..H_K at ``u``; shape ``u.shape + (K+1,)``.

    ``scaling="probability"`` gives He_k/sqrt(k!), orthonormal under the
    standard Gaussian probability measure.  ``"lebesgue"`` divides by an extra
    (2 pi)^{1/4}, which is orthonormal against the bare weight exp(-u^2/2).
    """
    ua = np.asarray(u, dtype=float)
    out = np.empty(ua.shape + (K + 1,))
    out[..., 0] = 1.0
    if K >= 1:
        out[..., 1] = ua
    for k in range(1, K):
        out[..., k + 1] = (ua * out[..., k] - math.sqrt(k) * out[..., k - 1]) / math.sqrt(k + 1.0)
    if scaling == "lebesgue":
        out /= (2.0 * math.pi) ** 0.25
    elif scaling != "probability":
        raise ValueError(f"unknown Hermite scaling {scaling!r}")
    return out


def hermite_h(k: int, u, scaling: HermiteScaling = "probability"):
    """Orthonormal probabilists' Hermite polynomial H_k(u) = He_k(u)/sqrt(k!)."""
    if k < 0:
        raise DomainError("degree must be non-negative")
    value = hermite_table(k, u, scaling)[..., k]
    return _scalar_or_array(value, u)


# ---------------------------------------------------------------------------
# spherical harmonics and sphere geometry
# ---------------------------------------------------------------------------


def sph_harm_real(j: int, m: int, beta1, beta2):
    """Real spherical harmonic of degree j and order m (-j <= m <= j).

    Unit norm in L^2(S^2).  Positive orders carry cos(m beta2), negative
    orders sin(|m| beta2); both use P_{j,|m|}.
    """
    if abs(m) > j or j < 0:
        raise DomainError(f"need |m| <= j, got j={j}, m={m}")
    y = _unit_legendre(j, abs(m), np.cos(np.asarray(beta1, dtype=float)))
    if m > 0:
        y = math.sqrt(2.0) * y * np.cos(m * np.asarray(beta2, dtype=float))
    elif m < 0:
        y = math.sqrt(2.0) * y * np.sin(-m * np.asarray(beta2, dtype=float))
    return _scalar_or_array(y, np.broadcast(np.asarray(beta1), np.asarray(beta2)))


def sph_harm_dim(j: int, d: int) -> int:
    """Dimension of the space of degree-j spherical harmonics on S^d (exact)."""
    if j < 0 or d < 1:
        raise DomainError("need j >= 0 and d >= 1")
    if j == 0:
        return 1
    num = (2 * j + d - 1) * math.factorial(j + d - 2)
    den = math.factorial(j) * math.factorial(d - 1)
    return num // den


def surface_area(d: int) -> float:
    """Surface area of the unit sphere S^d embedded in R^{d+1}."""
    if d < 1:
        raise DomainError("need d >= 1")
    return 2.0 * math.pi ** ((d + 1) / 2.0) / math.gamma((d + 1) / 2.0)


@dataclass(frozen=True)
class SphereTimePoint:
    """A location on S^2 (colatitude, longitude in radians) at time ``t``."""

    colatitude: float
    longitude: float
    t: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.colatitude <= math.pi:
            raise DomainError("colatitude must be in [0, pi]")
        if not 0.0 <= self.longitude < 2.0 * math.pi:
            raise DomainError("longitude must be in [0, 2 pi)")

    def unit_vector(self) -> np.ndarray:
        st = math.sin(self.colatitude)
        return np.array([st * math.cos(self.longitude), st * math.sin(self.longitude), math.cos(self.colatitude)])


def geodesic_distance(p: SphereTimePoint, q: SphereTimePoint) -> tuple[float, float]:
    """Great-circle angle theta and sphere-time distance rho = sqrt(theta^2 + lag^2)."""
    inner = float(np.dot(p.unit_vector(), q.unit_vector()))
    theta = math.acos(min(1.0, max(-1.0, inner)))
    return theta, math.hypot(theta, p.t - q.t)


# ---------------------------------------------------------------------------
# quadrature
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class QuadratureRule:
    kind: str
    nodes: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        if self.nodes.shape != self.weights.shape:
            raise ValueError("node and weight counts differ")
        if np.any(self.weights <= 0):
            raise ValueError("quadrature weights must be positive")

    @property
    def n(self) -> int:
        return self.nodes.size

    def integrate(self, f) -> float:
        return float(np.dot(self.weights, f(self.nodes)))


@lru_cache(maxsize=64)
def quadrature(kind: QuadratureKind, n: int) -> QuadratureRule:
    """Gauss-Legendre on [-1, 1] or Gauss-Hermite for the standard normal density."""
    if n < 1:
        raise ValueError("need at least one node")
    if kind == "gauss-legendre":
        x, w = leggauss(n)
    elif kind == "gauss-hermite":
        x, w = hermegauss(n)
        w = w / math.sqrt(2.0 * math.pi)
    else:
        raise ValueError(f"unsupported quadrature kind {kind!r}")
    x.setflags(write=False)
    w.setflags(write=False)
    return QuadratureRule(kind, x, w)


@lru_cache(maxsize=64)
def jacobi_rule(n: int, d: int) -> QuadratureRule:
    """Gauss rule for the weight (1 - x^2)^{d/2 - 1} on [-1, 1]."""
    if d == 2:
        return quadrature("gauss-legendre", n)
    alpha = d / 2.0 - 1.0
    x, w = roots_jacobi(n, alpha, alpha)
    x.setflags(write=False)
    w.setflags(write=False)
    return QuadratureRule(f"gauss-jacobi(d={d})", x, w)


def default_legendre_nodes(J: int) -> int:
    return max(64, 2 * J + 16)


def default_hermite_nodes(K: int) -> int:
    return max(64, 2 * K + 16)
