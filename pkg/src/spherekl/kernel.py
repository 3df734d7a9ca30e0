"""Space-time covariance kernels on S^d x R and their regularity diagnostics.

A kernel is stored through its Schoenberg functions,

    psi(theta, u) = sum_j phi_j(u) c_j(d, cos theta),

either given directly, or as phi_j(u) = sum_k a_kj eps_k(u) for an angular
spectrum with a trigonometric temporal basis, or as
phi_j(u) = sum_k alpha_kj H_k(u) for a Hermite spectrum.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from . import specfun
from ._io import atomic_write, fmt
from ._series import Bracket, Weight, power_weight
from .spectra import PowerSpectrum, SchoenbergFunctionSet

__all__ = [
    "KernelModel",
    "temporal_factors",
    "kernel_eval",
    "kernel_eval_hermite",
    "HolderConstant",
    "holder_constant",
    "HolderBoundReport",
    "holder_kernel_bound_check",
    "weighted_sobolev_norm",
    "SmoothnessIndex",
    "smoothness_index",
    "exact_seminorm_sum",
    "seminorm_integral",
    "kernel_grid",
    "write_kernel_grid",
]

Basis = Literal["paper", "orthonormal"]

# the unspecified absolute constant in the Hoelder estimate
HOLDER_C = 1.0


@dataclass(frozen=True)
class KernelModel:
    """Covariance kernel evaluated up to degree J (and time mode K for spectra)."""

    J: int
    K: int = 0
    d: int = 2
    schoenberg: SchoenbergFunctionSet | None = None
    spectrum: PowerSpectrum | None = None
    basis: Basis = "paper"
    T: float = 1.0
    _table: np.ndarray | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if (self.schoenberg is None) == (self.spectrum is None):
            raise ValueError("give exactly one of schoenberg functions or a spectrum")
        if self.J < 0 or self.K < 0:
            raise ValueError("truncation degrees must be non-negative")
        if self.basis not in ("paper", "orthonormal"):
            raise ValueError(f"unknown temporal basis {self.basis!r}")
        if not self.T > 0:
            raise ValueError("time horizon T must be positive")
        if self.spectrum is not None:
            object.__setattr__(self, "_table", self.spectrum.matrix(self.K, self.J))

    @classmethod
    def from_spectrum(cls, spectrum: PowerSpectrum, J: int, K: int, basis: Basis = "paper", T: float = 1.0):
        return cls(J=J, K=K, d=spectrum.d, spectrum=spectrum, basis=basis, T=T)

    @classmethod
    def from_schoenberg(cls, functions: SchoenbergFunctionSet, J: int | None = None):
        J = functions.jmax if J is None else min(J, functions.jmax)
        return cls(J=J, d=functions.d, schoenberg=functions)

    @property
    def kind(self) -> str:
        if self.spectrum is None:
            return "schoenberg"
        return self.spectrum.kind

    @property
    def even(self) -> bool:
        """psi(theta, -u) == psi(theta, u) holds for this model."""
        if self.schoenberg is not None:
            return self.schoenberg.even
        if self.kind == "angular":
            return True
        # odd Hermite polynomials break the symmetry
        return not np.any(self._table[1::2])

    def table(self) -> np.ndarray:
        return self._table

    def schoenberg_values(self, u) -> np.ndarray:
        """phi_0(u) .. phi_J(u) on a trailing axis."""
        u = np.asarray(u, dtype=float)
        if self.schoenberg is not None:
            return np.stack([self.schoenberg(j, u) * np.ones_like(u) for j in range(self.J + 1)], axis=-1)
        if self.kind == "hermite":
            factors = specfun.hermite_table(self.K, u)
        else:
            factors = temporal_factors(self.K, u, self.T, self.basis)
        return factors @ self._table


def temporal_factors(K: int, u, T: float, basis: Basis = "paper") -> np.ndarray:
    """eps_k(u) = sum of zeta_k(t) zeta_k(s) over the cos/sin pair, at lag u = t - s.

    paper: cos(pi k u / (2T)); orthonormal: 1/T for k = 0 and
    (2/T) cos(2 pi k u / T) otherwise.  Shape ``u.shape + (K + 1,)``.
    """
    u = np.asarray(u, dtype=float)
    k = np.arange(K + 1)
    if basis == "paper":
        return np.cos(np.multiply.outer(u, k) * (math.pi / (2.0 * T)))
    if basis == "orthonormal":
        out = (2.0 / T) * np.cos(np.multiply.outer(u, k) * (2.0 * math.pi / T))
        out[..., 0] = 1.0 / T
        return out
    raise ValueError(f"unknown temporal basis {basis!r}")


def _eval(model: KernelModel, theta, u):
    theta, u = np.broadcast_arrays(np.asarray(theta, dtype=float), np.asarray(u, dtype=float))
    x = np.cos(theta)
    # cos(pi) can round just outside [-1, 1]
    C = specfun.gegenbauer_table(model.J, model.d, np.clip(x, -1.0, 1.0))
    phi = model.schoenberg_values(u)
    out = np.einsum("...j,...j->...", phi, C)
    return float(out) if out.ndim == 0 else out


def kernel_eval(model: KernelModel, theta, u):
    """psi(theta, u) truncated at j <= J (and k <= K); broadcasts over arrays."""
    return _eval(model, theta, u)


def kernel_eval_hermite(model: KernelModel, theta, u):
    """psi(theta, u) = sum_{j, k} alpha_kj H_k(u) c_j(d, cos theta)."""
    if model.kind != "hermite":
        raise ValueError("kernel_eval_hermite needs a model built from a Hermite spectrum")
    return _eval(model, theta, u)


# ---------------------------------------------------------------------------
# Hoelder diagnostics
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class HolderConstant:
    delta: float
    bracket: Bracket
    c: float = HOLDER_C

    @property
    def divergent(self) -> bool:
        return not self.bracket.converged

    @property
    def value(self) -> float:
        return self.c * self.bracket.mid


def _holder_weights(delta: float) -> tuple[Weight, Weight]:
    # index weights floored at one, so the k = 0 and j = 0 modes keep their mass
    jw = Weight(
        lambda n: np.sqrt(2.0 * n + 1.0) * np.maximum(n * (n + 1.0), 1.0) ** (delta / 2.0),
        0.5 + delta,
        f"sqrt(2j+1)max(j(j+1),1)^{delta / 2:g}",
    )
    kw = power_weight(delta / 8.0, at_zero=1.0)
    return jw, kw


def holder_constant(spectrum: PowerSpectrum, delta: float) -> HolderConstant:
    """C_delta = c * sum alpha_kj sqrt(2j+1) k^{delta/8} (j(j+1))^{delta/2} with c = 1.

    Index powers use max(k, 1) and max(j(j+1), 1), so a spectrum concentrated
    on k = 0 or j = 0 still yields a positive constant.
    """
    if not 0 < delta <= 2:
        raise ValueError("delta must lie in (0, 2]")
    jw, kw = _holder_weights(delta)
    return HolderConstant(delta, spectrum.total(jweight=jw, kweight=kw))


@dataclass(frozen=True)
class HolderBoundReport:
    delta: float
    max_ratio: float
    ratio_by_scale: tuple[tuple[float, float], ...]
    constant: float | None
    c: float
    bounded: bool

    @property
    def within_constant(self) -> bool | None:
        if self.constant is None:
            return None
        return self.max_ratio <= self.constant * (1.0 + 1e-12)


def holder_kernel_bound_check(model: KernelModel, delta: float, samples: int = 101) -> HolderBoundReport:
    """Sample |psi(0,0) - psi(theta,u)| / rho^delta over [0, pi] x [-1, 1].

    The ratio is also tracked on dyadic shells rho in (2^-i-1, 2^-i]; it is
    reported bounded when the smallest shells do not exceed the coarse maximum
    by more than a factor of two.
    """
    theta = np.linspace(0.0, math.pi, samples)
    u = np.linspace(-1.0, 1.0, 2 * (samples // 2) + 1)
    th, uu = np.meshgrid(theta, u, indexing="ij")
    rho = np.hypot(th, uu)
    psi0 = kernel_eval(model, 0.0, 0.0)
    lhs = np.abs(psi0 - kernel_eval(model, th, uu))
    mask = rho > 0
    ratio = lhs[mask] / rho[mask] ** delta
    max_ratio = float(ratio.max()) if ratio.size else 0.0

    # radial ladder toward the origin along a few directions
    shells = []
    angles = np.linspace(0.0, math.pi / 2.0, 7)
    for i in range(12):
        r = 2.0**-i
        th_r = r * np.cos(angles)
        u_r = r * np.sin(angles)
        val = np.abs(psi0 - kernel_eval(model, th_r, u_r)) / r**delta
        shells.append((r, float(val.max())))
    fine = max(v for _, v in shells[-4:])
    coarse = max(max_ratio, max(v for _, v in shells[:4]))
    bounded = math.isfinite(max_ratio) and fine <= 2.0 * coarse + 1e-300
    constant = None
    if model.spectrum is not None and model.kind == "hermite":
        hc = holder_constant(model.spectrum, delta)
        constant = hc.value
    return HolderBoundReport(delta, max(max_ratio, fine), tuple(shells), constant, HOLDER_C, bounded)


# ---------------------------------------------------------------------------
# weighted Sobolev sums
# ---------------------------------------------------------------------------


def _as_spectrum(b) -> PowerSpectrum:
    if isinstance(b, PowerSpectrum):
        return b
    from .spectra import explicit_spectrum

    return explicit_spectrum(np.abs(np.asarray(b, dtype=float)))


def weighted_sobolev_norm(b, eta: float, mode: str = "W", power: float = 2.0) -> Bracket:
    """sum b_kj^2 k^eta j^{2 eta} (mode "W") or sum b_kj^2 j^{2 eta} (mode "V_T").

    ``b`` is a spectrum or a (K+1) x (J+1) array indexed [k, j].  Entries are
    raised to ``power``; pass ``power=1`` when the spectrum already holds b^2.
    Index powers use max(n, 1), so a lone b_00 contributes b_00^2 for every eta.
    """
    if eta < 0:
        raise ValueError("eta must be non-negative")
    spec = _as_spectrum(b)
    jw = power_weight(2.0 * eta, at_zero=1.0)
    if mode == "W":
        kw = power_weight(eta, at_zero=1.0)
    elif mode == "V_T":
        kw = None
    else:
        raise ValueError(f"unknown norm mode {mode!r}")
    return spec.total(power=power, jweight=jw, kweight=kw)


@dataclass(frozen=True)
class SmoothnessIndex:
    lo: float
    hi: float
    saturated: bool

    @property
    def estimate(self) -> float:
        return 0.5 * (self.lo + self.hi)

    def __str__(self):
        if self.saturated:
            return ">= 20"
        return f"[{self.lo:.4f}, {self.hi:.4f}]"


def smoothness_index(b, power: float = 2.0, upper: float = 20.0, width: float = 0.05) -> SmoothnessIndex:
    """sup of eta for which the W-norm sum is finite, bracketed by bisection."""
    spec = _as_spectrum(b)

    def finite(eta):
        return weighted_sobolev_norm(spec, eta, "W", power).converged

    if finite(upper):
        return SmoothnessIndex(upper, math.inf, True)
    if not finite(0.0):
        return SmoothnessIndex(0.0, 0.0, False)
    lo, hi = 0.0, upper
    while hi - lo > width:
        mid = 0.5 * (lo + hi)
        if finite(mid):
            lo = mid
        else:
            hi = mid
    return SmoothnessIndex(lo, hi, False)


def _falling(n: np.ndarray, r: int) -> np.ndarray:
    out = np.ones_like(n, dtype=float)
    for i in range(r):
        out *= np.clip(n - i, 0.0, None)
    return out


def exact_seminorm_sum(b, n: int = 1) -> float:
    """sum b_kj^2 k!/(k-n)! (j+n)!/(j-n)! for coefficients in the orthonormal
    Hermite x normalized Legendre basis.

    This equals the mixed seminorm int int (d_t^n d_x^n f)^2 (1-x^2)^n dx dnu
    exactly; the weight grows like k^n j^{2n}.
    """
    b = np.asarray(b, dtype=float)
    k = np.arange(b.shape[0], dtype=float)[:, None]
    j = np.arange(b.shape[1], dtype=float)[None, :]
    wj = _falling(j + n, 2 * n)
    wk = _falling(k, n)
    return float(np.sum(b * b * wk * wj))


def seminorm_integral(dfdxdt, nx: int = 96, nt: int = 96) -> float:
    """int_R int_{-1}^{1} g(x, t)^2 (1 - x^2) dx dnu(t) for g = d_x d_t f.

    ``dfdxdt`` is the mixed first derivative; Gauss-Legendre in x times
    Gauss-Hermite in t.
    """
    gx = specfun.quadrature("gauss-legendre", nx)
    gt = specfun.quadrature("gauss-hermite", nt)
    X, T = np.meshgrid(gx.nodes, gt.nodes, indexing="ij")
    vals = np.asarray(dfdxdt(X, T), dtype=float) ** 2 * (1.0 - X * X)
    return float(gx.weights @ vals @ gt.weights)


# ---------------------------------------------------------------------------
# grid export
# ---------------------------------------------------------------------------


def kernel_grid(model: KernelModel, thetas, lags) -> np.ndarray:
    """Rows (theta, lag, value) over the product of the two axes."""
    th, uu = np.meshgrid(np.asarray(thetas, float), np.asarray(lags, float), indexing="ij")
    vals = np.asarray(kernel_eval(model, th, uu))
    return np.column_stack([th.ravel(), uu.ravel(), vals.ravel()])


def write_kernel_grid(path, rows: np.ndarray) -> None:
    """CSV with columns theta, lag, value; written atomically."""
    lines = ["theta,lag,value"] + [f"{fmt(t)},{fmt(u)},{fmt(v)}" for t, u, v in rows]
    atomic_write(path, "\n".join(lines) + "\n")
