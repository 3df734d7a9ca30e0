"""Power spectra on sphere x time, Schoenberg projections and summability checks.

A :class:`PowerSpectrum` holds non-negative coefficients indexed ``(k, j)``
(time mode ``k``, spherical degree ``j``).  Two closed-form families are
built in,

    polyproduct:  a_kj = xi / ((1 + j)**nu1 * (1 + k)**nu2)
    polysum:      a_kj = xi / (1 + j**nu1 + k**nu2)**tau

and any finite table can be wrapped as an explicit spectrum.  Infinite sums
over a family are returned as :class:`~spherekl._series.Bracket` intervals.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Callable, Literal, Sequence

import numpy as np
from scipy.special import zeta

from . import specfun
from ._series import (
    HEAD_TERMS,
    Bracket,
    Weight,
    _log_quad,
    power_integral_tail,
    power_weight,
    series_tail,
    unit_weight,
)

__all__ = [
    "SpectrumError",
    "SummabilityError",
    "PowerSpectrum",
    "SchoenbergFunctionSet",
    "SummabilityReport",
    "HolderHypothesisReport",
    "family_polyproduct",
    "family_polysum",
    "explicit_spectrum",
    "normalize_unit_variance",
    "schoenberg_from_kernel",
    "hermite_coeffs",
    "hermite_synthesis",
    "check_summability",
    "check_holder_hypothesis",
    "CONVENTIONS",
    "variance_sum",
    "to_text",
    "from_text",
]

Kind = Literal["angular", "hermite"]
Family = Literal["polyproduct", "polysum", "explicit"]
CONVENTIONS = ("mean-field", "mode-sum", "truncated")

# below this a coefficient is treated as an exact zero
TINY = 1e-300
# explicit rows/columns summed before switching to integral brackets
_ROW_HEAD = 1024
_COL_HEAD = 1024


class SpectrumError(ValueError):
    """Invalid spectrum parameters or coefficient table."""


class SummabilityError(SpectrumError):
    """A sum required to be finite diverges."""


@dataclass(frozen=True, eq=False)
class PowerSpectrum:
    kind: Kind
    family: Family
    xi: float = 1.0
    nu1: float | None = None
    nu2: float | None = None
    tau: float | None = None
    table: np.ndarray | None = field(default=None, repr=False)
    d: int = 2

    def __post_init__(self):
        if self.kind not in ("angular", "hermite"):
            raise SpectrumError(f"unknown spectrum kind {self.kind!r}")
        if not self.xi > 0 or not math.isfinite(self.xi):
            raise SpectrumError("xi must be a positive finite number")
        if self.family == "explicit":
            tab = np.array(self.table, dtype=float, copy=True)
            if tab.ndim != 2 or tab.size == 0:
                raise SpectrumError("explicit spectrum needs a non-empty (K+1) x (J+1) table")
            if not np.all(np.isfinite(tab)) or np.any(tab < 0):
                raise SpectrumError("coefficients must be finite and non-negative")
            tab[tab < TINY] = 0.0
            tab.setflags(write=False)
            object.__setattr__(self, "table", tab)
            return
        if self.family not in ("polyproduct", "polysum"):
            raise SpectrumError(f"unknown family {self.family!r}")
        if self.nu1 is None or self.nu2 is None or not (self.nu1 > 1 and self.nu2 > 1):
            raise SpectrumError("nu1 and nu2 must both exceed 1")
        if self.family == "polysum":
            if self.tau is None or not self.tau > 1:
                raise SpectrumError("tau must exceed 1")
            if not self.tau > 1.0 / self.nu1 + 1.0 / self.nu2:
                raise SummabilityError("polysum spectrum needs tau > 1/nu1 + 1/nu2 to be summable")

    # -- identity -----------------------------------------------------------

    def _key(self):
        if self.family == "explicit":
            return (self.kind, self.family, self.xi, self.table.shape, self.table.tobytes(), self.d)
        return (self.kind, self.family, self.xi, self.nu1, self.nu2, self.tau, self.d)

    def __eq__(self, other):
        return isinstance(other, PowerSpectrum) and self._key() == other._key()

    def __hash__(self):
        return hash(self._key())

    @property
    def kmax(self) -> int | None:
        return None if self.table is None else self.table.shape[0] - 1

    @property
    def jmax(self) -> int | None:
        return None if self.table is None else self.table.shape[1] - 1

    @property
    def is_finite(self) -> bool:
        return self.family == "explicit"

    def describe(self) -> str:
        if self.family == "explicit":
            return f"explicit[{self.table.shape[0]}x{self.table.shape[1]}](xi={self.xi:g})"
        params = f"xi={self.xi:.12g},nu1={self.nu1:g},nu2={self.nu2:g}"
        if self.family == "polysum":
            params += f",tau={self.tau:g}"
        return f"{self.family}({params})"

    # -- coefficients -------------------------------------------------------

    def coeff(self, k, j):
        """a_{k,j}; broadcasts over array arguments."""
        k = np.asarray(k)
        j = np.asarray(j)
        if self.family == "explicit":
            kk, jj = np.broadcast_arrays(k, j)
            out = np.zeros(kk.shape)
            inside = (kk >= 0) & (jj >= 0) & (kk <= self.kmax) & (jj <= self.jmax)
            out[inside] = self.table[kk[inside].astype(int), jj[inside].astype(int)]
            out = self.xi * out
        else:
            kf = k.astype(float)
            jf = j.astype(float)
            if self.family == "polyproduct":
                out = self.xi / ((1.0 + jf) ** self.nu1 * (1.0 + kf) ** self.nu2)
            else:
                out = self.xi / (1.0 + jf ** self.nu1 + kf ** self.nu2) ** self.tau
        out = np.where(out < TINY, 0.0, out)
        return out if out.ndim else float(out)

    def matrix(self, K: int, J: int) -> np.ndarray:
        """Coefficient table of shape (K + 1, J + 1), indexed [k, j]."""
        k = np.arange(K + 1)[:, None]
        j = np.arange(J + 1)[None, :]
        return np.asarray(self.coeff(k, j), dtype=float).reshape(K + 1, J + 1)

    def scaled(self, lam: float) -> "PowerSpectrum":
        return replace(self, xi=self.xi * lam)

    def with_xi(self, xi: float) -> "PowerSpectrum":
        return replace(self, xi=xi)

    # -- sums ----------------------------------------------------------------

    def block_sum(
        self,
        j0: int = 0,
        j1: int | None = None,
        k0: int = 0,
        k1: int | None = None,
        power: float = 1.0,
        jweight: Weight | None = None,
        kweight: Weight | None = None,
        horizon: int | None = None,
    ) -> Bracket:
        """Bracket of sum_{j0<=j<=j1} sum_{k0<=k<=k1} w_j v_k a_kj**power.

        ``None`` upper limits mean infinity.  ``horizon`` caps both indices,
        turning every infinite sum into a finite one.
        """
        jweight = jweight or unit_weight()
        kweight = kweight or unit_weight()
        if horizon is not None:
            j1 = horizon if j1 is None else min(j1, horizon)
            k1 = horizon if k1 is None else min(k1, horizon)
        if self.family == "explicit":
            j1 = self.jmax if j1 is None else min(j1, self.jmax)
            k1 = self.kmax if k1 is None else min(k1, self.kmax)
        if (j1 is not None and j1 < j0) or (k1 is not None and k1 < k0):
            return Bracket.exact(0.0)
        if j1 is not None and k1 is not None:
            return Bracket.exact(self._finite_block(j0, j1, k0, k1, power, jweight, kweight))
        return _family_block(self, j0, j1, k0, k1, float(power), jweight, kweight)

    def _finite_block(self, j0, j1, k0, k1, power, jweight, kweight) -> float:
        kk = np.arange(k0, k1 + 1)
        vk = kweight(kk)
        total = 0.0
        step = max(1, 4_000_000 // max(1, kk.size))
        for start in range(j0, j1 + 1, step):
            jj = np.arange(start, min(j1, start + step - 1) + 1)
            block = np.asarray(self.coeff(kk[:, None], jj[None, :]), dtype=float) ** power
            total += math.fsum(np.dot(vk, block) * jweight(jj))
        return total

    def total(self, **kw) -> Bracket:
        return self.block_sum(0, None, 0, None, **kw)


# ---------------------------------------------------------------------------
# infinite sums for the closed-form families
# ---------------------------------------------------------------------------


def _check_convergence(spec: PowerSpectrum, j_inf: bool, k_inf: bool, power, jweight, kweight) -> bool:
    a, b = jweight.degree, kweight.degree
    if spec.family == "polyproduct":
        ok = True
        if j_inf:
            ok &= a - spec.nu1 * power < -1
        if k_inf:
            ok &= b - spec.nu2 * power < -1
        return bool(ok)
    s = spec.tau * power
    if k_inf and not (b + 1) / spec.nu2 < s:
        return False
    if j_inf and k_inf:
        return (a + 1) / spec.nu1 + (b + 1) / spec.nu2 < s
    if j_inf:
        return a - spec.nu1 * s < -1
    return True


@lru_cache(maxsize=4096)
def _family_block(spec, j0, j1, k0, k1, power, jweight, kweight) -> Bracket:
    j_inf, k_inf = j1 is None, k1 is None
    if not _check_convergence(spec, j_inf, k_inf, power, jweight, kweight):
        return Bracket.divergent()
    if spec.family == "polyproduct":
        return _product_block(spec, j0, j1, k0, k1, power, jweight, kweight)
    return _polysum_block(spec, j0, j1, k0, k1, power, jweight, kweight)


def _one_dim(nu: float, p: float, weight: Weight, n0: int, n1: int | None) -> Bracket:
    s = nu * p

    def f(n):
        return weight(n) * (1.0 + n) ** (-s)

    if n1 is not None:
        return Bracket.exact(math.fsum(f(np.arange(n0, n1 + 1, dtype=float))))
    if weight.is_unit:
        return Bracket.exact(float(zeta(s, n0 + 1.0)))
    if weight.power is not None:
        # explicit head, then (N/(N+1))^p <= n^p / (1+n)^p <= 1 for n >= N
        N = n0 + HEAD_TERMS
        head = math.fsum(f(np.arange(n0, N, dtype=float)))
        z = float(zeta(s - weight.power, N + 1.0))
        r = (N / (N + 1.0)) ** weight.power
        lo, hi = sorted((r * z, z))
        return Bracket(head + lo, head + hi)
    return series_tail(f, n0)


def _product_block(spec, j0, j1, k0, k1, power, jweight, kweight) -> Bracket:
    bj = _one_dim(spec.nu1, power, jweight, j0, j1)
    bk = _one_dim(spec.nu2, power, kweight, k0, k1)
    return (bj * bk) * spec.xi ** power


def _row_sums(spec, jj: np.ndarray, k0: int, k1: int | None, power: float, kweight: Weight):
    """Per-row brackets of sum_k v_k (1 + j**nu1 + k**nu2)**(-s) (xi excluded)."""
    s = spec.tau * power
    c = 1.0 + jj.astype(float) ** spec.nu1
    kend = k1 if k1 is not None else k0 + _ROW_HEAD - 1
    kk = np.arange(k0, kend + 1, dtype=float)
    vk = kweight(kk)
    head = (vk[None, :] * (c[:, None] + kk[None, :] ** spec.nu2) ** (-s)).sum(axis=1)
    if k1 is not None:
        return head, head
    ka = float(kend + 1)
    b = kweight.power
    if b is None:
        raise SpectrumError("time-index weight must be a pure power for the polysum family")
    integral = power_integral_tail(c, spec.nu2, s, b, ka)
    peak = _row_peak(c, spec.nu2, s, b, ka)
    return head + np.maximum(integral - peak, 0.0), head + integral + peak


def _row_peak(c, nu, s, b, start):
    """max_{k >= start} k**b (c + k**nu)**(-s) for the unimodal row function."""
    if b > 0:
        kstar = np.power(b * c / (nu * s - b), 1.0 / nu)
        kpk = np.maximum(kstar, start)
    else:
        kpk = np.full_like(c, float(start))
    return kpk**b * (c + kpk**nu) ** (-s)


def _polysum_block(spec, j0, j1, k0, k1, power, jweight, kweight) -> Bracket:
    jend = j1 if j1 is not None else j0 + _COL_HEAD - 1
    jj = np.arange(j0, jend + 1)
    lo_rows, hi_rows = _row_sums(spec, jj, k0, k1, power, kweight)
    wj = jweight(jj)
    lo = math.fsum(wj * lo_rows)
    hi = math.fsum(wj * hi_rows)
    if j1 is None:
        ja = float(jend + 1)
        s = spec.tau * power

        def row(jv: float, upper: bool) -> float:
            c = 1.0 + jv ** spec.nu1
            if k1 is not None:
                kk = np.arange(k0, k1 + 1, dtype=float)
                val = float(np.sum(kweight(kk) * (c + kk**spec.nu2) ** (-s)))
                return val
            b = kweight.power
            # include the index-zero term exactly when it carries a non-power weight
            extra = 0.0
            start = float(k0)
            if k0 == 0:
                extra = float(kweight(np.array([0.0]))[0]) * c ** (-s)
                start = 1.0
            integral = float(power_integral_tail(np.array([c]), spec.nu2, s, b, start)[0])
            peak = float(_row_peak(np.array([c]), spec.nu2, s, b, start)[0])
            return extra + (integral + peak if upper else max(integral - peak, 0.0))

        def h(jv: float, upper: bool) -> float:
            return float(jweight(np.array([jv]))[0]) * row(jv, upper)

        # stop where j**nu1 nears overflow; past it h is a pure power law
        # x**(-1 - gap) to machine precision and the rest integrates in closed form
        stop = max(min(1e150, 1e250 ** (1.0 / spec.nu1)), ja)
        if k1 is None:
            gap = spec.nu1 * (s - (kweight.power + 1.0) / spec.nu2) - jweight.degree - 1.0
        else:
            gap = spec.nu1 * s - jweight.degree - 1.0
        lo += _log_quad(lambda x: h(x, False), ja, stop) + h(stop, False) * stop / gap
        hi += h(ja, True) + _log_quad(lambda x: h(x, True), ja, stop) + h(stop, True) * stop / gap * (1.0 + 1e-9)
    xp = spec.xi ** power
    return Bracket(lo * xp, hi * xp)


# ---------------------------------------------------------------------------
# constructors
# ---------------------------------------------------------------------------


def family_polyproduct(xi: float, nu1: float, nu2: float, kind: Kind = "angular") -> PowerSpectrum:
    """a_kj = xi / ((1 + j)**nu1 (1 + k)**nu2)."""
    return PowerSpectrum(kind, "polyproduct", float(xi), float(nu1), float(nu2))


def family_polysum(xi: float, nu1: float, nu2: float, tau: float, kind: Kind = "angular") -> PowerSpectrum:
    """a_kj = xi / (1 + j**nu1 + k**nu2)**tau."""
    return PowerSpectrum(kind, "polysum", float(xi), float(nu1), float(nu2), float(tau))


def explicit_spectrum(table, xi: float = 1.0, kind: Kind = "angular", d: int = 2) -> PowerSpectrum:
    """Finite spectrum from a (K + 1) x (J + 1) table indexed [k, j]."""
    return PowerSpectrum(kind, "explicit", float(xi), table=np.asarray(table, dtype=float), d=d)


def mode_weight() -> Weight:
    return Weight(lambda n: 2.0 * n + 1.0, 1.0, "2j+1")


def variance_sum(
    spectrum: PowerSpectrum,
    convention: str = "mean-field",
    J: int | None = None,
    K: int | None = None,
) -> Bracket:
    """The sum that a given unit-variance convention sets to one.

    mean-field: sum a_kj, which is the pointwise variance of the simulated
    field in the paper-mode temporal basis.  mode-sum: sum (2j + 1) a_kj.
    truncated: the mean-field sum restricted to j <= J, k <= K.
    """
    if convention == "mean-field":
        return spectrum.total()
    if convention == "mode-sum":
        return spectrum.total(jweight=mode_weight())
    if convention == "truncated":
        if J is None or K is None:
            raise SpectrumError("the truncated convention needs J and K")
        return spectrum.block_sum(0, J, 0, K)
    raise SpectrumError(f"unknown variance convention {convention!r}")


def normalize_unit_variance(
    spectrum: PowerSpectrum,
    convention: str = "mean-field",
    J: int | None = None,
    K: int | None = None,
) -> tuple[PowerSpectrum, float]:
    """Rescale xi so the chosen variance sum equals one; returns (spectrum, xi)."""
    total = variance_sum(spectrum, convention, J, K)
    if not total.converged:
        raise SummabilityError(f"normalizing sum diverges under convention {convention!r}")
    if total.mid <= 0:
        raise SpectrumError("cannot normalize an all-zero spectrum")
    xi = spectrum.xi / total.mid
    return spectrum.with_xi(xi), xi


# ---------------------------------------------------------------------------
# Schoenberg functions and Hermite projections
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SchoenbergFunctionSet:
    """Temporal functions phi_0..phi_Jmax weighting each spherical degree."""

    functions: tuple[Callable, ...]
    d: int = 2
    even: bool = True

    @property
    def jmax(self) -> int:
        return len(self.functions) - 1

    def __call__(self, j: int, t):
        return np.asarray(self.functions[j](np.asarray(t, dtype=float)), dtype=float)

    def at_zero(self) -> np.ndarray:
        return np.array([float(self(j, 0.0)) for j in range(self.jmax + 1)])

    def total_variance(self) -> float:
        return math.fsum(self.at_zero())

    def check_bounded(self, t: Sequence[float], slack: float = 1e-12) -> bool:
        t = np.asarray(t, dtype=float)
        return all(
            np.all(np.abs(self(j, t)) <= phi0 + slack) for j, phi0 in enumerate(self.at_zero())
        )


def schoenberg_from_kernel(psi, j: int, d: int, t, rule: specfun.QuadratureRule | None = None):
    """phi_{j,d}(t) recovered from a kernel psi(x, t) on [-1, 1] x R.

    dim(H_j^d) |S^{d-1}| / |S^d| * int_{-1}^{1} psi(x, t) c_j(d, x) (1 - x^2)^{d/2-1} dx

    evaluated with an n-point Gauss rule; for d != 2 the Gauss-Jacobi rule with
    the same node count absorbs the weight.
    """
    if rule is None:
        rule = specfun.quadrature("gauss-legendre", specfun.default_legendre_nodes(j))
    if rule.kind != "gauss-legendre" and not rule.kind.startswith("gauss-jacobi"):
        raise ValueError("Schoenberg projection needs a Legendre-type rule")
    if rule.n < j + 8:
        raise ValueError(f"quadrature with {rule.n} nodes is too coarse for degree {j} (need >= {j + 8})")
    if d != 2:
        rule = specfun.jacobi_rule(rule.n, d)
    x = rule.nodes
    ta = np.asarray(t, dtype=float)
    vals = np.asarray(psi(x.reshape((-1,) + (1,) * ta.ndim), ta), dtype=float)
    cj = specfun.gegenbauer_c(j, d, x).reshape((-1,) + (1,) * ta.ndim)
    integral = np.tensordot(rule.weights, vals * cj, axes=(0, 0))
    const = specfun.sph_harm_dim(j, d) * specfun.surface_area(d - 1) / specfun.surface_area(d) if d > 1 else 1.0
    out = const * integral
    return float(out) if np.ndim(out) == 0 else out


def hermite_coeffs(phi, K: int, rule: specfun.QuadratureRule | None = None) -> np.ndarray:
    """alpha_k = int phi(u) H_k(u) dnu(u) for k = 0..K under the standard Gaussian."""
    if rule is None:
        rule = specfun.quadrature("gauss-hermite", specfun.default_hermite_nodes(K))
    if rule.kind != "gauss-hermite":
        raise ValueError("Hermite projection needs a gauss-hermite rule")
    if rule.n < K + 1:
        raise ValueError(f"quadrature with {rule.n} nodes is too coarse for K={K}")
    H = specfun.hermite_table(K, rule.nodes)
    vals = np.asarray(phi(rule.nodes), dtype=float)
    return (rule.weights * vals) @ H


def hermite_synthesis(alpha: Sequence[float], u):
    alpha = np.asarray(alpha, dtype=float)
    return specfun.hermite_table(alpha.size - 1, u) @ alpha


# ---------------------------------------------------------------------------
# diagnostics
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SummabilityReport:
    total: Bracket
    tail_bound: float
    box: int
    basis: str
    passed: bool


def _sup_weight(basis: str, T: float | None) -> tuple[float, Weight]:
    if basis == "paper":
        return 1.0, unit_weight()
    if basis == "orthonormal":
        if T is None or T <= 0:
            raise ValueError("orthonormal basis needs a horizon T > 0")
        # sup |zeta_0| = 1/sqrt(T), sup |zeta_k| = sqrt(2/T) for k >= 1
        return math.sqrt(2.0 / T), power_weight(0.0, at_zero=1.0 / math.sqrt(2.0))
    raise ValueError(f"unknown temporal basis {basis!r}")


def check_summability(
    spectrum: PowerSpectrum, basis: str = "paper", T: float | None = None, box: int = 100
) -> SummabilityReport:
    """sum_{j,k} a_kj sup_t |zeta_k(t)| together with the mass outside a j,k <= box square."""
    scale, kw = _sup_weight(basis, T)
    total = spectrum.total(kweight=kw) * scale
    inside = spectrum.block_sum(0, box, 0, box, kweight=kw) * scale
    tail = total.hi - inside.lo if total.converged else math.inf
    return SummabilityReport(total, max(tail, 0.0), box, basis, total.converged)


@dataclass(frozen=True)
class HolderHypothesisReport:
    delta: float
    value: Bracket
    passed: bool
    partial_sums: tuple[tuple[int, float], ...]
    kind: str


def holder_hypothesis_weights(delta: float, d: int = 2) -> tuple[Weight, Weight]:
    return power_weight((d - 1 + delta) / 2.0), power_weight(delta / 8.0)


def check_holder_hypothesis(spectrum: PowerSpectrum, delta: float) -> HolderHypothesisReport:
    """Is sum alpha_kj k^{delta/8} j^{(d-1+delta)/2} finite?  (0^p = 0 for p > 0.)"""
    if not 0 < delta <= 2:
        raise ValueError("delta must lie in (0, 2]")
    jw, kw = holder_hypothesis_weights(delta, spectrum.d)
    value = spectrum.total(jweight=jw, kweight=kw)
    partial = tuple(
        (n, spectrum.block_sum(0, n, 0, n, jweight=jw, kweight=kw).mid) for n in (10, 100, 1000)
    )
    return HolderHypothesisReport(delta, value, value.converged, partial, spectrum.kind)


# ---------------------------------------------------------------------------
# plain-text key/value documents
# ---------------------------------------------------------------------------


def to_text(spectrum: PowerSpectrum, convention: str | None = None) -> str:
    """Serialize as ``key = value`` lines; explicit tables follow a ``table:`` line as CSV."""
    lines = [f"kind = {spectrum.kind}", f"family = {spectrum.family}", f"xi = {spectrum.xi!r}"]
    for name in ("nu1", "nu2", "tau"):
        value = getattr(spectrum, name)
        if value is not None:
            lines.append(f"{name} = {value!r}")
    lines.append(f"d = {spectrum.d}")
    if convention is not None:
        lines.append(f"convention = {convention}")
    if spectrum.family == "explicit":
        lines.append("table:")
        lines.extend(",".join(repr(float(v)) for v in row) for row in spectrum.table)
    return "\n".join(lines) + "\n"


def from_text(text: str) -> tuple[PowerSpectrum, str | None]:
    """Inverse of :func:`to_text`; returns (spectrum, convention or None)."""
    fields: dict[str, str] = {}
    rows: list[list[float]] = []
    in_table = False
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if in_table:
            rows.append([float(v) for v in line.split(",")])
            continue
        if line == "table:":
            in_table = True
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise SpectrumError(f"malformed spectrum line {raw!r}")
        fields[key.strip()] = value.strip()
    family = fields.get("family", "explicit" if rows else "")
    kind = fields.get("kind", "angular")
    xi = float(fields.get("xi", 1.0))
    d = int(fields.get("d", 2))
    if family == "explicit":
        if not rows or len({len(r) for r in rows}) != 1:
            raise SpectrumError("explicit spectrum needs a rectangular table")
        spec = explicit_spectrum(np.array(rows), xi=xi, kind=kind, d=d)
    elif family in ("polyproduct", "polysum"):
        try:
            nu1, nu2 = float(fields["nu1"]), float(fields["nu2"])
        except KeyError as exc:
            raise SpectrumError(f"missing field {exc.args[0]}") from None
        if family == "polyproduct":
            spec = family_polyproduct(xi, nu1, nu2, kind)
        else:
            if "tau" not in fields:
                raise SpectrumError("missing field tau")
            spec = family_polysum(xi, nu1, nu2, float(fields["tau"]), kind)
    else:
        raise SpectrumError(f"unknown family {family!r}")
    return spec, fields.get("convention")
