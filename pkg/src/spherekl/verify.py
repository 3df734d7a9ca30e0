"""Monte Carlo and oracle checks that tie sampler output to kernel values.

All comparisons target the truncated kernel, which is what the sampler
actually produces.  Each report records every statistic, its standard error
and the seeds used, and its verdict is a pure function of those numbers.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import specfun
from ._io import atomic_write, fmt, key_value_text
from .kernel import KernelModel, kernel_eval, temporal_factors
from .simulator import SphereTimeGrid, Synthesizer
from .spectra import PowerSpectrum, SchoenbergFunctionSet, schoenberg_from_kernel

__all__ = [
    "StatRow",
    "VerificationReport",
    "ConfigurationError",
    "empirical_covariance",
    "holder_moment_check",
    "cholesky_oracle_check",
    "schoenberg_roundtrip",
    "seed_set",
]


class ConfigurationError(ValueError):
    """The requested check cannot run on this configuration."""


@dataclass(frozen=True)
class StatRow:
    label: str
    estimate: float
    target: float
    se: float
    tolerance: float

    @property
    def z(self) -> float:
        if self.se == 0:
            return 0.0 if self.estimate == self.target else math.inf
        return (self.estimate - self.target) / self.se

    @property
    def passed(self) -> bool:
        # an absolute floor keeps exact zero-variance cases from failing on rounding
        return abs(self.estimate - self.target) <= self.tolerance * self.se + 1e-12


@dataclass(frozen=True)
class VerificationReport:
    name: str
    n_reps: int
    rows: tuple[StatRow, ...]
    passed: bool
    seeds: tuple[int, int]
    rule: str
    extra: dict = field(default_factory=dict)

    @property
    def pass_fraction(self) -> float:
        if not self.rows:
            return 1.0
        return sum(r.passed for r in self.rows) / len(self.rows)

    def to_text(self) -> str:
        items = [
            ("test", self.name),
            ("n_reps", self.n_reps),
            ("seed_first", self.seeds[0]),
            ("seed_count", self.seeds[1]),
            ("rule", self.rule),
            ("rows", len(self.rows)),
            ("rows_passed", sum(r.passed for r in self.rows)),
            ("passed", self.passed),
        ]
        items += [(k, fmt(v) if isinstance(v, float) else v) for k, v in self.extra.items()]
        return key_value_text(items)

    def to_csv(self) -> str:
        lines = ["label,estimate,target,se,z,tolerance,passed"]
        for r in self.rows:
            lines.append(
                ",".join([r.label, fmt(r.estimate), fmt(r.target), fmt(r.se), fmt(r.z), fmt(r.tolerance), str(r.passed)])
            )
        return "\n".join(lines) + "\n"

    def write(self, stem) -> None:
        atomic_write(f"{stem}.txt", self.to_text())
        atomic_write(f"{stem}.csv", self.to_csv())


def seed_set(seed: int, n: int) -> list[int]:
    """Replication seeds seed, seed + 1, ..., wrapped to 64 bits."""
    return [(seed + r) % 2**64 for r in range(n)]


def _replicate(synth: Synthesizer, seed: int, n_reps: int, threads: int = 1) -> np.ndarray:
    """Stack of realizations, shape (n_reps, n_times, n_points), in seed order."""
    seeds = seed_set(seed, n_reps)

    def one(s):
        return synth(synth.draw(s))

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return np.stack(list(pool.map(one, seeds)))
    return np.stack([one(s) for s in seeds])


def _pair_grid(pairs: Sequence[tuple[specfun.SphereTimePoint, specfun.SphereTimePoint]], T: float):
    pts, times = [], []
    for p, q in pairs:
        for x in (p, q):
            key = (x.colatitude, x.longitude)
            if key not in pts:
                pts.append(key)
            if x.t not in times:
                times.append(x.t)
    times = sorted(times)
    grid = SphereTimeGrid.from_points(pts, times, T)

    def index(x):
        return times.index(x.t), pts.index((x.colatitude, x.longitude))

    return grid, [(index(p), index(q)) for p, q in pairs]


def _sample_cov(a: np.ndarray, b: np.ndarray) -> tuple[float, float]:
    """Unbiased sample covariance and its standard error."""
    n = a.size
    prod = (a - a.mean()) * (b - b.mean())
    est = prod.sum() / (n - 1)
    return float(est), float(prod.std(ddof=1) / math.sqrt(n))


def empirical_covariance(
    spectrum: PowerSpectrum,
    pairs: Sequence[tuple[specfun.SphereTimePoint, specfun.SphereTimePoint]],
    n_reps: int,
    J: int,
    K: int,
    seed: int,
    T: float = 1.0,
    mode: str = "paper",
    tolerance: float = 4.0,
    min_pass: int | None = None,
    threads: int = 1,
) -> VerificationReport:
    """Sample covariance at each pair against the truncated kernel."""
    if n_reps < 100:
        raise ConfigurationError("n_reps must be at least 100")
    grid, index = _pair_grid(pairs, T)
    values = _replicate(Synthesizer(spectrum, grid, J, K, mode), seed, n_reps, threads)
    model = KernelModel.from_spectrum(spectrum, J, K, basis=mode, T=T)
    rows = []
    for n, ((p, q), ((tp, ip), (tq, iq))) in enumerate(zip(pairs, index)):
        est, se = _sample_cov(values[:, tp, ip], values[:, tq, iq])
        theta, _ = specfun.geodesic_distance(p, q)
        target = kernel_eval(model, theta, p.t - q.t)
        rows.append(StatRow(f"pair{n}", est, target, se, tolerance))
    need = len(rows) if min_pass is None else min_pass
    passed = sum(r.passed for r in rows) >= need
    return VerificationReport(
        "empirical_covariance", n_reps, tuple(rows), passed, (seed, n_reps), f">= {need} of {len(rows)} within {tolerance:g} SE"
    )


def _double_factorial(n: int) -> int:
    return math.prod(range(n, 0, -2)) if n > 0 else 1


def holder_moment_check(
    spectrum: PowerSpectrum,
    p: int,
    delta: float,
    rhos: Sequence[float] = (0.5, 0.25, 0.125, 0.0625),
    n_reps: int = 4000,
    J: int = 20,
    K: int = 50,
    seed: int = 0,
    T: float = 1.0,
    slope_slack: float = 0.3,
    tolerance: float = 4.0,
    kurtosis_tolerance: float = 5.0,
) -> VerificationReport:
    """E|Z(x,t) - Z(y,s)|^{2p} along a ladder of shrinking rho.

    Each pair splits rho evenly between angle and lag, theta = lag = rho/sqrt(2).
    The log-moment against log-rho slope must reach p delta - slope_slack.
    Rows compare each Monte Carlo moment with (2p-1)!! (2(psi(0,0) - psi))^p;
    for p >= 2 a further row checks E d^4 / (E d^2)^2 = 3.
    """
    if p < 1:
        raise ValueError("p must be a positive integer")
    base = specfun.SphereTimePoint(math.pi / 2.0, 0.0, 0.0)
    pairs = []
    for rho in rhos:
        h = rho / math.sqrt(2.0)
        pairs.append((base, specfun.SphereTimePoint(math.pi / 2.0, h, h)))
    grid, index = _pair_grid(pairs, T)
    values = _replicate(Synthesizer(spectrum, grid, J, K), seed, n_reps)
    model = KernelModel.from_spectrum(spectrum, J, K, T=T)
    psi0 = kernel_eval(model, 0.0, 0.0)
    cp = _double_factorial(2 * p - 1)
    rows, moments = [], []
    ratios = []
    for rho, (q, ((tp, ip), (tq, iq))) in zip(rhos, zip(pairs, index)):
        diff = values[:, tp, ip] - values[:, tq, iq]
        d2 = diff * diff
        x = d2**p
        m = float(x.mean())
        moments.append(m)
        theta, _ = specfun.geodesic_distance(*q)
        var = 2.0 * (psi0 - kernel_eval(model, theta, q[0].t - q[1].t))
        rows.append(StatRow(f"moment_rho={rho:g}", m, cp * var**p, float(x.std(ddof=1) / math.sqrt(n_reps)), tolerance))
        if p >= 2:
            m1, m2 = float(d2.mean()), float((d2 * d2).mean())
            r = m2 / (m1 * m1)
            cov = np.cov(np.vstack([d2, d2 * d2])) / n_reps
            g = np.array([-2.0 * m2 / m1**3, 1.0 / m1**2])
            ratios.append((rho, r, float(math.sqrt(max(g @ cov @ g, 0.0)))))
    if all(m > 0 for m in moments):
        slope = float(np.polyfit(np.log(rhos), np.log(moments), 1)[0])
    else:
        slope = math.inf
    for rho, r, se in ratios:
        rows.append(StatRow(f"kurtosis_rho={rho:g}", r, 3.0, se, kurtosis_tolerance))
    target_slope = p * delta - slope_slack
    moments_ok = all(r.passed for r in rows)
    slope_ok = slope >= target_slope
    return VerificationReport(
        "holder_moment_check",
        n_reps,
        tuple(rows),
        bool(slope_ok and moments_ok),
        (seed, n_reps),
        f"slope >= {target_slope:g} and all rows within tolerance",
        {"p": p, "delta": float(delta), "slope": slope, "slope_target": target_slope, "J": J, "K": K},
    )


def truncated_covariance_matrix(model: KernelModel, grid: SphereTimeGrid) -> np.ndarray:
    """Kernel matrix over all (time, point) pairs, flattened time-major."""
    pts = [(grid.colatitudes[i], grid.longitudes[i]) for i in range(grid.n_points)]
    xyz = np.array([specfun.SphereTimePoint(c, l).unit_vector() for c, l in pts])
    theta = np.arccos(np.clip(xyz @ xyz.T, -1.0, 1.0))
    tt = np.repeat(grid.times, grid.n_points)
    th = np.tile(theta, (grid.n_times, grid.n_times))
    lag = tt[:, None] - tt[None, :]
    return np.asarray(kernel_eval(model, th, lag))


def _dense_factor(C: np.ndarray, floor: float = -1e-10) -> np.ndarray:
    lam, V = np.linalg.eigh(C)
    scale = max(1.0, float(np.abs(lam).max()))
    if lam.min() < floor * scale:
        raise ConfigurationError(f"covariance matrix is not PSD (min eigenvalue {lam.min():.3e})")
    try:
        return np.linalg.cholesky(C)
    except np.linalg.LinAlgError:
        return V * np.sqrt(np.clip(lam, 0.0, None))


def cholesky_oracle_check(
    spectrum: PowerSpectrum,
    grid: SphereTimeGrid,
    J: int,
    K: int,
    n_reps: int,
    seed: int = 0,
    tolerance: float = 4.0,
    min_fraction: float = 0.95,
) -> VerificationReport:
    """Spectral sampler against a dense-factorization sampler of the same kernel.

    Rows cover every upper-triangular covariance entry three ways: spectral vs
    dense, spectral vs kernel, dense vs kernel, plus every mean.  Each family
    must have at least ``min_fraction`` of its rows within tolerance.
    """
    n = grid.n_points * grid.n_times
    if n > 60:
        raise ConfigurationError("the dense oracle is limited to 60 space-time points")
    model = KernelModel.from_spectrum(spectrum, J, K, T=grid.T)
    C = truncated_covariance_matrix(model, grid)
    L = _dense_factor(C)
    spec_vals = _replicate(Synthesizer(spectrum, grid, J, K), seed, n_reps).reshape(n_reps, n)
    rng = np.random.Generator(np.random.Philox(key=seed, counter=[0, 0, 0, 99]))
    dense_vals = rng.standard_normal((n_reps, n)) @ L.T

    iu = np.triu_indices(n)
    groups = {"spectral_vs_dense": [], "spectral_vs_kernel": [], "dense_vs_kernel": [], "mean": []}
    for a, b in zip(*iu):
        s_est, s_se = _sample_cov(spec_vals[:, a], spec_vals[:, b])
        d_est, d_se = _sample_cov(dense_vals[:, a], dense_vals[:, b])
        lab = f"cov[{a},{b}]"
        groups["spectral_vs_dense"].append(StatRow(lab + ":s-d", s_est - d_est, 0.0, math.hypot(s_se, d_se), tolerance))
        groups["spectral_vs_kernel"].append(StatRow(lab + ":s-k", s_est, float(C[a, b]), s_se, tolerance))
        groups["dense_vs_kernel"].append(StatRow(lab + ":d-k", d_est, float(C[a, b]), d_se, tolerance))
    for i in range(n):
        for name, vals in (("s", spec_vals), ("d", dense_vals)):
            col = vals[:, i]
            groups["mean"].append(StatRow(f"mean[{i}]:{name}", float(col.mean()), 0.0, float(col.std(ddof=1) / math.sqrt(n_reps)), tolerance))
    fractions = {k: sum(r.passed for r in v) / len(v) for k, v in groups.items()}
    emp_s = np.cov(spec_vals, rowvar=False)
    emp_d = np.cov(dense_vals, rowvar=False)
    extra = {f"fraction_{k}": v for k, v in fractions.items()}
    extra["frobenius_spectral_dense"] = float(np.linalg.norm(emp_s - emp_d))
    extra["frobenius_spectral_kernel"] = float(np.linalg.norm(emp_s - C))
    extra["min_eigenvalue"] = float(np.linalg.eigvalsh(C).min())
    rows = tuple(r for v in groups.values() for r in v)
    passed = all(f >= min_fraction for f in fractions.values())
    return VerificationReport(
        "cholesky_oracle_check", n_reps, rows, passed, (seed, n_reps), f"each family >= {min_fraction:g} within {tolerance:g} SE", extra
    )


def schoenberg_from_spectrum(spectrum: PowerSpectrum, J: int, K: int, T: float = 1.0, basis: str = "paper") -> SchoenbergFunctionSet:
    A = spectrum.matrix(K, J)

    def make(j):
        return lambda t: temporal_factors(K, t, T, basis) @ A[:, j]

    return SchoenbergFunctionSet(tuple(make(j) for j in range(J + 1)), d=spectrum.d)


def schoenberg_roundtrip(
    source: PowerSpectrum | SchoenbergFunctionSet,
    J: int,
    rule: specfun.QuadratureRule | None = None,
    ts: Sequence[float] = (0.0, 0.1, 0.37, 0.5, 1.0),
    K: int = 5,
    threshold: float = 1e-9,
) -> VerificationReport:
    """Build psi from known phi_j (j <= J), project back, compare."""
    phis = source if isinstance(source, SchoenbergFunctionSet) else schoenberg_from_spectrum(source, J, K)
    J = min(J, phis.jmax)
    d = phis.d
    ts = np.asarray(ts, dtype=float)

    def psi(x, t):
        x, t = np.broadcast_arrays(x, t)
        C = specfun.gegenbauer_table(J, d, np.clip(x, -1.0, 1.0))
        return sum(phis(j, t) * C[..., j] for j in range(J + 1))

    if rule is None:
        rule = specfun.quadrature("gauss-legendre", specfun.default_legendre_nodes(J))
    rows = []
    for j in range(J + 1):
        got = np.asarray(schoenberg_from_kernel(psi, j, d, ts, rule))
        want = phis(j, ts) * np.ones_like(ts)
        for t, g, w in zip(ts, got, want):
            rows.append(StatRow(f"phi{j}(t={t:g})", float(g), float(w), threshold, 1.0))
    err = max(abs(r.estimate - r.target) for r in rows)
    return VerificationReport(
        "schoenberg_roundtrip", 0, tuple(rows), err <= threshold, (0, 0), f"max abs error <= {threshold:g}", {"max_abs_error": err}
    )
