"""Doubly truncated Karhunen-Loeve sampler on S^2 x [0, T].

The field is

    Z(x, t) = sum_{j<=J} c_j sum_{m=-j}^{j} Y_jm(x) sum_{k<=K} sqrt(a_kj)
              [ A1_kjm cos_k(t) + A2_kjm sin_k(t) ]

with c_j = sqrt(4 pi / (2j + 1)), unit-norm real harmonics Y_jm and a
trigonometric temporal pair (cos_k, sin_k); the m < 0 harmonics use the B
arrays.  For k = 0 the sine part vanishes.
"""

from __future__ import annotations

import math
import struct
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Literal, Sequence

import numpy as np

from . import specfun
from ._io import atomic_write, fmt, key_value_text
from .spectra import PowerSpectrum, to_text

__all__ = [
    "SphereTimeGrid",
    "CoefficientDraw",
    "Realization",
    "temporal_basis_eval",
    "draw_coefficients",
    "synthesize",
    "simulate",
    "harmonic_matrix",
    "Synthesizer",
    "write_csv",
    "write_provenance",
    "write_binary",
    "read_binary",
    "BLOCK",
]

Mode = Literal["paper", "orthonormal"]
# points per synthesis block; fixed so that results never depend on threading
BLOCK = 512
BINARY_MAGIC = b"SKLFIELD"
HEADER_SIZE = 64


# ---------------------------------------------------------------------------
# grid
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class SphereTimeGrid:
    colatitudes: np.ndarray
    longitudes: np.ndarray
    times: np.ndarray
    T: float
    layout: str = "points"
    shape: tuple[int, ...] = ()

    def __post_init__(self):
        colat = np.asarray(self.colatitudes, dtype=float).ravel()
        lon = np.asarray(self.longitudes, dtype=float).ravel()
        times = np.asarray(self.times, dtype=float).ravel()
        if colat.size == 0 or colat.size != lon.size:
            raise ValueError("need at least one point and matching coordinate arrays")
        if times.size == 0:
            raise ValueError("need at least one time")
        if not self.T > 0:
            raise ValueError("time horizon T must be positive")
        if np.any((colat < 0) | (colat > math.pi)):
            raise ValueError("colatitudes must lie in [0, pi]")
        if np.any((lon < 0) | (lon >= 2 * math.pi)):
            raise ValueError("longitudes must lie in [0, 2 pi)")
        if np.any(np.diff(times) < 0):
            raise ValueError("times must be non-decreasing")
        if times[0] < 0 or times[-1] > self.T:
            raise ValueError("times must lie in [0, T]")
        for name, arr in (("colatitudes", colat), ("longitudes", lon), ("times", times)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if not self.shape:
            object.__setattr__(self, "shape", (colat.size,))

    @property
    def n_points(self) -> int:
        return self.colatitudes.size

    @property
    def n_times(self) -> int:
        return self.times.size

    @classmethod
    def latlon(cls, n_lat: int, n_lon: int, times: Sequence[float], T: float | None = None, kind: str = "gauss"):
        """Tensor grid; Gauss colatitudes are arccos of Gauss-Legendre nodes."""
        if n_lat < 1 or n_lon < 1:
            raise ValueError("n_lat and n_lon must be positive")
        if kind == "gauss":
            colat = np.sort(np.arccos(specfun.quadrature("gauss-legendre", n_lat).nodes))
        elif kind == "equiangular":
            colat = (np.arange(n_lat) + 0.5) * math.pi / n_lat
        else:
            raise ValueError(f"unknown colatitude layout {kind!r}")
        lon = 2.0 * math.pi * np.arange(n_lon) / n_lon
        cc, ll = np.meshgrid(colat, lon, indexing="ij")
        times = np.asarray(times, dtype=float)
        T = float(times.max()) if T is None else T
        return cls(cc.ravel(), ll.ravel(), times, T, f"latlon-{kind}", (n_lat, n_lon))

    @classmethod
    def from_points(cls, points, times: Sequence[float], T: float | None = None):
        """Explicit list of (colatitude, longitude) pairs."""
        pts = np.asarray(points, dtype=float).reshape(-1, 2)
        times = np.asarray(times, dtype=float)
        T = float(times.max()) if T is None else T
        return cls(pts[:, 0], pts[:, 1], times, T, "points")

    @classmethod
    def fibonacci(cls, n: int, times: Sequence[float], T: float | None = None):
        """Near-uniform spiral of n points."""
        i = np.arange(n) + 0.5
        colat = np.arccos(1.0 - 2.0 * i / n)
        lon = np.mod(math.pi * (1.0 + math.sqrt(5.0)) * i, 2.0 * math.pi)
        return cls.from_points(np.column_stack([colat, lon]), times, T)

    def point(self, i: int, it: int = 0) -> specfun.SphereTimePoint:
        return specfun.SphereTimePoint(float(self.colatitudes[i]), float(self.longitudes[i]), float(self.times[it]))


# ---------------------------------------------------------------------------
# temporal basis
# ---------------------------------------------------------------------------


def temporal_basis_eval(k: int, t, T: float, mode: Mode = "paper"):
    """(cos-part, sin-part) of the k-th temporal pair at time(s) t in [0, T]."""
    if k < 0:
        raise ValueError("k must be non-negative")
    ta = np.asarray(t, dtype=float)
    if np.any(ta < 0) or np.any(ta > T):
        raise ValueError("t must lie in [0, T]")
    c, s = _temporal_table(k, ta, T, mode)
    c, s = c[..., k], s[..., k]
    if ta.ndim == 0:
        return float(c), float(s)
    return c, s


def _temporal_table(K: int, t: np.ndarray, T: float, mode: Mode):
    k = np.arange(K + 1)
    if mode == "paper":
        arg = np.multiply.outer(t, k) * (math.pi / (2.0 * T))
        c, s = np.cos(arg), np.sin(arg)
    elif mode == "orthonormal":
        arg = np.multiply.outer(t, k) * (2.0 * math.pi / T)
        amp = math.sqrt(2.0 / T)
        c, s = amp * np.cos(arg), amp * np.sin(arg)
        c[..., 0] = 1.0 / math.sqrt(T)
    else:
        raise ValueError(f"unknown temporal basis {mode!r}")
    s[..., 0] = 0.0
    return c, s


# ---------------------------------------------------------------------------
# coefficients
# ---------------------------------------------------------------------------


def n_cos_orders(J: int) -> int:
    """Count of (j, m) with 0 <= m <= j <= J."""
    return (J + 1) * (J + 2) // 2


def n_sin_orders(J: int) -> int:
    """Count of (j, m) with 1 <= m <= j <= J."""
    return J * (J + 1) // 2


def cos_index(j, m):
    return j * (j + 1) // 2 + m


def sin_index(j, m):
    return j * (j - 1) // 2 + m - 1


_WHICH = {"A1": 0, "A2": 1, "B1": 2, "B2": 3}


def _stream(seed: int, which: int, k: int, n: int) -> np.ndarray:
    # one Philox stream per (array, k); values run over (j, m) in packed order,
    # so a larger J only appends draws
    bitgen = np.random.Philox(key=seed, counter=[0, 0, k, which])
    return np.random.Generator(bitgen).standard_normal(n)


@dataclass(frozen=True, eq=False)
class CoefficientDraw:
    """Standard Gaussian arrays, packed over (j, m).

    A1: (K+1, (J+1)(J+2)/2), B1: (K+1, J(J+1)/2); A2, B2 hold the sine-part
    draws for k = 1..K.
    """

    J: int
    K: int
    seed: int
    A1: np.ndarray = field(repr=False)
    A2: np.ndarray = field(repr=False)
    B1: np.ndarray = field(repr=False)
    B2: np.ndarray = field(repr=False)
    spectrum: PowerSpectrum | None = None

    def __post_init__(self):
        expect = {
            "A1": (self.K + 1, n_cos_orders(self.J)),
            "A2": (self.K, n_cos_orders(self.J)),
            "B1": (self.K + 1, n_sin_orders(self.J)),
            "B2": (self.K, n_sin_orders(self.J)),
        }
        for name, shape in expect.items():
            arr = getattr(self, name)
            if arr.shape != shape:
                raise ValueError(f"{name} has shape {arr.shape}, expected {shape}")
            arr.setflags(write=False)

    def value(self, which: str, k: int, j: int, m: int) -> float:
        """Single draw by its (k, j, m) label; m >= 0 for A arrays, m >= 1 for B."""
        arr = getattr(self, which)
        row = k if which.endswith("1") else k - 1
        col = cos_index(j, m) if which.startswith("A") else sin_index(j, m)
        return float(arr[row, col])


def _check_sampler_spectrum(spectrum: PowerSpectrum) -> None:
    if spectrum.kind != "angular":
        raise ValueError("the sampler needs an angular spectrum")
    if spectrum.d != 2:
        raise ValueError("the sampler supports the 2-sphere only")


def draw_coefficients(spectrum: PowerSpectrum | None, J: int, K: int, seed: int) -> CoefficientDraw:
    """Reproducible Gaussian draws keyed by (seed, array, k)."""
    if J < 0 or K < 0:
        raise ValueError("J and K must be non-negative")
    if not 0 <= int(seed) < 2**64:
        raise ValueError("seed must be an unsigned 64-bit integer")
    if spectrum is not None:
        _check_sampler_spectrum(spectrum)
    seed = int(seed)
    nc, ns = n_cos_orders(J), n_sin_orders(J)

    def block(which, ks, n):
        if not len(ks):
            return np.zeros((0, n))
        return np.stack([_stream(seed, _WHICH[which], k, n) for k in ks])

    return CoefficientDraw(
        J,
        K,
        seed,
        A1=block("A1", range(K + 1), nc),
        A2=block("A2", range(1, K + 1), nc),
        B1=block("B1", range(K + 1), ns),
        B2=block("B2", range(1, K + 1), ns),
        spectrum=spectrum,
    )


# ---------------------------------------------------------------------------
# synthesis
# ---------------------------------------------------------------------------


def _harmonic_layout(J: int):
    """For the packed index h = j^2 + j + m: degree, |m|, signed m, draw column."""
    j = np.repeat(np.arange(J + 1), 2 * np.arange(J + 1) + 1)
    h = np.arange((J + 1) ** 2)
    m = h - j * j - j
    am = np.abs(m)
    col = np.where(m >= 0, cos_index(j, am), sin_index(j, np.maximum(am, 1)))
    return j, am, m, col


def harmonic_matrix(J: int, colat: np.ndarray, lon: np.ndarray) -> np.ndarray:
    """Real harmonics Y_jm at the points, shape (n, (J + 1)^2), packed j^2 + j + m."""
    jh, am, m, _ = _harmonic_layout(J)
    uniq, inv = np.unique(colat, return_inverse=True)
    L = specfun.unit_legendre_table(J, np.cos(uniq))[inv]
    # cos(m b), sin(m b) by the Chebyshev recurrence
    n = lon.size
    cm = np.empty((n, J + 1))
    sm = np.empty((n, J + 1))
    cm[:, 0], sm[:, 0] = 1.0, 0.0
    if J >= 1:
        c1, s1 = np.cos(lon), np.sin(lon)
        cm[:, 1], sm[:, 1] = c1, s1
        for mm in range(1, J):
            cm[:, mm + 1] = 2.0 * c1 * cm[:, mm] - cm[:, mm - 1]
            sm[:, mm + 1] = 2.0 * c1 * sm[:, mm] - sm[:, mm - 1]
    trig = np.where(m > 0, math.sqrt(2.0) * cm[:, am], np.where(m < 0, math.sqrt(2.0) * sm[:, am], 1.0))
    return L[:, jh, am] * trig


def _time_coefficients(draw: CoefficientDraw, spectrum: PowerSpectrum, times, T, mode) -> np.ndarray:
    """Harmonic coefficient of Z at each time, shape ((J + 1)^2, n_times)."""
    J, K = draw.J, draw.K
    jh, _, m, col = _harmonic_layout(J)
    amp = np.sqrt(spectrum.matrix(K, J))[:, jh] * np.sqrt(4.0 * math.pi / (2.0 * jh + 1.0))
    c, s = _temporal_table(K, np.asarray(times, dtype=float), T, mode)
    out = (amp * _gather(draw.A1, draw.B1, m, col)).T @ c.T
    if K >= 1:
        out = out + (amp[1:] * _gather(draw.A2, draw.B2, m, col)).T @ s[:, 1:].T
    return out


def _gather(A: np.ndarray, B: np.ndarray, m: np.ndarray, col: np.ndarray) -> np.ndarray:
    """Draws laid out on the packed harmonic index: A for m >= 0, B for m < 0."""
    out = np.empty((A.shape[0], m.size))
    pos = m >= 0
    out[:, pos] = A[:, col[pos]]
    out[:, ~pos] = B[:, col[~pos]]
    return out


class Synthesizer:
    """Reusable synthesis on a fixed grid; harmonics are evaluated once.

    Intended for Monte Carlo loops over many draws on small grids.
    """

    def __init__(self, spectrum: PowerSpectrum, grid: SphereTimeGrid, J: int, K: int, mode: Mode = "paper"):
        _check_sampler_spectrum(spectrum)
        self.spectrum, self.grid, self.J, self.K, self.mode = spectrum, grid, J, K, mode
        self.Y = harmonic_matrix(J, grid.colatitudes, grid.longitudes)

    def draw(self, seed: int) -> CoefficientDraw:
        return draw_coefficients(self.spectrum, self.J, self.K, seed)

    def __call__(self, draw: CoefficientDraw) -> np.ndarray:
        coef = _time_coefficients(draw, self.spectrum, self.grid.times, self.grid.T, self.mode)
        return (self.Y @ coef).T


@dataclass(frozen=True, eq=False)
class Realization:
    grid: SphereTimeGrid
    values: np.ndarray
    provenance: dict

    def __post_init__(self):
        if self.values.shape != (self.grid.n_times, self.grid.n_points):
            raise ValueError("values do not match the grid")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("realization contains non-finite values")


def synthesize(
    draw: CoefficientDraw,
    grid: SphereTimeGrid,
    mode: Mode = "paper",
    spectrum: PowerSpectrum | None = None,
    threads: int = 1,
    block: int = BLOCK,
) -> np.ndarray:
    """Field values of shape (n_times, n_points) for a fixed draw."""
    spectrum = spectrum if spectrum is not None else draw.spectrum
    if spectrum is None:
        raise ValueError("no spectrum attached to the draw")
    _check_sampler_spectrum(spectrum)
    coef = _time_coefficients(draw, spectrum, grid.times, grid.T, mode)
    out = np.empty((grid.n_times, grid.n_points))
    starts = range(0, grid.n_points, block)

    def work(start):
        stop = min(start + block, grid.n_points)
        Y = harmonic_matrix(draw.J, grid.colatitudes[start:stop], grid.longitudes[start:stop])
        out[:, start:stop] = (Y @ coef).T

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(work, starts))
    else:
        for s in starts:
            work(s)
    return out


def simulate(
    spectrum: PowerSpectrum,
    grid: SphereTimeGrid,
    J: int,
    K: int,
    seed: int,
    mode: Mode = "paper",
    threads: int = 1,
    convention: str | None = None,
) -> Realization:
    """draw_coefficients followed by synthesize, with provenance and timing."""
    t0 = time.perf_counter()
    draw = draw_coefficients(spectrum, J, K, seed)
    values = synthesize(draw, grid, mode, spectrum, threads)
    duration = time.perf_counter() - t0
    provenance = {
        "seed": int(seed),
        "J": J,
        "K": K,
        "spectrum": spectrum.describe(),
        "spectrum_text": to_text(spectrum, convention),
        "basis": mode,
        "convention": convention or "none",
        "T": grid.T,
        "layout": grid.layout,
        "n_points": grid.n_points,
        "n_times": grid.n_times,
        "duration_seconds": duration,
    }
    return Realization(grid, values, provenance)


# ---------------------------------------------------------------------------
# export
# ---------------------------------------------------------------------------


def csv_text(real: Realization) -> str:
    g = real.grid
    lines = ["colatitude_rad,longitude_rad,time,value"]
    colat = [fmt(v) for v in g.colatitudes]
    lon = [fmt(v) for v in g.longitudes]
    for it, t in enumerate(g.times):
        ts = fmt(t)
        row = real.values[it]
        lines.extend(f"{colat[i]},{lon[i]},{ts},{fmt(row[i])}" for i in range(g.n_points))
    return "\n".join(lines) + "\n"


def write_csv(real: Realization, path) -> None:
    atomic_write(path, csv_text(real))


def provenance_text(real: Realization) -> str:
    items = [(k, v) for k, v in real.provenance.items() if k != "spectrum_text"]
    body = key_value_text((k, fmt(v) if isinstance(v, float) else v) for k, v in items)
    spec = real.provenance.get("spectrum_text", "")
    return body + "".join(f"spectrum.{line}\n" for line in spec.splitlines())


def write_provenance(real: Realization, path) -> None:
    atomic_write(path, provenance_text(real))


def write_binary(real: Realization, path) -> None:
    """Little-endian float64 values in (time, lat, lon) order after a 64-byte header.

    Header: magic (8 bytes), version u32, layout code u32 (0 points, 1 lat-lon),
    n_time, n_lat, n_lon, J, K as u64, then zero padding.
    """
    g = real.grid
    if len(g.shape) == 2:
        n_lat, n_lon, code = g.shape[0], g.shape[1], 1
    else:
        n_lat, n_lon, code = g.n_points, 1, 0
    header = BINARY_MAGIC + struct.pack(
        "<II5Q", 1, code, g.n_times, n_lat, n_lon, int(real.provenance.get("J", 0)), int(real.provenance.get("K", 0))
    )
    header = header.ljust(HEADER_SIZE, b"\0")
    atomic_write(path, header + np.ascontiguousarray(real.values, dtype="<f8").tobytes())


def read_binary(path) -> tuple[dict, np.ndarray]:
    raw = open(path, "rb").read()
    if raw[:8] != BINARY_MAGIC:
        raise ValueError("not a field binary file")
    version, code, nt, n_lat, n_lon, J, K = struct.unpack("<II5Q", raw[8:56])
    values = np.frombuffer(raw[HEADER_SIZE:], dtype="<f8").reshape(nt, n_lat, n_lon)
    meta = {"version": version, "layout": code, "n_time": nt, "n_lat": n_lat, "n_lon": n_lon, "J": J, "K": K}
    return meta, values
