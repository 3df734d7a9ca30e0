"""Bracketed sums of positive series with power-law tails.

Tails are split into an explicit head and a remainder bounded by the
integral test.  For a function that is decreasing on [n, inf)

    int_n^inf f  <=  sum_{i >= n} f(i)  <=  f(n) + int_n^inf f

and for a unimodal one the error of the integral is at most max f.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.integrate import IntegrationWarning, quad
from scipy.special import beta as beta_fn
from scipy.special import betainc

HEAD_TERMS = 1 << 16


@dataclass(frozen=True)
class Bracket:
    """Closed interval [lo, hi] known to contain a sum; hi = inf means divergent."""

    lo: float
    hi: float

    @classmethod
    def exact(cls, value: float) -> "Bracket":
        return cls(float(value), float(value))

    @classmethod
    def divergent(cls, partial: float = 0.0) -> "Bracket":
        return cls(float(partial), math.inf)

    @property
    def mid(self) -> float:
        if math.isinf(self.hi):
            return math.inf
        return 0.5 * (self.lo + self.hi)

    @property
    def width(self) -> float:
        return self.hi - self.lo

    @property
    def converged(self) -> bool:
        return math.isfinite(self.hi)

    def __add__(self, other: "Bracket") -> "Bracket":
        return Bracket(self.lo + other.lo, self.hi + other.hi)

    def __mul__(self, other):
        if isinstance(other, Bracket):
            # both factors are non-negative
            hi = math.inf if (math.isinf(self.hi) or math.isinf(other.hi)) else self.hi * other.hi
            return Bracket(self.lo * other.lo, hi)
        c = float(other)
        return Bracket(self.lo * c, self.hi * c)

    __rmul__ = __mul__

    def sqrt(self) -> "Bracket":
        return Bracket(math.sqrt(max(self.lo, 0.0)), math.sqrt(self.hi))

    def contains(self, value: float, rtol: float = 0.0) -> bool:
        slack = rtol * max(abs(self.lo), abs(self.hi))
        return self.lo - slack <= value <= self.hi + slack


@dataclass(frozen=True)
class Weight:
    """Index weight n -> fn(n) with asymptotic growth n**degree.

    ``power`` is set when the weight is exactly n**power for n >= 1; only such
    weights are accepted on the time index of non-separable spectra.
    """

    fn: Callable[[np.ndarray], np.ndarray] = field(compare=False)
    degree: float
    label: str
    power: float | None = None

    def __call__(self, n):
        return self.fn(np.asarray(n, dtype=float))

    @property
    def is_unit(self) -> bool:
        return self.label == "1"


def unit_weight() -> Weight:
    return Weight(lambda n: np.ones_like(n), 0.0, "1", power=0.0)


def power_weight(p: float, at_zero: float | None = None) -> Weight:
    """n**p with the index-zero convention 0**p = 0 (p > 0), 0**0 = 1.

    ``at_zero`` overrides the value used at n = 0.
    """
    if p == 0 and at_zero is None:
        return unit_weight()
    zero = (1.0 if p == 0 else 0.0) if at_zero is None else float(at_zero)

    def fn(n):
        out = np.where(n > 0, np.power(np.where(n > 0, n, 1.0), p), zero)
        return out

    return Weight(fn, float(p), f"n^{p:g}|0->{zero:g}", power=float(p))


def cj_squared_weight() -> Weight:
    """4 pi / (2j + 1)."""
    return Weight(lambda n: 4.0 * math.pi / (2.0 * n + 1.0), -1.0, "4pi/(2j+1)")


def _log_quad(f: Callable[[float], float], start: float, stop: float = 1e150) -> float:
    """int_start^stop f(x) dx with x = start * e^y, which tames power-law tails.

    The default stop sits where a convergent power tail is negligible and
    powers of x would start to overflow.
    """
    if start <= 0:
        raise ValueError("start must be positive")
    if stop <= start:
        return 0.0

    def g(y):
        x = start * math.exp(y)
        return f(x) * x

    total = 0.0
    ymax = math.log(stop / start)
    lo = 0.0
    with warnings.catch_warnings():
        # quad reports roundoff at the 1e-13 target; the slab values are still accurate
        warnings.simplefilter("ignore", IntegrationWarning)
        for hi in (1.0, 4.0, 16.0, 64.0, 128.0, ymax):
            hi = min(hi, ymax)
            if hi <= lo:
                break
            val, _ = quad(g, lo, hi, limit=200, epsabs=0.0, epsrel=1e-13)
            total += val
            lo = hi
            if val <= 1e-17 * max(total, 1e-300):
                break
    return total


def series_tail(f: Callable[[np.ndarray], np.ndarray], n0: int, head: int = HEAD_TERMS) -> Bracket:
    """Bracket of sum_{n >= n0} f(n) for positive f decreasing beyond the head."""
    n1 = n0 + head
    terms = f(np.arange(n0, n1, dtype=float))
    partial = math.fsum(terms)
    f1 = float(f(np.array([float(n1)]))[0])
    integral = _log_quad(lambda x: float(f(np.array([x]))[0]), float(n1))
    return Bracket(partial + integral, partial + f1 + integral)


def power_integral_tail(c, nu: float, s: float, b: float, start):
    """int_start^inf k**b (c + k**nu)**(-s) dk, vectorized over c and start.

    Substituting w = c / (c + k**nu) turns the integral into an incomplete
    beta function; requires s > (b + 1)/nu.
    """
    c = np.asarray(c, dtype=float)
    start = np.asarray(start, dtype=float)
    beta_ = (b + 1.0) / nu
    a = s - beta_
    if a <= 0:
        return np.full(np.broadcast(c, start).shape, np.inf)
    w = c / (c + np.power(start, nu))
    # exp/log keeps c**(beta - s) finite for very large c
    scale = np.exp((beta_ - s) * np.log(c)) / nu * beta_fn(a, beta_)
    return scale * betainc(a, beta_, w)
