"""Truncation-error bounds for the doubly truncated expansion.

For truncation degrees (J, K),

    P = 4 pi ( sum_{j>J} sum_k a_kj + sum_{j<=J} sum_{k>K} a_kj )
    Q = 4 pi ( sum_{j>J} c_j^2 sum_k a_kj^2 + sum_{j<=J} c_j^2 sum_{k>K} a_kj^2 )^(1/2)

and the squared L^2 error exceeds P + eps Q with probability at most
exp(-eps/2) sqrt(1 + eps).
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from ._io import atomic_write, fmt
from ._series import Bracket, cj_squared_weight
from .spectra import PowerSpectrum, family_polyproduct, family_polysum, mode_weight, variance_sum

__all__ = [
    "TruncationBound",
    "TableCell",
    "truncation_P",
    "truncation_Q",
    "error_bound",
    "exceedance_probability",
    "family_spectrum",
    "error_table",
    "fit_xi",
    "table_diagnostics",
    "REFERENCE_TABLES",
    "table_csv",
    "pivot",
]

FOUR_PI = 4.0 * math.pi


def exceedance_probability(epsilon: float) -> float:
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    return math.exp(-epsilon / 2.0) * math.sqrt(1.0 + epsilon)


def truncation_P_bracket(spectrum: PowerSpectrum, J: int, K: int, horizon: int | None = None) -> Bracket:
    tail_j = spectrum.block_sum(J + 1, None, 0, None, horizon=horizon)
    tail_k = spectrum.block_sum(0, J, K + 1, None, horizon=horizon)
    return (tail_j + tail_k) * FOUR_PI


def truncation_Q_bracket(spectrum: PowerSpectrum, J: int, K: int, horizon: int | None = None) -> Bracket:
    w = cj_squared_weight()
    tail_j = spectrum.block_sum(J + 1, None, 0, None, power=2.0, jweight=w, horizon=horizon)
    tail_k = spectrum.block_sum(0, J, K + 1, None, power=2.0, jweight=w, horizon=horizon)
    return (tail_j + tail_k).sqrt() * FOUR_PI


def _checked(b: Bracket, what: str) -> float:
    if not b.converged:
        raise ValueError(f"{what} diverges for this spectrum")
    return b.mid


def truncation_P(spectrum: PowerSpectrum, J: int, K: int, horizon: int | None = None) -> float:
    """Mean squared L^2 truncation error (bracket midpoint)."""
    return _checked(truncation_P_bracket(spectrum, J, K, horizon), "P")


def truncation_Q(spectrum: PowerSpectrum, J: int, K: int, horizon: int | None = None) -> float:
    """Fluctuation scale of the squared error (bracket midpoint)."""
    return _checked(truncation_Q_bracket(spectrum, J, K, horizon), "Q")


@dataclass(frozen=True)
class TruncationBound:
    J: int
    K: int
    P: float
    Q: float
    epsilon: float
    P_bracket: Bracket
    Q_bracket: Bracket

    @property
    def bound_sq(self) -> float:
        return self.P + self.epsilon * self.Q

    @property
    def bound(self) -> float:
        return math.sqrt(self.bound_sq)

    @property
    def exceedance_probability(self) -> float:
        return exceedance_probability(self.epsilon)

    @property
    def bracket_width(self) -> float:
        """Width of the interval known to contain P + eps Q."""
        return self.P_bracket.width + self.epsilon * self.Q_bracket.width


def error_bound(
    spectrum: PowerSpectrum, J: int, K: int, epsilon: float, horizon: int | None = None
) -> TruncationBound:
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    if J < 0 or K < 0:
        raise ValueError("J and K must be non-negative")
    if spectrum.d != 2:
        raise ValueError("truncation bounds are implemented for the 2-sphere only")
    pb = truncation_P_bracket(spectrum, J, K, horizon)
    qb = truncation_Q_bracket(spectrum, J, K, horizon)
    return TruncationBound(J, K, _checked(pb, "P"), _checked(qb, "Q"), float(epsilon), pb, qb)


# ---------------------------------------------------------------------------
# tables
# ---------------------------------------------------------------------------

# reference grids of P + eps Q at eps = 8.2, rows J = 50, 100, 150 and
# columns K = 50, 100, 150; coef2 uses tau = 3/2
REFERENCE_TABLES: dict[str, dict[tuple[float, float], np.ndarray]] = {
    "coef": {
        (3, 2): np.array([[0.26455, 0.08967, 0.03723], [0.26347, 0.08858, 0.03614], [0.26327, 0.08838, 0.03593]]),
        (2, 2): np.array([[0.08743, 0.08638, 0.08621], [0.02946, 0.02793, 0.02774], [0.01178, 0.00967, 0.00946]]),
        (2, 3): np.array([[0.10742, 0.10612, 0.10591], [0.03620, 0.03431, 0.03408], [0.01448, 0.01189, 0.01162]]),
    },
    "coef2": {
        (3, 2): np.array([[0.02257, 0.00599, 0.00205], [0.02249, 0.00585, 0.00183], [0.02249, 0.00583, 0.00182]]),
        (2, 2): np.array([[0.09927, 0.06953, 0.06359], [0.07277, 0.03233, 0.02234], [0.06704, 0.02288, 0.01078]]),
        (2, 3): np.array([[0.01821, 0.01813, 0.01812], [0.00515, 0.00501, 0.00500], [0.00177, 0.00155, 0.00153]]),
    },
}
REFERENCE_J = (50, 100, 150)
REFERENCE_K = (50, 100, 150)
REFERENCE_EPSILON = 8.2
REFERENCE_TAU = 1.5

FAMILY_ALIASES = {"coef": "polyproduct", "polyproduct": "polyproduct", "coef2": "polysum", "polysum": "polysum"}


def family_spectrum(family: str, nu1: float, nu2: float, tau: float = REFERENCE_TAU, xi: float = 1.0) -> PowerSpectrum:
    name = FAMILY_ALIASES.get(family)
    if name == "polyproduct":
        return family_polyproduct(xi, nu1, nu2)
    if name == "polysum":
        return family_polysum(xi, nu1, nu2, tau)
    raise ValueError(f"unknown spectrum family {family!r}")


@dataclass(frozen=True)
class TableCell:
    scenario: str
    J: int
    K: int
    P: float
    Q: float
    epsilon: float
    bracket_width: float
    xi: float

    @property
    def bound_sq(self) -> float:
        return self.P + self.epsilon * self.Q


def _scenario_label(nu1, nu2, tau=None) -> str:
    label = f"{nu1:g}:{nu2:g}"
    return label if tau is None else f"{label}:{tau:g}"


def error_table(
    family: str,
    scenarios: Sequence[tuple],
    Js: Sequence[int],
    Ks: Sequence[int],
    epsilon: float,
    convention: str | float = "mean-field",
    tau: float = REFERENCE_TAU,
    horizon: int | None = None,
    threads: int = 1,
) -> list[TableCell]:
    """P + eps Q for every (scenario, J, K).

    ``convention`` names the unit-variance rule fixing xi, or is a number used
    as xi directly.  Scenarios are (nu1, nu2) or (nu1, nu2, tau).
    """

    def one(scn):
        nu1, nu2 = scn[0], scn[1]
        t = scn[2] if len(scn) > 2 else tau
        spec = family_spectrum(family, nu1, nu2, t)
        if isinstance(convention, str):
            total = variance_sum(spec, convention)
            if not total.converged:
                raise ValueError(f"variance sum diverges for scenario {scn}")
            xi = 1.0 / total.mid
        else:
            xi = float(convention)
        spec = spec.with_xi(xi)
        label = _scenario_label(nu1, nu2, t if FAMILY_ALIASES[family] == "polysum" else None)
        cells = []
        for J in Js:
            for K in Ks:
                b = error_bound(spec, J, K, epsilon, horizon)
                cells.append(TableCell(label, J, K, b.P, b.Q, epsilon, b.bracket_width, xi))
        return cells

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            groups = list(pool.map(one, scenarios))
    else:
        groups = [one(s) for s in scenarios]
    return [c for g in groups for c in g]


def unit_grid(family, nu1, nu2, Js, Ks, epsilon, tau=REFERENCE_TAU, horizon=None) -> np.ndarray:
    """P + eps Q at xi = 1 over the J x K grid."""
    spec = family_spectrum(family, nu1, nu2, tau)
    return np.array([[error_bound(spec, J, K, epsilon, horizon).bound_sq for K in Ks] for J in Js])


def fit_xi(unit_value: float, target: float, hypothesis: str = "squared") -> float:
    """xi making one cell hit its target.

    "squared": target = xi (P + eps Q); "root": target = sqrt(xi (P + eps Q)).
    """
    if hypothesis == "squared":
        return target / unit_value
    if hypothesis == "root":
        return target * target / unit_value
    raise ValueError(f"unknown table hypothesis {hypothesis!r}")


def _predict(unit: np.ndarray, xi: float, hypothesis: str) -> np.ndarray:
    vals = xi * unit
    return vals if hypothesis == "squared" else np.sqrt(vals)


@dataclass(frozen=True)
class DiagnosticRow:
    hypothesis: str
    tails: str
    fitted_xi: float
    max_rel_error_fit: float
    convention_xi: dict
    max_rel_error_convention: dict


def table_diagnostics(
    family: str,
    nu1: float,
    nu2: float,
    reference: np.ndarray,
    Js: Sequence[int] = REFERENCE_J,
    Ks: Sequence[int] = REFERENCE_K,
    epsilon: float = REFERENCE_EPSILON,
    tau: float = REFERENCE_TAU,
    horizons: Iterable[int | None] = (None, 200),
    fit_cell: tuple[int, int] = (0, 0),
) -> list[DiagnosticRow]:
    """Compare the reference grid against every (hypothesis, tails) combination.

    xi is fitted on ``fit_cell`` and the other cells are predictions; the xi
    implied by each unit-variance convention is reported alongside.
    """
    rows = []
    reference = np.asarray(reference, dtype=float)
    for horizon in horizons:
        unit = unit_grid(family, nu1, nu2, Js, Ks, epsilon, tau, horizon)
        spec = family_spectrum(family, nu1, nu2, tau)
        conv_xi = {}
        for conv, jw in (("mean-field", None), ("mode-sum", mode_weight())):
            total = spec.block_sum(0, None, 0, None, jweight=jw, horizon=horizon)
            conv_xi[conv] = 1.0 / total.mid if total.converged else math.nan
        for hyp in ("squared", "root"):
            xi = fit_xi(unit[fit_cell], reference[fit_cell], hyp)
            err = np.abs(_predict(unit, xi, hyp) / reference - 1.0)
            conv_err = {
                c: float(np.max(np.abs(_predict(unit, x, hyp) / reference - 1.0))) if math.isfinite(x) else math.inf
                for c, x in conv_xi.items()
            }
            rows.append(
                DiagnosticRow(
                    hyp, "infinite" if horizon is None else f"horizon-{horizon}", xi, float(err.max()), conv_xi, conv_err
                )
            )
    return rows


# ---------------------------------------------------------------------------
# export
# ---------------------------------------------------------------------------


def table_csv(cells: Sequence[TableCell]) -> str:
    lines = ["scenario,J,K,P,Q,epsilon,bound_sq,bracket_width"]
    for c in cells:
        lines.append(
            ",".join([c.scenario, str(c.J), str(c.K), fmt(c.P), fmt(c.Q), fmt(c.epsilon), fmt(c.bound_sq), fmt(c.bracket_width)])
        )
    return "\n".join(lines) + "\n"


def write_table(cells: Sequence[TableCell], path) -> None:
    atomic_write(path, table_csv(cells))


def pivot(cells: Sequence[TableCell]) -> tuple[list[int], list[tuple[str, int]], np.ndarray]:
    """Rows J, columns (scenario, K): the 3 x 9 layout for three scenarios."""
    Js = sorted({c.J for c in cells})
    cols = []
    for c in cells:
        if (c.scenario, c.K) not in cols:
            cols.append((c.scenario, c.K))
    grid = np.full((len(Js), len(cols)), np.nan)
    for c in cells:
        grid[Js.index(c.J), cols.index((c.scenario, c.K))] = c.bound_sq
    return Js, cols, grid
