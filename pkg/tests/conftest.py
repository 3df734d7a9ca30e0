import math

import pytest
from scipy import special


def _real_harmonic(j, m, colat, lon):
    # scipy's complex harmonic, reduced to the real unit-norm basis
    am = abs(m)
    if hasattr(special, "sph_harm_y"):
        y = special.sph_harm_y(j, am, colat, lon)
    else:
        y = special.sph_harm(am, j, lon, colat)
    if m == 0:
        return y.real
    return math.sqrt(2.0) * (y.real if m > 0 else y.imag)


def naive_synthesis(draw, spectrum, colats, lons, times, T):
    """Direct triple loop over (j, m, k) at every space-time point, paper-mode basis."""
    out = [[0.0] * len(colats) for _ in times]
    for it, t in enumerate(times):
        for i, (b1, b2) in enumerate(zip(colats, lons)):
            z = 0.0
            for j in range(draw.J + 1):
                cj = math.sqrt(4 * math.pi / (2 * j + 1))
                for m in range(-j, j + 1):
                    y = _real_harmonic(j, m, b1, b2)
                    for k in range(draw.K + 1):
                        a = math.sqrt(spectrum.coeff(k, j))
                        c = math.cos(math.pi * k * t / (2 * T))
                        s = math.sin(math.pi * k * t / (2 * T))
                        if m >= 0:
                            x1 = draw.value("A1", k, j, m)
                            x2 = draw.value("A2", k, j, m) if k else 0.0
                        else:
                            x1 = draw.value("B1", k, j, -m)
                            x2 = draw.value("B2", k, j, -m) if k else 0.0
                        z += cj * a * y * (x1 * c + x2 * s)
            out[it][i] = z
    return out


@pytest.fixture
def naive():
    return naive_synthesis


ACCEPTANCE_LINES = []


@pytest.fixture
def acceptance():
    """Record one PASS/FAIL line per acceptance criterion; echoed in the terminal summary."""

    def record(label, passed, detail=""):
        line = f"{label}: {'PASS' if passed else 'FAIL'}" + (f" ({detail})" if detail else "")
        print(line)
        ACCEPTANCE_LINES.append(line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
