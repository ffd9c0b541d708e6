import math

import numpy as np
import pytest

from spatialdiar.geometry import AzimuthGrid, circular_array
from spatialdiar.localizer import SteeringTable
from spatialdiar.stft import StftConfig

# (number, title, passed, detail) rows filled in by test_acceptance
ACCEPTANCE = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for num, title, ok, detail in sorted(ACCEPTANCE):
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {num:>2}. {title}: {detail}")


@pytest.fixture(scope="session")
def uca():
    return circular_array(8, 0.05)


@pytest.fixture(scope="session")
def grid():
    return AzimuthGrid()


@pytest.fixture(scope="session")
def freqs():
    return StftConfig().freqs


@pytest.fixture(scope="session")
def steering(uca, grid, freqs):
    return SteeringTable(uca, grid, freqs)


def brute_spectrum(positions, c, values, freqs, azimuths_deg):
    """Scalar-loop evaluation of the normalized SRP spectrum.

    Independent of the vectorized path: delays and phases are rebuilt from
    raw coordinates with ``math`` for every (direction, pair, frequency).
    """
    m = len(positions)
    n_f = len(freqs)
    out = []
    for az in azimuths_deg:
        u = (math.cos(math.radians(az)), math.sin(math.radians(az)), 0.0)
        acc = 0.0
        p = 0
        for i in range(m - 1):
            for j in range(i + 1, m):
                tau = sum((positions[i][k] - positions[j][k]) * u[k] for k in range(3)) / c
                for q in range(n_f):
                    ph = -2.0 * math.pi * freqs[q] * tau
                    r = complex(math.cos(ph), math.sin(ph))
                    acc += (values[p][q].conjugate() * r).real
                p += 1
        out.append(2.0 * acc / (m * (m - 1) * n_f))
    return np.array(out)


def brute_steering(positions, c, freqs, az_deg):
    """Scalar-loop steering field for one azimuth in the array plane."""
    m = len(positions)
    u = (math.cos(math.radians(az_deg)), math.sin(math.radians(az_deg)), 0.0)
    rows = []
    for i in range(m - 1):
        for j in range(i + 1, m):
            tau = sum((positions[i][k] - positions[j][k]) * u[k] for k in range(3)) / c
            rows.append([complex(math.cos(-2 * math.pi * f * tau), math.sin(-2 * math.pi * f * tau)) for f in freqs])
    return np.array(rows)
