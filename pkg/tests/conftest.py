import json
from pathlib import Path

import numpy as np
import pytest

ROOT = Path(__file__).resolve().parent.parent
FROZEN = json.loads((Path(__file__).parent / "oracles" / "frozen.json").read_text())


def cplx(v) -> complex:
    return complex(v[0], v[1])


def rk4(coeffs, init, t_end, steps=4000):
    """Integrate sum_k coeffs[k] F^(k) = 0 (integer orders) with classical RK4.

    Returns F at t_end; independent of every mlfrac code path.
    """
    c = np.asarray(coeffs, dtype=complex)
    N = len(c) - 1
    y = np.zeros(N, dtype=complex)
    y[: len(init)] = init

    def f(v):
        out = np.empty_like(v)
        out[:-1] = v[1:]
        out[-1] = -np.dot(c[:-1], v) / c[-1]
        return out

    h = t_end / steps
    for _ in range(steps):
        k1 = f(y)
        k2 = f(y + h / 2 * k1)
        k3 = f(y + h / 2 * k2)
        k4 = f(y + h * k3)
        y = y + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
    return y[0]


@pytest.fixture(scope="session")
def frozen():
    return FROZEN


@pytest.fixture(scope="session")
def problems_dir():
    return ROOT / "problems"


# acceptance criteria report lines, printed after the run
ACCEPTANCE: list = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE):
            terminalreporter.write_line(line)
