from pathlib import Path

import numpy as np
import pytest
from hypothesis import strategies as st

from nhbbc.model import LatticeParams, ToeplitzCoefficients

CONFIGS = Path(__file__).resolve().parents[1] / "src" / "nhbbc" / "configs"

# acceptance outcomes, reported in the terminal summary
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")


@pytest.fixture
def configs():
    return CONFIGS


def hn(C, lam, theta=np.pi / 2, delta=0.0):
    return LatticeParams(1, [lam], [C], [theta], delta=delta)


finite = st.floats(-2.0, 2.0, allow_nan=False, allow_infinity=False)


@st.composite
def coeff_sets(draw, max_L=3):
    """Random banded coefficients with mu_0 on the lower half plane."""
    L = draw(st.integers(1, max_L))
    re = draw(st.lists(finite, min_size=2 * L + 1, max_size=2 * L + 1))
    im = draw(st.lists(finite, min_size=2 * L + 1, max_size=2 * L + 1))
    mu = np.array(re) + 1j * np.array(im)
    if np.abs(mu).max() < 1e-3:
        mu[L + 1] = 1.0
    return ToeplitzCoefficients(mu)


@st.composite
def lattice_params(draw, max_L=3):
    L = draw(st.integers(1, max_L))
    lam = draw(st.lists(st.floats(0, 2.5), min_size=L, max_size=L))
    C = draw(st.lists(st.floats(0, 2.5), min_size=L, max_size=L))
    th = draw(st.lists(st.floats(0, 2 * np.pi), min_size=L, max_size=L))
    d = draw(st.floats(-2, 2))
    return LatticeParams(L, lam, C, th, delta=d)
