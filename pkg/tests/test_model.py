import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nhbbc.errors import (InvalidParameters, NonPositiveGammaEff, SizeTooSmall,
                          ValidationError)
from nhbbc.model import (LatticeParams, RawRates, ToeplitzCoefficients, bloch,
                         bloch_derivative, build_obc, build_pbc, coefficients,
                         parse_angle, reduce)

from conftest import coeff_sets, hn, lattice_params


def test_coefficients_hn_topological_row():
    c = coefficients(hn(1.8, 2.0))
    # mu_{+1} = (2 - 1.8)/2, mu_{-1} = (2 + 1.8)/2
    assert c[0] == -1j
    assert c[1] == pytest.approx(0.1, abs=1e-15)
    assert c[-1] == pytest.approx(1.9, abs=1e-15)


def test_coefficients_reciprocal_row_symmetric():
    c = coefficients(hn(0.5, 2.0, theta=0.0))
    assert c[1] == pytest.approx(1 - 0.25j)
    assert c[-1] == pytest.approx(1 - 0.25j)


def test_exceptional_point_is_exactly_triangular():
    c = coefficients(hn(1.5, 1.5))
    assert c[1] == 0
    H = build_obc(c, 10).matrix
    assert np.all(np.triu(H, 1) == 0)


def test_complex_lambda_conjugated_on_lower_band():
    p = LatticeParams(2, [2.0, 1j], [0, 0], [0, 0])
    c = coefficients(p)
    assert c[2] == pytest.approx(0.5j)
    assert c[-2] == pytest.approx(-0.5j)
    K = build_obc(c, 6).matrix + 1j * np.eye(6)     # coherent part is Hermitian
    assert np.allclose(K, K.conj().T)


@given(lattice_params())
def test_mu0_pinned(p):
    c = coefficients(p)
    assert c[0].imag == -1.0
    assert c[0].real == pytest.approx(-p.delta)


def test_obc_layout():
    c = ToeplitzCoefficients.from_mapping({-2: 5, -1: 3, 0: 1, 1: 2, 2: 4})
    H = build_obc(c, 5).matrix
    assert H[0, 1] == 2 and H[1, 0] == 3 and H[0, 2] == 4 and H[2, 0] == 5
    assert np.all(np.diag(H) == 1)
    assert H[0, 3] == 0


def test_obc_size_checks():
    c = coefficients(LatticeParams(3, [1, 1, 1], [0, 0, 0], [0, 0, 0]))
    with pytest.raises(SizeTooSmall):
        build_obc(c, 3)
    build_obc(c, 4)
    with pytest.raises(SizeTooSmall):
        build_pbc(c, 6)
    assert issubclass(SizeTooSmall, ValidationError)


@given(coeff_sets(), st.integers(7, 20))
def test_pbc_circulant_eigenvalues_are_bloch_samples(c, N):
    if N < 2 * c.L + 1:
        return
    ev = np.linalg.eigvals(build_pbc(c, N).matrix)
    k = 2 * np.pi * np.arange(N) / N
    h = bloch(c, k)
    # every sample is an eigenvalue (multiset match via nearest distances)
    d = np.abs(h[:, None] - ev[None, :]).min(axis=1)
    assert d.max() < 1e-9 * max(1, np.abs(h).max())


@given(coeff_sets(), st.floats(0, 2 * np.pi))
def test_bloch_derivative_matches_finite_difference(c, k):
    e = 1e-6
    fd = (bloch(c, k + e) - bloch(c, k - e)) / (2 * e)
    assert abs(fd - bloch_derivative(c, k)) < 1e-6 * (1 + np.abs(c.mu).sum())


@given(coeff_sets())
def test_adjoint_and_reflection(c):
    H = build_obc(c, 9).matrix
    assert np.allclose(build_obc(c.adjoint(), 9).matrix, H.conj().T)
    assert np.allclose(build_obc(c.reflected(), 9).matrix, H[::-1, ::-1])


@settings(max_examples=200)
@given(st.lists(st.floats(0, 3), min_size=1, max_size=3), st.floats(0.1, 3), st.floats(0, 2),
       st.floats(-5, 5), st.floats(-5, 5))
def test_reduce_round_trip(J, g, kappa_frac, wc, wd):
    L = len(J)
    Gamma = [0.3 * (i + 1) for i in range(L)]
    # choose gamma so that gamma_eff = g exactly
    kappa = kappa_frac * g
    gamma = 2 * g + kappa - 2 * sum(Gamma)
    if gamma < 0:
        return
    raw = RawRates(J, Gamma, [0.5] * L, gamma, kappa, wc, wd)
    p = reduce(raw)
    assert p.gamma_eff == pytest.approx(g)
    assert np.allclose(np.array(p.lam) * p.gamma_eff / 2, J)
    assert np.allclose(np.array(p.cooperativity) * p.gamma_eff, Gamma)
    assert p.delta * p.gamma_eff == pytest.approx(wd - wc, abs=1e-9)


def test_reduce_rejects_nonpositive_gamma_eff():
    with pytest.raises(NonPositiveGammaEff):
        reduce(RawRates([1.0], [0.0], [0.0], gamma=1.0, kappa=1.0))
    with pytest.raises(NonPositiveGammaEff):
        LatticeParams(1, [1], [1], [0], gamma_eff=0)


def test_params_validation():
    with pytest.raises(InvalidParameters):
        LatticeParams(2, [1.0], [0.5, 0.5], [0, 0])
    with pytest.raises(InvalidParameters):
        LatticeParams(1, [1.0], [-0.1], [0])
    with pytest.raises(InvalidParameters):
        LatticeParams(1, [float("nan")], [0.1], [0])
    with pytest.raises(InvalidParameters):
        ToeplitzCoefficients([1, 2])


@pytest.mark.parametrize("text,val", [("pi/2", np.pi / 2), ("2*pi/3", 2 * np.pi / 3),
                                      (0.25, 0.25), ("-pi", -np.pi), ("1e-1", 0.1)])
def test_parse_angle(text, val):
    assert parse_angle(text) == pytest.approx(val)


@pytest.mark.parametrize("bad", ["__import__('os')", "pi/", "", "x"])
def test_parse_angle_rejects(bad):
    with pytest.raises(InvalidParameters):
        parse_angle(bad)


def test_raw_and_reduced_paths_agree_exactly():
    # gamma_eff = (gamma - kappa + 2 sum Gamma) / 2 = 1 with Gamma = [1, 1]
    raw = RawRates(J=[0.15, 1.0], Gamma=[0.15, 0.9], theta=[np.pi / 2] * 2, gamma=1.0, kappa=1.1)
    p = reduce(raw)
    assert p.gamma_eff == 1.0
    direct = LatticeParams(2, [0.3, 2.0], [0.15, 0.9], [np.pi / 2] * 2)
    assert np.array_equal(coefficients(p).mu, coefficients(direct).mu)
