import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nhbbc.disorder import DisorderSpec, apply_disorder, ensemble, robustness_criterion
from nhbbc.errors import DegenerateSpectrum, InvalidParameters
from nhbbc.model import build_obc, coefficients
from nhbbc.svd import svd

from conftest import hn


def test_spec_validation():
    with pytest.raises(InvalidParameters):
        DisorderSpec(-0.1)
    with pytest.raises(InvalidParameters):
        DisorderSpec(0.1, realizations=0)
    with pytest.raises(ValueError):
        DisorderSpec(0.1, kind="hopping")


def test_generators_reproducible_and_independent():
    a = [g.uniform(size=3) for g in DisorderSpec(0.3, 4, seed=7).generators()]
    b = [g.uniform(size=3) for g in DisorderSpec(0.3, 4, seed=7).generators()]
    assert np.array_equal(a, b)
    assert not np.array_equal(a[0], a[1])


def test_apply_disorder():
    H = build_obc(coefficients(hn(1.8, 2.0)), 5)
    xi = np.array([0.1, -0.2, 0.0, 0.05, 0.2])
    D = apply_disorder(H, xi)
    assert D.disordered and np.allclose(np.diag(D.matrix - H.matrix), -1j * xi)
    assert not apply_disorder(H, np.zeros(5)).disordered
    with pytest.raises(InvalidParameters):
        apply_disorder(H, xi[:3])


@settings(max_examples=30, deadline=None)
@given(st.floats(0.0, 1.0), st.integers(0, 2**32), st.floats(0.2, 2.5))
def test_weyl_bound(w, seed, C):
    H = build_obc(coefficients(hn(C, 2.0)), 25)
    rng = np.random.default_rng(seed)
    xi = rng.uniform(-w, w, 25)
    s0 = svd(H).sigma
    s1 = svd(apply_disorder(H, xi)).sigma
    assert np.abs(s1 - s0).max() <= np.abs(xi).max() + 1e-12


def test_ensemble_reproducible_across_workers():
    spec = DisorderSpec(0.25, 12, seed=123)
    a = ensemble(hn(1.8, 2.0), 30, spec, workers=1)
    b = ensemble(hn(1.8, 2.0), 30, spec, workers=3)
    assert np.array_equal(a.sv_histogram, b.sv_histogram)
    assert np.array_equal(a.min_sigma_distribution, b.min_sigma_distribution)
    c = ensemble(hn(1.8, 2.0), 30, DisorderSpec(0.25, 12, seed=124))
    assert not np.array_equal(a.min_sigma_distribution, c.min_sigma_distribution)


def test_ensemble_zero_width_is_clean():
    e = ensemble(hn(1.8, 2.0), 30, DisorderSpec(0.0, 3))
    assert np.all(e.weyl_deviation == 0) and e.zsm_survival == 1.0
    assert e.sv_histogram.sum() == 3 * 29


def test_robustness_criterion():
    assert robustness_criterion(hn(1.8, 2.0), 0.25)
    assert not robustness_criterion(hn(1.8, 2.0), 0.9)
    with pytest.raises(DegenerateSpectrum):
        robustness_criterion(hn(0.5, 2.0, theta=0.0), 0.1)
