"""Acceptance criteria 1-12.

Each criterion is one test; a PASS/FAIL line per criterion is printed in the
pytest terminal summary (and by ``python tests/test_acceptance.py``).
"""

import sys
import time
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).resolve().parent))

from conftest import ACCEPTANCE, hn  # noqa: E402
from nhbbc import bloch as B  # noqa: E402
from nhbbc.disorder import DisorderSpec, ensemble  # noqa: E402
from nhbbc.gssh import double, zak_invariant  # noqa: E402
from nhbbc.model import LatticeParams, build_obc, coefficients  # noqa: E402
from nhbbc.response import (detuning_sweep, stability, susceptibility,  # noqa: E402
                            zsm_decomposition)
from nhbbc.svd import (_fit_decay, analytic_hn_zsm, detect_zsm, edge_weight,  # noqa: E402
                       eigendecomposition, svd)

PI2 = np.pi / 2


def c1_winding_rows():
    got = [B.analyze(coefficients(hn(C, 2.0, th)), 1024).winding
           for th, C in [(0.0, 0.5), (PI2, 0.5), (PI2, 1.8)]]
    want = [B.Marker.DEGENERATE, 0, -1]
    return got == want, f"windings {[getattr(w, 'value', w) for w in got]} (want degenerate, 0, -1)"


def c2_bbc_count():
    ok, parts = True, []
    for C2, want in [(0.5, 0), (0.9, 1), (1.8, 2)]:
        c = coefficients(LatticeParams(2, [0.3, 2.0], [0.3, C2], [PI2, PI2]))
        gap = B.analyze(c, 1024).nh_gap
        r = svd(build_obc(c, 200))
        z = detect_zsm(r, gap, strict=False)
        bulk = r.sigma[z.count:]
        ref = B.sample(c, 1 << 14).sigma
        # directed distance: every remaining OBC value near the PBC sigma(k) set
        haus = np.abs(bulk[:, None] - ref[None, :]).min(axis=1).max()
        zsv_ok = all(s < 1e-6 for s in z.zsv)
        ok &= z.count == want and zsv_ok and haus <= 0.05 * gap
        parts.append(f"C2={C2}: count {z.count}, max zsv {max(z.zsv, default=0):.1e}, "
                     f"bulk dist/gap {haus / gap:.3f}")
    return ok, "; ".join(parts)


def c3_analytic_zsm():
    c = coefficients(hn(1.5, 1.5))
    N = 100
    r = svd(build_obc(c, N))
    v0, u0, eta = analytic_hn_zsm(c, N)
    fv = abs(np.vdot(v0, r.V[:, 0])) ** 2
    fu = abs(np.vdot(u0, r.U[:, 0])) ** 2
    _, rate = _fit_decay(r.V[:, 0])
    ns = np.arange(20, 121, 10)
    s0 = [svd(build_obc(c, n)).sigma[0] for n in ns]
    slope = np.polyfit(ns, np.log(s0), 1)[0]
    target = np.log(1.5)
    ok = (fv > 1 - 1e-8 and fu > 1 - 1e-8 and abs(rate - target) <= 0.01 * target
          and abs(-slope - target) <= 0.02 * target)
    return ok, (f"infidelity v {abs(1 - fv):.1e} u {abs(1 - fu):.1e}; rate {rate:.5f}; "
                f"log sigma_0 slope {slope:.5f} (ln 1.5 = {target:.5f})")


def c4_gap_closed_form():
    errs = []
    for C in (0.25, 0.5, 1.5, 2.0):
        s = B.sample(coefficients(hn(C, C)), 1024)
        errs.append(abs(B.nh_gap(s) - abs(C - 1)))
    g1 = B.nh_gap(B.sample(coefficients(hn(1.0, 1.0)), 1024), check_gap=False)
    below = B.winding_from_roots(coefficients(hn(1 - 1e-6, 1 - 1e-6)))
    above = B.winding_from_roots(coefficients(hn(1 + 1e-6, 1 + 1e-6)))
    ok = max(errs) < 1e-8 and g1 < 1e-6 and below == 0 and above == -1
    return ok, f"max |gap - |C-1|| {max(errs):.1e}; gap(C=1) {g1:.1e}; winding {below} -> {above}"


def c5_gssh():
    rng = np.random.default_rng(2024)
    dev, mism, gapped = 0.0, 0, 0
    for _ in range(20):
        L = int(rng.integers(1, 4))
        p = LatticeParams(L, rng.uniform(0, 2.5, L), rng.uniform(0, 2.5, L),
                          rng.uniform(0, 2 * np.pi, L), delta=rng.uniform(-1, 1))
        c = coefficients(p)
        H = build_obc(c, int(rng.integers(L + 1, 101)))
        s = svd(H, refine=False).sigma
        ev = np.sort(double(H).spectrum())
        dev = max(dev, np.abs(ev - np.sort(np.r_[-s, s])).max())
        rep = B.analyze(c, 1024)
        if rep.point_gap_open and isinstance(rep.winding, int):
            gapped += 1
            mism += zak_invariant(c, rep.n_k) != rep.winding
    return dev < 1e-10 and mism == 0, (f"max |eig - (+-sigma)| {dev:.1e}; "
                                       f"Zak mismatches {mism}/{gapped} gapped sets")


def c6_two_channels():
    p = LatticeParams(2, [0.05, 2.0], [0.05, 1.9], [PI2, PI2])
    H = build_obc(coefficients(p), 30)
    rep = susceptibility(H, 0.0)
    a1 = int(np.argmax(np.abs(rep.drive_site(1)))) + 1
    a2 = int(np.argmax(np.abs(rep.drive_site(2)))) + 1
    z = zsm_decomposition(H, 0.0)
    ok = (a1 == 29 and a2 == 30 and rep.reverse_gain < 1 and rep.gain(1, 2) < 1
          and z.count == 2 and z.residual < 1e-3)
    return ok, (f"argmax {a1}, {a2}; reverse gain {rep.reverse_gain:.1e}; "
                f"truncation {z.count} terms, residual {z.residual:.1e}")


def c7_eigenvalue_formula():
    # the closed form exactly as stated: prefactor gamma_eff / 2 = 1/2
    N, m = 30, np.arange(1, 31)
    worst = 0.0
    for C, lam, th in [(0.5, 2, PI2), (1.5, 1.5, PI2), (1, 2, np.pi / 4)]:
        p = hn(C, lam, th)
        root = np.sqrt(complex(C * C - lam * lam + 2j * C * lam * np.cos(th)))
        ana = -p.delta - 0.5j * (1 - root * np.cos(m * np.pi / (N + 1)))
        num = np.linalg.eigvals(build_obc(coefficients(p), N).matrix)
        worst = max(worst, np.abs(num[:, None] - ana[None, :]).min(axis=1).max())
    ep = np.linalg.eigvals(build_obc(coefficients(hn(1.5, 1.5)), N).matrix)
    ep_dev = np.abs(ep - (-0.5j)).max()
    return worst < 1e-8 and ep_dev < 1e-8, (f"max |lambda_num - formula| {worst:.3f}; "
                                            f"EP max |lambda + i/2| {ep_dev:.3f}")


def c8_convective():
    st = stability(build_obc(coefficients(hn(1.8, 2.0)), 50))
    return (st.pbc_max_im > 0 and st.max_im < 0,
            f"PBC max Im H(k) {st.pbc_max_im:.3f}; OBC max Im lambda {st.max_im:.3f}")


def c9_disorder():
    spec = DisorderSpec(0.25, 100, seed=20240607)
    top = ensemble(hn(1.8, 2.0), 50, spec, workers=4)
    triv = ensemble(hn(0.5, 2.0), 50, spec, workers=4)
    clean = detect_zsm(svd(build_obc(coefficients(hn(1.8, 2.0)), 50)), top.clean_gap)
    edges = {e for e in top.zsm_edges}
    loc = edges == {tuple(m.right_edge for m in clean.modes)}
    ok = (top.zsm_survival == 1.0 and loc and np.all(triv.zsm_counts == 0)
          and top.weyl_bound_holds and triv.weyl_bound_holds)
    return ok, (f"survival {top.zsm_survival:.2f}, edges {sorted(edges)}; trivial max count "
                f"{triv.zsm_counts.max()}; Weyl {top.weyl_bound_holds and triv.weyl_bound_holds}")


def c10_counterexamples():
    ca = coefficients(LatticeParams(2, [2.0, 1j], [0.0, 0.0], [0.0, 0.0]))
    cf = coefficients(LatticeParams(2, [0.6, 0.0], [0.0, 0.8], [0.0, np.pi]))
    ra, rf = B.analyze(ca, 1024), B.analyze(cf, 1024)
    ok_a = ra.normal and not ra.reciprocal and ra.winding is B.Marker.DEGENERATE
    ok_f = not rf.normal and rf.reciprocal and rf.winding is B.Marker.DEGENERATE
    rng = np.random.default_rng(7)
    viol, opened, n = 0, 0, 10_000
    for _ in range(n):
        L = int(rng.integers(1, 4))
        mu = rng.normal(size=2 * L + 1) + 1j * rng.normal(size=2 * L + 1)
        # a fraction of draws are exactly normal or exactly reciprocal families
        kind = rng.integers(3)
        if kind == 1:
            mu = 0.5 * (mu + np.conj(mu[::-1])) * np.exp(1j * rng.uniform(0, 2 * np.pi))
        elif kind == 2:
            mu = 0.5 * (mu + mu[::-1])
        c = B.ToeplitzCoefficients(mu)
        s = B.sample(c, 256)
        if B.point_gap_open(s):
            opened += 1
            if B.normality(c).normal or B.reciprocity(s).reciprocal:
                viol += 1
    return ok_a and ok_f and viol == 0, (f"normal set {ok_a}, reciprocal set {ok_f}; "
                                         f"{viol} violations in {n} draws ({opened} gapped)")


def c11_detuning():
    p = hn(1.5, 1.5)
    crit = np.sqrt(1.25)
    ds = [d for d in np.linspace(-2, 2, 41) if abs(abs(d) - crit) > 1e-3]
    wrong = [d for d in ds if B.analyze(coefficients(p.replace(delta=d)), 1024).winding
             != (-1 if abs(d) < crit else 0)]
    sw = detuning_sweep(p, [-1.5, 0.0, 1.5], n_list=(10, 20, 30, 40), xtol=1e-4)
    tr = sw.transitions
    brack = len(tr) == 2 and all(t.upper - t.lower <= 1e-3
                                 and t.lower <= np.sign(t.delta) * crit <= t.upper for t in tr)
    slopes = [r.forward_slope for r in sw.rows]
    flips = slopes[0] < 0 < slopes[1] and slopes[2] < 0
    ok = not wrong and brack and flips
    return ok, (f"{len(wrong)} misclassified detunings; brackets "
                f"{[(round(t.lower, 5), round(t.upper, 5)) for t in tr]}; "
                f"gain slopes {[round(s, 3) for s in slopes]}")


def c12_nhse_contrast():
    H = build_obc(coefficients(hn(0.5, 2.0)), 50)
    e = eigendecomposition(H)
    frac = float(np.mean(e.edge_weight_left() > 0.9))
    r = svd(H)
    sv = max(edge_weight(r.V).max(), edge_weight(r.U).max())
    return frac > 0.8 and sv < 0.5, (f"{100 * frac:.0f}% of left eigenvectors edge-localized; "
                                     f"max singular-vector edge weight {sv:.3f}")


CRITERIA = {1: c1_winding_rows, 2: c2_bbc_count, 3: c3_analytic_zsm, 4: c4_gap_closed_form,
            5: c5_gssh, 6: c6_two_channels, 7: c7_eigenvalue_formula, 8: c8_convective,
            9: c9_disorder, 10: c10_counterexamples, 11: c11_detuning, 12: c12_nhse_contrast}


def _evaluate(n):
    t = time.perf_counter()
    ok, detail = CRITERIA[n]()
    ok = bool(ok)
    ACCEPTANCE[n] = (ok, f"{detail} [{time.perf_counter() - t:.1f}s]")
    print(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {ACCEPTANCE[n][1]}")
    return ok


@pytest.mark.parametrize("n", sorted(CRITERIA))
def test_criterion(n):
    assert _evaluate(n), ACCEPTANCE[n][1]


if __name__ == "__main__":
    results = [_evaluate(n) for n in sorted(CRITERIA)]
    print(f"{sum(results)}/{len(results)} criteria pass")
    sys.exit(0 if all(results) else 1)
