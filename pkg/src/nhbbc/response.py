"""Linear response of the driven array: susceptibility, gain and stability."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import bloch as _bloch
from .errors import (DegenerateSpectrum, InvalidParameters, NotApplicable, OriginOnCurve,
                     SingularAtProbe)
from .model import LatticeParams, ObcHamiltonian, build_obc, coefficients
from .svd import detect_zsm, eigenvalues, svd
from .tolerances import DEFAULT, Tolerances

DEFAULT_GAMMA = 0.2


def _matrix(H):
    return H.matrix if isinstance(H, ObcHamiltonian) else np.atleast_2d(np.asarray(H, complex))


def _ro(a):
    a = np.asarray(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class ResponseReport:
    """Susceptibility ``chi = -i (omega - H)^-1`` and derived metrics.

    Gains are ``|chi_{N,1}|^2`` (site 1 to site N) and ``|chi_{1,N}|^2``;
    ``s_forward_gain`` and ``s_reverse_gain`` are the same for ``S``.
    """

    omega: float
    gamma: float
    chi: np.ndarray = field(repr=False)
    s_matrix: np.ndarray = field(repr=False)
    forward_gain: float = 0.0
    reverse_gain: float = 0.0
    s_forward_gain: float = 0.0
    s_reverse_gain: float = 0.0
    nonreciprocity: float = 0.0
    stable: bool = True
    max_im_eigenvalue: float = 0.0
    inversion_residual: float = 0.0
    min_singular_value: float = 0.0

    @property
    def N(self):
        return self.chi.shape[0]

    def steady_state(self, alpha_in):
        """Output-free steady state ``alpha = -sqrt(gamma) chi alpha_in``."""
        return -np.sqrt(self.gamma) * (self.chi @ np.asarray(alpha_in, dtype=complex))

    def drive_site(self, site: int, amplitude: complex = 1.0):
        """Steady state for a unit drive on ``site`` (1-based)."""
        if not 1 <= site <= self.N:
            raise InvalidParameters(f"site {site} outside 1..{self.N}")
        a = np.zeros(self.N, dtype=complex)
        a[site - 1] = amplitude
        return self.steady_state(a)

    def gain(self, out_site: int, in_site: int) -> float:
        """``|chi_{out,in}|^2`` with 1-based sites."""
        return float(abs(self.chi[out_site - 1, in_site - 1]) ** 2)

    def as_dict(self):
        return {
            "omega": self.omega, "gamma": self.gamma, "N": self.N,
            "forward_gain": self.forward_gain, "reverse_gain": self.reverse_gain,
            "s_forward_gain": self.s_forward_gain, "s_reverse_gain": self.s_reverse_gain,
            "nonreciprocity": self.nonreciprocity, "stable": self.stable,
            "max_im_eigenvalue": self.max_im_eigenvalue,
            "inversion_residual": self.inversion_residual,
            "min_singular_value": self.min_singular_value,
        }


def _inverse_from_svd(r):
    # (omega - H) = U S V^dagger  =>  (omega - H)^-1 = V S^-1 U^dagger
    return (r.V / r.sigma) @ r.U.conj().T


def nonreciprocity(chi) -> float:
    a = np.abs(chi)
    top = a.max()
    return float(np.abs(a - a.T).max() / top) if top > 0 else 0.0


def susceptibility(H, omega: float = 0.0, gamma: float = DEFAULT_GAMMA,
                   tol: Tolerances = DEFAULT) -> ResponseReport:
    """Susceptibility and scattering matrices at probe frequency ``omega``.

    The inverse is assembled from the SVD of ``omega - H``; exponentially
    small singular values are resolved in extended precision.

    Raises
    ------
    SingularAtProbe
        If ``omega`` coincides with an eigenvalue of the finite system to
        within ``eps_zero * ||H||``.
    """
    a = _matrix(H)
    n = a.shape[0]
    hnorm = np.linalg.norm(a, 2) or 1.0
    lam = eigenvalues(a)
    if np.min(np.abs(omega - lam)) <= tol.eps_zero * hnorm:
        raise SingularAtProbe(f"omega = {omega} is a resonance of the finite system")
    A = omega * np.eye(n) - a
    r = svd(A)
    if r.sigma[0] <= 0:
        raise SingularAtProbe("omega - H is numerically singular")
    chi = -1j * _inverse_from_svd(r)
    resid = float(np.linalg.norm(A @ (1j * chi) - np.eye(n), 2)
                  / (np.linalg.norm(A, 2) * np.linalg.norm(chi, 2)))
    S = np.eye(n) + gamma * chi
    max_im = float(lam.imag.max())
    return ResponseReport(
        omega=float(omega), gamma=float(gamma), chi=_ro(chi), s_matrix=_ro(S),
        forward_gain=float(abs(chi[-1, 0]) ** 2), reverse_gain=float(abs(chi[0, -1]) ** 2),
        s_forward_gain=float(abs(S[-1, 0]) ** 2), s_reverse_gain=float(abs(S[0, -1]) ** 2),
        nonreciprocity=nonreciprocity(chi), stable=max_im < 0, max_im_eigenvalue=max_im,
        inversion_residual=resid, min_singular_value=float(r.sigma[0]))


@dataclass(frozen=True)
class ZsmDecomposition:
    chi: np.ndarray = field(repr=False)
    chi_trunc: np.ndarray = field(repr=False)
    residual: float
    count: int
    zsv: tuple
    gap: float

    def channels(self, ratio: float = 10.0) -> int:
        return channel_count(self.chi_trunc, ratio)


def channel_count(chi, ratio: float = 10.0) -> int:
    """Number of singular values of ``chi`` within ``ratio`` of the largest."""
    s = np.linalg.svd(np.asarray(chi), compute_uv=False)
    return int(np.sum(s >= s[0] / ratio)) if s[0] > 0 else 0


def zsm_decomposition(H, omega: float = 0.0, count: int | None = None,
                      gap: float | None = None, tol: Tolerances = DEFAULT):
    """Split ``chi`` into its zero-singular-mode part.

    ``chi_trunc = -i sum_j v_j u_j^dagger / sigma_j`` over the zero singular
    modes of ``omega - H``.  Their number is detected against the NH gap of
    the shifted band unless ``count`` is given.

    Raises
    ------
    NotApplicable
        If no zero singular mode is present or the shifted band has no
        point gap.
    """
    a = _matrix(H)
    n = a.shape[0]
    A = omega * np.eye(n) - a
    r = svd(A)
    if gap is None:
        c = getattr(H, "coeffs", None)
        if c is None or getattr(H, "disordered", False) or getattr(H, "periodic", False):
            if count is None:
                raise InvalidParameters("count or gap required without Toeplitz coefficients")
        else:
            try:
                gap = _bloch.nh_gap(_bloch.sample(c.shifted(omega)), tol)
            except DegenerateSpectrum as exc:
                raise NotApplicable(f"no point gap at omega={omega}: {exc}") from exc
    if count is None:
        count = detect_zsm(r, gap, strict=False).count
    if count == 0:
        raise NotApplicable("no zero singular modes: truncation undefined (count 0)")
    chi = -1j * _inverse_from_svd(r)
    trunc = -1j * (r.V[:, :count] / r.sigma[:count]) @ r.U[:, :count].conj().T
    res = float(np.linalg.norm(chi - trunc, 2) / np.linalg.norm(chi, 2))
    return ZsmDecomposition(_ro(chi), _ro(trunc), res, int(count),
                            tuple(float(x) for x in r.sigma[:count]),
                            float("nan") if gap is None else float(gap))


@dataclass(frozen=True)
class StabilityReport:
    stable: bool
    max_im: float
    classification: str
    pbc_max_im: float | None = None
    convective: bool = False

    def as_dict(self):
        return dict(self.__dict__)


def stability(H, n_k: int = 1024) -> StabilityReport:
    """Dynamical stability from ``max Im lambda`` of the OBC matrix.

    When Toeplitz coefficients are attached the PBC maximum of ``Im H(k)``
    is reported too; PBC unstable but OBC stable flags a convective regime.
    """
    lam = eigenvalues(H)
    mx = float(lam.imag.max())
    ok = mx < 0
    pbc = None
    c = getattr(H, "coeffs", None)
    if c is not None:
        k = 2 * np.pi * np.arange(n_k) / n_k
        pbc = float(_bloch.bloch(c, k).imag.max())
    return StabilityReport(ok, mx, "stable" if ok else "absolute_instability",
                           pbc, bool(ok and pbc is not None and pbc > 0))


def hn_eigenvalues(p: LatticeParams, N: int, prefactor: float = 1.0):
    """Closed-form OBC eigenvalues for ``L = 1``.

    ``lambda_m = -delta - i prefactor [1 - sqrt(C^2 - lam^2 + 2 i C lam cos th)
    cos(m pi / (N + 1))]`` for ``m = 1..N``.  ``prefactor = 1`` is exact in
    reduced units; other values are accepted for comparison only.
    """
    if p.L != 1:
        raise InvalidParameters("closed form requires L = 1")
    C, lam, th = p.cooperativity[0], p.lam[0], p.theta[0]
    root = np.sqrt(complex(C * C - lam * lam + 2j * C * lam * np.cos(th)))
    m = np.arange(1, N + 1)
    return -p.delta - 1j * prefactor * (1 - root * np.cos(m * np.pi / (N + 1)))


@dataclass(frozen=True)
class GainScaling:
    n: np.ndarray = field(repr=False)
    forward: np.ndarray = field(repr=False)
    reverse: np.ndarray = field(repr=False)
    inverse_zsv: np.ndarray = field(repr=False)
    stable: np.ndarray = field(repr=False)
    forward_slope: float = float("nan")
    reverse_slope: float = float("nan")
    inverse_zsv_slope: float = float("nan")

    def rows(self):
        return [dict(N=int(n), forward_gain=float(f), reverse_gain=float(r),
                     inverse_min_sigma=float(z), stable=bool(s))
                for n, f, r, z, s in zip(self.n, self.forward, self.reverse,
                                         self.inverse_zsv, self.stable)]


def _slope(x, y, mask):
    x, y = np.asarray(x, float)[mask], np.asarray(y, float)[mask]
    if x.size < 2:
        return float("nan")
    return float(np.polyfit(x, np.log(y), 1)[0])


def gain_scaling(p: LatticeParams, omega: float = 0.0, n_list=(10, 20, 30, 40, 50, 60),
                 gamma: float = DEFAULT_GAMMA, tol: Tolerances = DEFAULT) -> GainScaling:
    """End-to-end gains versus system size with log-linear fits.

    Unstable sizes are kept in the table but excluded from the fits.
    """
    c = coefficients(p)
    n_list = np.array(sorted(int(n) for n in n_list))
    fwd, rev, izsv, st = [], [], [], []
    for n in n_list:
        rep = susceptibility(build_obc(c, n), omega, gamma, tol)
        fwd.append(rep.forward_gain)
        rev.append(rep.reverse_gain)
        izsv.append(1.0 / rep.min_singular_value)
        st.append(rep.stable)
    st = np.array(st)
    return GainScaling(_ro(n_list), _ro(np.array(fwd)), _ro(np.array(rev)),
                       _ro(np.array(izsv)), _ro(st),
                       _slope(n_list, fwd, st), _slope(n_list, rev, st),
                       _slope(n_list, izsv, st))


@dataclass(frozen=True)
class SweepRow:
    delta: float
    winding: object
    nh_gap: float | None
    zsm_count: int | None
    forward_slope: float
    stable: bool

    def as_dict(self):
        w = self.winding.value if isinstance(self.winding, _bloch.Marker) else self.winding
        return {"delta": self.delta, "winding": w, "nh_gap": self.nh_gap,
                "zsm_count": self.zsm_count, "forward_slope": self.forward_slope,
                "stable": self.stable}


@dataclass(frozen=True)
class Transition:
    lower: float
    upper: float
    delta: float
    nh_gap: float
    consistent: bool


@dataclass(frozen=True)
class DetuningSweep:
    rows: tuple
    transitions: tuple

    @property
    def consistent(self):
        return all(t.consistent for t in self.transitions)


def _winding_at(p, n_k, tol):
    c = coefficients(p)
    s = _bloch.sample(c, n_k, tol)
    if not _bloch.point_gap_open(s, tol):
        return _bloch.Marker.DEGENERATE, None
    try:
        w = _bloch.winding(s, tol)
    except OriginOnCurve:
        w = _bloch.Marker.ORIGIN_ON_CURVE
    return w, _bloch.nh_gap(s, tol)


def locate_transition(p: LatticeParams, lo: float, hi: float, xtol: float = 1e-4,
                      tol: Tolerances = DEFAULT):
    """Bisect the detuning between two values with different windings.

    Uses the grid-free root-counting winding so the bracket can shrink
    arbitrarily close to the gap closing.
    """
    def w(d):
        try:
            return _bloch.winding_from_roots(coefficients(p.replace(delta=d)), tol)
        except OriginOnCurve:
            return None

    wl, wh = w(lo), w(hi)
    if wl == wh:
        raise InvalidParameters("bracket does not contain a winding change")
    while hi - lo > xtol:
        mid = 0.5 * (lo + hi)
        wm = w(mid)
        if wm is None:
            return mid, mid
        if wm == wl:
            lo = mid
        else:
            hi = mid
    return lo, hi


def detuning_sweep(p: LatticeParams, delta_list, n_list=(10, 20, 30, 40),
                   n_k: int = 1024, omega: float = 0.0, gamma: float = DEFAULT_GAMMA,
                   xtol: float = 1e-4, tol: Tolerances = DEFAULT) -> DetuningSweep:
    """Winding, zero-mode count and gain slope as functions of detuning.

    Every winding change between neighbouring detunings is bracketed by
    bisection; the change is consistent when the NH gap closes there.
    """
    deltas = sorted(float(d) for d in delta_list)
    rows = []
    for d in deltas:
        q = p.replace(delta=d)
        w, gap = _winding_at(q, n_k, tol)
        count = None
        if gap is not None and gap > 0:
            r = svd(build_obc(coefficients(q), max(n_list)))
            count = detect_zsm(r, gap, strict=False).count
        g = gain_scaling(q, omega, n_list, gamma, tol)
        rows.append(SweepRow(d, w, gap, count, g.forward_slope, bool(np.all(g.stable))))
    trans = []
    for a, b in zip(rows[:-1], rows[1:]):
        if a.winding != b.winding:
            lo, hi = locate_transition(p, a.delta, b.delta, xtol, tol)
            mid = 0.5 * (lo + hi)
            s = _bloch.sample(coefficients(p.replace(delta=mid)), n_k, tol)
            gap = _bloch.nh_gap(s, tol, check_gap=False)
            # the gap is 1-Lipschitz in delta, so it must be small inside the bracket
            trans.append(Transition(lo, hi, mid, gap, gap <= (hi - lo) + xtol))
    return DetuningSweep(tuple(rows), tuple(trans))
