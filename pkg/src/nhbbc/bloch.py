"""Point-gap analysis of the periodic complex band ``H(k)``."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import (DegenerateSpectrum, GridTooCoarse, InvalidParameters,
                     NonIntegerWinding, OriginOnCurve)
from .model import ToeplitzCoefficients, bloch, bloch_derivative, build_obc
from .tolerances import DEFAULT, Tolerances

TWO_PI = 2.0 * np.pi


class Marker(str, enum.Enum):
    """Non-integer outcomes of the winding classification."""

    DEGENERATE = "degenerate"
    ORIGIN_ON_CURVE = "origin_on_curve"


def min_grid(L: int) -> int:
    return max(64, 8 * (2 * L + 1))


def default_grid(L: int, N: int | None = None) -> int:
    n = 1024 if N is None else max(1024, 32 * int(N))
    return max(n, min_grid(L))


def _ro(a):
    a = np.asarray(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class BlochSamples:
    """``H(k)`` on the uniform grid ``k_j = 2 pi j / N_k``.

    Attributes
    ----------
    k, h, sigma, phi : ndarray
        Momenta, band values, moduli and the unwrapped phase.
    reliable : ndarray of bool
        False where ``sigma < eps_zero * max(sigma)`` (phase meaningless).
    coeffs : ToeplitzCoefficients or None
        Generating coefficients, used for refinement and quadrature checks.
    """

    k: np.ndarray = field(repr=False)
    h: np.ndarray = field(repr=False)
    sigma: np.ndarray = field(repr=False)
    phi: np.ndarray = field(repr=False)
    reliable: np.ndarray = field(repr=False)
    coeffs: ToeplitzCoefficients | None = field(default=None, repr=False)

    @property
    def n_k(self):
        return self.k.size

    @classmethod
    def from_values(cls, h, coeffs=None, tol: Tolerances = DEFAULT):
        h = np.asarray(h, dtype=complex)
        n = h.size
        k = TWO_PI * np.arange(n) / n
        sigma = np.abs(h)
        phi = np.unwrap(np.angle(h))
        reliable = sigma >= tol.eps_zero * sigma.max() if n else sigma > 0
        return cls(_ro(k), _ro(h), _ro(sigma), _ro(phi), _ro(reliable), coeffs)

    def shifted(self, z) -> "BlochSamples":
        """Samples of ``H(k) - z``; coefficients follow when available."""
        c = None if self.coeffs is None else self.coeffs.shifted(z)
        return BlochSamples.from_values(self.h - z, c)


def sample(c: ToeplitzCoefficients, n_k: int | None = None,
           tol: Tolerances = DEFAULT) -> BlochSamples:
    """Evaluate the band on a uniform grid of ``n_k`` points."""
    n_k = default_grid(c.L) if n_k is None else int(n_k)
    if n_k < min_grid(c.L):
        raise GridTooCoarse(f"N_k={n_k} < {min_grid(c.L)} required for L={c.L}")
    k = TWO_PI * np.arange(n_k) / n_k
    return BlochSamples.from_values(bloch(c, k), c, tol)


def phase_steps(h):
    """Principal phase increments between neighbours, wrap step included."""
    return np.angle(np.roll(h, -1) / h)


def winding_raw(s: BlochSamples):
    """Return ``(nu, raw)`` where ``raw`` is the unrounded winding estimate.

    With coefficients the raw value is the periodic trapezoid rule for
    ``(1/2 pi i) int H'/H dk``, an estimate independent of phase unwrapping.
    Without coefficients it is the summed phase increments.
    """
    steps = phase_steps(s.h)
    total = steps.sum() / TWO_PI
    nu = int(np.rint(total))
    if s.coeffs is not None:
        dh = bloch_derivative(s.coeffs, s.k)
        raw = float(np.real(np.mean(dh / s.h) / 1j))
    else:
        raw = float(total)
    return nu, raw


def winding(s: BlochSamples, tol: Tolerances = DEFAULT) -> int:
    """Winding number of ``H(k)`` about the origin.

    Raises
    ------
    OriginOnCurve
        If ``min sigma <= eps_zero * max sigma``.
    NonIntegerWinding
        If the raw estimate differs from the integer by more than the
        residual tolerance, or the step sum and quadrature disagree.
    """
    smax = s.sigma.max()
    if smax == 0 or s.sigma.min() <= tol.eps_zero * smax:
        raise OriginOnCurve(f"min sigma = {s.sigma.min():.3e} (max {smax:.3e})")
    nu, raw = winding_raw(s)
    if abs(raw - nu) > tol.winding_residual:
        raise NonIntegerWinding(
            f"winding residual {abs(raw - nu):.2e} at N_k={s.n_k}; refine the grid")
    return nu


def winding_from_roots(c: ToeplitzCoefficients, tol: Tolerances = DEFAULT) -> int:
    """Winding number by the argument principle on the Laurent polynomial.

    ``H(z) = sum_l mu_l z^l`` has ``nu = Z - P`` with ``Z`` the number of zeros
    of ``z^L H(z)`` inside the unit disk and ``P = L``.  Grid free, so it
    stays reliable arbitrarily close to a transition.
    """
    poly = c.mu[::-1].copy()                   # highest power first
    # negligible end coefficients only add roots near 0 (inside) or near
    # infinity (outside); zeroing them keeps the companion matrix well scaled
    poly[np.abs(poly) < 1e-14 * np.abs(poly).max()] = 0.0
    poly = np.trim_zeros(poly, "f")
    roots = np.roots(poly) if poly.size > 1 else np.array([])
    if roots.size and np.min(np.abs(np.abs(roots) - 1.0)) < 1e-12:
        raise OriginOnCurve("a zero of H(z) lies on the unit circle")
    inside = int(np.sum(np.abs(roots) < 1.0))   # zero roots included by np.roots
    return inside - c.L


def enclosed_area(s: BlochSamples) -> float:
    """Signed shoelace area of the closed curve (counter-clockwise positive)."""
    x, y = s.h.real, s.h.imag
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


def point_gap_open(s: BlochSamples, tol: Tolerances = DEFAULT) -> bool:
    return abs(enclosed_area(s)) > tol.eps_area * s.sigma.max() ** 2


def nh_gap(s: BlochSamples, tol: Tolerances = DEFAULT, check_gap=True) -> float:
    """Minimal distance ``min_k |H(k)|`` of the band from the origin.

    Every coarse local minimum is refined with a bounded Brent search when
    coefficients are available.
    """
    if check_gap and not point_gap_open(s, tol):
        raise DegenerateSpectrum("band encloses no area; no NH gap assigned")
    sig = s.sigma
    best = float(sig.min())
    if s.coeffs is None:
        return best
    prev, nxt = np.roll(sig, 1), np.roll(sig, -1)
    cand = np.flatnonzero((sig <= prev) & (sig <= nxt))
    cand = cand[np.argsort(sig[cand])][:16]
    dk = TWO_PI / s.n_k
    c = s.coeffs

    def f(k):
        return abs(bloch(c, k)) ** 2

    for j in cand:
        k0 = s.k[j]
        res = minimize_scalar(f, bounds=(k0 - dk, k0 + dk), method="bounded",
                              options={"xatol": 1e-13 * max(1.0, abs(k0))})
        best = min(best, float(np.sqrt(max(res.fun, 0.0))))
    return best


@dataclass(frozen=True)
class NormalityReport:
    """Outcome of the banded-Toeplitz normality test.

    ``modulus_residual`` and ``phase_residual`` measure the two condition
    families separately; ``residual`` is the combined complex form
    ``max |conj(mu_l) mu_l' - mu_-l conj(mu_-l')| / scale**2``.
    """

    normal: bool
    residual: float
    modulus_residual: float
    phase_residual: float
    commutator_residual: float
    commutator_normal: bool

    def __bool__(self):
        return self.normal


def commutator_residual(a) -> float:
    a = np.asarray(a)
    nrm = np.linalg.norm(a, 2)
    if nrm == 0:
        return 0.0
    return float(np.linalg.norm(a @ a.conj().T - a.conj().T @ a, 2) / nrm ** 2)


def normality(c: ToeplitzCoefficients, tol: Tolerances = DEFAULT) -> NormalityReport:
    """Normality of the banded Toeplitz family generated by ``c``.

    The diagonal term is excluded from the pairwise conditions since a
    multiple of the identity never affects normality.  The verdict is
    cross-checked with ``||[H, H^dagger]|| / ||H||^2`` on an OBC matrix.
    """
    L = c.L
    p = np.array([c[l] for l in range(1, L + 1)])
    m = np.array([c[-l] for l in range(1, L + 1)])
    scale = max(np.abs(p).max(), np.abs(m).max())
    N = max(4 * (L + 1), 8)
    comm = commutator_residual(build_obc(c, N).matrix)
    if scale == 0:
        return NormalityReport(True, 0.0, 0.0, 0.0, comm, comm < tol.eps_norm)
    P = np.conj(p)[:, None] * p[None, :]
    M = m[:, None] * np.conj(m)[None, :]
    res = float(np.abs(P - M).max() / scale ** 2)
    mod = float(np.abs(np.abs(P) - np.abs(M)).max() / scale ** 2)
    # phase condition only where both partners are significant
    live = (np.abs(p) > tol.eps_norm * scale) & (np.abs(m) > tol.eps_norm * scale)
    psi = np.angle(p[live]) + np.angle(m[live])
    if psi.size > 1:
        d = np.angle(np.exp(1j * (psi[:, None] - psi[None, :])))
        ph = float(np.abs(d).max())
    else:
        ph = 0.0
    return NormalityReport(res < tol.eps_norm, res, mod, ph, comm, comm < tol.eps_norm)


@dataclass(frozen=True)
class ReciprocityReport:
    reciprocal: bool
    k0: float
    residual: float

    def __bool__(self):
        return self.reciprocal


def _analytic_centres(c: ToeplitzCoefficients):
    """Centres forced by ``mu_l exp(i l k0) = mu_-l exp(-i l k0)`` for the
    dominant coefficient pair."""
    L = c.L
    pairs = [(l, c[l], c[-l]) for l in range(1, L + 1)]
    pairs = [q for q in pairs if abs(q[1]) > 0 and abs(q[2]) > 0]
    if not pairs:
        return []
    l, a, b = max(pairs, key=lambda q: abs(q[1]) * abs(q[2]))
    base = (np.angle(b) - np.angle(a)) / (2 * l)
    return [(base + np.pi * r / l) % TWO_PI for r in range(2 * l)]


def reciprocity(s: BlochSamples, tol: Tolerances = DEFAULT) -> ReciprocityReport:
    """Search for a centre ``k0`` with ``H(k0 + k) = H(k0 - k)``."""
    if s.n_k % 2:
        raise InvalidParameters("reciprocity test needs an even N_k")
    h = s.h
    smax = s.sigma.max()
    if smax == 0:
        return ReciprocityReport(True, 0.0, 0.0)
    n = h.size
    j = np.arange(n)
    best, k0 = np.inf, 0.0
    for half in (0, 1):
        for start in range(0, n, 256):
            c0 = np.arange(start, min(start + 256, n))
            plus = h[(c0[:, None] + half + j[None, :]) % n]
            minus = h[(c0[:, None] - j[None, :]) % n]
            r = np.abs(plus - minus).max(axis=1)
            i = int(np.argmin(r))
            if r[i] < best:
                best, k0 = float(r[i]), float(s.k[c0[i]] + half * np.pi / n)
    if s.coeffs is not None:
        for kc in _analytic_centres(s.coeffs):
            r = float(np.abs(bloch(s.coeffs, kc + s.k) - bloch(s.coeffs, kc - s.k)).max())
            if r < best:
                best, k0 = r, float(kc)
    res = best / smax
    return ReciprocityReport(res < tol.eps_rec, float(k0), res)


@dataclass(frozen=True)
class TopologyReport:
    """Summary of the point-gap classification of one band."""

    winding: int | Marker
    nh_gap: float | None
    enclosed_area: float
    point_gap_open: bool
    normal: bool
    reciprocal: bool
    k0: float | None = None
    min_sigma: float = 0.0
    max_sigma: float = 0.0
    normality_residual: float = 0.0
    reciprocity_residual: float = 0.0
    n_k: int = 0

    def as_dict(self):
        w = self.winding.value if isinstance(self.winding, Marker) else int(self.winding)
        return {
            "winding": w,
            "nh_gap": self.nh_gap,
            "enclosed_area": self.enclosed_area,
            "point_gap_open": self.point_gap_open,
            "normal": self.normal,
            "reciprocal": self.reciprocal,
            "symmetry_center_k0": self.k0,
            "min_sigma": self.min_sigma,
            "max_sigma": self.max_sigma,
            "normality_residual": self.normality_residual,
            "reciprocity_residual": self.reciprocity_residual,
            "N_k": self.n_k,
        }


def analyze(c: ToeplitzCoefficients, n_k: int | None = None,
            tol: Tolerances = DEFAULT, max_refine: int = 1 << 18) -> TopologyReport:
    """Full classification: area, gap, winding, normality and reciprocity.

    A band without interior is reported with ``Marker.DEGENERATE`` and no NH
    gap; a gapless point-gapped band with ``Marker.ORIGIN_ON_CURVE``.
    """
    s = sample(c, n_k if n_k is None or n_k % 2 == 0 else n_k + 1, tol)
    # refine the grid when the quadrature check rejects a coarse one
    while True:
        try:
            if point_gap_open(s, tol):
                winding(s, tol)
            break
        except OriginOnCurve:
            break
        except NonIntegerWinding:
            if s.n_k >= max_refine:
                raise
            s = sample(c, 4 * s.n_k, tol)
    area = enclosed_area(s)
    gap_open = point_gap_open(s, tol)
    nrm = normality(c, tol)
    rec = reciprocity(s, tol)
    gap = None
    if not gap_open:
        w = Marker.DEGENERATE
    else:
        try:
            w = winding(s, tol)
        except OriginOnCurve:
            w = Marker.ORIGIN_ON_CURVE
        gap = nh_gap(s, tol)
    return TopologyReport(
        winding=w, nh_gap=gap, enclosed_area=area, point_gap_open=bool(gap_open),
        normal=bool(nrm.normal), reciprocal=bool(rec.reciprocal),
        k0=rec.k0 if rec.reciprocal else None,
        min_sigma=float(s.sigma.min()), max_sigma=float(s.sigma.max()),
        normality_residual=float(nrm.residual), reciprocity_residual=float(rec.residual),
        n_k=s.n_k)
