"""Singular value decomposition of OBC Hamiltonians and zero singular modes."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
from scipy.optimize import linear_sum_assignment

from .errors import (AmbiguousSeparation, DefectiveWarning, EtaUnit,
                     InvalidParameters, NotAtExceptionalPoint, NumericalFailure)
from .model import ObcHamiltonian, ToeplitzCoefficients
from .precision import bandwidths, refine_smallest
from .tolerances import DEFAULT, Tolerances

# singular values below this fraction of ||H|| are recomputed in extended precision
REFINE_BELOW = 1e-9
MAX_REFINED = 16


def _matrix(H):
    return H.matrix if isinstance(H, ObcHamiltonian) else np.asarray(H, dtype=complex)


def _ro(a):
    a = np.asarray(a)
    a.setflags(write=False)
    return a


def _phase_fix(v, rel=1e-8):
    """Phase making the first significant component of ``v`` real positive."""
    a = np.abs(v)
    j = int(np.argmax(a > rel * a.max())) if a.max() > 0 else 0
    z = v[j]
    return np.conj(z) / abs(z) if z != 0 else 1.0


@dataclass(frozen=True)
class SvdResult:
    """``H = U diag(sigma) V^dagger`` with ascending ``sigma``.

    ``refined`` counts how many of the smallest triplets were recomputed in
    extended precision.
    """

    sigma: np.ndarray = field(repr=False)
    U: np.ndarray = field(repr=False)
    V: np.ndarray = field(repr=False)
    refined: int = 0

    @property
    def N(self):
        return self.sigma.size

    def residuals(self, H):
        """Relative residuals of the defining relations (operator norms)."""
        a = _matrix(H)
        n = np.linalg.norm(a, 2) or 1.0
        U, V, s = self.U, self.V, self.sigma
        eye = np.eye(self.N)
        return {
            "unitary_U": float(np.linalg.norm(U.conj().T @ U - eye, 2)),
            "unitary_V": float(np.linalg.norm(V.conj().T @ V - eye, 2)),
            "reconstruction": float(np.linalg.norm(a - (U * s) @ V.conj().T, 2) / n),
            "right": float(np.linalg.norm(a @ V - U * s, 2) / n),
            "left": float(np.linalg.norm(a.conj().T @ U - V * s, 2) / n),
        }


def svd(H, tol: Tolerances = DEFAULT, refine: bool = True) -> SvdResult:
    """Full SVD with ascending singular values and phase-fixed vectors.

    Parameters
    ----------
    H : ObcHamiltonian or array_like
    refine : bool
        Recompute exponentially small singular triplets (below
        ``REFINE_BELOW * ||H||``) in extended precision.  Only applied to
        banded matrices.

    Raises
    ------
    NumericalFailure
        Non-finite input or non-convergence of the LAPACK driver.
    """
    a = _matrix(H)
    if not np.all(np.isfinite(a)):
        raise NumericalFailure("matrix has non-finite entries")
    try:
        u, s, vh = sla.svd(a, lapack_driver="gesdd")
    except (np.linalg.LinAlgError, ValueError):
        try:
            u, s, vh = sla.svd(a, lapack_driver="gesvd")
        except (np.linalg.LinAlgError, ValueError) as exc:
            raise NumericalFailure(f"SVD did not converge: {exc}") from exc
    s = s[::-1].copy()
    U = u[:, ::-1].copy()
    V = vh.conj().T[:, ::-1].copy()
    n_ref = 0
    n = a.shape[0]
    if refine and n > 2 and s[-1] > 0:
        kl, ku = bandwidths(a)
        small = int(np.sum(s < REFINE_BELOW * s[-1]))
        if 0 < small <= MAX_REFINED and kl + ku <= max(2, n // 4):
            # include one buffer vector so the Ritz step separates the cluster
            r = min(small + 1, n)
            try:
                rs, rU, rV = refine_smallest(a, V[:, :r])
            except ZeroDivisionError:
                rs = None
            if rs is not None:
                s[:small], U[:, :small], V[:, :small] = rs[:small], rU[:, :small], rV[:, :small]
                n_ref = small
    order = np.argsort(s, kind="stable")
    s, U, V = s[order], U[:, order], V[:, order]
    for j in range(n):
        ph = _phase_fix(V[:, j])
        V[:, j] *= ph
        U[:, j] *= ph
    # exact ties: deterministic lexicographic ordering of the fixed vectors;
    # values inside a tie cluster agree to 1e-12 and keep their sorted order
    order = []
    for grp in _clusters(s, rel=1e-12, relative_to_value=True):
        order += sorted(grp, key=lambda j: tuple(np.round(-np.abs(V[:, j]), 10)))
    U, V = U[:, order], V[:, order]
    return SvdResult(_ro(s), _ro(U), _ro(V), n_ref)


def _fit_decay(vec, trim=0.1, floor=1e-12):
    """Least-squares decay of ``log|vec|`` over the inner sites.

    Returns ``(edge, rate)`` with ``rate`` positive for decay away from
    ``edge`` (the side of the maximal component).
    """
    a = np.abs(np.asarray(vec))
    n = a.size
    edge = "left" if int(np.argmax(a)) < n / 2 else "right"
    lo, hi = int(math.floor(trim * n)), n - int(math.floor(trim * n))
    m = np.arange(lo, hi)
    seg = a[lo:hi]
    keep = seg > floor * a.max()
    if keep.sum() < 3:
        return edge, float("nan")
    slope = np.polyfit(m[keep], np.log(seg[keep]), 1)[0]
    rate = -slope if edge == "left" else slope
    return edge, float(rate)


@dataclass(frozen=True)
class ZsmMode:
    index: int
    sigma: float
    right_edge: str
    right_rate: float
    left_edge: str
    left_rate: float


@dataclass(frozen=True)
class ZsmReport:
    """Zero singular values below ``gap / 2`` and their localization."""

    count: int
    zsv: tuple
    modes: tuple
    gap_ratio: float
    gap: float
    threshold: float
    ambiguous: tuple = ()
    rule: str = "sigma < gap/2; ambiguous band [gap/2, gap)"

    @property
    def localization(self):
        return self.modes

    def as_dict(self):
        return {
            "count": self.count,
            "zsv": list(self.zsv),
            "gap": self.gap,
            "threshold": self.threshold,
            "gap_ratio": self.gap_ratio,
            "ambiguous": list(self.ambiguous),
            "rule": self.rule,
            "modes": [m.__dict__ for m in self.modes],
        }


def detect_zsm(r: SvdResult, gap: float, strict: bool = True) -> ZsmReport:
    """Classify singular values against the NH gap.

    Raises
    ------
    AmbiguousSeparation
        If ``strict`` and some singular value lies in ``[gap/2, gap)``; the
        report is attached to the exception.
    """
    if not gap > 0:
        raise InvalidParameters("gap must be positive")
    s = r.sigma
    thr = 0.5 * gap
    idx = np.flatnonzero(s < thr)
    amb = tuple(float(x) for x in s[(s >= thr) & (s < gap)])
    modes = []
    for j in idx:
        re, rr = _fit_decay(r.V[:, j])
        le, lr = _fit_decay(r.U[:, j])
        modes.append(ZsmMode(int(j), float(s[j]), re, rr, le, lr))
    bulk = s[s >= thr]
    ratio = float(s[idx].max() / bulk.min()) if idx.size and bulk.size else 0.0
    rep = ZsmReport(int(idx.size), tuple(float(x) for x in s[idx]), tuple(modes),
                    ratio, float(gap), thr, amb)
    if strict and amb:
        raise AmbiguousSeparation(
            f"{len(amb)} singular value(s) in [gap/2, gap) = [{thr:.4g}, {gap:.4g})", rep)
    return rep


def analytic_hn_zsm(c: ToeplitzCoefficients, N: int, tol: Tolerances = DEFAULT):
    """Closed-form zero singular mode of the unidirectional chain.

    For ``mu_{+1} = 0``: ``eta = mu_{-1} / mu_0``,
    ``v0[m] = n (-eta)**(m-1)`` and ``u0[m] = n (-conj(eta))**(N-m)`` with
    ``n = sqrt((1 - |eta|^2) / (1 - |eta|^(2N)))`` (1-based ``m``).  The
    mirrored case ``mu_{-1} = 0`` is handled by site inversion.

    Returns
    -------
    v0, u0 : ndarray
        Unit-norm right and left vectors.
    eta : complex
    """
    if c.L != 1:
        raise NotAtExceptionalPoint("closed form requires L = 1")
    mp, mm, m0 = c[1], c[-1], c[0]
    mirrored = False
    if abs(mp) > tol.eps_zero * abs(mm):
        if abs(mm) <= tol.eps_zero * abs(mp):
            mirrored = True
            mp, mm = mm, mp
        else:
            raise NotAtExceptionalPoint(f"|mu_+1| = {abs(mp):.3g} is not zero")
    if m0 == 0:
        raise EtaUnit("mu_0 = 0; eta undefined")
    eta = mm / m0
    a = abs(eta)
    if abs(a - 1.0) <= 1e-12:
        raise EtaUnit("|eta| = 1: normalization singular")
    m = np.arange(N)
    # log-space normalization avoids overflow for large N
    v = (-eta) ** m.astype(float)
    u = (-np.conj(eta)) ** (N - 1 - m).astype(float)
    if a > 1:
        lognorm = 0.5 * (np.log(a * a - 1) - np.log(a ** (2 * N) - 1)) if a ** (2 * N) < 1e300 \
            else 0.5 * np.log(a * a - 1) - N * np.log(a)
    else:
        lognorm = 0.5 * (np.log(1 - a * a) - np.log1p(-(a ** (2 * N))))
    nrm = np.exp(lognorm)
    v0, u0 = nrm * v, nrm * u
    if mirrored:
        v0, u0 = v0[::-1].copy(), u0[::-1].copy()
    return v0, u0, complex(eta)


@dataclass(frozen=True)
class MomentumLabeledSpectrum:
    """One ``(k_label, sigma)`` pair per singular value; edge modes carry NaN."""

    k_label: np.ndarray = field(repr=False)
    sigma: np.ndarray = field(repr=False)
    edge: np.ndarray = field(repr=False)

    @property
    def entries(self):
        return list(zip(self.k_label.tolist(), self.sigma.tolist()))


def _clusters(s, rel=1e-9, relative_to_value=False):
    """Runs of consecutive (ascending) values closer than ``rel``."""
    scale = s.max() if s.size else 1.0
    groups, cur = [], [0]
    for j in range(1, s.size):
        ref = s[j] if relative_to_value else scale
        if s[j] - s[j - 1] <= rel * ref:
            cur.append(j)
        else:
            groups.append(cur)
            cur = [j]
    if s.size:
        groups.append(cur)
    return groups


def momentum_label(H, r: SvdResult, zsm_count: int = 0) -> MomentumLabeledSpectrum:
    """Label singular values by the dominant Fourier momentum of ``v_j``.

    Within clusters of (numerically) degenerate singular values the momenta
    are assigned jointly, so plane-wave subspaces map bijectively onto grid
    momenta.  The ``zsm_count`` smallest values are marked as edge modes.
    """
    n = r.N
    F = np.abs(np.fft.fft(r.V, axis=0)) ** 2   # rows: momenta 2 pi q / n
    kgrid = 2 * np.pi * np.arange(n) / n
    labels = np.full(n, np.nan)
    edge = np.zeros(n, dtype=bool)
    edge[:zsm_count] = True
    bulk = np.arange(zsm_count, n)
    for grp in _clusters(r.sigma[bulk]):
        cols = bulk[grp]
        W = F[:, cols].T          # (d, n)
        if len(cols) == 1:
            labels[cols[0]] = kgrid[int(np.argmax(W[0]))]
            continue
        top = np.argsort(-W.sum(axis=0), kind="stable")[:len(cols)]
        ri, ci = linear_sum_assignment(-W[:, top])
        labels[cols[ri]] = kgrid[top[ci]]
    return MomentumLabeledSpectrum(_ro(labels), _ro(r.sigma.copy()), _ro(edge))


def ipr(vecs):
    """Inverse participation ratio ``sum |v|^4 / (sum |v|^2)^2`` per column."""
    p = np.abs(np.asarray(vecs)) ** 2
    return (p ** 2).sum(axis=0) / p.sum(axis=0) ** 2


def edge_weight(vecs, fraction=0.2):
    """Largest weight fraction within ``ceil(fraction N)`` sites of either edge."""
    p = np.abs(np.asarray(vecs)) ** 2
    if p.ndim == 1:
        p = p[:, None]
    n = p.shape[0]
    w = max(1, int(math.ceil(fraction * n)))
    tot = p.sum(axis=0)
    return np.maximum(p[:w].sum(axis=0), p[-w:].sum(axis=0)) / tot


def _similarity_exponent(a):
    """``s`` minimizing the Frobenius norm of ``D^-1 a D``, ``D = diag(e^{s m})``."""
    n = a.shape[0]
    r, c = np.nonzero(a)
    if r.size == 0:
        return 0.0
    d = (c - r).astype(float)
    w = np.abs(a[r, c]) ** 2
    if not (np.any(d > 0) and np.any(d < 0)):
        return 0.0
    from scipy.optimize import minimize_scalar
    from scipy.special import logsumexp

    cap = 300.0 / max(n, 1)
    res = minimize_scalar(lambda s: logsumexp(2 * s * d, b=w), bounds=(-cap, cap),
                          method="bounded", options={"xatol": 1e-12})
    return float(res.x)


def eigenvalues(H) -> np.ndarray:
    """Eigenvalues robust to strong non-normality of banded Toeplitz matrices.

    A diagonal similarity removes the exponential imbalance between upper
    and lower bands before calling LAPACK; triangular matrices return their
    diagonal exactly.
    """
    return eigendecomposition(H, vectors=False).values


@dataclass(frozen=True)
class Eigensystem:
    """Eigenvalues with paired right and left eigenvectors.

    ``left[:, j]`` satisfies ``H^dagger left_j = conj(values_j) left_j``.
    """

    values: np.ndarray = field(repr=False)
    right: np.ndarray | None = field(default=None, repr=False)
    left: np.ndarray | None = field(default=None, repr=False)
    condition: float = float("nan")
    similarity_exponent: float = 0.0

    @property
    def ipr_right(self):
        return ipr(self.right)

    @property
    def ipr_left(self):
        return ipr(self.left)

    def edge_weight_right(self, fraction=0.2):
        return edge_weight(self.right, fraction)

    def edge_weight_left(self, fraction=0.2):
        return edge_weight(self.left, fraction)


def eigendecomposition(H, vectors: bool = True, warn_cond: float = 1e12) -> Eigensystem:
    """Eigenvalues and paired right/left eigenvectors.

    Warns with ``DefectiveWarning`` when the condition number of the right
    eigenvector matrix exceeds ``warn_cond``.
    """
    a = _matrix(H)
    if not np.all(np.isfinite(a)):
        raise NumericalFailure("matrix has non-finite entries")
    n = a.shape[0]
    triangular = not np.any(np.tril(a, -1)) or not np.any(np.triu(a, 1))
    s = _similarity_exponent(a)
    m = np.arange(n)
    scaled = a * np.exp(s * (m[None, :] - m[:, None]))
    try:
        if vectors:
            w, vl, vr = sla.eig(scaled, left=True, right=True)
        else:
            w = sla.eigvals(scaled)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise NumericalFailure(f"eigensolver failed: {exc}") from exc
    if triangular:
        d = np.diag(a).copy()
        # pair LAPACK eigenvalues with exact diagonal entries
        ri, ci = linear_sum_assignment(np.abs(w[:, None] - d[None, :]))
        w = w.copy()
        w[ri] = d[ci]
    if not vectors:
        return Eigensystem(_ro(w), similarity_exponent=s)
    mref = m - (n - 1) / 2
    with np.errstate(over="ignore", under="ignore"):
        right = vr * np.exp(s * mref)[:, None]
        left = vl * np.exp(-s * mref)[:, None]
    right = right / np.linalg.norm(right, axis=0)
    left = left / np.linalg.norm(left, axis=0)
    with np.errstate(all="ignore"):
        cond = float(np.linalg.cond(right))
    if not np.isfinite(cond) or cond > warn_cond:
        warnings.warn(f"eigenvector matrix condition number {cond:.3g} > {warn_cond:.0e}; "
                      "matrix is close to defective", DefectiveWarning, stacklevel=2)
    return Eigensystem(_ro(w), _ro(right), _ro(left), cond, s)
