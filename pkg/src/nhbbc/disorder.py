"""On-site decay-rate disorder and ensemble statistics of the OBC singular spectrum."""

from __future__ import annotations

import enum
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import bloch as _bloch
from .errors import InvalidParameters
from .model import LatticeParams, ObcHamiltonian, build_obc, coefficients
from .svd import detect_zsm, ipr, momentum_label, svd
from .tolerances import DEFAULT, Tolerances

SIGMA_BINS = 64


class DisorderKind(str, enum.Enum):
    IMAGINARY_ONSITE = "imaginary_onsite"


@dataclass(frozen=True)
class DisorderSpec:
    """Uniform real ``xi_j`` on ``[-w, w]`` entering as ``-i diag(xi)``."""

    w: float
    realizations: int = 100
    seed: int = 0
    kind: DisorderKind = DisorderKind.IMAGINARY_ONSITE

    def __post_init__(self):
        if not self.w >= 0:
            raise InvalidParameters("disorder width w must be >= 0")
        if int(self.realizations) < 1:
            raise InvalidParameters("realizations must be >= 1")
        if not 0 <= int(self.seed) < 2 ** 64:
            raise InvalidParameters("seed must be a 64-bit unsigned integer")
        object.__setattr__(self, "kind", DisorderKind(self.kind))
        object.__setattr__(self, "realizations", int(self.realizations))
        object.__setattr__(self, "seed", int(self.seed))

    def generators(self):
        """Independent counter-based streams, one per realization."""
        children = np.random.SeedSequence(self.seed).spawn(self.realizations)
        return [np.random.Generator(np.random.Philox(s)) for s in children]

    def draw(self, N, rng):
        return rng.uniform(-self.w, self.w, size=N)


def apply_disorder(H: ObcHamiltonian, xi) -> ObcHamiltonian:
    """``H - i diag(xi)``; the result is flagged as disordered."""
    xi = np.asarray(xi, dtype=float)
    if xi.shape != (H.N,):
        raise InvalidParameters(f"xi must have length N={H.N}")
    m = H.matrix - 1j * np.diag(xi)
    return ObcHamiltonian(H.N, m, H.coeffs, periodic=H.periodic,
                          disordered=H.disordered or bool(np.any(xi)))


@dataclass(frozen=True)
class Realization:
    sigma: np.ndarray = field(repr=False)
    k_label: np.ndarray = field(repr=False)
    zsm_count: int = 0
    zsm_edges: tuple = ()
    min_sigma: float = 0.0
    weyl_deviation: float = 0.0
    xi_max: float = 0.0
    bulk_ipr: float = 0.0


@dataclass(frozen=True)
class EnsembleStats:
    """Ensemble summary of disordered OBC singular spectra.

    ``sv_histogram[i, j]`` counts bulk singular values with momentum label in
    k-bin ``i`` and value in sigma-bin ``j``.
    """

    sv_histogram: np.ndarray = field(repr=False)
    k_edges: np.ndarray = field(repr=False)
    sigma_edges: np.ndarray = field(repr=False)
    zsm_survival: float
    min_sigma_distribution: np.ndarray = field(repr=False)
    zsm_counts: np.ndarray = field(repr=False)
    zsm_edges: tuple = ()
    weyl_deviation: np.ndarray = field(default=None, repr=False)
    xi_max: np.ndarray = field(default=None, repr=False)
    mean_bulk_ipr: float = 0.0
    clean_winding: object = None
    clean_gap: float | None = None
    robust: bool | None = None
    spec: DisorderSpec | None = None

    @property
    def weyl_bound_holds(self):
        return bool(np.all(self.weyl_deviation <= self.xi_max + 1e-12))

    def as_dict(self):
        w = self.clean_winding
        return {
            "realizations": int(self.zsm_counts.size),
            "w": self.spec.w if self.spec else None,
            "seed": self.spec.seed if self.spec else None,
            "zsm_survival": self.zsm_survival,
            "zsm_counts": self.zsm_counts.tolist(),
            "min_sigma": self.min_sigma_distribution.tolist(),
            "mean_bulk_ipr": self.mean_bulk_ipr,
            "weyl_bound_holds": self.weyl_bound_holds,
            "max_weyl_deviation": float(self.weyl_deviation.max()),
            "clean_winding": w.value if isinstance(w, _bloch.Marker) else w,
            "clean_gap": self.clean_gap,
            "robustness_criterion": self.robust,
            "zsm_threshold_rule": "sigma < gap/2 with the clean-system gap",
            "histogram": {"sigma_bins": SIGMA_BINS, "k_bins": int(self.k_edges.size - 1),
                          "sigma_range": [0.0, float(self.sigma_edges[-1])]},
        }


def _one(H0, sigma0, spec, rng, gap):
    xi = spec.draw(H0.N, rng)
    H = apply_disorder(H0, xi)
    r = svd(H)
    rep = detect_zsm(r, gap, strict=False) if gap else None
    count = rep.count if rep else 0
    ml = momentum_label(H, r, count)
    edges = tuple(m.right_edge for m in rep.modes) if rep else ()
    bulk = r.V[:, count:]
    return Realization(
        sigma=r.sigma, k_label=ml.k_label, zsm_count=count, zsm_edges=edges,
        min_sigma=float(r.sigma[0]),
        weyl_deviation=float(np.abs(r.sigma - sigma0).max()),
        xi_max=float(np.abs(xi).max()) if xi.size else 0.0,
        bulk_ipr=float(ipr(bulk).mean()) if bulk.shape[1] else 0.0)


def ensemble(p: LatticeParams, N: int, spec: DisorderSpec, workers: int | None = None,
             n_k: int | None = None, tol: Tolerances = DEFAULT) -> EnsembleStats:
    """Statistics over ``spec.realizations`` seeded disorder draws.

    Zero modes are detected against the clean-system NH gap.  Results are
    bit-identical for a given seed regardless of ``workers``.
    """
    c = coefficients(p)
    rep = _bloch.analyze(c, n_k, tol)
    if isinstance(rep.winding, _bloch.Marker) and rep.winding is _bloch.Marker.ORIGIN_ON_CURVE:
        raise _bloch.OriginOnCurve("clean system sits at a transition")
    gap = rep.nh_gap
    H0 = build_obc(c, N)
    sigma0 = svd(H0).sigma
    gens = spec.generators()
    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            reals = list(ex.map(lambda g: _one(H0, sigma0, spec, g, gap), gens))
    else:
        reals = [_one(H0, sigma0, spec, g, gap) for g in gens]

    k_edges = np.linspace(0, 2 * np.pi, N + 1)
    s_edges = np.linspace(0, 1.1 * sigma0.max(), SIGMA_BINS + 1)
    hist = np.zeros((N, SIGMA_BINS), dtype=np.int64)
    for r in reals:
        ok = ~np.isnan(r.k_label)
        h, _, _ = np.histogram2d(r.k_label[ok], r.sigma[ok], bins=[k_edges, s_edges])
        hist += h.astype(np.int64)
    counts = np.array([r.zsm_count for r in reals])
    clean_nu = rep.winding
    target = abs(clean_nu) if isinstance(clean_nu, int) else 0
    return EnsembleStats(
        sv_histogram=hist, k_edges=k_edges, sigma_edges=s_edges,
        zsm_survival=float(np.mean(counts == target)),
        min_sigma_distribution=np.array([r.min_sigma for r in reals]),
        zsm_counts=counts, zsm_edges=tuple(r.zsm_edges for r in reals),
        weyl_deviation=np.array([r.weyl_deviation for r in reals]),
        xi_max=np.array([r.xi_max for r in reals]),
        mean_bulk_ipr=float(np.mean([r.bulk_ipr for r in reals])),
        clean_winding=clean_nu, clean_gap=gap,
        robust=None if gap is None else bool(gap > spec.w), spec=spec)


def robustness_criterion(p: LatticeParams, w: float, n_k: int | None = None,
                         tol: Tolerances = DEFAULT) -> bool:
    """Sufficient condition ``gap > w`` for zero-mode survival.

    Raises
    ------
    DegenerateSpectrum
        If the clean band has no point gap.
    """
    s = _bloch.sample(coefficients(p), n_k, tol)
    return bool(_bloch.nh_gap(s, tol) > w)
