"""Doubled Hermitian (chiral) form of a non-Hermitian band.

The OBC matrix is ``[[0, H^dagger], [H, 0]]`` with all A sites first and all
B sites second.  Its eigenvectors carry right singular vectors on the A
sublattice and left singular vectors on the B sublattice.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .bloch import TWO_PI, min_grid
from .errors import GridTooCoarse, NonIntegerWinding, OriginOnCurve
from .model import ObcHamiltonian, ToeplitzCoefficients, bloch
from .tolerances import DEFAULT, Tolerances


def _ro(a):
    a = np.asarray(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class GsshObc:
    """Chiral doubled matrix, sublattice ordering ``A_1..A_N, B_1..B_N``."""

    N: int
    matrix: np.ndarray = field(repr=False)
    ordering: str = "A sites then B sites"

    def chiral_operator(self):
        return np.diag(np.r_[np.ones(self.N), -np.ones(self.N)])

    def spectrum(self):
        return np.linalg.eigvalsh(self.matrix)

    def eigh(self):
        return np.linalg.eigh(self.matrix)


def double(H) -> GsshObc:
    """Doubled matrix ``[[0, H^dagger], [H, 0]]`` of an OBC Hamiltonian."""
    a = H.matrix if isinstance(H, ObcHamiltonian) else np.atleast_2d(np.asarray(H, complex))
    n = a.shape[0]
    m = np.zeros((2 * n, 2 * n), dtype=complex)
    m[:n, n:] = a.conj().T
    m[n:, :n] = a
    return GsshObc(n, _ro(m))


@dataclass(frozen=True)
class GsshBloch:
    k: float
    matrix: np.ndarray = field(repr=False)


def gssh_bloch(c: ToeplitzCoefficients, k: float) -> GsshBloch:
    h = bloch(c, k)
    return GsshBloch(float(k), _ro(np.array([[0, np.conj(h)], [h, 0]], dtype=complex)))


@dataclass(frozen=True)
class GsshBands:
    """Bands ``E_-(k) <= E_+(k)`` with eigenvectors ``(a, b)`` per momentum."""

    k: np.ndarray = field(repr=False)
    e_minus: np.ndarray = field(repr=False)
    e_plus: np.ndarray = field(repr=False)
    psi_minus: np.ndarray = field(repr=False)
    psi_plus: np.ndarray = field(repr=False)


def gssh_bands(c: ToeplitzCoefficients, n_k: int) -> GsshBands:
    """Diagonalize the 2x2 Bloch matrices on a uniform grid."""
    n_k = int(n_k)
    if n_k < min_grid(c.L):
        raise GridTooCoarse(f"N_k={n_k} < {min_grid(c.L)}")
    k = TWO_PI * np.arange(n_k) / n_k
    h = bloch(c, k)
    m = np.zeros((n_k, 2, 2), dtype=complex)
    m[:, 0, 1] = np.conj(h)
    m[:, 1, 0] = h
    e, vec = np.linalg.eigh(m)
    return GsshBands(_ro(k), _ro(e[:, 0]), _ro(e[:, 1]),
                     _ro(vec[:, :, 0]), _ro(vec[:, :, 1]))


def zak_phase_difference(bands: GsshBands, which: str = "plus") -> float:
    """Gauge-invariant Berry phase difference of the two sublattice spinors.

    Each link contributes ``arg(<b_j|b_j+1> <a_j+1|a_j>)`` built from the
    unit-normalized sublattice components, which is invariant under any
    k-dependent phase of the eigenvector.  Summing per-link phases (rather
    than taking the phase of the full Wilson-loop product) keeps the
    integer multiple of ``2 pi``; the total equals ``2 pi nu``.
    """
    psi = bands.psi_plus if which == "plus" else bands.psi_minus
    a = psi[:, 0] / np.abs(psi[:, 0])
    b = psi[:, 1] / np.abs(psi[:, 1])
    an, bn = np.roll(a, -1), np.roll(b, -1)
    links = np.conj(b) * bn * np.conj(an) * a
    return 0.5 * float(np.angle(links).sum())


def zak_invariant(c: ToeplitzCoefficients, n_k: int = 1024,
                  tol: Tolerances = DEFAULT) -> int:
    """Zak-phase difference divided by ``pi``; equals the winding number.

    Raises
    ------
    OriginOnCurve
        If the band touches the origin (sublattice spinors undefined).
    """
    bands = gssh_bands(c, n_k)
    if bands.e_plus.min() <= tol.eps_zero * bands.e_plus.max():
        raise OriginOnCurve("GSSH bands touch zero energy")
    vals = [zak_phase_difference(bands, w) / np.pi for w in ("plus", "minus")]
    nu = int(np.rint(vals[0]))
    if any(abs(v - nu) > tol.winding_residual for v in vals):
        raise NonIntegerWinding(f"Zak phase difference / pi = {vals}")
    return nu
