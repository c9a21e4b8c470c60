"""Toeplitz Hamiltonians of driven-dissipative cavity arrays.

All internal quantities are in reduced units where the on-site dissipation
``gamma_eff`` equals one.  Sites are 0-based internally; ``H[m, m + l] = mu_l``
so that ``mu_{+1}`` sits on the super-diagonal.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .errors import InvalidParameters, NonPositiveGammaEff, SizeTooSmall


def _frozen(a, dtype=complex):
    a = np.array(a, dtype=dtype)
    a.setflags(write=False)
    return a


def _as_list(x, L=None, name="value", dtype=float):
    if np.isscalar(x):
        x = [x]
    out = [dtype(v) for v in x]
    if L is not None and len(out) != L:
        raise InvalidParameters(f"{name} must have length L={L}, got {len(out)}")
    return out


@dataclass(frozen=True)
class LatticeParams:
    """Reduced parameters of the array.

    Parameters
    ----------
    L : int
        Coupling range.
    lam : sequence of complex
        Coherent hoppings ``2 J_l / gamma_eff``.
    cooperativity : sequence of float
        Dissipative couplings ``Gamma_l / gamma_eff``.
    theta : sequence of float
        Fluxes in radians.
    delta : float
        Drive-cavity detuning in units of ``gamma_eff``.
    gamma_eff : float
        Dimensionful on-site dissipation, only used to restore units.
    """

    L: int
    lam: tuple
    cooperativity: tuple
    theta: tuple
    delta: float = 0.0
    gamma_eff: float = 1.0

    def __post_init__(self):
        if int(self.L) != self.L or self.L < 1:
            raise InvalidParameters(f"L must be a positive integer, got {self.L!r}")
        object.__setattr__(self, "L", int(self.L))
        lam = tuple(_as_list(self.lam, self.L, "lambda", complex))
        coop = tuple(_as_list(self.cooperativity, self.L, "cooperativity", float))
        theta = tuple(_as_list(self.theta, self.L, "theta", float))
        if any(c < 0 for c in coop):
            raise InvalidParameters("cooperativity entries must be non-negative")
        vals = [abs(v) for v in lam] + list(coop) + [abs(t) for t in theta]
        if not all(math.isfinite(v) for v in vals) or not math.isfinite(self.delta):
            raise InvalidParameters("parameters must be finite")
        if not (self.gamma_eff > 0):
            raise NonPositiveGammaEff(f"gamma_eff must be > 0, got {self.gamma_eff}")
        object.__setattr__(self, "lam", lam)
        object.__setattr__(self, "cooperativity", coop)
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "delta", float(self.delta))
        object.__setattr__(self, "gamma_eff", float(self.gamma_eff))

    def replace(self, **kw) -> "LatticeParams":
        d = dict(L=self.L, lam=self.lam, cooperativity=self.cooperativity,
                 theta=self.theta, delta=self.delta, gamma_eff=self.gamma_eff)
        d.update(kw)
        return LatticeParams(**d)

    def as_dict(self):
        lam = [v.real if v.imag == 0 else [v.real, v.imag] for v in self.lam]
        return {"L": self.L, "lambda": lam, "cooperativity": list(self.cooperativity),
                "theta": list(self.theta), "delta": self.delta,
                "gamma_eff": self.gamma_eff}


@dataclass(frozen=True)
class RawRates:
    """Dimensionful rates of the cavity array (any consistent rate unit)."""

    J: tuple
    Gamma: tuple
    theta: tuple
    gamma: float
    kappa: float = 0.0
    omega_c: float = 0.0
    omega_d: float = 0.0

    def __post_init__(self):
        J = tuple(_as_list(self.J, None, "J"))
        L = len(J)
        if L < 1:
            raise InvalidParameters("J must contain at least one entry")
        object.__setattr__(self, "J", J)
        object.__setattr__(self, "Gamma", tuple(_as_list(self.Gamma, L, "Gamma")))
        object.__setattr__(self, "theta", tuple(_as_list(self.theta, L, "theta")))
        if any(g < 0 for g in self.Gamma) or self.gamma < 0 or self.kappa < 0:
            raise InvalidParameters("Gamma, gamma and kappa must be non-negative")

    @property
    def L(self):
        return len(self.J)

    @property
    def gamma_eff(self):
        return (self.gamma - self.kappa + 2.0 * sum(self.Gamma)) / 2.0


def reduce(raw: RawRates) -> LatticeParams:
    """Convert raw rates into reduced parameters.

    Raises
    ------
    NonPositiveGammaEff
        If ``(gamma - kappa + 2 sum Gamma) / 2 <= 0``.
    """
    g = raw.gamma_eff
    if not g > 0:
        raise NonPositiveGammaEff(
            f"gamma_eff = (gamma - kappa + 2*sum(Gamma))/2 = {g} must be > 0")
    return LatticeParams(
        L=raw.L,
        lam=[2.0 * j / g for j in raw.J],
        cooperativity=[G / g for G in raw.Gamma],
        theta=list(raw.theta),
        delta=(raw.omega_d - raw.omega_c) / g,
        gamma_eff=g,
    )


@dataclass(frozen=True)
class ToeplitzCoefficients:
    """Band coefficients ``mu_l`` for ``l = -L..L``.

    ``mu`` is stored as an array of length ``2L+1`` with ``mu[l + L]`` the
    coefficient of ``exp(i k l)``.
    """

    mu: np.ndarray = field(repr=False)

    def __post_init__(self):
        mu = np.asarray(self.mu, dtype=complex).ravel()
        if mu.size < 3 or mu.size % 2 == 0:
            raise InvalidParameters("mu must have odd length 2L+1 with L >= 1")
        if not np.all(np.isfinite(mu)):
            raise InvalidParameters("mu must be finite")
        object.__setattr__(self, "mu", _frozen(mu))

    @classmethod
    def from_mapping(cls, mapping: Mapping[int, complex], L: int | None = None):
        """Build from ``{l: mu_l}``; missing entries are zero."""
        span = max([abs(int(l)) for l in mapping] + [1])
        L = span if L is None else L
        if span > L:
            raise InvalidParameters(f"coefficient index {span} exceeds L={L}")
        mu = np.zeros(2 * L + 1, dtype=complex)
        for l, v in mapping.items():
            mu[int(l) + L] = v
        return cls(mu)

    @property
    def L(self) -> int:
        return (self.mu.size - 1) // 2

    def __getitem__(self, l: int) -> complex:
        if abs(l) > self.L:
            return 0j
        return complex(self.mu[l + self.L])

    @property
    def ells(self):
        return np.arange(-self.L, self.L + 1)

    def as_dict(self):
        return {int(l): complex(v) for l, v in zip(self.ells, self.mu)}

    def shifted(self, omega: complex) -> "ToeplitzCoefficients":
        """Coefficients of ``H - omega``."""
        mu = self.mu.copy()
        mu[self.L] -= omega
        return ToeplitzCoefficients(mu)

    def adjoint(self) -> "ToeplitzCoefficients":
        """Coefficients of the matrix adjoint, ``mu_l -> conj(mu_{-l})``."""
        return ToeplitzCoefficients(np.conj(self.mu[::-1]))

    def reflected(self) -> "ToeplitzCoefficients":
        """Coefficients after site inversion ``m -> N-1-m``, ``mu_l -> mu_{-l}``."""
        return ToeplitzCoefficients(self.mu[::-1].copy())

    def is_hermitian(self, tol=0.0) -> bool:
        return bool(np.max(np.abs(self.mu - np.conj(self.mu[::-1]))) <= tol)


def coefficients(p: LatticeParams) -> ToeplitzCoefficients:
    """Band coefficients in reduced units.

    ``mu_0 = -delta - i`` and, for ``l = 1..L``,
    ``mu_{+l} = (lam_l - i C_l exp(-i theta_l)) / 2`` and
    ``mu_{-l} = (conj(lam_l) - i C_l exp(+i theta_l)) / 2``.

    The conjugate on the coherent part of ``mu_{-l}`` keeps the coherent
    hopping Hermitian for complex ``lam_l``; for real ``lam_l`` it is a no-op.
    """
    L = p.L
    mu = np.zeros(2 * L + 1, dtype=complex)
    mu[L] = -p.delta - 1j
    for l in range(1, L + 1):
        lam = p.lam[l - 1]
        C = p.cooperativity[l - 1]
        th = p.theta[l - 1]
        mu[L + l] = 0.5 * (lam - 1j * C * np.exp(-1j * th))
        mu[L - l] = 0.5 * (np.conj(lam) - 1j * C * np.exp(1j * th))
    # remove round-off from trig of exact angles (cos(pi/2) = 6e-17) so that
    # exceptional points give exactly triangular matrices
    scale = np.abs(mu).max()
    re, im = mu.real.copy(), mu.imag.copy()
    re[np.abs(re) < 1e-14 * scale] = 0.0
    im[np.abs(im) < 1e-14 * scale] = 0.0
    return ToeplitzCoefficients(re + 1j * im)


@dataclass(frozen=True)
class ObcHamiltonian:
    """Dense lattice Hamiltonian.

    ``periodic`` marks a circulant (PBC) completion and ``disordered`` marks
    matrices whose diagonal has been modified, so the Toeplitz structure no
    longer holds.  ``coeffs`` keeps the generating band coefficients.
    """

    N: int
    matrix: np.ndarray = field(repr=False)
    coeffs: ToeplitzCoefficients | None = field(default=None, repr=False)
    periodic: bool = False
    disordered: bool = False

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        if m.shape != (self.N, self.N):
            raise InvalidParameters(f"matrix shape {m.shape} does not match N={self.N}")
        object.__setattr__(self, "matrix", _frozen(m))

    @property
    def toeplitz(self) -> bool:
        return self.coeffs is not None and not self.disordered and not self.periodic

    @classmethod
    def from_matrix(cls, a) -> "ObcHamiltonian":
        a = np.atleast_2d(np.asarray(a, dtype=complex))
        return cls(a.shape[0], a)


def build_obc(c: ToeplitzCoefficients, N: int) -> ObcHamiltonian:
    """Open-boundary Toeplitz matrix ``H[m, m+l] = mu_l``."""
    N = int(N)
    if N < c.L + 1:
        raise SizeTooSmall(f"N={N} must be >= L+1={c.L + 1}")
    H = np.zeros((N, N), dtype=complex)
    for l in range(-c.L, c.L + 1):
        if abs(l) < N:
            H += np.diag(np.full(N - abs(l), c[l]), k=l)
    return ObcHamiltonian(N, H, c)


def build_pbc(c: ToeplitzCoefficients, N: int) -> ObcHamiltonian:
    """Circulant completion ``H[m, (m+l) mod N] = mu_l``."""
    N = int(N)
    if N < 2 * c.L + 1:
        raise SizeTooSmall(f"N={N} must be >= 2L+1={2 * c.L + 1}")
    H = np.zeros((N, N), dtype=complex)
    rows = np.arange(N)
    for l in range(-c.L, c.L + 1):
        H[rows, (rows + l) % N] += c[l]
    return ObcHamiltonian(N, H, c, periodic=True)


def bloch(c: ToeplitzCoefficients, k):
    """``H(k) = sum_l mu_l exp(i k l)``; accepts scalars or arrays."""
    k = np.asarray(k, dtype=float)
    out = np.exp(1j * np.multiply.outer(k, c.ells)) @ c.mu
    return complex(out) if out.ndim == 0 else out


def bloch_derivative(c: ToeplitzCoefficients, k):
    """``dH/dk = sum_l i l mu_l exp(i k l)``."""
    k = np.asarray(k, dtype=float)
    out = np.exp(1j * np.multiply.outer(k, c.ells)) @ (1j * c.ells * c.mu)
    return complex(out) if out.ndim == 0 else out


def parse_angle(x) -> float:
    """Parse radians given as a number or a string such as ``"pi/2"``."""
    if isinstance(x, (int, float, np.floating, np.integer)):
        return float(x)
    s = str(x).strip().replace(" ", "")
    if not s:
        raise InvalidParameters("empty angle")
    allowed = set("0123456789.+-*/()epi")
    if not set(s) <= allowed:
        raise InvalidParameters(f"cannot parse angle {x!r}")
    try:
        v = eval(s, {"__builtins__": {}}, {"pi": math.pi})  # noqa: S307, restricted charset
    except Exception as exc:
        raise InvalidParameters(f"cannot parse angle {x!r}") from exc
    return float(v)
