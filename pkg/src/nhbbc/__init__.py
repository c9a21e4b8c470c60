"""Non-Hermitian bulk-boundary correspondence for driven-dissipative cavity arrays.

Submodules
----------
model     parameters, Toeplitz coefficients, OBC/PBC matrices
bloch     Bloch symbol, winding number, NH gap, normality, reciprocity
svd       singular value decomposition, zero singular modes, eigen diagnostics
gssh      chiral doubling and the Zak-phase invariant
response  susceptibility, scattering matrix, gain scaling, detuning sweeps
disorder  on-site disorder ensembles
cli       ``nhbbc run`` / ``nhbbc plot``
"""

__version__ = "0.1.0"

from .errors import NhbbcError, NumericalError, ValidationError  # noqa: E402
from .model import (LatticeParams, RawRates, ToeplitzCoefficients, build_obc,  # noqa: E402
                    build_pbc, coefficients, reduce)
from .tolerances import DEFAULT, Tolerances  # noqa: E402

__all__ = ["__version__", "NhbbcError", "NumericalError", "ValidationError", "LatticeParams",
           "RawRates", "ToeplitzCoefficients", "build_obc", "build_pbc", "coefficients",
           "reduce", "DEFAULT", "Tolerances"]
