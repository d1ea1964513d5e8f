"""Weak Orlicz quasi-norms on finite tracial matrix algebras.

Numerical companions to noncommutative weak Orlicz spaces: singular spectra,
weak Orlicz quasi-norms and their renormings, and seeded verification suites
for interpolation, martingale, Khintchine and Fourier-side inequalities.
"""
__version__ = "0.1.0"

from .errors import NumericalFailure, PreconditionError, ResourceLimitError
from .orlicz import OrliczFunction, Power, PowerLog, PowerSin, ScaledPower, parse_phi
from .spectral import SingularSpectrum, TracialMatrix, singular_spectrum

__all__ = ["NumericalFailure", "PreconditionError", "ResourceLimitError",
           "OrliczFunction", "Power", "PowerLog", "PowerSin", "ScaledPower", "parse_phi",
           "SingularSpectrum", "TracialMatrix", "singular_spectrum", "__version__"]
