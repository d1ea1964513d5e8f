"""Matrix-valued trigonometric polynomials on the circle.

``L_inf(T) (x) M`` is discretized by ``J`` equispaced samples ``z_j``; the
trace becomes the average over samples of the matrix trace, so the singular
spectrum of ``f`` is the direct sum of the spectra of ``f(z_j)``, each block
scaled by ``1/J``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Optional

import numpy as np

from .corpus import draw_matrix
from .spectral import (SingularSpectrum, TracialMatrix, _check_compatible, block_spectrum,
                       psd_spectrum)

MAX_DEGREE = 81


@dataclass(frozen=True)
class OperatorTrigPolynomial:
    """``f(z) = sum_k a_k z^k`` with ``|k| <= degree``; absent coefficients are zero."""

    coeffs: Mapping[int, TracialMatrix]
    dim: int = None
    weight: float = None
    degree: int = field(default=None)

    def __post_init__(self):
        coeffs = {int(k): v for k, v in dict(self.coeffs).items()}
        if coeffs:
            _check_compatible(list(coeffs.values()))
            first = next(iter(coeffs.values()))
            dim, weight = first.dim, first.weight
            if self.dim is not None and self.dim != dim:
                raise ValueError("coefficient dimension does not match dim")
        else:
            if self.dim is None:
                raise ValueError("an empty polynomial needs an explicit dim")
            dim = int(self.dim)
            weight = 1.0 / dim if self.weight is None else float(self.weight)
        deg = max((abs(k) for k in coeffs), default=0)
        if self.degree is not None:
            if self.degree < deg:
                raise ValueError(f"degree bound {self.degree} below the largest index {deg}")
            deg = int(self.degree)
        if deg > MAX_DEGREE:
            raise ValueError(f"degree {deg} exceeds the cap {MAX_DEGREE}")
        object.__setattr__(self, "coeffs", dict(sorted(coeffs.items())))
        object.__setattr__(self, "dim", dim)
        object.__setattr__(self, "weight", weight)
        object.__setattr__(self, "degree", deg)

    def coefficient(self, k: int) -> TracialMatrix:
        """Stored coefficient ``a_k`` (zero matrix when absent)."""
        return self.coeffs.get(int(k), self.zero())

    def zero(self) -> TracialMatrix:
        return TracialMatrix(np.zeros((self.dim, self.dim)), self.weight)

    def is_analytic(self) -> bool:
        return all(k >= 0 for k in self.coeffs)

    def evaluate(self, z) -> np.ndarray:
        """``f(z)`` for a scalar or array of points; shape ``z.shape + (N, N)``."""
        z = np.asarray(z, dtype=complex)
        out = np.zeros(z.shape + (self.dim, self.dim), dtype=complex)
        for k, a in self.coeffs.items():
            out += (z ** k)[..., None, None] * a.entries
        return out

    def samples(self, J: int) -> np.ndarray:
        """``f(exp(2 pi i j / J))`` for ``j = 0..J-1``."""
        j = np.arange(J)
        out = np.zeros((J, self.dim, self.dim), dtype=complex)
        for k, a in self.coeffs.items():
            # exact root of unity by reducing the exponent mod J first
            phase = np.exp(2j * np.pi * ((k * j) % J) / J)
            out += phase[:, None, None] * a.entries
        return out

    def __add__(self, other: "OperatorTrigPolynomial") -> "OperatorTrigPolynomial":
        keys = set(self.coeffs) | set(other.coeffs)
        return OperatorTrigPolynomial({k: self.coefficient(k) + other.coefficient(k) for k in keys},
                                      self.dim, self.weight, max(self.degree, other.degree))

    def __mul__(self, alpha) -> "OperatorTrigPolynomial":
        return OperatorTrigPolynomial({k: alpha * a for k, a in self.coeffs.items()},
                                      self.dim, self.weight, self.degree)

    __rmul__ = __mul__

    def shift(self, m: int) -> "OperatorTrigPolynomial":
        """``z^m f``."""
        return OperatorTrigPolynomial({k + m: a for k, a in self.coeffs.items()}, self.dim,
                                      self.weight)

    def __eq__(self, other):
        return (isinstance(other, OperatorTrigPolynomial) and self.dim == other.dim
                and self.weight == other.weight and self.coeffs.keys() == other.coeffs.keys()
                and all(self.coeffs[k] == other.coeffs[k] for k in self.coeffs))

    __hash__ = None

    def to_json(self) -> dict:
        return {"dim": self.dim, "coeffs": {str(k): a.to_json() for k, a in self.coeffs.items()}}

    @classmethod
    def from_json(cls, obj: dict) -> "OperatorTrigPolynomial":
        coeffs = {int(k): TracialMatrix.from_json(v) for k, v in obj.get("coeffs", {}).items()}
        return cls(coeffs, int(obj["dim"]))


def default_samples(degree: int) -> int:
    return max(64, 8 * degree)


def fourier_coefficient(f: OperatorTrigPolynomial, n: int, method: str = "dft") -> TracialMatrix:
    """``hat f(n) = int f(z) conj(z)^n dm(z)``.

    ``method="dft"`` uses ``J = 2d + 1`` equispaced samples, which is exact for
    degree ``<= d``; ``method="stored"`` reads the coefficient directly.
    """
    if method == "stored":
        return f.coefficient(n)
    if method != "dft":
        raise ValueError(f"unknown method {method!r}")
    if abs(n) > f.degree:
        return f.zero()
    J = 2 * f.degree + 1
    vals = f.samples(J)
    j = np.arange(J)
    phase = np.exp(-2j * np.pi * ((n * j) % J) / J)
    return TracialMatrix(np.tensordot(phase, vals, axes=1) / J, f.weight)


def torus_spectrum(f: OperatorTrigPolynomial, samples: Optional[int] = None) -> SingularSpectrum:
    """Spectrum of ``f`` in ``L_inf(T) (x) M`` from ``J`` samples (default ``max(64, 8d)``)."""
    J = default_samples(f.degree) if samples is None else int(samples)
    if J < 2 * f.degree + 1:
        raise ValueError(f"need at least {2 * f.degree + 1} samples, got {J}")
    return block_spectrum(f.samples(J), f.weight / J)


def square_function_spectrum(fs, samples: Optional[int] = None) -> SingularSpectrum:
    """Spectrum of ``(sum_k |f_k|^2)^(1/2)`` on the circle."""
    fs = list(fs)
    deg = max(f.degree for f in fs)
    J = default_samples(deg) if samples is None else int(samples)
    if J < 2 * deg + 1:
        raise ValueError(f"need at least {2 * deg + 1} samples, got {J}")
    vals = np.stack([f.samples(J) for f in fs])  # (K, J, N, N)
    g = np.einsum("kjab,kjac->jbc", np.conj(vals), vals)
    return psd_spectrum(g, fs[0].weight / J)


def lacunary_interval(n: int):
    """Integer points of ``(3^n / 2, 3^n]``."""
    if n < 0:
        raise ValueError("n must be >= 0")
    hi = 3 ** n
    return range(hi // 2 + 1, hi + 1)


def delta_multiplier(f: OperatorTrigPolynomial, n: int) -> OperatorTrigPolynomial:
    """Keep only the coefficients with index in ``(3^n / 2, 3^n]``."""
    band = lacunary_interval(n)
    return OperatorTrigPolynomial({k: a for k, a in f.coeffs.items() if k in band},
                                  f.dim, f.weight, f.degree)


def lacunary_bands(degree: int) -> list:
    """All ``n`` whose band meets ``[1, degree]``."""
    out, n = [], 0
    while 3 ** n // 2 + 1 <= max(degree, 0):
        out.append(n)
        n += 1
    return out


def lacunary_square_spectrum(f: OperatorTrigPolynomial, samples: Optional[int] = None):
    """Spectrum of ``(sum_n Delta_n(f)^* Delta_n(f))^(1/2)`` on the circle."""
    parts = [delta_multiplier(f, n) for n in lacunary_bands(f.degree)]
    parts = [p for p in parts if p.coeffs] or [f.__class__({}, f.dim, f.weight, f.degree)]
    return square_function_spectrum(parts, samples or default_samples(f.degree))


def random_analytic_polynomial(rng: np.random.Generator, degree: int, dim: int,
                               scale: float = 1.0) -> OperatorTrigPolynomial:
    """Coefficients ``a_0..a_d`` i.i.d. complex Ginibre."""
    return OperatorTrigPolynomial({k: TracialMatrix(draw_matrix(rng, dim, "ComplexGinibre", scale))
                                   for k in range(degree + 1)}, dim, None, degree)


def parseval_gap(f: OperatorTrigPolynomial, samples: Optional[int] = None) -> float:
    """``|sum_k ||a_k||_2^2 - mean_j ||f(z_j)||_2^2|`` relative to the left side."""
    J = default_samples(f.degree) if samples is None else int(samples)
    lhs = sum(f.weight * float(np.sum(np.abs(a.entries) ** 2)) for a in f.coeffs.values())
    vals = f.samples(J)
    rhs = f.weight * float(np.sum(np.abs(vals) ** 2)) / J
    return abs(lhs - rhs) / lhs if lhs > 0 else abs(rhs)


def verify_fourier_bounds(spec, phi, degree: int = 27, **options):
    """Run the Fourier suite on a corpus spec; returns a verification report."""
    from .suites import run_suite
    return run_suite("fourier", dict(options, corpus=spec, phi=phi, degree=degree))


__all__ = ["MAX_DEGREE", "OperatorTrigPolynomial", "default_samples", "fourier_coefficient",
           "torus_spectrum", "square_function_spectrum", "lacunary_interval", "delta_multiplier",
           "lacunary_bands", "lacunary_square_spectrum", "random_analytic_polynomial",
           "parseval_gap", "verify_fourier_bounds"]
