"""Rademacher sums with matrix coefficients.

``L_inf(Omega) (x) M`` for ``K`` Rademacher variables is realized exactly as
the block-diagonal direct sum over all ``2^K`` sign patterns, each block
carrying probability ``2^-K``.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ResourceLimitError
from .martingale import DecompositionBound, _square_moments, decomposition_search
from .norms import phi_moment
from .orlicz import OrliczFunction, indices
from .spectral import (SingularSpectrum, TracialMatrix, _check_compatible, block_spectrum,
                       singular_spectrum)

MAX_K = 12


@dataclass(frozen=True)
class RademacherSystem:
    """Coefficients ``x_1..x_K`` of ``sum_k eps_k x_k``."""

    coefficients: tuple

    def __post_init__(self):
        coeffs = tuple(self.coefficients)
        if not coeffs:
            raise ValueError("a Rademacher system needs K >= 1 coefficients")
        _check_compatible(coeffs)
        object.__setattr__(self, "coefficients", coeffs)

    @property
    def K(self) -> int:
        return len(self.coefficients)

    @property
    def pattern_weight(self) -> float:
        return 2.0 ** -self.K

    def patterns(self) -> np.ndarray:
        """All sign vectors, row ``j`` has bit ``k`` of ``j`` mapped to ``+1/-1``."""
        j = np.arange(2 ** self.K)[:, None]
        bits = (j >> np.arange(self.K)) & 1
        return 1.0 - 2.0 * bits

    def blocks(self) -> np.ndarray:
        """``F_omega = sum_k omega_k x_k`` for every pattern, shape ``(2^K, N, N)``."""
        if self.K > MAX_K:
            raise ResourceLimitError(f"K = {self.K} exceeds the enumeration limit {MAX_K}")
        a = np.stack([x.entries for x in self.coefficients])
        return np.einsum("pk,kij->pij", self.patterns(), a)

    def scaled(self, alpha: complex) -> "RademacherSystem":
        return RademacherSystem(tuple(alpha * x for x in self.coefficients))


def _sign_free_key(x: TracialMatrix) -> bytes:
    a = x.entries
    flat = np.concatenate([a.real.ravel(), a.imag.ravel()])
    nz = np.flatnonzero(flat)
    if nz.size and flat[nz[0]] < 0:
        a = -a
    return a.tobytes()


def _canonical(sys: RademacherSystem) -> RademacherSystem:
    # summing in an order blind to permutations and sign flips keeps both invariances bit-exact
    order = sorted(range(sys.K), key=lambda k: _sign_free_key(sys.coefficients[k]))
    return permuted(sys, order)


def rademacher_spectrum(sys: RademacherSystem) -> SingularSpectrum:
    """Spectrum of ``sum_k eps_k x_k`` under the product trace.

    ``F_{-omega} = -F_omega`` has the same singular values, so only the
    patterns with ``omega_K = +1`` are diagonalized and their weight doubled.
    """
    blocks = _canonical(sys).blocks()
    half = blocks[: 2 ** (sys.K - 1)]
    w = sys.coefficients[0].weight * sys.pattern_weight * 2.0
    return block_spectrum(half, w)


def khintchine_lhs(sys: RademacherSystem, phi: OrliczFunction) -> float:
    """Weak Phi-moment of the Rademacher sum."""
    return phi_moment(rademacher_spectrum(sys), phi).value


def rc_sum_norm(sys: RademacherSystem, phi: OrliczFunction) -> float:
    """Moment of ``(sum |x_k|^2)^(1/2)`` plus moment of ``(sum |x_k^*|^2)^(1/2)``."""
    xs = sys.coefficients
    col, row = _square_moments(xs, xs, xs[0].weight, phi)
    return col + row


def decomposition_infimum_bound(sys: RademacherSystem, phi: OrliczFunction,
                                budget: int = 32) -> DecompositionBound:
    """Upper bound on the infimum over ``x_k = y_k + z_k`` (heuristic search)."""
    return decomposition_search(sys.coefficients, phi, budget)


def regime_of(phi: OrliczFunction) -> str:
    """``"high"`` for ``2 < a <= b < inf``, ``"low"`` for ``1 < a <= b < 2``, else ``"open"``."""
    ind = indices(phi)
    if 2.0 < ind.lower and np.isfinite(ind.upper):
        return "high"
    if 1.0 < ind.lower and ind.upper < 2.0:
        return "low"
    return "open"


def resolve_regime(phi: OrliczFunction, requested: str = "auto"):
    """Pick the regime and report whether it matches the indices of ``phi``.

    Returns ``(regime, matches)``; mismatches and the open strip emit a
    warning and make verdicts informative.
    """
    natural = regime_of(phi)
    if requested == "auto":
        regime = "high" if natural == "open" else natural
    elif requested in ("low", "high"):
        regime = requested
    else:
        raise ValueError(f"unknown regime {requested!r}")
    matches = natural == regime
    if not matches:
        ind = indices(phi)
        warnings.warn(f"{phi.spec()} has indices ({ind.lower:g}, {ind.upper:g}); "
                      f"regime {regime!r} does not apply", RuntimeWarning)
    return regime, matches


def assembled_spectrum(sys: RademacherSystem) -> SingularSpectrum:
    """Reference spectrum from the explicit ``2^K N x 2^K N`` block-diagonal matrix."""
    blocks = sys.blocks()
    n = blocks.shape[1]
    big = np.zeros((blocks.shape[0] * n,) * 2, dtype=complex)
    for j, b in enumerate(blocks):
        big[j * n:(j + 1) * n, j * n:(j + 1) * n] = b
    return singular_spectrum(TracialMatrix(big, sys.coefficients[0].weight * sys.pattern_weight))


def verify_khintchine(spec, phi: OrliczFunction, regime: str = "auto", K: int = 4, **options):
    """Run the Khintchine suite on a corpus spec; returns a verification report."""
    from .suites import run_suite
    return run_suite("khintchine", dict(options, corpus=spec, phi=phi, regime=regime, k=K))


def sign_flip(sys: RademacherSystem, k: int) -> RademacherSystem:
    xs = list(sys.coefficients)
    xs[k] = -xs[k]
    return RademacherSystem(tuple(xs))


def permuted(sys: RademacherSystem, order: Sequence[int]) -> RademacherSystem:
    return RademacherSystem(tuple(sys.coefficients[i] for i in order))


__all__ = ["MAX_K", "RademacherSystem", "rademacher_spectrum", "khintchine_lhs",
           "rc_sum_norm", "decomposition_infimum_bound", "regime_of", "resolve_regime",
           "assembled_spectrum", "verify_khintchine", "sign_flip", "permuted"]
