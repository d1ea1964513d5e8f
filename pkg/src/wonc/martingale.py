"""Dyadic matrix filtrations and martingale functionals.

The ambient algebra is ``M_{2^m}`` with its normalized trace (or the weight
carried by the matrices).  Level ``k`` is the subalgebra ``M_{2^k} (x) I`` of
block-scalar matrices, and the conditional expectation onto it replaces each
of the ``2^k x 2^k`` blocks by its normalized trace times the identity.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .norms import column_gram, phi_moment, row_gram, weak_orlicz_norm
from .orlicz import OrliczFunction
from .spectral import (SingularSpectrum, TracialMatrix, jacobi_eigh, psd_spectrum,
                       psd_sqrt, singular_spectrum)

STEP_TOL = 1e-10


@dataclass(frozen=True)
class DyadicFiltration:
    levels: int

    def __post_init__(self):
        if self.levels < 1:
            raise ValueError("a filtration needs at least one level")

    @property
    def dim(self) -> int:
        return 2 ** self.levels

    def check(self, k: int, x: TracialMatrix):
        if not (0 <= k <= self.levels):
            raise ValueError(f"level {k} outside 0..{self.levels}")
        if x.dim != self.dim:
            raise ValueError(f"matrix dimension {x.dim} != 2^{self.levels}")

    def expect(self, k: int, x: TracialMatrix) -> TracialMatrix:
        return conditional_expectation(self, k, x)


def _block_mean(a: np.ndarray, k: int, m: int) -> np.ndarray:
    nb, b = 2 ** k, 2 ** (m - k)
    blocks = a.reshape(nb, b, nb, b)
    means = np.trace(blocks, axis1=1, axis2=3) / b
    return np.kron(means, np.eye(b))


def conditional_expectation(f: DyadicFiltration, k: int, x: TracialMatrix) -> TracialMatrix:
    """Trace-preserving conditional expectation onto ``M_{2^k} (x) I``."""
    f.check(k, x)
    if k == f.levels:
        return x
    return x.like(_block_mean(x.entries, k, f.levels))


@dataclass(frozen=True)
class MartingaleSequence:
    filtration: DyadicFiltration
    elements: tuple

    def __post_init__(self):
        f = self.filtration
        if len(self.elements) != f.levels + 1:
            raise ValueError(f"expected {f.levels + 1} elements, got {len(self.elements)}")
        for k, xk in enumerate(self.elements):
            f.check(k, xk)
            scale = max(1.0, np.max(np.abs(xk.entries)))
            if np.max(np.abs(conditional_expectation(f, k, xk).entries - xk.entries)) > STEP_TOL * scale:
                raise ValueError(f"element {k} is not in the level-{k} subalgebra")
        for k in range(f.levels):
            nxt = conditional_expectation(f, k, self.elements[k + 1])
            scale = max(1.0, np.max(np.abs(self.elements[k].entries)))
            if np.max(np.abs(nxt.entries - self.elements[k].entries)) > STEP_TOL * scale:
                raise ValueError(f"E_{k}(x_{k + 1}) != x_{k}")

    @property
    def final(self) -> TracialMatrix:
        return self.elements[-1]

    @property
    def differences(self) -> list:
        el = self.elements
        return [el[0]] + [el[k] - el[k - 1] for k in range(1, len(el))]

    @classmethod
    def from_differences(cls, f: DyadicFiltration, diffs: Sequence[TracialMatrix]) -> "MartingaleSequence":
        elems, acc = [], None
        for d in diffs:
            acc = d if acc is None else acc + d
            elems.append(acc)
        return cls(f, tuple(elems))


def martingale_from_final(f: DyadicFiltration, x: TracialMatrix) -> MartingaleSequence:
    """``x_k = E_k(x)``."""
    f.check(f.levels, x)
    return MartingaleSequence(f, tuple(conditional_expectation(f, k, x) for k in range(f.levels + 1)))


def transform(mart: MartingaleSequence, alpha: Sequence[complex]) -> MartingaleSequence:
    """Martingale transform with constant symbol: ``d(Tx)_k = alpha_k dx_k``."""
    alpha = list(alpha)
    if len(alpha) != mart.filtration.levels + 1:
        raise ValueError(f"symbol length {len(alpha)} != {mart.filtration.levels + 1}")
    diffs = [a * d for a, d in zip(alpha, mart.differences)]
    return MartingaleSequence.from_differences(mart.filtration, diffs)


def transformed_final(mart: MartingaleSequence, alpha: Sequence[complex]) -> TracialMatrix:
    """``sum_k alpha_k dx_k`` without re-validating the martingale."""
    diffs = mart.differences
    if len(alpha) != len(diffs):
        raise ValueError("symbol length mismatch")
    return diffs[0].like(sum(a * d.entries for a, d in zip(alpha, diffs)))


def sign_patterns(n: int):
    return itertools.product((1.0, -1.0), repeat=n)


def stein_map(f: DyadicFiltration, seq: Sequence[TracialMatrix]) -> list:
    """``(a_n) -> (E_n a_n)``."""
    if len(seq) > f.levels + 1:
        raise ValueError(f"sequence longer than {f.levels + 1}")
    return [conditional_expectation(f, n, a) for n, a in enumerate(seq)]


def stein_ratio(f: DyadicFiltration, seq: Sequence[TracialMatrix], phi: OrliczFunction,
                functional: str = "moment", adjoint: bool = False) -> float:
    """Column square function of ``E_n a_n`` (or ``E_n a_n^*``) against that of ``a_n``.

    ``functional`` selects the weak Phi-moment (``"moment"``) or the weak
    Orlicz quasi-norm (``"norm"``).
    """
    func = phi_moment if functional == "moment" else weak_orlicz_norm
    src = [a.adjoint() for a in seq] if adjoint else list(seq)
    top = func(psd_spectrum(column_gram(stein_map(f, src)), seq[0].weight), phi).value
    bottom = func(psd_spectrum(column_gram(seq), seq[0].weight), phi).value
    return top / bottom if bottom > 0 else float("nan")


def square_functions(mart: MartingaleSequence):
    """``S_C = (sum |dx_k|^2)^(1/2)`` and ``S_R = (sum |dx_k^*|^2)^(1/2)``."""
    d = mart.differences
    both = psd_sqrt(np.stack([column_gram(d), row_gram(d)]))
    return d[0].like(both[0]), d[0].like(both[1])


def _square_moments(diffs_col, diffs_row, weight, phi):
    """Moments of the column square function of ``diffs_col`` and row of ``diffs_row``."""
    g = np.stack([column_gram(diffs_col), row_gram(diffs_row)])
    w, _ = jacobi_eigh(g, compute_vectors=False)
    sv = np.sqrt(np.maximum(w, 0.0))
    return (phi_moment(SingularSpectrum(sv[0], weight), phi).value,
            phi_moment(SingularSpectrum(sv[1], weight), phi).value)


def bg_ratio(mart: MartingaleSequence, phi: OrliczFunction):
    """``(||x||_{Phi_w}, ||S_C||_{Phi_w} + ||S_R||_{Phi_w})``."""
    d = mart.differences
    lhs = phi_moment(singular_spectrum(mart.final), phi).value
    col, row = _square_moments(d, d, d[0].weight, phi)
    return lhs, col + row


@dataclass(frozen=True)
class DecompositionBound:
    """Best column/row split found by :func:`decomposition_search` (an upper bound)."""

    value: float
    split: tuple
    evaluations: int
    column_only: float
    row_only: float
    heuristic: bool = True


def decomposition_search(items: Sequence[TracialMatrix], phi: OrliczFunction,
                         budget: int) -> DecompositionBound:
    """Minimize ``||(sum |t_k a_k|^2)^(1/2)|| + ||(sum |(1-t_k) a_k^*|^2)^(1/2)||``.

    Candidates split each item as ``y_k = t_k a_k``, ``z_k = (1 - t_k) a_k``.
    The two trivial splits (all column, all row) are always evaluated; then
    coordinate descent over ``t_k`` on the grid {0, 1/4, 1/2, 3/4, 1}, halving
    the step after a pass without improvement, until ``budget`` further
    evaluations are used.
    """
    items = list(items)
    n = len(items)
    weight = items[0].weight

    def value(t):
        cols = [tk * a for tk, a in zip(t, items)]
        rows = [(1.0 - tk) * a for tk, a in zip(t, items)]
        c, r = _square_moments(cols, rows, weight, phi)
        return c + r

    col_only = value([1.0] * n)
    row_only = value([0.0] * n)
    if col_only <= row_only:
        best_t, best = [1.0] * n, col_only
    else:
        best_t, best = [0.0] * n, row_only
    used = 0
    step = 0.25
    while used < budget and step >= 1.0 / 64:
        improved = False
        for k in range(n):
            for cand in (best_t[k] - step, best_t[k] + step):
                if used >= budget:
                    break
                if not (0.0 <= cand <= 1.0):
                    continue
                t = list(best_t)
                t[k] = cand
                val = value(t)
                used += 1
                if val < best:
                    best, best_t, improved = val, t, True
        if not improved:
            step /= 2.0
    return DecompositionBound(best, tuple(best_t), used, col_only, row_only)


def bg_decomposition_bound(mart: MartingaleSequence, phi: OrliczFunction,
                           search_budget: int = 32) -> DecompositionBound:
    """Upper bound on the decomposition infimum for the martingale differences."""
    return decomposition_search(mart.differences, phi, search_budget)
