"""Finite tracial matrix algebras and their singular spectra.

A :class:`TracialMatrix` is an ``N x N`` complex matrix together with a trace
weight ``w``; the trace is ``x -> w * sum_i x_ii`` (``w = 1/N`` gives the
normalized trace).  Its singular spectrum is stored as a
:class:`SingularSpectrum`, a decreasing step function

    mu_t = value_i  for  T_{i-1} <= t < T_i,    mu_t = 0 for t >= T_n,

where ``T_i`` are cumulative weights.  The distribution function
``lambda_s = sum{weight_i : value_i > s}`` is its right-continuous inverse.

Eigen-decompositions use a cyclic Jacobi method on Hermitian matrices
(compiled with numba); no LAPACK call is made on the production path.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from numba import njit

from .errors import NumericalFailure

MERGE_ATOL = 1e-12
JACOBI_RTOL = 1e-13
JACOBI_MAX_SWEEPS = 100
_TINY = 1e-280


# ---------------------------------------------------------------------------
# Jacobi eigensolver


@njit(cache=True)
def _jacobi_kernel(a, v, want_vectors, rtol, max_sweeps):
    # in-place on a (B, N, N); returns per-matrix convergence flags
    nb, n, _ = a.shape
    ok = np.zeros(nb, dtype=np.bool_)
    for b in range(nb):
        scale = 0.0
        for i in range(n):
            for j in range(n):
                scale += a[b, i, j].real ** 2 + a[b, i, j].imag ** 2
        scale = np.sqrt(scale)
        for sweep in range(max_sweeps + 1):
            off = 0.0
            for i in range(n):
                for j in range(n):
                    if i != j:
                        off += a[b, i, j].real ** 2 + a[b, i, j].imag ** 2
            if np.sqrt(off) <= rtol * scale:
                ok[b] = True
                break
            if sweep == max_sweeps:
                break
            for p in range(n - 1):
                for q in range(p + 1, n):
                    hpq = a[b, p, q]
                    r = abs(hpq)
                    if r <= _TINY:
                        continue
                    phase = hpq / r
                    tau = (a[b, q, q].real - a[b, p, p].real) / (2.0 * r)
                    if abs(tau) > 1e100:
                        t = 0.5 / tau
                    else:
                        sgn = 1.0 if tau >= 0 else -1.0
                        t = sgn / (abs(tau) + np.sqrt(1.0 + tau * tau))
                    c = 1.0 / np.sqrt(1.0 + t * t)
                    s = t * c
                    ce = c * np.conj(phase)
                    se = s * np.conj(phase)
                    sp = s * phase
                    cph = c * phase
                    # columns: [p q] <- [p q] @ [[c, s], [-s e*, c e*]]
                    for k in range(n):
                        xp = a[b, k, p]
                        xq = a[b, k, q]
                        a[b, k, p] = c * xp - se * xq
                        a[b, k, q] = s * xp + ce * xq
                    # rows: [p; q] <- G^H @ [p; q]
                    for k in range(n):
                        xp = a[b, p, k]
                        xq = a[b, q, k]
                        a[b, p, k] = c * xp - sp * xq
                        a[b, q, k] = s * xp + cph * xq
                    a[b, p, q] = 0.0
                    a[b, q, p] = 0.0
                    a[b, p, p] = a[b, p, p].real
                    a[b, q, q] = a[b, q, q].real
                    if want_vectors:
                        for k in range(n):
                            xp = v[b, k, p]
                            xq = v[b, k, q]
                            v[b, k, p] = c * xp - se * xq
                            v[b, k, q] = s * xp + ce * xq
    return ok


def jacobi_eigh(h, compute_vectors: bool = True, rtol: float = JACOBI_RTOL,
                max_sweeps: int = JACOBI_MAX_SWEEPS):
    """Eigen-decomposition of Hermitian matrices by cyclic Jacobi rotations.

    Parameters
    ----------
    h : array_like, shape (N, N) or (B, N, N)
        Hermitian matrix or stack of them.
    compute_vectors : bool
        Accumulate the unitary of eigenvectors.
    rtol : float
        Stop once the off-diagonal Frobenius norm of a matrix is at most
        ``rtol`` times its full Frobenius norm.

    Returns
    -------
    w : ndarray, shape (N,) or (B, N)
        Real eigenvalues (unsorted, in diagonal order).
    v : ndarray or None
        Columns are eigenvectors, ``h = v @ diag(w) @ v^H``.
    """
    h = np.asarray(h)
    single = h.ndim == 2
    a = np.array(h, dtype=np.complex128, copy=True)
    if single:
        a = a[None]
    if a.ndim != 3 or a.shape[1] != a.shape[2]:
        raise ValueError(f"expected square matrices, got shape {h.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix entries must be finite")
    n = a.shape[1]
    a = np.ascontiguousarray(0.5 * (a + np.conj(np.swapaxes(a, 1, 2))))
    if compute_vectors:
        v = np.broadcast_to(np.eye(n, dtype=np.complex128), a.shape).copy()
    else:
        v = np.zeros((1, 1, 1), dtype=np.complex128)
    ok = _jacobi_kernel(a, v, compute_vectors, float(rtol), int(max_sweeps))
    if not np.all(ok):
        raise NumericalFailure(f"Jacobi did not converge in {max_sweeps} sweeps")
    idx = np.arange(n)
    w = a[:, idx, idx].real.copy()
    vecs = v if compute_vectors else None
    if single:
        return w[0], (vecs[0] if vecs is not None else None)
    return w, vecs


def psd_sqrt(h):
    """Square root of a Hermitian positive semidefinite matrix (or stack)."""
    w, v = jacobi_eigh(h)
    root = np.sqrt(np.maximum(w, 0.0))
    return np.einsum("...ij,...j,...kj->...ik", v, root, np.conj(v))


# ---------------------------------------------------------------------------
# types


@dataclass(frozen=True, eq=False)
class TracialMatrix:
    """Square complex matrix with trace weight ``w`` (default ``1/N``)."""

    entries: np.ndarray
    weight: float = None

    def __post_init__(self):
        arr = np.array(self.entries, dtype=complex)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1] or arr.shape[0] == 0:
            raise ValueError(f"TracialMatrix needs a non-empty square matrix, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("TracialMatrix entries must be finite")
        arr.setflags(write=False)
        object.__setattr__(self, "entries", arr)
        w = 1.0 / arr.shape[0] if self.weight is None else float(self.weight)
        if not (np.isfinite(w) and w > 0):
            raise ValueError(f"trace weight must be positive, got {self.weight}")
        object.__setattr__(self, "weight", w)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def trace(self) -> complex:
        return self.weight * complex(np.trace(self.entries))

    def adjoint(self) -> "TracialMatrix":
        return TracialMatrix(self.entries.conj().T, self.weight)

    def like(self, entries) -> "TracialMatrix":
        return TracialMatrix(entries, self.weight)

    def lp_norm(self, p: float = 2.0) -> float:
        return singular_spectrum(self).lp_norm(p)

    def __add__(self, other):
        _check_compatible([self, other])
        return self.like(self.entries + other.entries)

    def __sub__(self, other):
        _check_compatible([self, other])
        return self.like(self.entries - other.entries)

    def __neg__(self):
        return self.like(-self.entries)

    def __mul__(self, alpha):
        return self.like(alpha * self.entries)

    __rmul__ = __mul__

    def __matmul__(self, other):
        _check_compatible([self, other])
        return self.like(self.entries @ other.entries)

    def __eq__(self, other):
        return (isinstance(other, TracialMatrix) and self.weight == other.weight
                and np.array_equal(self.entries, other.entries))

    __hash__ = None

    # JSON ------------------------------------------------------------------
    def to_json(self) -> dict:
        return {"n": self.dim, "w": self.weight,
                "re": self.entries.real.tolist(), "im": self.entries.imag.tolist()}

    @classmethod
    def from_json(cls, obj: dict) -> "TracialMatrix":
        n = int(obj["n"])
        re = np.asarray(obj["re"], dtype=float)
        im = np.asarray(obj.get("im", np.zeros((n, n))), dtype=float)
        if re.shape != (n, n) or im.shape != (n, n):
            raise ValueError(f"matrix JSON: expected {n}x{n} arrays")
        return cls(re + 1j * im, obj.get("w"))


def _check_compatible(xs: Sequence[TracialMatrix]):
    if not xs:
        raise ValueError("need at least one matrix")
    d, w = xs[0].dim, xs[0].weight
    for x in xs[1:]:
        if x.dim != d or x.weight != w:
            raise ValueError("matrices must share dimension and trace weight")


class SingularSpectrum:
    """Weighted decreasing step function; see module docstring.

    ``values`` are strictly decreasing and non-negative, ``weights`` positive.
    Values closer than ``MERGE_ATOL`` are merged (their weights added).
    """

    __slots__ = ("values", "weights", "cumulative")

    def __init__(self, values, weights, merge_atol: float = MERGE_ATOL):
        v = np.asarray(values, dtype=float).ravel()
        w = np.broadcast_to(np.asarray(weights, dtype=float), v.shape).ravel()
        if v.size == 0:
            raise ValueError("empty spectrum")
        if np.any(~np.isfinite(v)) or np.any(v < 0):
            raise ValueError("spectrum values must be finite and non-negative")
        if np.any(~np.isfinite(w)) or np.any(w <= 0):
            raise ValueError("spectrum weights must be positive")
        order = np.argsort(-v, kind="stable")
        v, w = v[order], w[order]
        if v.size > 1:
            # start a new group wherever the gap to the previous value exceeds the tolerance
            starts = np.concatenate(([True], (v[:-1] - v[1:]) > merge_atol))
            group = np.cumsum(starts) - 1
            v = v[starts]
            w = np.bincount(group, weights=w)
        v.setflags(write=False)
        w.setflags(write=False)
        cum = np.cumsum(w)
        cum.setflags(write=False)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "cumulative", cum)

    def __setattr__(self, name, value):
        raise AttributeError("SingularSpectrum is immutable")

    @property
    def total_weight(self) -> float:
        return float(self.cumulative[-1])

    def is_zero(self) -> bool:
        return bool(self.values[0] == 0.0)

    def scaled(self, alpha: float) -> "SingularSpectrum":
        """Spectrum of ``alpha * x``."""
        return SingularSpectrum(abs(alpha) * self.values, self.weights)

    def dilated(self, factor: float) -> "SingularSpectrum":
        """Spectrum with every weight multiplied by ``factor`` (t -> mu_{t/factor})."""
        return SingularSpectrum(self.values, factor * self.weights)

    def lp_norm(self, p: float) -> float:
        if np.isinf(p):
            return float(self.values[0])
        return float(np.sum(self.weights * self.values ** p) ** (1.0 / p))

    def pairs(self):
        return list(zip(self.values.tolist(), self.weights.tolist()))

    def to_json(self) -> dict:
        return {"values": self.values.tolist(), "weights": self.weights.tolist()}

    @classmethod
    def from_json(cls, obj: dict) -> "SingularSpectrum":
        return cls(obj["values"], obj["weights"])

    def allclose(self, other: "SingularSpectrum", rtol=1e-9, atol=1e-12) -> bool:
        return (self.values.shape == other.values.shape
                and np.allclose(self.values, other.values, rtol=rtol, atol=atol)
                and np.allclose(self.weights, other.weights, rtol=rtol, atol=atol))

    def __eq__(self, other):
        return (isinstance(other, SingularSpectrum)
                and np.array_equal(self.values, other.values)
                and np.array_equal(self.weights, other.weights))

    __hash__ = None

    def __repr__(self):
        return f"SingularSpectrum({self.pairs()!r})"


# ---------------------------------------------------------------------------
# operations


def _gram_eigs(entries):
    # x*x and xx* share their eigenvalues; diagonalizing whichever is bytewise smaller
    # makes the spectra of x and x* bit-identical
    a = np.ascontiguousarray(entries, dtype=complex)
    ah = np.ascontiguousarray(np.conj(np.swapaxes(a, -1, -2)))
    g1, g2 = ah @ a, a @ ah
    n = a.shape[-1]
    f1, f2 = g1.reshape(-1, n, n), g2.reshape(-1, n, n)
    pick = np.array([x.tobytes() <= y.tobytes() for x, y in zip(f1, f2)])
    g = np.where(pick[:, None, None], f1, f2).reshape(g1.shape)
    w, _ = jacobi_eigh(g, compute_vectors=False)
    return np.sqrt(np.maximum(w, 0.0))


def singular_values(entries) -> np.ndarray:
    """Singular values (unsorted) of a matrix or a stack of matrices."""
    return _gram_eigs(entries)


def singular_spectrum(x: TracialMatrix) -> SingularSpectrum:
    """Singular values of ``x``, each carrying weight ``x.weight``."""
    if not isinstance(x, TracialMatrix):
        x = TracialMatrix(x)
    return SingularSpectrum(_gram_eigs(x.entries), x.weight)


def singular_spectra(xs: Sequence[TracialMatrix]) -> list:
    """Batched :func:`singular_spectrum`; matrices are grouped by dimension."""
    out = [None] * len(xs)
    by_dim = {}
    for i, x in enumerate(xs):
        by_dim.setdefault(x.dim, []).append(i)
    for idx in by_dim.values():
        vals = _gram_eigs(np.stack([xs[i].entries for i in idx]))
        for row, i in zip(vals, idx):
            out[i] = SingularSpectrum(row, xs[i].weight)
    return out


def psd_spectrum(g, weight: float) -> SingularSpectrum:
    """Spectrum of ``g**(1/2)`` for Hermitian PSD ``g`` (square roots of eigenvalues)."""
    w, _ = jacobi_eigh(g, compute_vectors=False)
    return SingularSpectrum(np.sqrt(np.maximum(np.ravel(w), 0.0)), weight)


def _as_spectrum(s) -> SingularSpectrum:
    return singular_spectrum(s) if isinstance(s, TracialMatrix) else s


def lambda_at(s, level: float) -> float:
    """Distribution function: total weight of values strictly above ``level``."""
    if not level > 0:
        raise ValueError("level must be positive")
    s = _as_spectrum(s)
    return float(np.sum(s.weights[s.values > level]))


def mu_at(s, t: float) -> float:
    """Generalized singular number: the step function value at ``t``."""
    if not t > 0:
        raise ValueError("t must be positive")
    s = _as_spectrum(s)
    i = int(np.searchsorted(s.cumulative, t, side="right"))
    return float(s.values[i]) if i < s.values.size else 0.0


def spectral_truncate(x: TracialMatrix, alpha: float):
    """Split ``x = head + tail`` with ``head = x e_(alpha, inf)(|x|)``."""
    if not alpha > 0:
        raise ValueError("alpha must be positive")
    a = x.entries
    w, v = jacobi_eigh(a.conj().T @ a)
    sv = np.sqrt(np.maximum(w, 0.0))
    keep = v[:, sv > alpha]
    head = a @ (keep @ keep.conj().T)
    return x.like(head), x.like(a - head)


def direct_sum(spectra: Iterable) -> SingularSpectrum:
    """Weighted union of ``(spectrum, scale)`` pairs: weights are multiplied by scale."""
    items = list(spectra)
    if not items:
        raise ValueError("direct_sum needs at least one block")
    vals, wts = [], []
    for s, scale in items:
        if not scale > 0:
            raise ValueError("block scales must be positive")
        vals.append(s.values)
        wts.append(s.weights * scale)
    return SingularSpectrum(np.concatenate(vals), np.concatenate(wts))


def block_spectrum(blocks, weight: float) -> SingularSpectrum:
    """Spectrum of the block-diagonal operator ``diag(blocks)`` with per-entry weight.

    Equivalent to ``direct_sum`` of the block spectra with a common scale, but
    computed in one batched eigen-solve.
    """
    blocks = np.asarray(blocks, dtype=complex)
    return SingularSpectrum(_gram_eigs(blocks).ravel(), weight)
