"""Norm-like functionals of singular spectra.

Every functional here reads a :class:`~wonc.spectral.SingularSpectrum` as the
step function ``mu_t``.  With cumulative weights ``T_i``, the supremum of
``t * phi(mu_t / c)`` over the half-open step ``[T_{i-1}, T_i)`` is
``T_i * phi(value_i / c)``, so the weak Orlicz quasi-norm is the closed form

    ||x||_{L_phi^w} = max_i value_i / phi^{-1}(1 / T_i).
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .orlicz import OrliczFunction, Power, indices
from .spectral import (SingularSpectrum, TracialMatrix, _check_compatible,
                       psd_spectrum)

FORMS = ("WeakOrliczMu", "WeakOrliczLambda", "PhiMoment", "Luxemburg", "WeakLp",
         "BanachRenorm", "ColumnSquare", "RowSquare")

_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0
_GOLDEN_ITERS = 64
_GOLDEN_TTOL = 1e-10


@dataclass(frozen=True)
class NormResult:
    value: float
    form: str
    method: str  # "ClosedForm", "Bisection" or "PiecewiseMax"
    p: float = None  # exponent, for the WeakLp form only

    def __float__(self):
        return self.value

    def to_dict(self) -> dict:
        form = self.form if self.p is None else f"{self.form}({self.p!r})"
        return {"form": form, "value": self.value, "method": self.method}


def _nonzero(s: SingularSpectrum):
    mask = s.values > 0
    return s.values[mask], s.cumulative[mask]


def _weak_value(s: SingularSpectrum, phi: OrliczFunction) -> float:
    v, cum = _nonzero(s)
    if v.size == 0:
        return 0.0
    return float(np.max(v / phi._inverse(1.0 / cum)))


def weak_orlicz_norm(s: SingularSpectrum, phi: OrliczFunction) -> NormResult:
    """``inf{c > 0 : t phi(mu_t / c) <= 1 for all t}`` in closed form."""
    return NormResult(_weak_value(s, phi), "WeakOrliczMu", "PiecewiseMax")


def _lambda_steps(s: SingularSpectrum):
    """Steps of the distribution function: (right endpoint, level to its left).

    For ``level`` in ``[v_{i+1}, v_i)`` the distribution function is constant;
    its value is recomputed from the weights rather than read off ``T_i``.
    """
    v = s.values
    ends, levels = [], []
    for i, vi in enumerate(v):
        if vi <= 0:
            break
        below = v[i + 1] if i + 1 < v.size else 0.0
        ends.append(vi)
        levels.append(float(np.sum(s.weights[v > below])))
    return np.asarray(ends), np.asarray(levels)


def weak_orlicz_norm_lambda(s: SingularSpectrum, phi: OrliczFunction) -> NormResult:
    """``inf{c > 0 : lambda_s phi(s / c) <= 1 for all s}`` by bisection on ``c``.

    This route uses only ``phi`` itself (no inverse) and the distribution
    function, so it is an independent check of :func:`weak_orlicz_norm`.
    """
    ends, lam = _lambda_steps(s)
    if ends.size == 0:
        return NormResult(0.0, "WeakOrliczLambda", "Bisection")

    def too_small(c):
        return np.max(lam * phi._value(ends / c)) > 1.0

    c = float(ends[0])
    lo = hi = c
    if too_small(c):
        while too_small(hi):
            hi *= 2.0
        lo = hi / 2.0
    else:
        while not too_small(lo) and lo > 0.0:
            lo /= 2.0
        hi = lo * 2.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if too_small(mid):
            lo = mid
        else:
            hi = mid
    return NormResult(hi, "WeakOrliczLambda", "Bisection")


def phi_moment(s: SingularSpectrum, phi: OrliczFunction) -> NormResult:
    """Weak Phi-moment ``sup_t t phi(mu_t)``."""
    v, cum = _nonzero(s)
    value = float(np.max(cum * phi._value(v))) if v.size else 0.0
    return NormResult(value, "PhiMoment", "PiecewiseMax")


def luxemburg_norm(s: SingularSpectrum, phi: OrliczFunction, rtol: float = 1e-10) -> NormResult:
    """Orlicz (Luxemburg) norm: solve ``sum_i w_i phi(v_i / c) = 1`` by bisection."""
    v = s.values[s.values > 0]
    w = s.weights[s.values > 0]
    if v.size == 0:
        return NormResult(0.0, "Luxemburg", "Bisection")

    def modular(c):
        return float(np.sum(w * phi._value(v / c)))

    lo = hi = float(v[0])
    if modular(hi) > 1.0:
        while modular(hi) > 1.0:
            hi *= 2.0
        lo = hi / 2.0
    else:
        while modular(lo) <= 1.0 and lo > 1e-300:
            lo /= 2.0
        hi = lo * 2.0
    while hi - lo > rtol * hi * 1e-2:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if modular(mid) > 1.0:
            lo = mid
        else:
            hi = mid
    return NormResult(0.5 * (lo + hi), "Luxemburg", "Bisection")


def weak_lp_norm(s: SingularSpectrum, p: float) -> NormResult:
    """``sup_t t^(1/p) mu_t`` = ``max_i v_i T_i^(1/p)``; any ``p > 0``."""
    if not p > 0:
        raise ValueError("p must be positive")
    v, cum = _nonzero(s)
    if v.size == 0:
        value = 0.0
    elif math.isinf(p):
        value = float(v[0])
    else:
        value = float(np.max(v * cum ** (1.0 / p)))
    return NormResult(value, "WeakLp", "ClosedForm", p=float(p))


def _integral(s: SingularSpectrum, t):
    """Exact ``int_0^t mu_s ds`` for an array of ``t``."""
    t = np.asarray(t, dtype=float)
    starts = s.cumulative - s.weights
    overlap = np.clip(t[..., None] - starts, 0.0, s.weights)
    return np.sum(overlap * s.values, axis=-1)


def hardy_average(s: SingularSpectrum, t: float) -> float:
    """Running average ``(1/t) int_0^t mu_s ds``."""
    if not t > 0:
        raise ValueError("t must be positive")
    return float(_integral(s, t)) / t


def banach_renorm(s: SingularSpectrum, phi: OrliczFunction) -> NormResult:
    """``inf{c : t phi(A(t) / c) <= 1 for all t}`` where A is the Hardy average.

    For fixed ``t`` the constraint reads ``c >= A(t) / phi^{-1}(1/t)``, so the
    renorm is ``sup_t A(t) / phi^{-1}(1/t)``.  On each step of ``mu`` the
    supremum is searched by golden section in ``u = phi^{-1}(1/t)``
    (equivalently ``t = 1/phi(u)``), which avoids inverting ``phi`` inside the
    search.  Beyond the support the objective is non-increasing, so the last
    endpoint covers it.
    """
    ind = indices(phi)
    if not (1.0 < ind.lower <= ind.upper < math.inf):
        warnings.warn(f"{phi.spec()}: renorming needs 1 < a_phi <= b_phi < inf", RuntimeWarning)
    v, cum = _nonzero(s)
    if v.size == 0:
        return NormResult(0.0, "BanachRenorm", "PiecewiseMax")
    total = float(cum[-1])

    # at a step end A(T_i) >= v_i; taking the max keeps weak <= renorm exact in floating point
    ends = np.maximum(_integral(s, cum) / cum, v)
    best = float(np.max(ends / phi._inverse(1.0 / cum)))
    if v.size > 1:
        # first step: A is constant, objective increasing -> endpoint suffices
        t_lo, t_hi = cum[:-1], cum[1:]
        u_hi = phi._inverse(1.0 / t_lo)  # u decreases as t grows
        u_lo = phi._inverse(1.0 / t_hi)
        a, b = u_lo.copy(), u_hi.copy()

        def obj_u(u):
            t = np.clip(1.0 / phi._value(u), t_lo, t_hi)
            return _integral(s, t) / t / u

        x1 = b - _GOLDEN * (b - a)
        x2 = a + _GOLDEN * (b - a)
        f1, f2 = obj_u(x1), obj_u(x2)
        for _ in range(_GOLDEN_ITERS):
            left = f1 >= f2  # maximum lies in [a, x2]
            b = np.where(left, x2, b)
            a = np.where(left, a, x1)
            x2n = np.where(left, x1, a + _GOLDEN * (b - a))
            x1n = np.where(left, b - _GOLDEN * (b - a), x2)
            f1, f2 = np.where(left, obj_u(x1n), f2), np.where(left, f1, obj_u(x2n))
            x1, x2 = x1n, x2n
            t_width = np.abs(1.0 / phi._value(a) - 1.0 / phi._value(b))
            if np.all(t_width <= _GOLDEN_TTOL * total):
                break
        best = max(best, float(np.max(np.maximum(f1, f2))))
    return NormResult(best, "BanachRenorm", "PiecewiseMax")


# ---------------------------------------------------------------------------
# square functions


def column_gram(xs: Sequence[TracialMatrix]) -> np.ndarray:
    """``sum_k x_k^* x_k``."""
    _check_compatible(xs)
    a = np.stack([x.entries for x in xs])
    return np.einsum("kji,kjl->il", np.conj(a), a)


def row_gram(xs: Sequence[TracialMatrix]) -> np.ndarray:
    """``sum_k x_k x_k^*``."""
    _check_compatible(xs)
    a = np.stack([x.entries for x in xs])
    return np.einsum("kij,klj->il", a, np.conj(a))


def column_square_spectrum(xs: Sequence[TracialMatrix]) -> SingularSpectrum:
    """Spectrum of ``(sum_k |x_k|^2)^(1/2)``."""
    return psd_spectrum(column_gram(xs), xs[0].weight)


def row_square_spectrum(xs: Sequence[TracialMatrix]) -> SingularSpectrum:
    """Spectrum of ``(sum_k |x_k^*|^2)^(1/2)``."""
    return psd_spectrum(row_gram(xs), xs[0].weight)


def column_square_norm(xs: Sequence[TracialMatrix], phi: OrliczFunction) -> NormResult:
    return NormResult(_weak_value(column_square_spectrum(xs), phi), "ColumnSquare", "PiecewiseMax")


def row_square_norm(xs: Sequence[TracialMatrix], phi: OrliczFunction) -> NormResult:
    return NormResult(_weak_value(row_square_spectrum(xs), phi), "RowSquare", "PiecewiseMax")


def dilation_norm_estimate(phi: OrliczFunction, scale: float,
                           corpus: Sequence[SingularSpectrum]) -> float:
    """Empirical lower bound on the norm of the dilation ``mu_t -> mu_{t/scale}``."""
    if not scale > 0:
        raise ValueError("scale must be positive")
    if not corpus:
        raise ValueError("empty corpus")
    best = 0.0
    for s in corpus:
        base = _weak_value(s, phi)
        if base > 0:
            best = max(best, _weak_value(s.dilated(scale), phi) / base)
    return best


def norm_by_form(s: SingularSpectrum, phi: OrliczFunction, form: str) -> NormResult:
    """Dispatch on the CLI form names ``weak|lambda|moment|luxemburg|banach|weak-lp:<p>``."""
    if form.startswith("weak-lp:"):
        return weak_lp_norm(s, float(form.split(":", 1)[1]))
    table = {"weak": weak_orlicz_norm, "lambda": weak_orlicz_norm_lambda,
             "moment": phi_moment, "luxemburg": luxemburg_norm, "banach": banach_renorm}
    if form not in table:
        raise ValueError(f"unknown norm form {form!r}")
    return table[form](s, phi)


__all__ = ["NormResult", "weak_orlicz_norm", "weak_orlicz_norm_lambda", "phi_moment",
           "luxemburg_norm", "weak_lp_norm", "hardy_average", "banach_renorm",
           "column_gram", "row_gram", "column_square_spectrum", "row_square_spectrum",
           "column_square_norm", "row_square_norm", "dilation_norm_estimate",
           "norm_by_form", "Power"]
