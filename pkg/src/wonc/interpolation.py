"""Quasilinear operators and empirical weak-type / interpolation checks.

An operator either acts on matrices (``domain="matrix"``) or on singular
spectra read as decreasing functions of ``t`` (``domain="spectrum"``).  Weak
types are declared on the operator and spot-checked against a corpus; the
interpolation check compares weak Phi-moments of ``Tx`` and ``x``.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from importlib import resources
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import PreconditionError
from .martingale import DyadicFiltration, conditional_expectation
from .norms import _integral, phi_moment, weak_lp_norm
from .orlicz import OrliczFunction, indices
from .spectral import (SingularSpectrum, TracialMatrix, lambda_at, singular_spectrum,
                       spectral_truncate)

HARDY_POINTS_PER_PIECE = 8
HARDY_TAIL_DOUBLINGS = 8
HARDY_WEAK_TYPE_P = (1.5, 4.0)
WEAK_TYPE_SLACK = 1e-9
SCALES = (0.25, 1.0, 4.0)


@dataclass(frozen=True)
class QuasilinearOperator:
    """``T`` with ``|T(x + y)| <~ K (|Tx| + |Ty|)`` and declared weak types."""

    name: str
    apply: Callable
    K: float = 1.0
    certified_weak_types: tuple = ()
    domain: str = "matrix"

    def __post_init__(self):
        if not self.K >= 1:
            raise ValueError("quasilinearity constant must be >= 1")
        if self.domain not in ("matrix", "spectrum"):
            raise ValueError(f"unknown domain {self.domain!r}")
        for p, c in self.certified_weak_types:
            if not (p > 0 and c > 0):
                raise ValueError("weak types need positive exponent and constant")

    def prepare(self, x):
        """Bring a corpus element into the operator's domain."""
        if self.domain == "spectrum" and isinstance(x, TracialMatrix):
            return singular_spectrum(x)
        return x

    def spectrum_of(self, x) -> SingularSpectrum:
        """Singular spectrum of ``T x`` for a prepared input."""
        y = self.apply(x)
        return y if isinstance(y, SingularSpectrum) else singular_spectrum(y)

    def exponents(self):
        return sorted(p for p, _ in self.certified_weak_types)


# ---------------------------------------------------------------------------
# concrete operators


def hardy_transform(s: SingularSpectrum) -> SingularSpectrum:
    """Running average ``A(t) = (1/t) int_0^t mu`` as a step function.

    Each step of ``mu`` is cut into 8 equal parts and ``A`` is sampled at the
    left end of each part (``A`` is decreasing, so the samples dominate it).
    Past the support ``A(t) = ||x||_1 / t``; this tail is kept on
    ``[T_n, 2^8 T_n]`` with 8 geometric points per doubling.
    """
    nz = s.values > 0
    if not np.any(nz):
        return SingularSpectrum(np.zeros(1), np.array([s.total_weight]))
    v, w = s.values[nz], s.weights[nz]
    starts = np.concatenate([[0.0], np.cumsum(w)[:-1]])
    j = np.arange(HARDY_POINTS_PER_PIECE) / HARDY_POINTS_PER_PIECE
    t = (starts[:, None] + j * w[:, None]).ravel()
    sub_w = np.repeat(w / HARDY_POINTS_PER_PIECE, HARDY_POINTS_PER_PIECE)
    vals = np.empty_like(t)
    vals[0] = v[0]
    vals[1:] = _integral(s, t[1:]) / t[1:]

    total = float(np.sum(w))
    mass = float(np.sum(v * w))
    k = np.arange(HARDY_TAIL_DOUBLINGS * HARDY_POINTS_PER_PIECE + 1)
    edges = total * 2.0 ** (k / HARDY_POINTS_PER_PIECE)
    tail_vals = mass / edges[:-1]
    return SingularSpectrum(np.concatenate([vals, tail_vals]),
                            np.concatenate([sub_w, np.diff(edges)]))


def _load_hardy_constants() -> tuple:
    """Calibrated weak-type constants; falls back to the strong-type ``p/(p-1)``."""
    try:
        data = json.loads(resources.files("wonc").joinpath("data/envelopes.json").read_text())
        consts = data["weak_types"]["hardy"]
        return tuple((p, float(consts[repr(p)])) for p in HARDY_WEAK_TYPE_P)
    except (FileNotFoundError, KeyError, ValueError):
        return tuple((p, p / (p - 1.0)) for p in HARDY_WEAK_TYPE_P)


def hardy_average_operator(weak_types: Optional[Sequence] = None) -> QuasilinearOperator:
    """Hardy averaging ``f -> (1/t) int_0^t |f|`` on spectra (sublinear, K = 1)."""
    wt = tuple(weak_types) if weak_types is not None else _load_hardy_constants()
    return QuasilinearOperator("hardy", hardy_transform, 1.0, wt, "spectrum")


def _identity(x):
    return x


def _adjoint(x):
    return x.adjoint()


def identity_operator() -> QuasilinearOperator:
    return QuasilinearOperator("identity", _identity, 1.0, ((1.0, 1.0), (math.inf, 1.0)))


def adjoint_operator() -> QuasilinearOperator:
    return QuasilinearOperator("adjoint", _adjoint, 1.0, ((1.0, 1.0), (math.inf, 1.0)))


@dataclass(frozen=True)
class _CondExp:
    k: int

    def __call__(self, x: TracialMatrix) -> TracialMatrix:
        m = int(round(math.log2(x.dim)))
        if 2 ** m != x.dim:
            raise ValueError(f"conditional expectation needs a power-of-two dimension, got {x.dim}")
        return conditional_expectation(DyadicFiltration(m), min(self.k, m), x)


def condexp_operator(k: int) -> QuasilinearOperator:
    """``E_k`` of the dyadic tower; a contraction on every ``L_p``."""
    if k < 0:
        raise ValueError("level must be >= 0")
    return QuasilinearOperator(f"condexp:{k}", _CondExp(k), 1.0, ((1.0, 1.0), (math.inf, 1.0)))


def scaled_operator(op: QuasilinearOperator, alpha: float) -> QuasilinearOperator:
    """``x -> alpha T(x)``; weak-type constants scale by ``|alpha|``."""
    a = abs(alpha)

    def apply(x):
        y = op.apply(x)
        return y.scaled(a) if isinstance(y, SingularSpectrum) else alpha * y

    return QuasilinearOperator(f"{a!r}*{op.name}", apply, op.K,
                               tuple((p, c * a) for p, c in op.certified_weak_types), op.domain)


def parse_operator(text: str) -> QuasilinearOperator:
    """``hardy|identity|adjoint|condexp:<k>``."""
    if text == "hardy":
        return hardy_average_operator()
    if text == "identity":
        return identity_operator()
    if text == "adjoint":
        return adjoint_operator()
    if text.startswith("condexp:"):
        try:
            return condexp_operator(int(text.split(":", 1)[1]))
        except ValueError:
            pass
    raise ValueError(f"unknown operator {text!r}")


# ---------------------------------------------------------------------------
# verification


@dataclass(frozen=True)
class WeakTypeResult:
    p: float
    constant: float
    ratios: tuple
    skipped: int


def _lp(s: SingularSpectrum, p: float) -> float:
    return s.lp_norm(p)


def verify_weak_type(op: QuasilinearOperator, p: float, corpus: Sequence) -> WeakTypeResult:
    """Empirical ``max ||Tx||_{L_p^w} / ||x||_{L_p}`` over the corpus.

    Instances with ``||x||_{L_p} = 0`` are skipped and counted.
    """
    if not corpus:
        raise ValueError("empty corpus")
    ratios, skipped = [], 0
    for x in corpus:
        xs = singular_spectrum(x) if isinstance(x, TracialMatrix) else x
        base = _lp(xs, p)
        if base == 0:
            skipped += 1
            ratios.append(math.nan)
            continue
        tx = op.spectrum_of(op.prepare(x))
        ratios.append(weak_lp_norm(tx, p).value / base)
    finite = [r for r in ratios if not math.isnan(r)]
    return WeakTypeResult(float(p), max(finite) if finite else 0.0, tuple(ratios), skipped)


def check_certified_weak_types(op: QuasilinearOperator, corpus: Sequence,
                               slack: float = WEAK_TYPE_SLACK) -> dict:
    """Spot-check every declared weak type: ``||Tx||_{p,w} <= C ||x||_p + slack``."""
    out = {}
    for p, c in op.certified_weak_types:
        res = verify_weak_type(op, p, corpus)
        out[p] = res.constant <= c * (1.0 + slack) + slack
    return out


def index_sandwich(op: QuasilinearOperator, phi: OrliczFunction):
    """Certified exponents ``p0 < a_phi <= b_phi < p1``, or raise."""
    ind = indices(phi)
    ps = op.exponents()
    lower = [p for p in ps if p < ind.lower]
    upper = [p for p in ps if p > ind.upper]
    if not lower or not upper:
        raise PreconditionError(
            f"{phi.spec()} has indices ({ind.lower}, {ind.upper}); operator {op.name} is "
            f"certified at p in {ps}, which does not bracket them")
    return max(lower), min(upper)


@dataclass(frozen=True)
class InterpolationReport:
    phi: str
    operator: str
    size: int
    seed: Optional[int]
    ratios: tuple
    max_ratio: float
    ceiling: Optional[float]
    verdict: str
    skipped: int = 0
    scale_max: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"phi": self.phi, "operator": self.operator, "size": self.size, "seed": self.seed,
                "ratios": list(self.ratios), "max_ratio": self.max_ratio, "ceiling": self.ceiling,
                "verdict": self.verdict, "skipped": self.skipped,
                "scale_max": {repr(k): v for k, v in self.scale_max.items()}}


def interpolation_ratio(op: QuasilinearOperator, phi: OrliczFunction, x) -> float:
    """``sup_t t phi(mu_t(Tx)) / sup_t t phi(mu_t(x))``; NaN when ``x = 0``."""
    xs = singular_spectrum(x) if isinstance(x, TracialMatrix) else x
    base = phi_moment(xs, phi).value
    if base == 0:
        return math.nan
    return phi_moment(op.spectrum_of(op.prepare(x)), phi).value / base


def _scale(x, a):
    return x.scaled(a) if isinstance(x, SingularSpectrum) else a * x


def verify_interpolation(op: QuasilinearOperator, phi: OrliczFunction, corpus: Sequence,
                         ceiling: Optional[float] = None, seed: Optional[int] = None,
                         scales: Sequence[float] = SCALES) -> InterpolationReport:
    """Per-instance interpolation ratios, their maximum, and a verdict.

    The verdict is ``pass``/``fail`` against ``ceiling`` (checked at every
    scale in ``scales``) or ``informative`` when no ceiling is configured.
    """
    index_sandwich(op, phi)
    if not corpus:
        raise ValueError("empty corpus")
    ratios = tuple(interpolation_ratio(op, phi, x) for x in corpus)
    finite = [r for r in ratios if not math.isnan(r)]
    max_ratio = max(finite) if finite else 0.0
    scale_max = {}
    for a in scales:
        if a == 1.0:
            scale_max[a] = max_ratio
            continue
        rs = [interpolation_ratio(op, phi, _scale(x, a)) for x in corpus]
        rs = [r for r in rs if not math.isnan(r)]
        scale_max[a] = max(rs) if rs else 0.0
    if ceiling is None:
        verdict = "informative"
    else:
        verdict = "pass" if all(v <= ceiling for v in scale_max.values()) else "fail"
    return InterpolationReport(phi.spec(), op.name, len(corpus), seed, ratios, max_ratio,
                               ceiling, verdict, len(ratios) - len(finite), scale_max)


def proof_decomposition(x, alpha: float):
    """``x = x_0 + x_1`` with ``x_0 = x e_(alpha, inf)(|x|)``.

    For a spectrum the head keeps the values above ``alpha`` and the tail the
    remaining ones, each as a spectrum on its own.
    """
    if isinstance(x, TracialMatrix):
        return spectral_truncate(x, alpha)
    if not alpha > 0:
        raise ValueError("alpha must be positive")
    head = x.values > alpha
    hv = np.where(head, x.values, 0.0)
    tv = np.where(head, 0.0, x.values)
    return SingularSpectrum(hv, x.weights), SingularSpectrum(tv, x.weights)


@dataclass(frozen=True)
class DecompositionProbe:
    alpha: float
    lhs: float  # lambda_{2 K alpha}(T x)
    head: float  # lambda_alpha(T x_0)
    tail: float  # lambda_alpha(T x_1)

    @property
    def holds(self) -> bool:
        return self.lhs <= self.head + self.tail + 1e-12


def instrument_decomposition(op: QuasilinearOperator, x, alpha: float) -> DecompositionProbe:
    """Distribution functions on both sides of the split at level ``alpha``."""
    xp = op.prepare(x)
    x0, x1 = proof_decomposition(xp, alpha)
    tx = op.spectrum_of(xp)
    return DecompositionProbe(float(alpha), lambda_at(tx, 2.0 * op.K * alpha),
                              lambda_at(op.spectrum_of(x0), alpha),
                              lambda_at(op.spectrum_of(x1), alpha))


__all__ = ["QuasilinearOperator", "hardy_transform", "hardy_average_operator",
           "identity_operator", "adjoint_operator", "condexp_operator", "scaled_operator",
           "parse_operator", "WeakTypeResult", "verify_weak_type",
           "check_certified_weak_types", "index_sandwich", "InterpolationReport",
           "interpolation_ratio", "verify_interpolation", "proof_decomposition",
           "DecompositionProbe", "instrument_decomposition"]
