"""Orlicz functions: evaluation, derivative, inverse, and growth indices.

Four closed families are supported so that derivatives and (where they
exist) the indices ``a_phi = inf t phi'(t)/phi(t)`` and
``b_phi = sup t phi'(t)/phi(t)`` are known exactly:

========  ==========================  ====================
spec      phi(t)                      constraints
========  ==========================  ====================
pow:p     t**p                        p >= 1
plog:a,b  t**a * log(1 + t**b)        a > 1, b > 0
psin:p,c  t**p * (1 + c sin(p ln t))  0 < c < 1/2, p > 1/(1-2c)
spow:l,p  l * t**p                    l > 0, p >= 1
========  ==========================  ====================

All functions accept scalars or numpy arrays.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import PreconditionError

DEFAULT_GRID_MIN = 1e-12
DEFAULT_GRID_MAX = 1e16
DEFAULT_GRID_POINTS = 4096

_INVERSE_RTOL = 1e-12
_MAX_BRACKET_STEPS = 2200
_MAX_BISECTIONS = 200


def _fmt(x: float) -> str:
    s = repr(float(x))
    return s[:-2] if s.endswith(".0") else s


def _as_nonneg(t, name="t"):
    arr = np.asarray(t, dtype=float)
    if np.any(np.isnan(arr)) or np.any(~np.isfinite(arr)):
        raise ValueError(f"{name} must be finite, got {t!r}")
    if np.any(arr < 0):
        raise ValueError(f"{name} must be non-negative, got {t!r}")
    return arr


def _unwrap(arr):
    return float(arr) if np.ndim(arr) == 0 else arr


@dataclass(frozen=True)
class OrliczIndices:
    """Lower/upper growth indices of an Orlicz function."""

    lower: float
    upper: float
    method: str  # "ClosedForm" or "GridEstimate"
    grid_min: Optional[float] = None
    grid_max: Optional[float] = None
    points: Optional[int] = None

    def __post_init__(self):
        if not (1.0 - 1e-12 <= self.lower <= self.upper + 1e-12):
            raise ValueError(f"invalid indices ({self.lower}, {self.upper})")

    def to_dict(self) -> dict:
        d = {"lower": self.lower, "upper": self.upper, "method": self.method}
        if self.method == "GridEstimate":
            d.update(grid_min=self.grid_min, grid_max=self.grid_max, points=self.points)
        return d


@dataclass(frozen=True)
class Delta2Result:
    holds: bool
    witness: float


class OrliczFunction:
    """Base class; subclasses implement ``_value`` and ``_deriv``."""

    family: str = ""

    def _value(self, t: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _deriv(self, t: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _inverse(self, u: np.ndarray) -> np.ndarray:
        return _bisect_inverse(self._value, u)

    # public API -----------------------------------------------------------

    def __call__(self, t):
        return _unwrap(self._value(_as_nonneg(t)))

    def derivative(self, t):
        """Right derivative phi'(t), for t > 0."""
        arr = _as_nonneg(t)
        if np.any(arr <= 0):
            raise ValueError("derivative requires t > 0")
        return _unwrap(self._deriv(arr))

    def inverse(self, u):
        """The unique t >= 0 with phi(t) = u."""
        return _unwrap(self._inverse(_as_nonneg(u, "u")))

    def closed_form_indices(self) -> Optional[OrliczIndices]:
        return None

    def spec(self) -> str:
        raise NotImplementedError

    def __str__(self):
        return self.spec()


def _bisect_inverse(f, u: np.ndarray) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    flat = np.atleast_1d(u).ravel()
    out = np.zeros_like(flat)
    pos = flat > 0
    if not np.any(pos):
        return out.reshape(u.shape)
    target = flat[pos]
    lo = np.ones_like(target)
    hi = np.ones_like(target)

    # bracket: double hi while phi(hi) < u, halve lo while phi(lo) >= u
    up = f(hi) < target
    for _ in range(_MAX_BRACKET_STEPS):
        need = up & (f(hi) < target)
        if not np.any(need):
            break
        hi[need] *= 2.0
    lo[up] = hi[up] / 2.0
    down = ~up
    for _ in range(_MAX_BRACKET_STEPS):
        need = down & (f(lo) >= target)
        if not np.any(need):
            break
        lo[need] /= 2.0
    hi[down] = lo[down] * 2.0

    for _ in range(_MAX_BISECTIONS):
        mid = 0.5 * (lo + hi)
        above = f(mid) >= target
        hi = np.where(above, mid, hi)
        lo = np.where(above, lo, mid)
        if np.all(hi - lo <= _INVERSE_RTOL * hi * 1e-3):
            break
    out[pos] = 0.5 * (lo + hi)
    return out.reshape(u.shape)


@dataclass(frozen=True)
class Power(OrliczFunction):
    p: float
    family = "Power"

    def __post_init__(self):
        if not (math.isfinite(self.p) and self.p >= 1):
            raise ValueError(f"Power requires p >= 1, got {self.p}")

    def _value(self, t):
        return t ** self.p

    def _deriv(self, t):
        return self.p * t ** (self.p - 1)

    def _inverse(self, u):
        return u ** (1.0 / self.p)

    def closed_form_indices(self):
        return OrliczIndices(self.p, self.p, "ClosedForm")

    def spec(self):
        return f"pow:{_fmt(self.p)}"


@dataclass(frozen=True)
class ScaledPower(OrliczFunction):
    lam: float
    p: float
    family = "ScaledPower"

    def __post_init__(self):
        if not (math.isfinite(self.lam) and self.lam > 0):
            raise ValueError(f"ScaledPower requires lambda > 0, got {self.lam}")
        if not (math.isfinite(self.p) and self.p >= 1):
            raise ValueError(f"ScaledPower requires p >= 1, got {self.p}")

    def _value(self, t):
        return self.lam * t ** self.p

    def _deriv(self, t):
        return self.lam * self.p * t ** (self.p - 1)

    def _inverse(self, u):
        return (u / self.lam) ** (1.0 / self.p)

    def closed_form_indices(self):
        return OrliczIndices(self.p, self.p, "ClosedForm")

    def spec(self):
        return f"spow:{_fmt(self.lam)},{_fmt(self.p)}"


@dataclass(frozen=True)
class PowerLog(OrliczFunction):
    """t**a * log(1 + t**b); indices (a, a + b)."""

    a: float
    b: float
    family = "PowerLog"

    def __post_init__(self):
        if not (math.isfinite(self.a) and self.a > 1):
            raise ValueError(f"PowerLog requires a > 1, got {self.a}")
        if not (math.isfinite(self.b) and self.b > 0):
            raise ValueError(f"PowerLog requires b > 0, got {self.b}")

    def _value(self, t):
        return t ** self.a * np.log1p(t ** self.b)

    def _deriv(self, t):
        tb = t ** self.b
        return (self.a * t ** (self.a - 1) * np.log1p(tb)
                + self.b * t ** (self.a - 1) * tb / (1.0 + tb))

    def closed_form_indices(self):
        return OrliczIndices(self.a, self.a + self.b, "ClosedForm")

    def spec(self):
        return f"plog:{_fmt(self.a)},{_fmt(self.b)}"


@dataclass(frozen=True)
class PowerSin(OrliczFunction):
    """t**p * (1 + c sin(p ln t)), a perturbation of t**p.

    The elasticity t phi'/phi oscillates around p, so no closed-form
    indices are reported.
    """

    p: float
    c: float
    family = "PowerSin"

    def __post_init__(self):
        if not (0 < self.c < 0.5):
            raise ValueError(f"PowerSin requires 0 < c < 1/2, got {self.c}")
        if not (math.isfinite(self.p) and self.p > 1.0 / (1.0 - 2.0 * self.c)):
            raise ValueError(f"PowerSin requires p > 1/(1-2c), got p={self.p}")

    def _value(self, t):
        with np.errstate(divide="ignore"):
            lt = np.log(np.where(t > 0, t, 1.0))
        return np.where(t > 0, t ** self.p * (1.0 + self.c * np.sin(self.p * lt)), 0.0)

    def _deriv(self, t):
        lt = np.log(t)
        pl = self.p * lt
        return self.p * t ** (self.p - 1) * (1.0 + self.c * np.sin(pl) + self.c * np.cos(pl))

    def spec(self):
        return f"psin:{_fmt(self.p)},{_fmt(self.c)}"


_FAMILIES = {"pow": (Power, 1), "plog": (PowerLog, 2), "psin": (PowerSin, 2), "spow": (ScaledPower, 2)}


def parse_phi(text: str) -> OrliczFunction:
    """Parse the ``family:params`` mini-language, e.g. ``plog:2,1``."""
    try:
        name, _, rest = text.strip().partition(":")
        cls, nargs = _FAMILIES[name]
        args = [float(v) for v in rest.split(",")]
    except (KeyError, ValueError):
        raise ValueError(f"cannot parse Orlicz function {text!r}") from None
    if len(args) != nargs:
        raise ValueError(f"{name} takes {nargs} parameter(s), got {len(args)}")
    return cls(*args)


# module-level operations ------------------------------------------------------

def evaluate(phi: OrliczFunction, t):
    return phi(t)


def derivative(phi: OrliczFunction, t):
    return phi.derivative(t)


def inverse(phi: OrliczFunction, u):
    return phi.inverse(u)


def indices_closed_form(phi: OrliczFunction) -> Optional[OrliczIndices]:
    return phi.closed_form_indices()


def indices_estimate(phi: OrliczFunction, grid_min: float = DEFAULT_GRID_MIN,
                     grid_max: float = DEFAULT_GRID_MAX,
                     points: int = DEFAULT_GRID_POINTS) -> OrliczIndices:
    """Min and max of t phi'(t)/phi(t) over a log-spaced grid."""
    if not (0 < grid_min < grid_max) or points < 2:
        raise ValueError("need 0 < grid_min < grid_max and points >= 2")
    t = np.geomspace(grid_min, grid_max, int(points))
    val = phi._value(t)
    if np.any(val <= 0):
        raise PreconditionError("phi vanished at a positive grid point")
    ratio = t * phi._deriv(t) / val
    lower = max(float(ratio.min()), 1.0)
    return OrliczIndices(lower, max(float(ratio.max()), lower), "GridEstimate",
                         float(grid_min), float(grid_max), int(points))


def indices(phi: OrliczFunction) -> OrliczIndices:
    """Closed-form indices when known, otherwise the default grid estimate."""
    return phi.closed_form_indices() or indices_estimate(phi)


def delta2_check(phi: OrliczFunction, grid_min: float = DEFAULT_GRID_MIN,
                 grid_max: float = DEFAULT_GRID_MAX,
                 points: int = DEFAULT_GRID_POINTS) -> Delta2Result:
    est = indices_estimate(phi, grid_min, grid_max, points)
    t = np.geomspace(grid_min, grid_max, int(points))
    witness = float(np.max(phi._value(2.0 * t) / phi._value(t)))
    return Delta2Result(bool(np.isfinite(est.upper)), witness)
