"""Seeded random matrix corpora.

Every instance draws from its own counter-based Philox stream keyed by
``(seed, instance index)``, so instances can be generated in any order or on
any worker and still come out bit-identical.
"""
from __future__ import annotations

import hashlib
from dataclasses import asdict, dataclass

import numpy as np

from .spectral import TracialMatrix

ENSEMBLES = ("ComplexGinibre", "HermitianGaussian", "DiagonalLogUniform", "Unitary")
_LOG_LO, _LOG_HI = np.log(1e-3), np.log(1e3)


@dataclass(frozen=True)
class CorpusSpec:
    seed: int
    instances: int
    dim: int
    ensemble: str = "ComplexGinibre"
    scale: float = 1.0

    def __post_init__(self):
        if not (0 <= int(self.seed) < 2 ** 64):
            raise ValueError("seed must be an unsigned 64-bit integer")
        if self.instances < 1:
            raise ValueError("instances must be >= 1")
        if self.dim < 1:
            raise ValueError("dim must be >= 1")
        if self.ensemble not in ENSEMBLES:
            raise ValueError(f"unknown ensemble {self.ensemble!r}; choose from {ENSEMBLES}")
        if not (np.isfinite(self.scale) and self.scale > 0):
            raise ValueError("scale must be positive")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["scale"] = float(d["scale"])
        return d

    @classmethod
    def from_dict(cls, obj: dict) -> "CorpusSpec":
        return cls(int(obj["seed"]), int(obj["instances"]), int(obj["dim"]),
                   obj.get("ensemble", "ComplexGinibre"), float(obj.get("scale", 1.0)))


def instance_rng(seed: int, index: int, stream: int = 0) -> np.random.Generator:
    """Philox generator keyed by (seed, stream, index)."""
    key = np.array([int(seed) & 0xFFFFFFFFFFFFFFFF,
                    ((int(stream) & 0xFFFFFFFF) << 32) | (int(index) & 0xFFFFFFFF)],
                   dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def _ginibre(rng, n):
    return (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / np.sqrt(2.0)


def draw_matrix(rng: np.random.Generator, dim: int, ensemble: str, scale: float = 1.0) -> np.ndarray:
    if ensemble == "ComplexGinibre":
        a = _ginibre(rng, dim)
    elif ensemble == "HermitianGaussian":
        g = _ginibre(rng, dim)
        a = (g + g.conj().T) / 2.0
    elif ensemble == "DiagonalLogUniform":
        a = np.diag(np.exp(rng.uniform(_LOG_LO, _LOG_HI, dim))).astype(complex)
    elif ensemble == "Unitary":
        q, r = np.linalg.qr(_ginibre(rng, dim))
        d = np.diagonal(r)
        a = q * (d / np.abs(d))
    else:
        raise ValueError(f"unknown ensemble {ensemble!r}")
    return a * scale


def instance_matrices(spec: CorpusSpec, index: int, count: int = 1, stream: int = 0) -> list:
    """``count`` matrices for instance ``index`` (one stream per instance)."""
    rng = instance_rng(spec.seed, index, stream)
    return [TracialMatrix(draw_matrix(rng, spec.dim, spec.ensemble, spec.scale))
            for _ in range(count)]


def generate_corpus(spec: CorpusSpec) -> list:
    return [instance_matrices(spec, i)[0] for i in range(spec.instances)]


def matrix_hash(*mats) -> str:
    """Short content hash of one or more matrices (entries and weight)."""
    h = hashlib.sha256()
    for m in mats:
        h.update(np.ascontiguousarray(m.entries, dtype=np.complex128).tobytes())
        h.update(np.float64(m.weight).tobytes())
    return h.hexdigest()[:16]
