"""Verification reports, canonical serialization, and committed envelopes.

Reports serialize canonically: sorted keys, compact separators, and floats in
the shortest decimal form that round-trips (Python's ``repr``).  Two runs with
the same inputs therefore produce identical bytes.
"""
from __future__ import annotations

import csv
import io
import json
import math
import os
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__

HEADROOM = 1.5
CALIBRATION_SEED = 42
VERDICTS = ("pass", "fail", "informative")


def _plain(obj):
    """Recursively convert numpy scalars/arrays to JSON-native values; NaN -> None."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else None
    return obj


def canonical_json(obj) -> str:
    return json.dumps(_plain(obj), sort_keys=True, separators=(",", ":"), allow_nan=False) + "\n"


def _finite(values):
    return [float(v) for v in values if v is not None and math.isfinite(v)]


def aggregate(records, names) -> dict:
    """``max``/``median``/``min``/``count`` of each ratio over non-skipped records."""
    out = {}
    for name in names:
        vals = _finite(r["ratios"].get(name) for r in records if not r["skipped"])
        if vals:
            out[name] = {"max": max(vals), "median": float(np.median(vals)), "min": min(vals),
                         "count": len(vals)}
        else:
            out[name] = {"max": None, "median": None, "min": None, "count": 0}
    return out


@dataclass
class VerificationReport:
    suite: str
    phi: Optional[str]
    corpus: Optional[dict]
    options: dict
    records: list = field(default_factory=list)
    checks: dict = field(default_factory=dict)
    envelope: Optional[dict] = None
    envelope_key: Optional[str] = None
    notes: list = field(default_factory=list)
    extra: dict = field(default_factory=dict)
    informative: bool = False
    envelope_required: bool = True
    verdict: str = "informative"
    aggregate: dict = field(default_factory=dict)
    violations: dict = field(default_factory=dict)

    def ratio_names(self) -> list:
        names = set()
        for r in self.records:
            names.update(r["ratios"])
        return sorted(names)

    def finalize(self) -> "VerificationReport":
        """Recompute aggregates, envelope violations and the verdict."""
        self.aggregate = aggregate(self.records, self.ratio_names())
        self.violations = {}
        if self.envelope:
            for name in self.ratio_names():
                bounds = self.envelope.get(name.split("@")[0])
                if bounds is None:
                    continue
                lo, hi = bounds.get("lo"), bounds.get("hi")
                bad = [r["index"] for r in self.records if not r["skipped"]
                       and r["ratios"].get(name) is not None and math.isfinite(r["ratios"][name])
                       and ((lo is not None and r["ratios"][name] < lo)
                            or (hi is not None and r["ratios"][name] > hi))]
                if bad:
                    self.violations[name] = bad
        if not all(self.checks.values()):
            self.verdict = "fail"
        elif self.informative:
            self.verdict = "informative"
        elif self.violations:
            self.verdict = "fail"
        elif self.envelope is None and self.envelope_required:
            self.verdict = "informative"
        else:
            self.verdict = "pass"
        return self

    @property
    def skipped(self) -> int:
        return sum(1 for r in self.records if r["skipped"])

    def to_dict(self) -> dict:
        return {"suite": self.suite, "tool": "wonc", "version": __version__, "phi": self.phi,
                "corpus": self.corpus, "options": self.options, "records": self.records,
                "aggregate": self.aggregate, "checks": self.checks, "envelope": self.envelope,
                "envelope_key": self.envelope_key, "violations": self.violations,
                "notes": self.notes, "extra": self.extra, "skipped": self.skipped,
                "verdict": self.verdict}

    def to_json(self) -> str:
        return canonical_json(self.to_dict())

    def to_csv(self) -> str:
        names = self.ratio_names()
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["index", "hash", "skipped"] + names)
        for r in self.records:
            w.writerow([r["index"], r["hash"], int(r["skipped"])]
                       + ["" if r["ratios"].get(n) is None else repr(float(r["ratios"][n]))
                          for n in names])
        return buf.getvalue()

    def write(self, path, csv_path=None):
        Path(path).write_text(self.to_json())
        if csv_path:
            Path(csv_path).write_text(self.to_csv())

    @property
    def exit_code(self) -> int:
        return 1 if self.verdict == "fail" else 0


# ---------------------------------------------------------------------------
# envelopes and baselines


def envelope_key(suite: str, phi: Optional[str], params: dict) -> str:
    body = ",".join(f"{k}={params[k]}" for k in sorted(params))
    return f"{suite}|{phi or '-'}|{body}"


def _data_text(name: str) -> Optional[str]:
    try:
        return resources.files("wonc").joinpath(f"data/{name}").read_text()
    except FileNotFoundError:
        return None


def load_envelopes() -> dict:
    text = _data_text("envelopes.json")
    return json.loads(text) if text else {"suites": {}, "weak_types": {}}


def lookup_envelope(key: str) -> Optional[dict]:
    return load_envelopes().get("suites", {}).get(key)


def envelope_from_ratios(records, two_sided, upper_only, headroom: float = HEADROOM) -> dict:
    """``[min / headroom, max * headroom]`` (or upper only) for each named ratio."""
    agg = aggregate(records, list(two_sided) + list(upper_only))
    env = {}
    for name in two_sided:
        a = agg[name]
        if a["count"]:
            env[name] = {"lo": a["min"] / headroom, "hi": a["max"] * headroom}
    for name in upper_only:
        a = agg[name]
        if a["count"]:
            env[name] = {"lo": None, "hi": a["max"] * headroom}
    return env


def baseline_dir() -> Path:
    env = os.environ.get("WONC_BASELINE_DIR")
    if env:
        return Path(env)
    return Path(str(resources.files("wonc").joinpath("baselines")))


def baseline_path(name: str) -> Path:
    return baseline_dir() / f"{name}.json"


def load_schema() -> dict:
    return json.loads(_data_text("report.schema.json"))


__all__ = ["HEADROOM", "CALIBRATION_SEED", "VERDICTS", "canonical_json", "aggregate",
           "VerificationReport", "envelope_key", "load_envelopes", "lookup_envelope",
           "envelope_from_ratios", "baseline_dir", "baseline_path", "load_schema"]
