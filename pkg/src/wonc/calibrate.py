"""Regenerate the committed envelopes and seed-42 baseline reports.

Two passes: the first runs every calibration suite without envelopes and
turns the observed ratios into ``[min / 1.5, max * 1.5]`` envelopes (upper
only for forward-only ratios); the second reruns with those envelopes in place
and stores the full canonical reports as baselines.
"""
from __future__ import annotations

import json
from importlib import resources
from pathlib import Path

from .corpus import CorpusSpec, generate_corpus
from .interpolation import HARDY_WEAK_TYPE_P, hardy_average_operator, verify_weak_type
from .report import (CALIBRATION_SEED, HEADROOM, baseline_dir, canonical_json,
                     envelope_from_ratios)
from .suites import SUITE_DEFS, run_suite

S = CALIBRATION_SEED

CALIBRATION_RUNS = (
    ("norms_plog2-1", "norms", {"phi": "plog:2,1", "seed": S, "instances": 500, "dim": 4}),
    ("norms_plog3-1", "norms", {"phi": "plog:3,1", "seed": S, "instances": 500, "dim": 4}),
    ("interp_hardy_plog2-1", "interp", {"phi": "plog:2,1", "op": "hardy", "seed": S,
                                        "instances": 200, "dim": 4}),
    ("interp_identity_plog2-1", "interp", {"phi": "plog:2,1", "op": "identity", "seed": S,
                                           "instances": 200, "dim": 4}),
    ("interp_adjoint_plog2-1", "interp", {"phi": "plog:2,1", "op": "adjoint", "seed": S,
                                          "instances": 200, "dim": 4}),
    ("transform_plog3-1", "transform", {"phi": "plog:3,1", "seed": S, "instances": 200,
                                        "levels": 3}),
    ("stein_plog3-1", "stein", {"phi": "plog:3,1", "seed": S, "instances": 200, "levels": 3}),
    ("bg_high_plog3-1", "bg", {"phi": "plog:3,1", "seed": S, "instances": 200, "levels": 3}),
    ("bg_low_plog1.2-0.5", "bg", {"phi": "plog:1.2,0.5", "seed": S, "instances": 200,
                                  "levels": 3}),
    ("khintchine_high_plog3-1", "khintchine", {"phi": "plog:3,1", "seed": S, "instances": 200,
                                               "k": 4, "dim": 4}),
    ("khintchine_low_plog1.2-0.5", "khintchine", {"phi": "plog:1.2,0.5", "seed": S,
                                                  "instances": 200, "k": 4, "dim": 4}),
    ("fourier_plog3-1", "fourier", {"phi": "plog:3,1", "seed": S, "instances": 100,
                                    "degree": 27, "dim": 4}),
)

HARDY_CALIBRATION = CorpusSpec(S, 200, 4)


def hardy_weak_type_constants(headroom: float = HEADROOM) -> dict:
    """Measured weak-type constants of the Hardy operator, with head-room."""
    op = hardy_average_operator(weak_types=())
    corpus = generate_corpus(HARDY_CALIBRATION)
    return {repr(p): verify_weak_type(op, p, corpus).constant * headroom
            for p in HARDY_WEAK_TYPE_P}


def _default_data_dir() -> Path:
    return Path(str(resources.files("wonc").joinpath("data")))


def calibrate(out_dir=None, workers: int = 1) -> dict:
    """Write ``data/envelopes.json`` in the package and baselines to ``out_dir``."""
    data = _default_data_dir()
    out = Path(out_dir) if out_dir else baseline_dir()
    data.mkdir(parents=True, exist_ok=True)
    out.mkdir(parents=True, exist_ok=True)

    suites = {}
    for _, name, opts in CALIBRATION_RUNS:
        rep = run_suite(name, opts, workers=workers, use_envelope=False)
        sd = SUITE_DEFS[name]
        suites[rep.envelope_key] = envelope_from_ratios(rep.records, sd.two_sided, sd.upper_only)
    envelopes = {"calibration": {"seed": S, "headroom": HEADROOM},
                 "suites": suites,
                 "weak_types": {"hardy": hardy_weak_type_constants()}}
    (data / "envelopes.json").write_text(json.dumps(json.loads(canonical_json(envelopes)),
                                                    sort_keys=True, indent=1) + "\n")

    verdicts = {}
    for fname, name, opts in CALIBRATION_RUNS:
        rep = run_suite(name, opts, workers=workers)
        (out / f"{fname}.json").write_text(rep.to_json())
        verdicts[fname] = rep.verdict
    return verdicts


__all__ = ["CALIBRATION_RUNS", "HARDY_CALIBRATION", "hardy_weak_type_constants", "calibrate"]
