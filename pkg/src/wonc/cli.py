"""``wonc`` command-line entry point.

Exit codes: 0 on pass or informative verdicts, 1 on fail, 2 on usage errors.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import __version__
from .corpus import ENSEMBLES, CorpusSpec, generate_corpus
from .errors import PreconditionError, ResourceLimitError
from .norms import norm_by_form
from .orlicz import (DEFAULT_GRID_MAX, DEFAULT_GRID_MIN, DEFAULT_GRID_POINTS, delta2_check,
                     indices_closed_form, indices_estimate, parse_phi)
from .report import canonical_json
from .spectral import TracialMatrix, singular_spectrum
from .suites import SUITES, run_suite

EXIT_PASS, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _add_grid(p):
    p.add_argument("--grid-min", type=float, default=DEFAULT_GRID_MIN)
    p.add_argument("--grid-max", type=float, default=DEFAULT_GRID_MAX)
    p.add_argument("--points", type=int, default=DEFAULT_GRID_POINTS)


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="wonc", description="Weak Orlicz quasi-norms on tracial matrix algebras.")
    ap.add_argument("--version", action="version", version=f"wonc {__version__}")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("norm", help="evaluate a norm-like functional of a matrix")
    p.add_argument("--phi", required=True)
    p.add_argument("--matrix", required=True, help="matrix JSON file")
    p.add_argument("--form", default="weak",
                   help="weak|lambda|moment|luxemburg|banach|weak-lp:<p>")

    p = sub.add_parser("indices", help="growth indices of an Orlicz function")
    p.add_argument("--phi", required=True)
    _add_grid(p)

    p = sub.add_parser("verify", help="run a verification suite")
    p.add_argument("suite", help="|".join(SUITES))
    p.add_argument("--phi", required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--instances", type=int)
    p.add_argument("--dim", type=int)
    p.add_argument("--ensemble", choices=ENSEMBLES)
    p.add_argument("--scale", type=float)
    p.add_argument("--op", help="hardy|identity|adjoint|condexp:<k> (interp)")
    p.add_argument("--levels", type=int, help="filtration depth m (transform, stein, bg)")
    p.add_argument("--k", type=int, help="number of Rademacher variables (khintchine)")
    p.add_argument("--degree", type=int, help="polynomial degree (fourier)")
    p.add_argument("--regime", choices=("auto", "low", "high"))
    p.add_argument("--budget", type=int, help="decomposition search budget")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--no-envelope", action="store_true", help="ignore committed envelopes")
    p.add_argument("--out", help="report JSON path (default: stdout)")
    p.add_argument("--csv", help="optional CSV of per-instance records")
    _add_grid(p)

    p = sub.add_parser("gen", help="write a seeded corpus as matrix JSON files")
    p.add_argument("--spec", required=True, help="corpus spec JSON (file path or inline)")
    p.add_argument("--out", required=True, help="output directory")

    p = sub.add_parser("calibrate", help="regenerate envelopes and seed-42 baselines")
    p.add_argument("--baseline-dir")
    return ap


def _cmd_norm(args) -> int:
    phi = parse_phi(args.phi)
    x = TracialMatrix.from_json(json.loads(Path(args.matrix).read_text()))
    res = norm_by_form(singular_spectrum(x), phi, args.form)
    sys.stdout.write(canonical_json(res.to_dict()))
    return EXIT_PASS


def _cmd_indices(args) -> int:
    phi = parse_phi(args.phi)
    est = indices_estimate(phi, args.grid_min, args.grid_max, args.points)
    closed = indices_closed_form(phi)
    d2 = delta2_check(phi, args.grid_min, args.grid_max, args.points)
    out = {"phi": phi.spec(), "closed_form": closed.to_dict() if closed else None,
           "estimate": est.to_dict(), "delta2": {"holds": d2.holds, "witness": d2.witness}}
    sys.stdout.write(canonical_json(out))
    return EXIT_PASS


_VERIFY_KEYS = ("phi", "seed", "instances", "dim", "ensemble", "scale", "op", "levels", "k",
                "degree", "regime", "budget")


def _cmd_verify(args) -> int:
    if args.suite not in SUITES:
        print(f"wonc: unknown suite {args.suite!r}; choose from {', '.join(SUITES)}",
              file=sys.stderr)
        return EXIT_USAGE
    if args.suite == "indices":
        opts = {"phi": args.phi, "grid_min": args.grid_min, "grid_max": args.grid_max,
                "points": args.points}
    else:
        opts = {k: getattr(args, k) for k in _VERIFY_KEYS}
    rep = run_suite(args.suite, opts, workers=args.workers, use_envelope=not args.no_envelope)
    if args.out:
        rep.write(args.out, args.csv)
        summary = {"suite": rep.suite, "verdict": rep.verdict, "out": args.out,
                   "failed_checks": sorted(k for k, v in rep.checks.items() if not v),
                   "violations": {k: len(v) for k, v in rep.violations.items()}}
        sys.stdout.write(canonical_json(summary))
    else:
        if args.csv:
            Path(args.csv).write_text(rep.to_csv())
        sys.stdout.write(rep.to_json())
    for note in rep.notes:
        print(f"wonc: note: {note}", file=sys.stderr)
    if rep.verdict == "informative":
        print("wonc: verdict informative", file=sys.stderr)
    return rep.exit_code


def _cmd_gen(args) -> int:
    text = args.spec
    path = Path(text)
    if path.exists():
        text = path.read_text()
    spec = CorpusSpec.from_dict(json.loads(text))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "corpus.json").write_text(canonical_json(spec.to_dict()))
    width = len(str(spec.instances - 1))
    for i, x in enumerate(generate_corpus(spec)):
        (out / f"instance_{i:0{width}d}.json").write_text(canonical_json(x.to_json()))
    return EXIT_PASS


def _cmd_calibrate(args) -> int:
    from .calibrate import calibrate
    verdicts = calibrate(args.baseline_dir)
    sys.stdout.write(canonical_json(verdicts))
    return EXIT_FAIL if "fail" in verdicts.values() else EXIT_PASS


_COMMANDS = {"norm": _cmd_norm, "indices": _cmd_indices, "verify": _cmd_verify,
             "gen": _cmd_gen, "calibrate": _cmd_calibrate}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (ValueError, KeyError, PreconditionError, ResourceLimitError, OSError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"wonc: error: {msg}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
