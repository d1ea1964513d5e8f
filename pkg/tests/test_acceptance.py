"""Acceptance criteria, one test per criterion; each prints a PASS/FAIL line.

Independent oracles: singular values come from LAPACK (``np.linalg.svd``)
wherever a criterion compares against a formula, and regression criteria
compare full report bytes with the committed seed-42 baselines.
"""
import math
import time

import numpy as np
import pytest

from conftest import PHIS
from wonc.calibrate import CALIBRATION_RUNS
from wonc.corpus import CorpusSpec, instance_matrices
from wonc.martingale import DyadicFiltration
from wonc.norms import (banach_renorm, luxemburg_norm, phi_moment, weak_orlicz_norm,
                        weak_orlicz_norm_lambda)
from wonc.orlicz import Power, indices_closed_form, indices_estimate, parse_phi
from wonc.report import baseline_path
from wonc.spectral import TracialMatrix, singular_spectra, singular_spectrum
from wonc.suites import SUITES, expectation_identities, run_suite

ENSEMBLES3 = ("ComplexGinibre", "HermitianGaussian", "DiagonalLogUniform")
RUNS = {name: (suite, opts) for name, suite, opts in CALIBRATION_RUNS}


def mixed_pairs(n=1000, seed=42):
    """``n`` seeded pairs, dims 2-8 cycling, three ensembles."""
    out = []
    for i in range(n):
        spec = CorpusSpec(seed, n, 2 + i % 7, ENSEMBLES3[(i // 7) % 3])
        out.append(tuple(instance_matrices(spec, i, 2)))
    return out


@pytest.fixture(scope="module")
def pairs():
    return mixed_pairs()


def lapack_sv(x):
    return np.sort(np.linalg.svd(x.entries, compute_uv=False))[::-1]


def reproduce(name, workers=1):
    suite, opts = RUNS[name]
    rep = run_suite(suite, opts, workers=workers)
    return rep, rep.to_json() == baseline_path(name).read_text()


# 1 ------------------------------------------------------------------------

def test_c01_norm_form_equivalence(criterion):
    t0 = time.perf_counter()
    xs = [p[0] for p in mixed_pairs()]
    spectra = singular_spectra(xs)
    worst = 0.0
    for spec in PHIS:
        phi = parse_phi(spec)
        for s in spectra:
            a = weak_orlicz_norm(s, phi).value
            b = weak_orlicz_norm_lambda(s, phi).value
            worst = max(worst, abs(a - b) / a)
    elapsed = time.perf_counter() - t0
    ok = criterion(1, worst <= 1e-9 and elapsed < 10.0,
                   f"max rel |mu-form - lambda-form| = {worst:.2e} (<= 1e-9) over 1000 x "
                   f"{len(PHIS)} phi; {elapsed:.1f} s (< 10 s)")
    assert ok


# 2 ------------------------------------------------------------------------

def test_c02_power_case_exactness(criterion, pairs):
    worst_closed = worst_grid = 0.0
    for x, _ in pairs:
        sv = lapack_sv(x)
        w = x.weight
        T = w * np.arange(1, sv.size + 1)
        s = singular_spectrum(x)
        # dense level grid plus levels approaching each jump from the left
        levels = np.union1d(np.geomspace(sv[-1] * 1e-3, sv[0], 4000),
                            (sv[:, None] * (1 - np.array([1e-7, 1e-8, 1e-9]))).ravel())
        lam = w * np.sum(sv[None, :] > levels[:, None], axis=1)
        for p in (1.5, 2.0, 4.0):
            got = weak_orlicz_norm(s, Power(p)).value
            closed = float(np.max(sv * T ** (1 / p)))
            grid = float(np.max(levels * lam ** (1 / p)))
            worst_closed = max(worst_closed, abs(got - closed) / closed)
            worst_grid = max(worst_grid, abs(got - grid) / grid)
    ok = criterion(2, worst_closed <= 1e-9 and worst_grid <= 1e-6,
                   f"max rel error vs max v_i T_i^(1/p) = {worst_closed:.2e} (<= 1e-9), "
                   f"vs dense sup s lambda_s^(1/p) = {worst_grid:.2e} (<= 1e-6)")
    assert ok


# 3 ------------------------------------------------------------------------

def test_c03_quasi_norm_properties(criterion, pairs):
    homog_bad = tri_bad = 0
    min_slack = math.inf
    for spec in PHIS:
        phi = parse_phi(spec)
        for x, y in pairs:
            sx, sy, sxy, s2, sh, sm = singular_spectra([x, y, x + y, 2.0 * x, 0.5 * x, -x])
            wx = weak_orlicz_norm(sx, phi).value
            homog_bad += (weak_orlicz_norm(s2, phi).value != 2.0 * wx
                          or weak_orlicz_norm(sh, phi).value != 0.5 * wx
                          or weak_orlicz_norm(sm, phi).value != wx)
            wy = weak_orlicz_norm(sy, phi).value
            tri_bad += weak_orlicz_norm(sxy, phi).value > 2.0 * (wx + wy)
            min_slack = min(min_slack, luxemburg_norm(sx, phi).value - wx)
    ok = criterion(3, homog_bad == 0 and tri_bad == 0 and min_slack >= -1e-10,
                   f"homogeneity (alpha = 2, 1/2, -1) violations {homog_bad}; quasi-triangle "
                   f"violations {tri_bad} over 1000 pairs x {len(PHIS)} phi; "
                   f"min Luxemburg - weak = {min_slack:.2e} (>= -1e-10)")
    assert ok


# 4 ------------------------------------------------------------------------

def test_c04_golden_values(criterion):
    s = singular_spectrum(TracialMatrix(np.diag([3.0, 2.0, 1.0])))
    phi = Power(2)
    errs = {"weak": abs(weak_orlicz_norm(s, phi).value - math.sqrt(3)),
            "luxemburg": abs(luxemburg_norm(s, phi).value - math.sqrt(14 / 3)),
            "banach": abs(banach_renorm(s, phi).value - 5 / math.sqrt(6)),
            "moment": abs(phi_moment(s, phi).value - 3.0)}
    tol = {"weak": 1e-9, "luxemburg": 1e-9, "banach": 1e-7, "moment": 1e-9}
    ok = criterion(4, all(errs[k] <= tol[k] for k in errs),
                   ", ".join(f"{k} err {errs[k]:.1e} (<= {tol[k]:g})" for k in errs))
    assert ok


# 5 ------------------------------------------------------------------------

def test_c05_kolmogorov_and_subadditivity(criterion, pairs):
    kol_bad = sub_bad = std_bad = 0
    for x, y in pairs:
        a, b, c = lapack_sv(x), lapack_sv(y), lapack_sv(x + y)
        w = x.weight

        def lam(sv, levels):
            return w * np.sum(sv[None, :] > np.asarray(levels)[:, None], axis=1)

        top = max(a[0], b[0], c[0])
        grid = np.geomspace(1e-3 * top, 2.0 * top, 32)
        for p in (1.0, 2.0, 4.0):
            norm_pp = w * np.sum(a ** p)
            kol_bad += int(np.sum(lam(a, grid) > norm_pp / grid ** p * (1 + 1e-12)))
        sub_bad += int(np.sum(lam(c, 2 * grid) > lam(a, grid / 2) + lam(b, grid / 2) + 1e-12))
        st = (grid[:, None] + grid[None, :]).ravel()
        lhs = lam(c, st).reshape(32, 32)
        std_bad += int(np.sum(lhs > lam(a, grid)[:, None] + lam(b, grid)[None, :] + 1e-12))
    ok = criterion(5, kol_bad == 0 and sub_bad == 0 and std_bad == 0,
                   f"violations: Kolmogorov (p = 1, 2, 4) {kol_bad}, "
                   f"lambda_2s <= lambda_s/2 + lambda_s/2 {sub_bad}, "
                   f"lambda_s+t <= lambda_s + lambda_t {std_bad}; 1000 pairs, 32-point log grid")
    assert ok


# 6 ------------------------------------------------------------------------

def test_c06_index_report(criterion):
    lines, ok = [], True
    for p in (1.5, 2.0, 4.0):
        cf = indices_closed_form(Power(p))
        good = cf.lower == p and cf.upper == p
        ok &= good
        lines.append(f"pow:{p:g} ({cf.lower:g}, {cf.upper:g})")
    for a, b in ((2.0, 1.0), (3.0, 1.0), (1.2, 0.5)):
        est = indices_estimate(parse_phi(f"plog:{a:g},{b:g}"))
        lo_err = abs(est.lower - a) / a
        hi_err = abs(est.upper - (a + b)) / (a + b)
        ok &= lo_err <= 0.05 and hi_err <= 0.005
        lines.append(f"plog:{a:g},{b:g} lower err {lo_err:.2%} upper err {hi_err:.3%}")
    ok = criterion(6, ok, "; ".join(lines) + " (tolerances 5%, 0.5%)")
    assert ok


# 7 ------------------------------------------------------------------------

def test_c07_banach_renorm(criterion):
    details, ok = [], True
    for name in ("norms_plog2-1", "norms_plog3-1"):
        rep, same = reproduce(name)
        agg = rep.aggregate["banach_over_weak"]
        good = (rep.checks["banach_triangle"] and rep.checks["weak_le_banach"] and same
                and agg["count"] == 500 and math.isfinite(agg["max"]))
        ok &= good
        details.append(f"{rep.phi}: triangle {rep.checks['banach_triangle']}, weak <= banach "
                       f"{rep.checks['weak_le_banach']}, max banach/weak {agg['max']:.4f}, "
                       f"baseline bytes {'match' if same else 'DIFFER'}")
    ok = criterion(7, ok, "; ".join(details) + " (500 pairs, slack 1e-8)")
    assert ok


# 8 ------------------------------------------------------------------------

def test_c08_interpolation(criterion):
    t0 = time.perf_counter()
    unit = {}
    for name in ("interp_identity_plog2-1", "interp_adjoint_plog2-1"):
        rep, same = reproduce(name)
        vals = {r["ratios"]["ratio"] for r in rep.records if not r["skipped"]}
        unit[name] = vals == {1.0} and same
    rep, same = reproduce("interp_hardy_plog2-1")
    mx = rep.aggregate["ratio"]["max"]
    ceiling = rep.envelope["ratio"]["hi"]
    elapsed = time.perf_counter() - t0
    ok = criterion(8, all(unit.values()) and same and mx <= ceiling and rep.verdict == "pass"
                   and elapsed < 30.0,
                   f"identity/adjoint max ratio exactly 1: {all(unit.values())}; hardy max "
                   f"{mx:.6f} <= ceiling {ceiling:.6f}, baseline bytes "
                   f"{'match' if same else 'DIFFER'}; {elapsed:.1f} s (< 30 s)")
    assert ok


# 9 ------------------------------------------------------------------------

def test_c09_martingale_suites(criterion):
    t0 = time.perf_counter()
    failed = {}
    count = 0
    for m in (1, 2, 3, 4):
        f = DyadicFiltration(m)
        spec = CorpusSpec(42, 125, 2 ** m)
        for i in range(125):
            x, y, z = instance_matrices(spec, i, 3)
            for k, v in expectation_identities(f, x, y, z, tol=1e-10).items():
                if not v:
                    failed[k] = failed.get(k, 0) + 1
            count += 1
    regress = {}
    for name in ("transform_plog3-1", "stein_plog3-1", "bg_high_plog3-1", "bg_low_plog1.2-0.5"):
        rep, same = reproduce(name)
        regress[name] = same and rep.verdict == "pass"
    low = reproduce("bg_low_plog1.2-0.5")[0]
    fwd_ok = low.aggregate["forward"]["max"] <= low.envelope["forward"]["hi"]
    elapsed = time.perf_counter() - t0
    ok = criterion(9, not failed and count == 500 and all(regress.values()) and fwd_ok
                   and elapsed < 60.0,
                   f"E_k identities at 1e-10 on {count} instances (m = 1..4): failures "
                   f"{failed or 0}; exhaustive sign sweep, Stein, BG high/low reproduce "
                   f"baselines: {all(regress.values())}; BG low forward max "
                   f"{low.aggregate['forward']['max']:.4f} <= {low.envelope['forward']['hi']:.4f}"
                   f"; {elapsed:.1f} s (< 60 s)")
    assert ok


# 10 -----------------------------------------------------------------------

def test_c10_khintchine(criterion):
    high, same_h = reproduce("khintchine_high_plog3-1")
    low, same_l = reproduce("khintchine_low_plog1.2-0.5")
    reverse_free = "reverse" not in low.envelope and any("forward-only" in n for n in low.notes)
    ok = criterion(10, same_h and same_l and high.verdict == "pass" and low.verdict == "pass"
                   and high.checks["block_matrix"] and low.checks["block_matrix"]
                   and reverse_free,
                   f"high ratio in [{high.aggregate['ratio']['min']:.4f}, "
                   f"{high.aggregate['ratio']['max']:.4f}], low forward max "
                   f"{low.aggregate['forward']['max']:.4f}, reverse informative only: "
                   f"{reverse_free}; assembled-matrix check (20 instances, 1e-10): "
                   f"{high.checks['block_matrix'] and low.checks['block_matrix']}; baselines "
                   f"{'match' if same_h and same_l else 'DIFFER'}")
    assert ok


# 11 -----------------------------------------------------------------------

def test_c11_fourier(criterion):
    t0 = time.perf_counter()
    rep, same = reproduce("fourier_plog3-1")
    elapsed = time.perf_counter() - t0
    refine = rep.aggregate["refinement"]["max"]
    c = rep.checks
    ok = criterion(11, c["dft_exact"] and c["delta_orthogonal"] and c["delta_idempotent"]
                   and c["parseval"] and same and rep.verdict == "pass" and refine < 0.02
                   and elapsed < 30.0,
                   f"DFT 1e-12 {c['dft_exact']}, Delta_n orthogonal {c['delta_orthogonal']}, "
                   f"Parseval 1e-10 {c['parseval']}, J -> 2J refinement {refine:.4f} (< 0.02), "
                   f"baseline bytes {'match' if same else 'DIFFER'}; {elapsed:.1f} s (< 30 s)")
    assert ok


# 12 -----------------------------------------------------------------------

DETERMINISM_OPTS = {
    "norms": {"phi": "plog:2,1", "instances": 24},
    "interp": {"phi": "plog:2,1", "instances": 24},
    "transform": {"phi": "plog:3,1", "instances": 24},
    "stein": {"phi": "plog:3,1", "instances": 24},
    "bg": {"phi": "plog:1.2,0.5", "instances": 24},
    "khintchine": {"phi": "plog:3,1", "instances": 24},
    "fourier": {"phi": "plog:3,1", "instances": 16, "degree": 27},
    "indices": {"phi": "plog:2,1"},
}


def test_c12_determinism(criterion):
    differ = []
    for suite in SUITES:
        opts = dict(DETERMINISM_OPTS[suite], seed=42)
        one = run_suite(suite, opts, workers=1).to_json()
        again = run_suite(suite, opts, workers=1).to_json()
        eight = run_suite(suite, opts, workers=8).to_json()
        if not one == again == eight:
            differ.append(suite)
    ok = criterion(12, not differ and set(DETERMINISM_OPTS) == set(SUITES),
                   f"{len(SUITES)} suites byte-identical on repeat and on 1 vs 8 workers; "
                   f"differing: {differ or 'none'}")
    assert ok
