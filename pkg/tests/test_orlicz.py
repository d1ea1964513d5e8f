import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wonc.errors import PreconditionError
from wonc.orlicz import (Power, PowerLog, PowerSin, ScaledPower, delta2_check, derivative,
                         evaluate, indices, indices_closed_form, indices_estimate, inverse,
                         parse_phi)

FAMILIES = [Power(1.0), Power(2.0), Power(3.5), PowerLog(2, 1), PowerLog(1.2, 0.5),
            PowerSin(4, 0.1), ScaledPower(5, 2)]
PROBE = np.geomspace(1e-6, 1e6, 241)


def test_evaluate_examples():
    assert evaluate(Power(2), 3) == 9.0
    assert evaluate(Power(2.5), 0) == 0.0
    assert evaluate(PowerLog(2, 1), 1) == pytest.approx(math.log(2), rel=1e-15)


@pytest.mark.parametrize("bad", [-1.0, math.nan, math.inf])
def test_evaluate_rejects_invalid(bad):
    with pytest.raises(ValueError):
        evaluate(Power(2), bad)


def test_derivative_examples():
    assert derivative(Power(2), 3) == 6.0
    assert np.all(derivative(Power(1), PROBE) == 1.0)
    assert derivative(PowerLog(2, 1), 1) == pytest.approx(2 * math.log(2) + 0.5, rel=1e-14)
    with pytest.raises(ValueError):
        derivative(Power(2), 0.0)


@pytest.mark.parametrize("phi", FAMILIES, ids=str)
def test_derivative_matches_central_differences(phi):
    h = PROBE * 1e-6
    fd = (phi(PROBE + h) - phi(PROBE - h)) / (2 * h)
    np.testing.assert_allclose(phi.derivative(PROBE), fd, rtol=1e-5)


def test_inverse_examples():
    assert inverse(Power(2), 9) == pytest.approx(3.0, rel=1e-15)
    for phi in FAMILIES:
        assert inverse(phi, 0.0) == 0.0
    assert inverse(PowerLog(2, 1), math.log(2)) == pytest.approx(1.0, abs=1e-10)


@pytest.mark.parametrize("phi", FAMILIES, ids=str)
def test_inverse_round_trip(phi):
    np.testing.assert_allclose(phi.inverse(phi(PROBE)), PROBE, rtol=1e-10)


@pytest.mark.parametrize("phi", FAMILIES, ids=str)
def test_convexity_and_monotonicity_on_grid(phi):
    v = phi(PROBE)
    assert v[0] > 0 and np.all(np.diff(v) > 0)
    s, t = np.meshgrid(PROBE[::8], PROBE[::8])
    assert np.all(phi((s + t) / 2) <= (phi(s) + phi(t)) / 2 * (1 + 1e-12))
    ratio = v / PROBE
    assert np.all(np.diff(ratio) >= -1e-12 * ratio[1:])
    for a in (0.1, 0.5, 0.9):
        assert np.all(phi(a * PROBE) <= a * v * (1 + 1e-12))


@pytest.mark.parametrize("phi", [p for p in FAMILIES if p.closed_form_indices()], ids=str)
def test_index_monotone_characterization(phi):
    ind = phi.closed_form_indices()
    v = phi(PROBE)
    lo = PROBE ** -ind.lower * v
    hi = PROBE ** -ind.upper * v
    assert np.all(np.diff(lo) >= -1e-12 * lo[1:])
    assert np.all(np.diff(hi) <= 1e-12 * hi[:-1])


def test_closed_form_indices():
    assert (indices_closed_form(Power(2)).lower, indices_closed_form(Power(2)).upper) == (2, 2)
    ind = indices_closed_form(PowerLog(2, 1))
    assert (ind.lower, ind.upper, ind.method) == (2, 3, "ClosedForm")
    assert indices_closed_form(ScaledPower(7, 3)).upper == 3
    assert indices_closed_form(PowerSin(4, 0.1)) is None


def test_indices_estimate_examples():
    e = indices_estimate(Power(3), 1e-8, 1e8, 1024)
    assert e.lower == pytest.approx(3, abs=1e-12) and e.upper == pytest.approx(3, abs=1e-12)
    e = indices_estimate(PowerLog(2, 1), 1e-12, 1e16, 4096)
    assert 2 <= e.lower <= 2.06 and 2.97 <= e.upper <= 3
    e = indices_estimate(ScaledPower(5, 2), 1e-6, 1e6, 256)
    assert e.lower == pytest.approx(2, abs=1e-12) and e.upper == pytest.approx(2, abs=1e-12)
    assert e.to_dict()["points"] == 256


def test_indices_estimate_oracle_formula():
    # elasticity of t^a log(1 + t^b) is a + b t^b / ((1 + t^b) log(1 + t^b))
    a, b = 2.0, 1.0
    t = np.geomspace(1e-12, 1e16, 4096)
    tb = t ** b
    ratio = a + b * tb / ((1 + tb) * np.log1p(tb))
    e = indices_estimate(PowerLog(a, b))
    assert e.lower == pytest.approx(ratio.min(), rel=1e-9)
    assert e.upper == pytest.approx(ratio.max(), rel=1e-9)


@pytest.mark.parametrize("phi", [Power(2), PowerLog(2, 1), PowerLog(3, 1), ScaledPower(2, 3)],
                         ids=str)
def test_indices_refinement_does_not_widen(phi):
    coarse = indices_estimate(phi, points=2048)
    fine = indices_estimate(phi, points=4096)
    assert fine.lower >= coarse.lower - 1e-12
    assert fine.upper <= coarse.upper + 1e-12


def test_powersin_estimate_straddles_p():
    e = indices(PowerSin(4, 0.1))
    assert e.method == "GridEstimate"
    assert e.lower < 4 < e.upper


def test_estimate_rejects_bad_grid():
    with pytest.raises(ValueError):
        indices_estimate(Power(2), 1.0, 0.5, 10)
    with pytest.raises(ValueError):
        indices_estimate(Power(2), 1e-3, 1e3, 1)


def test_estimate_vanishing_phi_is_precondition_error():
    # underflow to zero at tiny t: excluded for valid families, but guarded
    with pytest.raises(PreconditionError):
        indices_estimate(Power(400), 1e-3, 1.0, 16)


def test_delta2_examples():
    d = delta2_check(Power(2))
    assert d.holds and d.witness == pytest.approx(4.0, rel=1e-12)
    d = delta2_check(PowerLog(2, 1))
    assert d.holds and d.witness <= 8.0 + 1e-12
    d = delta2_check(Power(1))
    assert d.holds and d.witness == pytest.approx(2.0, rel=1e-12)


@pytest.mark.parametrize("text,cls", [("pow:2", Power), ("plog:2,1", PowerLog),
                                      ("psin:4,0.1", PowerSin), ("spow:5,2", ScaledPower)])
def test_parse_phi(text, cls):
    phi = parse_phi(text)
    assert isinstance(phi, cls)
    assert phi.spec() == text


@pytest.mark.parametrize("text", ["pow", "pow:0.5", "plog:1,1", "plog:2", "psin:1.1,0.1",
                                  "psin:4,0.6", "spow:-1,2", "exp:1", "pow:x"])
def test_parse_phi_rejects(text):
    with pytest.raises(ValueError):
        parse_phi(text)


@settings(max_examples=60, deadline=None)
@given(a=st.floats(1.01, 6), b=st.floats(0.05, 4), t=st.floats(1e-4, 1e4))
def test_powerlog_inverse_property(a, b, t):
    phi = PowerLog(a, b)
    assert phi.inverse(phi(t)) == pytest.approx(t, rel=1e-10)
    assert parse_phi(phi.spec()) == phi
