import itertools
import math

import numpy as np
import pytest

from conftest import ginibre
from wonc.martingale import (DyadicFiltration, MartingaleSequence, _square_moments,
                             bg_decomposition_bound,
                             bg_ratio, conditional_expectation, martingale_from_final,
                             sign_patterns, square_functions, stein_map, stein_ratio,
                             transform, transformed_final)
from wonc.norms import column_square_norm, phi_moment, row_square_norm
from wonc.orlicz import Power, PowerLog
from wonc.spectral import TracialMatrix, singular_spectrum
from wonc.suites import expectation_identities


def rand(rng, m):
    return TracialMatrix(ginibre(rng, 2 ** m))


def brute_condexp(a, k, m):
    # oracle: average over the unitary group generated by I (x) diagonal signs on the
    # lower tensor factor; for the dyadic tower this is the partial trace times identity
    b = 2 ** (m - k)
    nb = 2 ** k
    out = np.zeros_like(a)
    for i in range(nb):
        for j in range(nb):
            blk = a[i * b:(i + 1) * b, j * b:(j + 1) * b]
            out[i * b:(i + 1) * b, j * b:(j + 1) * b] = np.trace(blk) / b * np.eye(b)
    return out


def test_condexp_examples():
    f = DyadicFiltration(2)
    x = TracialMatrix(np.diag([1.0, 2.0, 3.0, 4.0]))
    np.testing.assert_array_equal(conditional_expectation(f, 1, x).entries,
                                  np.diag([1.5, 1.5, 3.5, 3.5]))
    np.testing.assert_array_equal(conditional_expectation(f, 0, x).entries, 2.5 * np.eye(4))
    assert conditional_expectation(f, 2, x) == x
    assert f.expect(0, x).trace() == x.trace()


def test_condexp_matches_partial_trace_oracle(rng):
    m = 3
    f = DyadicFiltration(m)
    for _ in range(5):
        x = rand(rng, m)
        for k in range(m + 1):
            np.testing.assert_allclose(conditional_expectation(f, k, x).entries,
                                       brute_condexp(x.entries, k, m), atol=1e-14)


def test_condexp_errors(rng):
    f = DyadicFiltration(2)
    with pytest.raises(ValueError):
        conditional_expectation(f, 3, rand(rng, 2))
    with pytest.raises(ValueError):
        conditional_expectation(f, -1, rand(rng, 2))
    with pytest.raises(ValueError):
        conditional_expectation(f, 1, rand(rng, 3))
    with pytest.raises(ValueError):
        DyadicFiltration(0)


@pytest.mark.parametrize("m", [1, 2, 3])
def test_expectation_identities(rng, m):
    f = DyadicFiltration(m)
    for _ in range(5):
        ok = expectation_identities(f, rand(rng, m), rand(rng, m), rand(rng, m))
        assert all(ok.values()), ok


def test_module_property_with_tensor_oracle(rng):
    m, k = 3, 1
    f = DyadicFiltration(m)
    x = rand(rng, m)
    a = TracialMatrix(np.kron(ginibre(rng, 2 ** k), np.eye(2 ** (m - k))))
    b = TracialMatrix(np.kron(ginibre(rng, 2 ** k), np.eye(2 ** (m - k))))
    lhs = conditional_expectation(f, k, a @ x @ b).entries
    rhs = a.entries @ conditional_expectation(f, k, x).entries @ b.entries
    np.testing.assert_allclose(lhs, rhs, atol=1e-10)


def test_martingale_from_final_examples():
    f = DyadicFiltration(1)
    x = TracialMatrix(np.array([[0.0, 1.0], [1.0, 0.0]]))
    mart = martingale_from_final(f, x)
    np.testing.assert_array_equal(mart.elements[0].entries, 0)
    np.testing.assert_array_equal(mart.differences[1].entries, x.entries)
    f2 = DyadicFiltration(2)
    c = TracialMatrix(3.0 * np.eye(4))
    assert all(np.all(d.entries == 0) for d in martingale_from_final(f2, c).differences[1:])


def test_martingale_validation(rng):
    f = DyadicFiltration(2)
    x = rand(rng, 2)
    mart = martingale_from_final(f, x)
    np.testing.assert_allclose(sum(d.entries for d in mart.differences), x.entries, atol=1e-12)
    with pytest.raises(ValueError):
        MartingaleSequence(f, mart.elements[:2])
    with pytest.raises(ValueError):  # x_0 not scalar
        MartingaleSequence(f, (x, x, x))
    bad = (mart.elements[0], mart.elements[1] + mart.elements[1].like(np.eye(4)), mart.elements[2])
    with pytest.raises(ValueError):  # E_1 x_2 != x_1
        MartingaleSequence(f, bad)
    assert MartingaleSequence.from_differences(f, mart.differences).final.entries.shape == (4, 4)


def test_transform(rng):
    f = DyadicFiltration(3)
    mart = martingale_from_final(f, rand(rng, 3))
    same = transform(mart, [1, 1, 1, 1])
    np.testing.assert_allclose(same.final.entries, mart.final.entries, atol=1e-14)
    neg = transform(mart, [-1, -1, -1, -1])
    phi = PowerLog(3, 1)
    assert phi_moment(singular_spectrum(neg.final), phi).value == pytest.approx(
        phi_moment(singular_spectrum(mart.final), phi).value, rel=1e-12)
    alt = transform(mart, [1, -1, 1, -1])
    np.testing.assert_allclose(alt.final.entries, transformed_final(mart, [1, -1, 1, -1]).entries,
                               atol=1e-14)
    with pytest.raises(ValueError):
        transform(mart, [1, 1])
    with pytest.raises(ValueError):
        transformed_final(mart, [1, 1])
    assert len(list(sign_patterns(4))) == 16


def test_stein_examples():
    f = DyadicFiltration(1)
    a = TracialMatrix(np.diag([2.0, 0.0]))
    out = stein_map(f, [a])
    np.testing.assert_array_equal(out[0].entries, np.eye(2))
    assert stein_ratio(f, [a], Power(2), "moment") == pytest.approx(0.5, rel=1e-12)
    assert stein_ratio(f, [a], Power(2), "norm") == pytest.approx(1 / math.sqrt(2), rel=1e-12)
    with pytest.raises(ValueError):
        stein_map(f, [a, a, a])


def test_stein_fixed_points(rng):
    f = DyadicFiltration(2)
    seq = [TracialMatrix(c * np.eye(4)) for c in (1.0, 2.0, -0.5)]
    for a, b in zip(stein_map(f, seq), seq):
        assert a == b


def test_stein_ratio_adjoint_column_row(rng):
    f = DyadicFiltration(2)
    seq = [rand(rng, 2) for _ in range(3)]
    phi = PowerLog(3, 1)
    r = stein_ratio(f, seq, phi, "norm", adjoint=True)
    # E_n(a^*) = E_n(a)^*, so the top is the row square function of E_n a_n
    top = row_square_norm(stein_map(f, seq), phi)
    bottom = column_square_norm(seq, phi)
    assert r == pytest.approx(top.value / bottom.value, rel=1e-12)


def test_square_functions():
    f = DyadicFiltration(1)
    x = TracialMatrix(np.array([[0.0, 1.0], [1.0, 0.0]]))
    sc, sr = square_functions(martingale_from_final(f, x))
    np.testing.assert_allclose(sc.entries, np.eye(2), atol=1e-14)
    np.testing.assert_allclose(sr.entries, np.eye(2), atol=1e-14)


def test_square_functions_hermitian_commuting(rng):
    f = DyadicFiltration(2)
    x = TracialMatrix(np.diag(rng.standard_normal(4)))
    sc, sr = square_functions(martingale_from_final(f, x))
    np.testing.assert_allclose(sc.entries, sr.entries, atol=1e-14)
    np.testing.assert_allclose(sc.entries, sc.adjoint().entries, atol=1e-14)


def test_bg_ratio(rng):
    f = DyadicFiltration(1)
    h = ginibre(rng, 2)
    x = TracialMatrix(h + h.conj().T)
    # trace-free so that x_0 = E_0 x vanishes and x is the only difference
    x = x - x.like(np.trace(x.entries) / 2 * np.eye(2))
    one_step = martingale_from_final(f, x)
    lhs, rhs = bg_ratio(one_step, PowerLog(3, 1))
    assert rhs == pytest.approx(2 * lhs, rel=1e-12)
    zero = martingale_from_final(f, x.like(np.zeros((2, 2))))
    assert bg_ratio(zero, PowerLog(3, 1)) == (0.0, 0.0)


def test_bg_decomposition(rng):
    f = DyadicFiltration(2)
    mart = martingale_from_final(f, rand(rng, 2))
    phi = PowerLog(1.2, 0.5)
    b0 = bg_decomposition_bound(mart, phi, 0)
    assert b0.value == min(b0.column_only, b0.row_only) and b0.evaluations == 0
    b = bg_decomposition_bound(mart, phi, 32)
    assert b.value <= b0.value and b.evaluations <= 32 and b.heuristic
    # trivial candidates are the column and row square-function moments
    d = mart.differences
    c, r = _square_moments(d, d, d[0].weight, phi)
    assert b0.column_only == pytest.approx(c) and b0.row_only == pytest.approx(r)


def test_transform_sign_sweep_exhaustive(rng):
    f = DyadicFiltration(2)
    mart = martingale_from_final(f, rand(rng, 2))
    phi = PowerLog(3, 1)
    base = phi_moment(singular_spectrum(mart.final), phi).value
    ratios = [phi_moment(singular_spectrum(transformed_final(mart, eps)), phi).value / base
              for eps in itertools.product((1, -1), repeat=3)]
    assert len(ratios) == 8 and min(ratios) > 0 and max(ratios) < np.inf
