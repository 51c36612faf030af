import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from parametrix_lab.canonical import (
    NormalizationError,
    TruncatedSeries2,
    elliptic_normalize_real,
    freeze,
    residual_order,
    series_arith,
    ssn_recursion,
)
from parametrix_lab.symbols import model_symbol


def _random_q(rng, N):
    r = rng.uniform(0, 1, N + 2)
    th = rng.uniform(0, 2 * np.pi, N + 2)
    return list(r * np.exp(1j * th))


def test_series_product_difference_of_squares():
    one = TruncatedSeries2.constant(1, 2)
    x = TruncatedSeries2.xi1(2)
    prod = series_arith(one + x, one - x, "mul")
    expected = np.zeros((3, 3), complex)
    expected[0, 0], expected[2, 0] = 1, -1
    assert np.array_equal(prod.coeffs, expected)


def test_series_times_zero():
    rng = np.random.default_rng(0)
    s = TruncatedSeries2(rng.normal(size=(4, 4)) + 0j, 3)
    assert series_arith(s, TruncatedSeries2.zeros(3), "mul").max_abs() == 0.0
    with pytest.raises(ValueError):
        series_arith(s, s, "div")


def test_series_product_matches_convolution():
    rng = np.random.default_rng(1)
    N = 5
    a = TruncatedSeries2(rng.integers(-5, 5, (N + 1, N + 1)) + 1j * rng.integers(-5, 5, (N + 1, N + 1)), N)
    b = TruncatedSeries2(rng.integers(-5, 5, (N + 1, N + 1)) + 0j, N)
    conv = np.zeros((2 * N + 1, 2 * N + 1), complex)
    for k1, l1, k2, l2 in itertools.product(range(N + 1), repeat=4):
        conv[k1 + k2, l1 + l2] += a.coeffs[k1, l1] * b.coeffs[k2, l2]
    k, l = np.indices((N + 1, N + 1))
    expected = np.where(k + l <= N, conv[:N + 1, :N + 1], 0)
    assert np.array_equal(series_arith(a, b, "mul").coeffs, expected)


def test_series_cap_mismatch():
    with pytest.raises(ValueError):
        TruncatedSeries2.zeros(2) + TruncatedSeries2.zeros(3)


def test_base_cases():
    e, a, b = ssn_recursion([0, 0, 0], 1)
    assert e.coeffs[0, 0] == 1 and a.coeffs[0, 1] == 0 and b.coeffs[0, 1] == 1
    e, a, b = ssn_recursion([0, 1, 0], 1)
    assert e.coeffs[0, 0] == 0.5 - 0.5j
    assert a.coeffs[0, 1] == 0.5 and b.coeffs[0, 1] == 0.5


def test_blocked_division():
    with pytest.raises(ZeroDivisionError):
        ssn_recursion([0, 1j, 0], 1)


@pytest.mark.parametrize("q1", [0.3 + 0.1j, -2.0, 1j * 0.5])
def test_level_one_residual(q1):
    q = [0, q1, 0.2]
    e, a, b = ssn_recursion(q, 1)
    assert residual_order(e, a, b, q, 1) <= 1e-14


def test_residual_mp_ring_n6():
    rng = np.random.default_rng(2)
    worst = 0.0
    for _ in range(100):
        q = _random_q(rng, 6)
        e, a, b = ssn_recursion(q, 6, ring="mp")
        worst = max(worst, residual_order(e, a, b, q, 6))
    assert worst <= 1e-12


def test_residual_exact_ring_n3():
    q = [0, 0.5 + 0.25j, -0.75j, 0.125, 0.5]
    e, a, b = ssn_recursion(q, 3, ring="exact")
    assert residual_order(e, a, b, q, 3) == 0.0


def test_coefficients_a_b_real():
    q = _random_q(np.random.default_rng(3), 6)
    _, a, b = ssn_recursion(q, 6, ring="mp")
    for s in (a, b):
        assert max(abs(complex(v).imag) for v in s.coeffs[0, 1:]) <= 1e-13


def test_corruption_is_detected():
    q = _random_q(np.random.default_rng(4), 6)
    e, a, b = ssn_recursion(q, 6, ring="mp")
    e.coeffs[1, 0] = e.coeffs[1, 0] + 1e-3
    assert residual_order(e, a, b, q, 6) >= 1e-4


def test_degree_cap_consistency():
    q = _random_q(np.random.default_rng(5), 8)
    e8, a8, b8 = ssn_recursion(q, 8, ring="mp")
    e4, a4, b4 = ssn_recursion(q[:6], 4, ring="mp")
    for k in range(4):
        for l in range(4 - k):
            assert complex(e8.coeffs[k, l]) == pytest.approx(complex(e4.coeffs[k, l]), abs=1e-20)
    for big, small in ((a8, a4), (b8, b4)):
        for l in range(1, 5):
            assert complex(big.coeffs[0, l]) == pytest.approx(complex(small.coeffs[0, l]), abs=1e-20)


def test_deterministic():
    q = _random_q(np.random.default_rng(6), 5)
    r1 = ssn_recursion(q, 5)
    r2 = ssn_recursion(list(q), 5)
    for x, y in zip(r1, r2):
        assert np.array_equal(x.coeffs, y.coeffs)


def test_too_few_q():
    with pytest.raises(ValueError):
        ssn_recursion([0, 0.1], 2)


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 10_000), st.integers(1, 8))
def test_residual_vanishes_for_random_q(seed, N):
    q = _random_q(np.random.default_rng(seed), N)
    e, a, b = ssn_recursion(q, N, ring="mp")
    assert residual_order(e, a, b, q, N) <= 1e-12


def test_normalize_identity():
    grid = np.linspace(-1, 1, 201)
    out = elliptic_normalize_real(lambda s: s, grid)
    assert out["root"] == 0.0
    assert np.all(out["e"] == 1.0) and out["defect"] == 0.0


def test_normalize_quadratic_closed_form():
    grid = np.linspace(-0.3, 0.3, 121)
    out = elliptic_normalize_real(lambda s: 2 * s + 3 * s ** 2, grid)
    assert abs(out["root"]) <= 1e-14
    assert out["defect"] <= 1e-12
    assert np.allclose(out["e"], 1 / (2 + 3 * out["eta"]), rtol=1e-10)


def test_normalize_shifted_root():
    grid = np.linspace(0.0, 2.0, 101)
    out = elliptic_normalize_real(lambda s: np.tanh(s - 0.7), grid)
    assert out["root"] == pytest.approx(0.7, abs=1e-12)
    assert out["defect"] <= 1e-12


def test_normalize_degenerate_root_rejected():
    with pytest.raises(NormalizationError):
        elliptic_normalize_real(lambda s: s ** 2, np.linspace(-1, 1, 201))


def test_normalize_no_root_or_two_roots():
    with pytest.raises(NormalizationError):
        elliptic_normalize_real(lambda s: 1 + s ** 2, np.linspace(-1, 1, 11))
    with pytest.raises(NormalizationError):
        elliptic_normalize_real(lambda s: s ** 2 - 0.25, np.linspace(-1, 1, 10))


def test_freeze_model_symbol():
    p = freeze(model_symbol("linear", d=2, v=[1.0, 2.0]), [0.0, 0.0], [0.5])
    out = elliptic_normalize_real(lambda s: p(s) - 1.5, np.linspace(-3, 3, 61))
    assert out["root"] == pytest.approx(0.5, abs=1e-12)
    assert out["defect"] <= 1e-12
