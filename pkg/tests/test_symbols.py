import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from parametrix_lab.symbols import (
    CutoffSymbol,
    OrderExceededError,
    PhasePoint,
    check_assumptions,
    check_symbol_class,
    curvature_minor,
    eval_symbol,
    find_characteristic_point,
    model_symbol,
    poisson_bracket,
    symbol_from_function,
)


def test_eval_schrodinger_closed_form():
    a = model_symbol("schrodinger", d=1)
    p = PhasePoint(0.0, [0.0], [2.0])
    assert eval_symbol(a, p) == pytest.approx(4.0)
    assert eval_symbol(a, p, beta=(2,)) == pytest.approx(2.0)


def test_variable_metric_mixed_derivative_matches_fd():
    a = model_symbol("variable_metric", eps=0.1)
    p = PhasePoint(0.0, [0.0], [1.0])
    exact = float(np.real(eval_symbol(a, p, alpha=(1,), beta=(1,))))
    h = 1e-4
    fd = (a.deriv(0, [h], [1.0], beta=(1,)) - a.deriv(0, [-h], [1.0], beta=(1,))) / (2 * h)
    assert exact == pytest.approx(0.2, abs=1e-12)
    assert float(np.real(fd)) == pytest.approx(exact, rel=1e-6)


def test_order_exceeded():
    a = model_symbol("schrodinger", d=1)
    with pytest.raises(OrderExceededError):
        eval_symbol(a, PhasePoint(0.0, [0.0], [1.0]), beta=(9,))


@pytest.mark.parametrize("name,kw", [("schrodinger", {}), ("variable_metric", {"eps": 0.2}),
                                     ("half_wave", {}), ("bump", {})])
def test_fd_agrees_with_analytic(name, kw):
    a = model_symbol(name, d=1, lam=16.0, **kw)
    for x, xi in [(0.3, 5.0), (-0.7, 12.0)]:
        for alpha, beta in [((), (1,)), ((1,), ()), ((1,), (1,)), ((), (2,))]:
            exact = complex(a.deriv(0, [x], [xi], alpha, beta))
            fd = complex(a.fd_deriv(0, [x], [xi], alpha, beta))
            assert abs(fd - exact) <= 1e-5 * max(1.0, abs(exact))


def _samples(d, lam, rng, n, lo=0.5, hi=1.0):
    out = []
    for _ in range(n):
        v = rng.normal(size=d)
        v *= rng.uniform(lo, hi) * lam / np.linalg.norm(v)
        out.append(PhasePoint(0.0, rng.uniform(-0.9, 0.9, d) / math.sqrt(d), v))
    return out


def test_symbol_class_zero():
    a = model_symbol("zero", d=1)
    consts = check_symbol_class(a, 2, _samples(1, 16, np.random.default_rng(0), 10))
    assert max(consts.values()) == 0.0


@pytest.mark.parametrize("name", ["bump", "half_wave"])
def test_symbol_class_lambda_stable(name):
    rng = np.random.default_rng(1)
    tables = []
    for lam in (16.0, 32.0, 64.0):
        a = model_symbol(name, d=2, lam=lam)
        lo = 0.0 if name == "bump" else 0.5
        tables.append(check_symbol_class(a, 2, _samples(2, lam, rng, 200, lo=lo), max_order=3))
    for key in tables[0]:
        vals = [t[key] for t in tables]
        assert max(vals) < 50
        if min(vals) > 1e-8:
            for u, v in zip(vals[:-1], vals[1:]):
                assert 0.5 <= v / u <= 2.0


def test_cutoff_support_and_plateau():
    c = CutoffSymbol(1, rx=1.0, rxi=8.0)
    assert c([0.49], [3.9]) == pytest.approx(1.0)
    assert c([1.0], [0.0]) == 0.0
    assert c([0.0], [8.0]) == 0.0
    vals = c(np.linspace(-2, 2, 101)[:, None], np.zeros((101, 1)))
    assert np.all((vals >= 0) & (vals <= 1))


def test_annular_cutoff():
    c = CutoffSymbol(1, rx=1.0, rxi=16.0, xi_inner=4.0)
    assert c([0.0], [1.9]) == 0.0
    assert c([0.0], [6.0]) == pytest.approx(1.0)
    assert c([0.0], [-6.0]) == pytest.approx(1.0)


def test_curvature_sphere_plane_paraboloid():
    lam = 16.0
    sph = model_symbol("sphere", d=3, lam=lam)
    p = PhasePoint(0.0, [0, 0, 0], [lam, 0, 0])
    det = curvature_minor(sph, p, size=2)
    assert det == pytest.approx(lam ** -2, rel=1e-6)
    flat = model_symbol("flat", d=2)
    assert curvature_minor(flat, PhasePoint(0.0, [0, 0], [0.0, 1.0]), size=1) == pytest.approx(0.0, abs=1e-12)


def test_curvature_schrodinger_space_time():
    # sigma - |xi|^2 in (xi_0, xi) has Hessian -2 I in the xi block
    par = model_symbol("paraboloid", d=3)
    p = PhasePoint(0.0, [0, 0, 0], [0.0, 0.0, 0.0])
    assert curvature_minor(par, p, size=2, check_on_set=True) == pytest.approx(4.0, rel=1e-8)


def test_curvature_rotation_invariant():
    lam = 8.0
    sph = model_symbol("sphere", d=3, lam=lam)
    xi = np.array([1.0, 2.0, 2.0]) / 3 * lam
    p = PhasePoint(0.0, [0, 0, 0], xi)
    q, _ = np.linalg.qr(np.random.default_rng(3).normal(size=(2, 2)))
    a = curvature_minor(sph, p, size=2)
    b = curvature_minor(sph, p, size=2, basis_rotation=q)
    assert b == pytest.approx(a, rel=1e-8)


@settings(max_examples=25, deadline=None)
@given(st.floats(-1, 1), st.floats(0.5, 8), st.floats(-8, 8))
def test_poisson_bracket_antisymmetric(x, xi1, xi2):
    f = model_symbol("variable_metric", d=2, eps=0.1)
    g = model_symbol("drift", d=2, lam=4.0, axis=1)
    a = poisson_bracket(f, g, 0.0, [x, 0.2], [xi1, xi2])
    b = poisson_bracket(g, f, 0.0, [x, 0.2], [xi1, xi2])
    assert float(a) == -float(b)


def test_characteristic_point_bisection():
    lam = 16.0
    sph = model_symbol("sphere", d=2, lam=lam)
    xi = find_characteristic_point(sph, 0.0, [0.0, 0.0], [0.6, 0.8], 2 * lam)
    assert np.linalg.norm(xi) == pytest.approx(lam, rel=1e-9)
    assert find_characteristic_point(sph, 0.0, [0.0, 0.0], [0.6, 0.8], lam / 2) is None


def test_assumptions_sphere_drift():
    lam = 32.0
    p_re = model_symbol("sphere", d=2, lam=lam)
    p_im = model_symbol("drift", d=2, lam=lam)
    seeds = [PhasePoint(0.0, [0.0, 0.0], [math.cos(th), math.sin(th)])
             for th in np.linspace(0.1, 3.0, 7)]
    rep = check_assumptions(p_re, p_im, 0, seeds, assumptions=["A2'", "A2", "A3"])
    assert rep["A2'"].passed and rep["A2'"].constant >= 0.1
    assert rep["A2"].passed
    assert len(rep.entries) == 3
    assert rep.to_csv().splitlines()[0] == "assumption,constant,threshold,pass,worst_point"


def test_assumption_a3_fails_for_flat():
    flat = model_symbol("flat", d=2, lam=16.0)
    seeds = [PhasePoint(0.0, [0.0, 0.0], [-1.0, 0.3])]
    rep = check_assumptions(flat, None, 0, seeds, assumptions=["A3"])
    assert not rep["A3"].passed
    assert rep["A3"].constant == pytest.approx(0.0, abs=1e-12)


def test_function_symbol_uses_fd():
    a = symbol_from_function(lambda t, x, xi: np.sum(xi ** 2, axis=-1), 1, 16.0)
    assert not a.analytic_derivs
    assert float(np.real(a.deriv(0, [0.0], [3.0], beta=(1,)))) == pytest.approx(6.0, rel=1e-6)
