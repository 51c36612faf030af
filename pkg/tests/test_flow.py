import numpy as np
import pytest

from parametrix_lab.flow import (
    FlowBlowupError,
    flow_jacobian_check,
    integrate_flow,
    linearization_drift,
)
from parametrix_lab.symbols import PhasePoint, model_symbol, symbol_from_function


def _state(st):
    return np.concatenate([np.ravel(st.x), np.ravel(st.xi), np.ravel(st.psi), np.ravel(st.X), np.ravel(st.Xi)])


def test_free_schrodinger_closed_form():
    st = integrate_flow(model_symbol("schrodinger"), PhasePoint(0, [0.0], [1.0]), 0, 0.5, 8)
    assert float(st.x[0]) == pytest.approx(1.0, abs=1e-12)
    assert float(st.xi[0]) == pytest.approx(1.0, abs=1e-12)
    assert float(st.psi) == pytest.approx(0.5, abs=1e-12)
    assert float(st.X[0, 0]) == pytest.approx(1.0, abs=1e-12)
    assert float(st.Xi[0, 0]) == pytest.approx(1.0, abs=1e-12)


def test_half_wave_transport_has_zero_phase():
    a = model_symbol("half_wave", d=1, lam=16.0)
    st = integrate_flow(a, PhasePoint(0, [0.3], [2.0]), 0, 1, 16)
    assert float(st.x[0]) == pytest.approx(1.3, abs=1e-12)
    assert float(st.xi[0]) == pytest.approx(2.0, abs=1e-12)
    assert float(st.psi) == pytest.approx(0.0, abs=1e-12)


def test_zero_symbol_is_identity():
    st = integrate_flow(model_symbol("zero"), PhasePoint(0, [0.4], [1.5]), 0, 1, 4)
    assert float(st.x[0]) == 0.4 and float(st.xi[0]) == 1.5
    assert float(st.psi) == 0.0
    assert float(st.X[0, 0]) == 0.0 and float(st.Xi[0, 0]) == 1.0
    symp, fd = flow_jacobian_check(model_symbol("zero"), PhasePoint(0, [0.4], [1.5]), 0, 1, 4)
    assert symp == 0.0


def test_variable_metric_self_convergence():
    a = model_symbol("variable_metric", eps=0.1)
    p = PhasePoint(0, [0.0], [1.0])
    ref = _state(integrate_flow(a, p, 0, 1, 16384))
    got = _state(integrate_flow(a, p, 0, 1, 2048))
    assert np.max(np.abs(got - ref)) <= 1e-8


def test_fourth_order_convergence():
    a = model_symbol("variable_metric", eps=0.2)
    p = PhasePoint(0, [0.3], [2.0])
    ref = _state(integrate_flow(a, p, 0, 1, 4096))
    e1 = np.max(np.abs(_state(integrate_flow(a, p, 0, 1, 32)) - ref))
    e2 = np.max(np.abs(_state(integrate_flow(a, p, 0, 1, 64)) - ref))
    assert e1 / e2 >= 8


def test_composition_and_reversal():
    a = model_symbol("variable_metric", eps=0.1)
    p = PhasePoint(0, [0.1], [1.2])
    mid = integrate_flow(a, p, 0, 0.4, 512)
    end = integrate_flow(a, mid.as_start(), 0.4, 1.0, 768)
    direct = integrate_flow(a, p, 0, 1.0, 1280)
    assert np.max(np.abs(np.ravel(end.x) - np.ravel(direct.x))) <= 1e-8
    assert float(mid.psi) + float(end.psi) == pytest.approx(float(direct.psi), abs=1e-8)
    back = integrate_flow(a, direct.as_start(), 1.0, 0.0, 1280)
    assert np.ravel(back.x) == pytest.approx([0.1], abs=1e-8)
    assert np.ravel(back.xi) == pytest.approx([1.2], abs=1e-8)


def test_x_only_symbol_phase_is_minus_integral():
    a = symbol_from_function(lambda t, x, xi: np.cos(x[..., 0]) + 0 * xi[..., 0], 1, 4.0)
    st = integrate_flow(a, PhasePoint(0, [0.5], [1.0]), 0, 0.7, 64)
    assert float(st.x[0]) == pytest.approx(0.5, abs=1e-10)
    assert float(st.psi) == pytest.approx(-0.7 * np.cos(0.5), rel=1e-6)


def test_quadratic_jacobian_exact():
    symp, fd = flow_jacobian_check(model_symbol("schrodinger", d=2), PhasePoint(0, [0.0, 0.1], [1.0, -1.0]), 0, 1, 16)
    assert symp <= 1e-10 and fd <= 1e-8


def test_variable_metric_symplectic():
    symp, fd = flow_jacobian_check(model_symbol("variable_metric", eps=0.1), PhasePoint(0, [0.0], [1.0]), 0, 1, 4096)
    assert symp <= 1e-6
    assert fd <= 1e-5


def test_drift_zero_for_free_and_zero_symbols():
    p = PhasePoint(0, [0.3], [1.0])
    free = model_symbol("schrodinger", normalization="paper", lam=16.0)
    assert linearization_drift(free, p, 0.25, 16.0) <= 1e-12
    assert linearization_drift(model_symbol("zero"), p, 0.25, 16.0) == 0.0


def test_drift_scales_like_sqrt_t0():
    vp = model_symbol("variable_metric", eps=0.1, normalization="paper", lam=16.0)
    p = PhasePoint(0, [0.3], [1.0])
    t0s = [1 / 4, 1 / 16, 1 / 64]
    d = [linearization_drift(vp, p, t0, 16.0) for t0 in t0s]
    slope = np.polyfit(np.log(t0s), np.log(d), 1)[0]
    assert 0.3 <= slope <= 0.7


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_blowup_reports_last_time():
    a = symbol_from_function(lambda t, x, xi: xi[..., 0] ** 4, 1, 4.0)
    with pytest.raises(FlowBlowupError) as exc:
        integrate_flow(a, PhasePoint(0, [0.0], [1e80]), 0, 1, 16)
    assert exc.value.last_valid_time >= 0.0
