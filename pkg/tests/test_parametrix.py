import math

import numpy as np
import pytest

from parametrix_lab.fbi import GridFunction, GridSpec, WavePacketFrame, fbi_adjoint, fbi_forward
from parametrix_lab.parametrix import (
    FitRefusedError,
    ParametrixConfig,
    apply_cutoff,
    apply_parametrix,
    fixed_time_decay_scan,
    kernel_eval,
    parametrix_residual,
)
from parametrix_lab.quantization import reference_propagator
from parametrix_lab.symbols import CutoffSymbol, model_symbol


@pytest.fixture(scope="module")
def setup():
    g = GridSpec.centered(512, 48.0)
    fr = WavePacketFrame.covering(g, [(-26, 26)], x_box=[(-14, 14)])
    return g, fr


def _packet(g, x0=0.0, k0=0.0, w=1.0):
    y = g.axis(0)
    return GridFunction(g, np.exp(1j * k0 * y - 0.5 * (y - x0) ** 2 / w ** 2))


def test_zero_symbol_gives_frame_identity(setup):
    g, fr = setup
    u0 = _packet(g, 0.5, 6.0)
    out = apply_parametrix(ParametrixConfig(model_symbol("zero"), fr, 0.0, 0.7), u0).u
    ref = fbi_adjoint(fbi_forward(u0, fr), fr)
    assert (out - ref).norm() <= 1e-10 * u0.norm()
    assert (out - u0).norm() <= 1e-3 * u0.norm()


def test_constant_symbol_is_pure_phase(setup):
    g, fr = setup
    u0 = _packet(g, -1.0, 3.0)
    c = 2.0
    out = apply_parametrix(ParametrixConfig(model_symbol("constant", c=c), fr, 0.0, 0.4), u0).u
    ref = fbi_adjoint(fbi_forward(u0, fr), fr) * np.exp(-1j * c * 0.4)
    assert (out - ref).norm() <= 1e-10 * u0.norm()


def test_free_schrodinger_matches_reference(setup):
    g, fr = setup
    u0 = _packet(g, -4.0, 16.0)
    a = model_symbol("schrodinger")
    out = apply_parametrix(ParametrixConfig(a, fr, 0.0, 0.25), u0).u
    ref = reference_propagator(a, 0.0, 0.25, u0).u
    assert (out - ref).norm() <= 0.15 * u0.norm()


def test_backward_time_rejected(setup):
    g, fr = setup
    with pytest.raises(ValueError):
        apply_parametrix(ParametrixConfig(model_symbol("zero"), fr, 0.5, 0.5), _packet(g), t=0.1)


def test_parametrix_norm_bounded_and_limit(setup):
    g, fr = setup
    a = model_symbol("variable_metric", eps=0.1)
    u0 = _packet(g, 0.0, 4.0)
    cfg = ParametrixConfig(a, fr, 0.0, 0.5)
    assert apply_parametrix(cfg, u0).u.norm() <= 1.001 * u0.norm()
    near = apply_parametrix(cfg, u0, t=1e-9).u
    assert (near - u0).norm() <= 1e-3 * u0.norm()


def test_translation_covariance(setup):
    g, fr = setup
    a = model_symbol("schrodinger")
    cfg = ParametrixConfig(a, fr, 0.0, 0.2)
    u0 = _packet(g, -1.0, 5.0)
    cells = int(round(fr.dx[0] / g.h[0])) * 2
    u1 = GridFunction(g, np.roll(u0.values, cells))
    out0 = apply_parametrix(cfg, u0).u.values
    out1 = apply_parametrix(cfg, u1).u.values
    assert np.max(np.abs(np.roll(out0, cells) - out1)) <= 1e-8


def test_reproducing_kernel_value(setup):
    g, fr = setup
    cfg = ParametrixConfig(model_symbol("zero"), fr, 0.0, 0.0)
    k = kernel_eval(cfg, [0.0], [0.0])
    width = len(fr.xi_nodes[0]) * fr.dxi[0]
    assert abs(k) == pytest.approx(width / (2 * math.pi), rel=5e-3)


def test_kernel_free_schrodinger_centre(setup):
    g, fr = setup
    t = 0.25
    cfg = ParametrixConfig(model_symbol("schrodinger"), fr, 0.0, t)
    k = kernel_eval(cfg, [0.0], [0.0])
    assert abs(k) == pytest.approx((4 * math.pi * t) ** -0.5, rel=0.2)


def test_kernel_far_tail(setup):
    g, fr = setup
    cfg = ParametrixConfig(model_symbol("zero"), fr, 0.0, 0.0)
    assert abs(kernel_eval(cfg, [12.0], [0.0])) <= 1e-8


def test_residual_zero_and_linear(setup):
    g, fr = setup
    samples = [_packet(g, 0.3, 4.0), _packet(g, -1.0, -6.0, 1.3)]
    for name, kw in (("zero", {}), ("linear", {"v": [1.0]})):
        rep = parametrix_residual(ParametrixConfig(model_symbol(name, **kw), fr, 0.0, 0.5), samples)
        assert rep.residual <= 1e-2
        assert rep.norm <= 1.001


def test_cutoff_application():
    g = GridSpec.centered(256, 8.0)
    chi = CutoffSymbol(1, rx=1.0, rxi=20.0)
    u = GridFunction(g, np.ones(g.n, complex))
    out = apply_cutoff(chi, u)
    y = g.axis(0)
    assert np.all(np.abs(out.values[np.abs(y) >= 1.0]) == 0)
    assert np.allclose(out.values[np.abs(y) <= 0.5], 1.0)


def test_free_schrodinger_decay_exponent():
    scan = fixed_time_decay_scan(
        lambda l: model_symbol("schrodinger", lam=l, normalization="paper"),
        lambda l: CutoffSymbol(1, rx=1.0, rxi=l),
        [32, 64, 128], [1 / 32, 1 / 16, 1 / 8, 1 / 4, 1 / 2], GridSpec.centered(2048, 16.0))
    assert scan.t_exponent == pytest.approx(-0.5, abs=0.05)
    assert not scan.rejected
    assert len(scan.rows) >= 12


def test_flat_symbol_rejected():
    scan = fixed_time_decay_scan(model_symbol("zero"), CutoffSymbol(1, rx=1.0, rxi=16.0),
                                 [16.0], [0.1, 0.2, 0.4], GridSpec.centered(256, 8.0))
    assert scan.rejected


def test_too_few_points_refused():
    with pytest.raises(FitRefusedError):
        fixed_time_decay_scan(model_symbol("schrodinger"), CutoffSymbol(1, rx=1.0, rxi=16.0),
                              [16.0], [0.1, 0.2], GridSpec.centered(256, 8.0))
