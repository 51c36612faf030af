import math

import numpy as np
import pytest

from parametrix_lab.fbi import (
    BoundaryMassWarning,
    GridFunction,
    GridSpec,
    WavePacketFrame,
    coherent_state,
    conjugation_error,
    fbi_adjoint,
    fbi_forward,
    lattice_norm,
    random_band_limited,
    synthesize_packets,
)
from parametrix_lab.symbols import model_symbol


@pytest.fixture(scope="module")
def frame():
    g = GridSpec.centered(256, 32.0)
    return WavePacketFrame.covering(g, [(-18, 18)], x_box=[(-7, 7)])


def test_grid_requires_power_of_two():
    with pytest.raises(ValueError):
        GridSpec.centered(100, 10.0)


def test_lattice_density(frame):
    assert frame.dx[0] * frame.dxi[0] <= 2 * math.pi / 4 + 1e-12
    assert frame.dx[0] * frame.dxi[0] == pytest.approx(math.pi / 8)


def test_zero_in_zero_out(frame):
    z = GridFunction(frame.grid, np.zeros(frame.grid.n, complex))
    assert np.all(fbi_forward(z, frame) == 0)
    assert np.all(fbi_adjoint(np.zeros(frame.shape), frame).values == 0)


def test_coherent_state_peak(frame):
    c = fbi_forward(coherent_state(frame.grid, 0.0, 0.0), frame)
    X, K = frame.points()
    i = np.unravel_index(np.argmax(np.abs(c)), c.shape)
    assert X[i][0] == pytest.approx(0.0, abs=frame.dx[0] / 2)
    assert K[i][0] == pytest.approx(0.0, abs=frame.dxi[0] / 2)


def test_plancherel_and_reconstruction(frame):
    rng = np.random.default_rng(0)
    for _ in range(20):
        f = random_band_limited(frame, rng)
        c = fbi_forward(f, frame)
        assert 0.999 <= lattice_norm(c, frame) ** 2 / f.norm() ** 2 <= 1.001
        assert (fbi_adjoint(c, frame) - f).norm() <= 1e-3 * f.norm()


def test_reconstruction_improves_with_density():
    g = GridSpec.centered(256, 32.0)
    rng = np.random.default_rng(4)
    errs = []
    for density in (math.pi / 2, math.pi / 4):
        fr = WavePacketFrame.covering(g, [(-18, 18)], x_box=[(-7, 7)], density=density)
        f = random_band_limited(fr, np.random.default_rng(4))
        errs.append((fbi_adjoint(fbi_forward(f, fr), fr) - f).norm() / f.norm())
    assert errs[1] <= errs[0] / 2


def test_discrete_adjointness(frame):
    rng = np.random.default_rng(1)
    f = random_band_limited(frame, rng)
    G = rng.normal(size=frame.shape) + 1j * rng.normal(size=frame.shape)
    lhs = frame.weight * np.vdot(G, fbi_forward(f, frame))
    rhs = f.inner(fbi_adjoint(G, frame))
    assert abs(lhs - rhs) <= 1e-10 * abs(lhs)


def test_single_coefficient_is_weighted_packet(frame):
    c = np.zeros(frame.shape, complex)
    idx = (frame.shape[0] // 2 + 7,)
    c[idx] = 1.0
    X, K = frame.points()
    out = fbi_adjoint(c, frame)
    ref = coherent_state(frame.grid, X[idx], K[idx]).values * frame.weight
    assert np.max(np.abs(out.values - ref)) <= 1e-12
    scat = synthesize_packets(frame.grid, X[idx], K[idx], [1.0], frame.weight)
    assert np.max(np.abs(scat.values - ref)) <= 1e-12


def test_translation_covariance(frame):
    rng = np.random.default_rng(2)
    f = random_band_limited(frame, rng)
    cells = int(round(frame.dx[0] / frame.grid.h[0]))
    shifted = GridFunction(frame.grid, np.roll(f.values, cells))
    nxi = len(frame.xi_nodes[0])
    a = np.abs(fbi_forward(f, frame)).reshape(-1, nxi)
    b = np.abs(fbi_forward(shifted, frame)).reshape(-1, nxi)
    assert np.max(np.abs(a[:-1] - b[1:])) <= 1e-8


def test_boundary_warning(frame):
    f = coherent_state(frame.grid, 15.5, 0.0)
    with pytest.warns(BoundaryMassWarning):
        fbi_forward(f, frame)


def test_shape_mismatch(frame):
    with pytest.raises(ValueError):
        fbi_adjoint(np.zeros((3, 3)), frame)


def test_conjugation_constant_and_linear(frame):
    f = random_band_limited(frame, np.random.default_rng(5))
    assert conjugation_error(model_symbol("constant", c=2.5), f, frame) <= 1e-6
    assert conjugation_error(model_symbol("linear", v=[1.0]), f, frame) <= 1e-3


def test_conjugation_uniform_in_frequency():
    g = GridSpec.centered(512, 32.0)
    errs = []
    for lam in (8, 16, 32):
        fr = WavePacketFrame.covering(g, [(-lam - 10, lam + 10)], x_box=[(-7, 7)])
        y = g.axis(0)
        f = GridFunction(g, np.exp(1j * lam * y - 0.5 * y ** 2))
        errs.append(conjugation_error(model_symbol("schrodinger", lam=lam).scaled(0.5), f, fr))
    assert max(errs) / min(errs) <= 2
