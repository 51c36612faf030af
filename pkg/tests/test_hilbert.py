import math

import numpy as np
import pytest

from parametrix_lab.hilbert import (
    DeltaForcing,
    DyadicCalculus,
    OperatorPath,
    RangeError,
    UnitarityError,
    almost_orthogonality_constants,
    atom_residual,
    bdiff_constant,
    commutator_constant,
    commuting_path,
    constant_path,
    delta_scan,
    dyadic_parametrix_apply,
    evolve,
    functional_calculus,
    l1_atom,
    make_path,
    near_commuting_path,
    ort_halving_ratio,
    random_hermitian,
    simple_kernel,
    simple_parametrix_apply,
    simple_parametrix_norms,
    two_variation_atom,
)


def _scalar_path(a, b_fn, db_fn, n_steps=64, fine_steps=1024):
    t = np.linspace(0, 1, n_steps + 1)
    A = np.full((len(t), 1, 1), a, complex)
    B = np.array([[[b_fn(s)]] for s in t], complex)
    return OperatorPath(t, A, B, A_fn=lambda s: np.array([[a]], complex),
                        B_fn=lambda s: np.array([[b_fn(s)]], complex),
                        dB_fn=lambda s: np.array([[db_fn(s)]], complex), fine_steps=fine_steps)


@pytest.fixture(scope="module")
def near():
    return near_commuting_path(16, 0)


@pytest.fixture(scope="module")
def commuting():
    return commuting_path(16, 0)


# evolution and functional calculus

def test_evolve_constant_diagonal_and_zero():
    a = np.array([0.5, -1.0, 2.0])
    p = constant_path(np.diag(a), np.zeros((3, 3)), fine_steps=2048)
    v = np.array([1.0, 1j, -2.0])
    got = evolve(p, 0.2, 0.9, v)
    assert np.allclose(got, np.exp(-1j * a * 0.7) * v, atol=1e-10)
    z = constant_path(np.zeros((3, 3)), np.zeros((3, 3)))
    assert np.allclose(evolve(z, 0.1, 0.8, v), v, atol=0)


def test_evolve_random_path_unitary_and_group_law(near):
    v = np.random.default_rng(0).normal(size=16) + 0j
    w = evolve(near, 0.1, 0.9, v)
    assert abs(np.linalg.norm(w) - np.linalg.norm(v)) <= 1e-8 * np.linalg.norm(v)
    two = evolve(near, 0.4, 0.9, evolve(near, 0.1, 0.4, v))
    assert np.linalg.norm(two - w) <= 1e-8 * np.linalg.norm(v)
    S = near.S(0.9, 0.1)
    assert np.linalg.norm(S @ v - w) <= 1e-8 * np.linalg.norm(v)


def test_evolve_flags_coarse_steps():
    A = np.diag([400.0, -400.0])
    p = constant_path(A, np.zeros((2, 2)), fine_steps=64)
    with pytest.raises(UnitarityError):
        evolve(p, 0.0, 1.0, np.array([1.0, 1.0]), steps=8)


def test_path_validation():
    with pytest.raises(ValueError):
        OperatorPath([0.0, 0.0], np.zeros((2, 2, 2)), np.zeros((2, 2, 2)))
    bad = np.array([[[0, 1], [0, 0]]] * 2, complex)
    with pytest.raises(ValueError):
        OperatorPath([0.0, 1.0], bad, bad)


def test_functional_calculus_basics():
    M = random_hermitian(6, np.random.default_rng(1), norm=3.0)
    assert np.allclose(functional_calculus(M, lambda x: x), M, atol=1e-12)
    assert np.allclose(functional_calculus(M, np.ones_like), np.eye(6), atol=1e-12)
    D = np.diag([1.0, 3.0])
    assert np.allclose(functional_calculus(D, lambda x: (x < 2).astype(float)), np.diag([1.0, 0.0]))
    gh = functional_calculus(M, lambda x: np.sin(x) * np.exp(-x ** 2))
    prod = functional_calculus(M, np.sin) @ functional_calculus(M, lambda x: np.exp(-x ** 2))
    assert np.max(np.abs(gh - prod)) <= 1e-10
    with pytest.raises(ValueError):
        functional_calculus(np.array([[0, 1], [0, 0]], complex), np.sin)


def test_make_path_registry():
    p = make_path("commuting", m=4, seed=2)
    assert p.m == 4
    with pytest.raises(KeyError):
        make_path("nope")


# commutator and bdiff constants

def test_commutator_zero_for_constant_commuting(commuting):
    assert commutator_constant(commuting, times=[0.2, 0.7]) == pytest.approx(0.0, abs=1e-12)


def test_commutator_scalar_closed_form():
    f = lambda t: 2 + math.sin(3 * t)
    df = lambda t: 3 * math.cos(3 * t)
    p = _scalar_path(0.5, lambda t: 4 * f(t), lambda t: 4 * df(t))
    ts = np.linspace(0, 1, 11)
    expect = max(4 * abs(df(t)) / (4 * abs(f(t)) + 1) for t in ts)
    assert commutator_constant(p, times=ts) == pytest.approx(expect, rel=1e-10)


def test_commutator_fd_step_stability():
    rng = np.random.default_rng(3)
    A0, A1, B0, B1 = (random_hermitian(8, rng) for _ in range(4))
    t = np.linspace(0, 1, 65)
    A = np.stack([A0 + s * A1 for s in t])
    B = np.stack([B0 + s * s * B1 for s in t])
    p = OperatorPath(t, A, B, A_fn=lambda s: A0 + s * A1, B_fn=lambda s: B0 + s * s * B1, fine_steps=1024)
    c1 = commutator_constant(p, times=[0.3, 0.6], fd_step=1e-5)
    c2 = commutator_constant(p, times=[0.3, 0.6], fd_step=2e-5)
    assert np.isfinite(c1) and abs(c1 - c2) <= 0.05 * c1


def test_bdiff_commuting_linear_closed_form():
    p = _scalar_path(0.7, lambda t: 3.0 + 2.0 * t, lambda t: 2.0)
    s, t = 0.2, 0.6
    assert bdiff_constant(p, s, t) == pytest.approx(2.0 / (3.0 + 2.0 * s + 1.0), rel=1e-10)
    with pytest.raises(ValueError):
        bdiff_constant(p, 0.3, 0.3)


def test_bdiff_zero_commuting_constant(commuting):
    assert bdiff_constant(commuting, 0.2, 0.5) <= 1e-12


def test_bdiff_near_commuting_bounded(near):
    assert bdiff_constant(near, 0.1, 0.9) <= 10


# dyadic calculus

def test_partition_of_unity_and_signed_parts():
    calc = DyadicCalculus.for_bound(40)
    assert calc.covered >= 40
    assert calc.partition_defect() <= 1e-10
    x = np.linspace(-calc.covered, calc.covered, 4001)
    for j in range(1, calc.J + 1):
        assert np.all(calc.kappa_pm(j, 1, x) * calc.kappa_pm(j, -1, x) == 0)
        k = calc.kappa(j, x)
        ax = np.maximum(np.abs(x), 1)
        assert np.all(k[(ax < 2.0 ** j) | (ax > 2.0 ** (j + 2))] == 0)
    assert np.all(calc.kappa_pm(0, -1, x) == 0)
    with pytest.raises(RangeError):
        calc.check_range([2 * calc.covered])


# simple parametrix

def test_simple_scalar_decay():
    b = 3.0
    p = constant_path(np.zeros((1, 1)), -b * np.eye(1), fine_steps=512)
    s0 = 0.25
    f = DeltaForcing([s0], [[1.0]])
    ts = np.array([0.1, 0.5, 0.9])
    u = simple_parametrix_apply(p, f, ts)
    assert u[0, 0] == 0
    for t, val in zip(ts[1:], u[1:, 0]):
        assert val == pytest.approx(1j * math.exp(-(t - s0) * b), abs=1e-12)


def test_simple_kernel_vanishes_for_positive_b():
    p = constant_path(np.diag([1.0, 2.0]), np.diag([1.0, 5.0]))
    assert np.all(simple_kernel(p, 0.8, 0.3) == 0)


def test_simple_norms_commuting(commuting):
    for t, s in ((0.6, 0.3), (0.9, 0.1)):
        n = simple_parametrix_norms(commuting, t, s)
        assert n["H"] <= 1 + 1e-12
        assert n["HB"] <= math.exp(-1) + 1e-12
        assert n["residual"] <= 1e-6


def test_simple_norms_zero_b():
    p = constant_path(np.diag([1.0, -1.0]), np.zeros((2, 2)))
    n = simple_parametrix_norms(p, 0.7, 0.2)
    assert n["H"] == n["HB"] == n["BH"] == n["BHB"] == 0


def test_commuting_residuals_both_kernels(commuting):
    calc = DyadicCalculus.for_bound(30)
    rng = np.random.default_rng(0)
    f = l1_atom(0.37, rng.normal(size=16) + 1j * rng.normal(size=16))
    g = two_variation_atom(commuting, [0.1, 0.45, 0.8], rng.normal(size=(2, 16)))
    for atom in (f, g):
        assert atom_residual(commuting, atom, "simple", n_eval=9) <= 1e-6
        assert atom_residual(commuting, atom, "dyadic", calc, n_eval=9) <= 1e-6
    ts = np.linspace(0, 1, 17)
    u1 = simple_parametrix_apply(commuting, f, ts)
    u2 = dyadic_parametrix_apply(commuting, calc, f, ts)
    assert np.max(np.abs(u1 - u2)) <= 1e-6


def test_dyadic_zero_forcing(near):
    calc = DyadicCalculus.for_bound(40)
    f = DeltaForcing([0.5], [np.zeros(16)])
    assert np.all(dyadic_parametrix_apply(near, calc, f, np.linspace(0, 1, 5)) == 0)


def test_near_commuting_norms_and_residual(near):
    n = simple_parametrix_norms(near, 0.6, 0.3)
    assert max(n[k] for k in ("H", "HB", "BH", "BHB")) <= 10
    assert n["residual"] <= 10 * bdiff_constant(near, 0.3, 0.6)
    calc = DyadicCalculus.for_bound(40)
    f = l1_atom(0.37, np.random.default_rng(1).normal(size=16))
    r = atom_residual(near, f, "dyadic", calc, n_eval=9)
    assert np.isfinite(r) and r <= 10 * commutator_constant(near)


# almost orthogonality

def test_ort_constant_b_is_zero():
    B = np.diag([0.5, 3.0, -12.0, 30.0])
    p = constant_path(np.zeros((4, 4)), B)
    c = almost_orthogonality_constants(p, DyadicCalculus.for_bound(40), 0.6, 0.2)
    assert c == {"a": 0.0, "b": 0.0, "c": 0.0, "d": 0.0}


def test_ort_commuting_linear_scalar():
    calc = DyadicCalculus.for_bound(40)
    p = _scalar_path(0.0, lambda t: 3.0 + 2.0 * t, lambda t: 2.0)
    t, s = 0.6, 0.3
    c = almost_orthogonality_constants(p, calc, t, s)
    bt, bs = 3.0 + 2 * t, 3.0 + 2 * s
    expect_c = max(abs(calc.kappa(j, bt) - calc.kappa(j, bs)) for j in range(calc.J + 1)) / (t - s)
    assert c["c"] == pytest.approx(float(expect_c), rel=1e-10)


def test_ort_halving_stable(near):
    r = ort_halving_ratio(near, DyadicCalculus.for_bound(40), 0.5, 0.375)
    assert max(r.values()) <= 2


# delta scan

def test_delta_scan_commuting_flat():
    # delta * spec(B) must avoid (-4, 0), where kappa_0 is not split by sign
    path = commuting_path(16, 0, b_min=16, b_max=96)
    calc = DyadicCalculus.for_bound(100)
    f = l1_atom(0.3, np.random.default_rng(2).normal(size=16))
    sc = delta_scan(path, calc, [1.0, 0.5, 0.25], [f], n_eval=5)
    assert sc.slope == pytest.approx(0.0, abs=0.05)
    assert max(v for k, v in sc.extra.items() if k.startswith("residual@")) <= 1e-6


def test_delta_one_matches_dyadic(near):
    calc = DyadicCalculus.for_bound(40)
    f = l1_atom(0.3, np.random.default_rng(2).normal(size=16))
    ts = np.linspace(0, 1, 9)
    assert np.array_equal(dyadic_parametrix_apply(near, calc, f, ts, delta=1.0),
                          dyadic_parametrix_apply(near, calc, f, ts))
