"""Weyl quantization of the model symbols and the reference propagator.

Two families are supported, matching :attr:`Symbol.weyl_form`:

* ``"multiplier"``: ``a(xi)`` independent of ``x``, applied spectrally;
* ``"isotropic_quadratic"``: ``a = a0(x) + g(x)|xi|^2`` with Weyl operator
  ``a0 + sum_i D_i g D_i - (Delta g)/4``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .fbi import GridFunction, GridSpec
from .symbols import Symbol

__all__ = [
    "StabilityError",
    "weyl_apply",
    "multiplier_values",
    "reference_propagator",
    "PropagatorResult",
    "spectral_derivative",
]


class StabilityError(ValueError):
    """Requested time step exceeds the explicit stability bound."""


def multiplier_values(sym: Symbol, grid: GridSpec, t: float = 0.0) -> np.ndarray:
    """``a(t, xi)`` on the FFT frequency mesh."""
    k = grid.freq_mesh()
    return np.asarray(sym(t, np.zeros_like(k), k))


def _quadratic_parts(sym: Symbol, grid: GridSpec, t: float):
    x = grid.mesh()
    z = np.zeros_like(x)
    e = [0] * sym.d
    e[0] = 2
    a0 = np.asarray(sym(t, x, z))
    g = 0.5 * np.asarray(sym.deriv(t, x, z, beta=e))
    lap = np.zeros(grid.n)
    for i in range(sym.d):
        al = [0] * sym.d
        al[i] = 2
        lap = lap + 0.5 * np.asarray(sym.deriv(t, x, z, alpha=al, beta=e))
    return a0, g, lap


def spectral_derivative(values: np.ndarray, grid: GridSpec, axis: int) -> np.ndarray:
    """``D_axis = -i d/dx_axis`` applied spectrally."""
    k = grid.freq_axis(axis)
    shape = [1] * grid.d
    shape[axis] = -1
    return np.fft.ifft(np.fft.fft(values, axis=axis) * k.reshape(shape), axis=axis)


def weyl_apply(sym: Symbol, u: GridFunction, t: float = 0.0) -> GridFunction:
    """Apply ``a^w(t, x, D)`` to ``u``.

    Examples
    --------
    >>> from parametrix_lab.symbols import model_symbol
    >>> g = GridSpec.centered(64, 2 * np.pi)
    >>> u = GridFunction(g, np.exp(3j * g.axis(0)))
    >>> v = weyl_apply(model_symbol("schrodinger"), u)
    >>> bool(np.allclose(v.values, 9 * u.values))
    True
    """
    grid = u.grid
    if sym.weyl_form == "multiplier":
        return GridFunction(grid, np.fft.ifftn(multiplier_values(sym, grid, t) * np.fft.fftn(u.values)))
    if sym.weyl_form == "isotropic_quadratic":
        a0, g, lap = _quadratic_parts(sym, grid, t)
        out = (a0 - 0.25 * lap) * u.values
        for i in range(grid.d):
            out = out + spectral_derivative(g * spectral_derivative(u.values, grid, i), grid, i)
        return GridFunction(grid, out)
    raise NotImplementedError(f"no Weyl quantization for symbol {sym.name!r}")


@dataclass
class PropagatorResult:
    u: GridFunction
    unitarity_defect: float
    steps: int


def _operator_bound(sym: Symbol, grid: GridSpec, t: float) -> float:
    a0, g, lap = _quadratic_parts(sym, grid, t)
    kmax2 = float(np.sum(grid.nyquist ** 2))
    return float(np.max(np.abs(a0 - 0.25 * lap)) + np.max(np.abs(g)) * kmax2)


def reference_propagator(sym: Symbol, s: float, t: float, u0: GridFunction,
                         steps: int = None, safety: float = 0.7) -> PropagatorResult:
    """Solve ``(D_t + a^w) u = 0`` from ``s`` to ``t``.

    Multipliers use the exact factor ``exp(-i (t - s) a(xi))``.  The
    variable-metric family uses Fourier collocation in space and RK4 in
    time with ``|dt| * ||a^w|| <= safety * 2.8``.
    """
    if t == s:
        return PropagatorResult(GridFunction(u0.grid, u0.values.copy()), 0.0, 0)
    n0 = u0.norm()
    grid = u0.grid
    if sym.weyl_form == "multiplier":
        m = multiplier_values(sym, grid, s)
        v = np.fft.ifftn(np.exp(-1j * (t - s) * m) * np.fft.fftn(u0.values))
        out = GridFunction(grid, v)
        return PropagatorResult(out, abs(out.norm() / n0 - 1) if n0 else 0.0, 1)
    if sym.weyl_form != "isotropic_quadratic":
        raise NotImplementedError(f"no reference propagator for {sym.name!r}")
    bound = _operator_bound(sym, grid, s)
    nmin = int(np.ceil(abs(t - s) * bound / (2.8 * safety))) if bound > 0 else 1
    if steps is None:
        steps = max(nmin, 1)
    elif steps < nmin:
        raise StabilityError(f"{steps} steps violate the stability bound (need >= {nmin})")
    h = (t - s) / steps
    u = u0.values.copy()
    a0, g, lap = _quadratic_parts(sym, grid, s)
    pot = a0 - 0.25 * lap

    def L(v):
        out = pot * v
        for i in range(grid.d):
            out = out + spectral_derivative(g * spectral_derivative(v, grid, i), grid, i)
        return -1j * out

    for _ in range(steps):
        k1 = L(u)
        k2 = L(u + 0.5 * h * k1)
        k3 = L(u + 0.5 * h * k2)
        k4 = L(u + h * k3)
        u = u + (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4)
    out = GridFunction(grid, u)
    return PropagatorResult(out, abs(out.norm() / n0 - 1) if n0 else 0.0, steps)
