"""Hamilton flow, action phase and linearized flow of a real symbol.

The state ``(x, xi, psi, X, Xi)`` is integrated jointly with the classical
fixed-step RK4 scheme, batched over any number of starting points:

    x' = a_xi,  xi' = -a_x,  psi' = -a + xi . a_xi,
    X' = a_xix X + a_xixi Xi,  Xi' = -a_xx X - a_xxi Xi,

with ``X(s) = 0`` and ``Xi(s) = I``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from .symbols import PhasePoint, Symbol

__all__ = [
    "FlowBlowupError",
    "FlowState",
    "integrate_flow",
    "flow_jacobian_check",
    "rescale_symbol",
    "linearization_drift",
]


class FlowBlowupError(FloatingPointError):
    """The flow produced a non-finite state."""

    def __init__(self, message, last_valid_time):
        super().__init__(f"{message} (last valid time {last_valid_time:.6g})")
        self.last_valid_time = last_valid_time


@dataclass
class FlowState:
    """Flow output at time ``t``; arrays carry the batch axes of the start."""

    t: float
    x: np.ndarray
    xi: np.ndarray
    psi: np.ndarray
    X: np.ndarray
    Xi: np.ndarray
    J: Optional[np.ndarray] = None

    def as_start(self) -> PhasePoint:
        return PhasePoint(self.t, self.x, self.xi)


def _rhs(sym: Symbol, t, x, xi, psi, X, Xi, J):
    a, ax, ak, hxx, hkx, hkk = sym.jet2(t, x, xi)
    dpsi = -a + np.sum(xi * ak, -1)
    hxk = np.swapaxes(hkx, -1, -2)
    dX = hkx @ X + hkk @ Xi
    dXi = -hxx @ X - hxk @ Xi
    dJ = None
    if J is not None:
        top = np.concatenate([hkx, hkk], -1)
        bot = np.concatenate([-hxx, -hxk], -1)
        dJ = np.concatenate([top, bot], -2) @ J
    return ak, -ax, dpsi, dX, dXi, dJ


def integrate_flow(sym: Symbol, start: PhasePoint, s: float, t: float, steps: int,
                   full_jacobian: bool = False) -> FlowState:
    """Integrate the Hamilton flow of ``sym`` from time ``s`` to ``t``.

    Parameters
    ----------
    sym : Symbol
        Real symbol.
    start : PhasePoint
        Starting point(s); ``x`` and ``xi`` may be batched ``(..., d)``.
    s, t : float
        Initial and final time (``t < s`` integrates backwards).
    steps : int
        Number of RK4 steps.
    full_jacobian : bool
        Also integrate the full ``2d x 2d`` Jacobian of the flow map.

    Examples
    --------
    >>> from parametrix_lab.symbols import model_symbol
    >>> st = integrate_flow(model_symbol("schrodinger"), PhasePoint(0, [0.0], [1.0]), 0, 0.5, 8)
    >>> round(float(st.x[0]), 12), round(float(st.psi), 12)
    (1.0, 0.5)
    """
    if not sym.is_real:
        raise ValueError("Hamilton flow requires a real symbol")
    if steps < 1:
        raise ValueError("steps must be >= 1")
    x = np.array(start.x, dtype=float)
    xi = np.array(start.xi, dtype=float)
    d = x.shape[-1]
    batch = np.broadcast_shapes(x.shape[:-1], xi.shape[:-1])
    x = np.broadcast_to(x, batch + (d,)).copy()
    xi = np.broadcast_to(xi, batch + (d,)).copy()
    psi = np.zeros(batch)
    X = np.zeros(batch + (d, d))
    Xi = np.broadcast_to(np.eye(d), batch + (d, d)).copy()
    J = np.broadcast_to(np.eye(2 * d), batch + (2 * d, 2 * d)).copy() if full_jacobian else None
    h = (t - s) / steps
    tau = s
    state = [x, xi, psi, X, Xi, J]

    def add(st, k, c):
        return [None if a is None else a + c * b for a, b in zip(st, k)]

    for n in range(steps):
        k1 = _rhs(sym, tau, *state)
        k2 = _rhs(sym, tau + h / 2, *add(state, k1, h / 2))
        k3 = _rhs(sym, tau + h / 2, *add(state, k2, h / 2))
        k4 = _rhs(sym, tau + h, *add(state, k3, h))
        new = []
        for i, a in enumerate(state):
            if a is None:
                new.append(None)
                continue
            new.append(a + (h / 6) * (k1[i] + 2 * k2[i] + 2 * k3[i] + k4[i]))
        if not all(np.all(np.isfinite(a)) for a in new if a is not None):
            raise FlowBlowupError("non-finite flow state", tau)
        state = new
        tau = s + (n + 1) * h
    x, xi, psi, X, Xi, J = state
    return FlowState(t=t, x=x, xi=xi, psi=psi, X=X, Xi=Xi, J=J)


def _omega(d):
    z = np.zeros((d, d))
    i = np.eye(d)
    return np.block([[z, i], [-i, z]])


def flow_jacobian_check(sym: Symbol, start: PhasePoint, s: float, t: float, steps: int,
                        fd_step: float = 1e-5) -> Tuple[float, float]:
    """Symplectic defect of the flow Jacobian and its finite-difference defect.

    Returns
    -------
    symplectic_defect : float
        ``max || J^T Omega J - Omega ||`` over the batch (spectral norm).
    fd_defect : float
        ``max || (X, Xi) - D_xi0 (x^t, xi^t) ||`` with the right side from
        central differences in the initial frequency.
    """
    st = integrate_flow(sym, start, s, t, steps, full_jacobian=True)
    d = st.x.shape[-1]
    om = _omega(d)
    J = st.J
    symp = np.linalg.norm(np.swapaxes(J, -1, -2) @ om @ J - om, ord=2, axis=(-2, -1))
    xi0 = np.broadcast_to(start.xi, st.xi.shape)
    x0 = np.broadcast_to(start.x, st.x.shape)
    scale = np.maximum(1.0, np.max(np.abs(xi0)))
    h = fd_step * scale
    cols_x, cols_k = [], []
    for i in range(d):
        e = np.zeros(d)
        e[i] = h
        p = integrate_flow(sym, PhasePoint(s, x0, xi0 + e), s, t, steps)
        m = integrate_flow(sym, PhasePoint(s, x0, xi0 - e), s, t, steps)
        cols_x.append((p.x - m.x) / (2 * h))
        cols_k.append((p.xi - m.xi) / (2 * h))
    fdX = np.stack(cols_x, -1)
    fdXi = np.stack(cols_k, -1)
    fd = np.maximum(np.linalg.norm(st.X - fdX, ord=2, axis=(-2, -1)),
                    np.linalg.norm(st.Xi - fdXi, ord=2, axis=(-2, -1)))
    return float(np.max(symp)), float(np.max(fd))


def rescale_symbol(sym: Symbol, t0: float, lam: float) -> Symbol:
    """Symbol in the rescaled units of the dispersive estimate.

    With ``sigma = sqrt(t0 / lam)`` the new symbol is
    ``a~(T, X, Xi) = t0 * a(t0 T, sigma X, Xi / sigma)``, so that time is
    measured in units of ``t0`` and space in units of ``sigma``.  The
    frequency scale of the result is ``mu = sqrt(t0 * lam)``.
    """
    sigma = np.sqrt(t0 / lam)
    ev = sym.evaluator

    def evaluator(t, x, xi, alpha, beta):
        x = np.asarray(x, float)
        xi = np.asarray(xi, float)
        fac = t0 * sigma ** (sum(alpha) - sum(beta))
        return fac * ev(t0 * np.asarray(t), sigma * x, xi / sigma, alpha, beta)

    def jet_fn(t, x, xi):
        a, ax, ak, hxx, hkx, hkk = sym.jet2(t0 * np.asarray(t), sigma * x, xi / sigma)
        return (t0 * a, t0 * sigma * ax, t0 / sigma * ak, t0 * sigma ** 2 * hxx, t0 * hkx,
                t0 / sigma ** 2 * hkk)

    return sym.with_evaluator(evaluator, lam=float(np.sqrt(t0 * lam)),
                              name=f"rescaled({sym.name})", jet_fn=jet_fn)


def linearization_drift(sym: Symbol, start: PhasePoint, t0: float, lam: float,
                        steps: int = 256) -> float:
    """``|| X(1) - a~_xixi(0, x, xi) ||`` for the rescaled symbol.

    ``sym`` is given in its original units; ``start`` is a point in the
    rescaled coordinates.  For symbols quadratic in ``xi`` with constant
    coefficients the drift vanishes exactly.
    """
    rs = rescale_symbol(sym, t0, lam)
    st = integrate_flow(rs, PhasePoint(0.0, start.x, start.xi), 0.0, 1.0, steps)
    h0 = rs.hess_xixi(0.0, start.x, start.xi)
    return float(np.max(np.linalg.norm(st.X - h0, ord=2, axis=(-2, -1))))
