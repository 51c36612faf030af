"""Simple and dyadic parametrices for ``D_t + A + i B`` on an operator path.

Both act as ``(H f)(t) = i * int H(t, s) f(s) ds``.  With this factor the
commuting constant case solves ``(D_t + A + i B) H f = f`` exactly.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Union

import numpy as np

from ..estimates import ScanResult, exponent_fit
from ..symbols import smoothstep
from .operators import OperatorPath, bdiff_constant

__all__ = [
    "RangeError",
    "DyadicCalculus",
    "DeltaForcing",
    "l1_atom",
    "two_variation_atom",
    "simple_kernel",
    "dyadic_kernel",
    "simple_parametrix_apply",
    "dyadic_parametrix_apply",
    "atom_residual",
    "simple_parametrix_norms",
    "almost_orthogonality_constants",
    "ort_halving_ratio",
    "delta_scan",
]


class RangeError(ValueError):
    """An eigenvalue lies outside the range covered by the dyadic partition."""


def _theta(x):
    """0 for ``x <= 1``, 1 for ``x >= 2``, smooth in ``log2 x``."""
    x = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore"):
        lg = np.where(x > 0, np.log2(np.where(x > 0, x, 1.0)), -np.inf)
    return smoothstep(lg)


@dataclass(frozen=True)
class DyadicCalculus:
    """Square partition ``sum_j kappa_j^2 = 1`` on ``|xi| <= 2^{J+1}``.

    ``kappa_0^2 = 1 - theta(|xi|/2)`` and
    ``kappa_j^2 = theta(|xi|/2^j) - theta(|xi|/2^{j+1})`` for ``j >= 1``, where
    ``theta`` steps from 0 to 1 on ``[1, 2]``; hence
    ``supp kappa_j in {2^j <= max(|xi|, 1) <= 2^{j+2}}``.  The signed parts
    are ``kappa_j^+ = kappa_j 1_{xi > 0}``, ``kappa_j^- = kappa_j 1_{xi < 0}``
    for ``j >= 1`` and ``kappa_0^+ = kappa_0``, ``kappa_0^- = 0``.
    """

    J: int

    @classmethod
    def for_bound(cls, radius: float) -> "DyadicCalculus":
        J = max(1, int(np.ceil(np.log2(max(radius, 1.0)))) - 1)
        while 2.0 ** (J + 1) < radius:
            J += 1
        return cls(J)

    @property
    def covered(self) -> float:
        return 2.0 ** (self.J + 1)

    def kappa(self, j: int, x) -> np.ndarray:
        a = np.abs(np.asarray(x, dtype=float))
        if j == 0:
            sq = 1.0 - _theta(a / 2)
        else:
            sq = _theta(a / 2.0 ** j) - _theta(a / 2.0 ** (j + 1))
        return np.sqrt(np.clip(sq, 0.0, None))

    def kappa_pm(self, j: int, sign: int, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        k = self.kappa(j, x)
        if j == 0:
            return k if sign > 0 else np.zeros_like(k)
        return k * (x > 0) if sign > 0 else k * (x < 0)

    def partition_defect(self, n: int = 20001) -> float:
        """``max |sum_j kappa_j^2 - 1|`` on a dense grid of the covered range."""
        x = np.linspace(-self.covered, self.covered, n)
        return float(np.max(np.abs(sum(self.kappa(j, x) ** 2 for j in range(self.J + 1)) - 1)))

    def check_range(self, eigenvalues):
        r = float(np.max(np.abs(eigenvalues))) if np.size(eigenvalues) else 0.0
        if r > self.covered:
            raise RangeError(f"spectral radius {r:.3g} exceeds covered range {self.covered:.3g}")


# ---------------------------------------------------------------------------
# forcings
# ---------------------------------------------------------------------------

@dataclass
class DeltaForcing:
    """``f = sum_k g_k delta_{tau_k}``."""

    times: np.ndarray
    vectors: np.ndarray

    def __post_init__(self):
        self.times = np.atleast_1d(np.asarray(self.times, dtype=float))
        self.vectors = np.atleast_2d(np.asarray(self.vectors, dtype=complex))
        if len(self.times) != len(self.vectors):
            raise ValueError("one vector per delta time")


def l1_atom(t0: float, f0: np.ndarray) -> DeltaForcing:
    """``f0 delta_{t0}`` normalized to ``||f0|| = 1``."""
    f0 = np.asarray(f0, complex)
    return DeltaForcing([t0], [f0 / np.linalg.norm(f0)])


def two_variation_atom(path: OperatorPath, times: Sequence[float], fs: np.ndarray) -> DeltaForcing:
    """``sum_j S(t_{j+1}, t_j) f_j delta_{t_{j+1}} - f_j delta_{t_j}`` with
    ``sum ||f_j||^2 = 1``; ``fs`` holds one vector per gap."""
    times = np.asarray(times, float)
    fs = np.asarray(fs, complex)
    if len(fs) != len(times) - 1:
        raise ValueError("need one vector per consecutive pair of times")
    fs = fs / np.sqrt(np.sum(np.abs(fs) ** 2))
    vecs = np.zeros((len(times), path.m), complex)
    for j, f in enumerate(fs):
        vecs[j] -= f
        vecs[j + 1] += path.S(times[j + 1], times[j]) @ f
    return DeltaForcing(times, vecs)


# ---------------------------------------------------------------------------
# kernels
# ---------------------------------------------------------------------------

def simple_kernel(path: OperatorPath, t: float, s: float) -> np.ndarray:
    """``sgn(t-s) S(t,s) 1_{(t-s)B(s)<0} e^{(t-s)B(s)}``.

    The sign makes the backward branch (``t < s``, positive spectrum) solve
    the equation with the same ``i`` normalization as the forward branch.
    """
    if t == s:
        raise ValueError("kernel is discontinuous at t = s")
    w, V = path.eig_B(s)
    dt = t - s
    g = np.where(dt * w < 0, np.exp(dt * w), 0.0)
    return np.sign(dt) * path.S(t, s) @ ((V * g) @ V.conj().T)


def dyadic_kernel(path: OperatorPath, calc: DyadicCalculus, t: float, s: float,
                  delta: float = 1.0) -> np.ndarray:
    """Dyadic parametrix kernel for ``D_t + A + i delta B``.

    ``1_{t>s} sum_j kappa_j^-(dB(t)) S(t,s) kappa_j^-(dB(s)) e^{(t-s) dB(s)}``
    ``- 1_{t<s} sum_j kappa_j^+(dB(t)) S(t,s) kappa_j^+(dB(s)) e^{(t-s) dB(s)}``
    with ``dB = delta B``.
    """
    if t == s:
        raise ValueError("kernel is discontinuous at t = s")
    wt, Vt = path.eig_B(t)
    ws, Vs = path.eig_B(s)
    wt, ws = delta * wt, delta * ws
    calc.check_range(wt)
    calc.check_range(ws)
    sign = -1 if t > s else 1
    S = path.S(t, s)
    left = Vt.conj().T @ S @ Vs
    ex = np.exp((t - s) * ws)
    acc = np.zeros_like(left)
    for j in range(calc.J + 1):
        kt = calc.kappa_pm(j, sign, wt)
        ks = calc.kappa_pm(j, sign, ws)
        if not (np.any(kt) and np.any(ks)):
            continue
        acc += kt[:, None] * left * (ks * ex)[None, :]
    out = Vt @ acc @ Vs.conj().T
    return out if t > s else -out


def _apply(kernel, path: OperatorPath, forcing, times, one_sided):
    times = path.times if times is None else np.asarray(times, float)
    out = np.zeros((len(times), path.m), complex)
    if isinstance(forcing, DeltaForcing):
        for i, t in enumerate(times):
            for tau, g in zip(forcing.times, forcing.vectors):
                if t != tau:
                    out[i] += kernel(t, tau) @ g
                else:
                    # right-continuous convention: the delta has just acted
                    out[i] += one_sided(t, +1) @ g
        return 1j * out
    # grid-sampled forcing: trapezoid rule split at s = t
    f = np.asarray(forcing, complex)
    grid = path.times
    if f.shape != (len(grid), path.m):
        raise ValueError("sampled forcing must have shape (len(path.times), m)")
    for i, t in enumerate(times):
        k = int(np.searchsorted(grid, t))
        if k >= len(grid) or grid[k] != t:
            raise ValueError("evaluation times must be path grid times for sampled forcing")
        for lo, hi, side in ((0, k, +1), (k, len(grid) - 1, -1)):
            if hi == lo:
                continue
            seg = grid[lo:hi + 1]
            w = np.empty(len(seg))
            w[1:-1] = 0.5 * (seg[2:] - seg[:-2])
            w[0] = 0.5 * (seg[1] - seg[0])
            w[-1] = 0.5 * (seg[-1] - seg[-2])
            for n, s in enumerate(seg):
                K = one_sided(t, side) if s == t else kernel(t, s)
                out[i] += w[n] * (K @ f[lo + n])
    return 1j * out


def _simple_one_sided(path):
    def f(t, side):
        # side=+1: limit s -> t^- (t > s); side=-1: limit s -> t^+
        w, V = path.eig_B(t)
        if side > 0:
            return (V * (w < 0)) @ V.conj().T
        return -(V * (w > 0)) @ V.conj().T
    return f


def _dyadic_one_sided(path, calc, delta):
    def f(t, side):
        w, V = path.eig_B(t)
        w = delta * w
        sign = -1 if side > 0 else 1
        g = sum(calc.kappa_pm(j, sign, w) ** 2 for j in range(calc.J + 1))
        M = (V * g) @ V.conj().T
        return M if side > 0 else -M
    return f


def simple_parametrix_apply(path: OperatorPath, forcing: Union[DeltaForcing, np.ndarray],
                            times: Sequence[float] = None) -> np.ndarray:
    """``(H f)(t) = i int H(t,s) f(s) ds`` for the simple parametrix.

    ``forcing`` is either a :class:`DeltaForcing` (evaluated exactly) or an
    array of samples on ``path.times`` (trapezoid rule split at ``s = t``).
    """
    return _apply(lambda t, s: simple_kernel(path, t, s), path, forcing, times,
                  _simple_one_sided(path))


def dyadic_parametrix_apply(path: OperatorPath, calc: DyadicCalculus,
                            forcing: Union[DeltaForcing, np.ndarray],
                            times: Sequence[float] = None, delta: float = 1.0) -> np.ndarray:
    """Dyadic parametrix for ``D_t + A + i delta B`` applied to ``forcing``."""
    return _apply(lambda t, s: dyadic_kernel(path, calc, t, s, delta), path, forcing, times,
                  _dyadic_one_sided(path, calc, delta))


# ---------------------------------------------------------------------------
# residuals and norms
# ---------------------------------------------------------------------------

_FD = np.array([1.0, -8.0, 0.0, 8.0, -1.0]) / 12.0


def _eval_times(path: OperatorPath, n: int, avoid: Sequence[float], h: float) -> np.ndarray:
    """Fine-grid times away from the forcing times and the interval ends."""
    N = path.fine_steps
    cand = np.round(np.linspace(0.02, 0.98, n) * N) / N
    avoid = np.asarray(avoid, float)
    keep = [t for t in cand if np.all(np.abs(t - avoid) > 3 * h)]
    return np.asarray(keep)


def atom_residual(path: OperatorPath, forcing: DeltaForcing, kernel: str = "simple",
                  calc: DyadicCalculus = None, delta: float = 1.0, n_eval: int = 33,
                  fd_cells: int = 2, return_profile: bool = False):
    """``sup_t ||(D_t + A + i delta B) H f (t)||`` away from the delta times.

    ``u = H f`` is evaluated exactly from the kernel and differentiated with a
    fourth order centered stencil of step ``fd_cells / path.fine_steps``.
    For delta forcings the jump of ``u`` at each delta time reproduces
    ``f`` exactly, so this is the full residual ``(D_t + A + i delta B) H f - f``.
    """
    h = fd_cells / path.fine_steps
    ts = _eval_times(path, n_eval, forcing.times, h)
    if kernel == "simple":
        if delta != 1.0:
            path = path.scaled(delta)
            delta = 1.0
        K = lambda t, s: simple_kernel(path, t, s)
    elif kernel == "dyadic":
        K = lambda t, s: dyadic_kernel(path, calc, t, s, delta)
    else:
        raise ValueError(f"unknown kernel {kernel!r}")

    def u_at(t):
        return 1j * sum(K(t, tau) @ g for tau, g in zip(forcing.times, forcing.vectors))

    prof = []
    for t in ts:
        stencil = [u_at(t + k * h) for k in (-2, -1, 0, 1, 2)]
        du = sum(c * v for c, v in zip(_FD, stencil)) / h
        u = stencil[2]
        r = -1j * du + path.A_at(t) @ u + 1j * delta * path.B_at(t) @ u
        prof.append(np.linalg.norm(r))
    prof = np.asarray(prof)
    if return_profile:
        return float(prof.max()), ts, prof
    return float(prof.max())


def simple_parametrix_norms(path: OperatorPath, t: float, s: float,
                            residual: bool = True, fd_cells: int = 2) -> Dict[str, float]:
    """Normalized fixed-time norms of the simple parametrix.

    Returns ``H = ||H||``, ``HB = |t-s| ||H B(s)||``, ``BH = |t-s| ||B(t) H||``,
    ``BHB = |t-s|^2 ||B(t) H B(s)||`` (spectral norms), the error kernel norm
    ``kernel_error = ||(B(t) S - S B(s)) 1_{(t-s)B(s)<0} e^{(t-s)B(s)}||`` and,
    with ``residual=True``, its finite-difference measurement
    ``residual`` on the basis of ``L^1`` atoms ``e_k delta_s``.
    """
    if t == s:
        raise ValueError("norms need t != s")
    H = simple_kernel(path, t, s)
    Bs, Bt = path.B_at(s), path.B_at(t)
    dt = abs(t - s)
    w, V = path.eig_B(s)
    P = (V * np.where((t - s) * w < 0, np.exp((t - s) * w), 0.0)) @ V.conj().T
    S = path.S(t, s)
    out = {
        "H": float(np.linalg.norm(H, 2)),
        "HB": dt * float(np.linalg.norm(H @ Bs, 2)),
        "BH": dt * float(np.linalg.norm(Bt @ H, 2)),
        "BHB": dt ** 2 * float(np.linalg.norm(Bt @ H @ Bs, 2)),
        "kernel_error": float(np.linalg.norm((Bt @ S - S @ Bs) @ P, 2)),
    }
    if residual:
        h = fd_cells / path.fine_steps
        cols = []
        for k in range(path.m):
            e = np.zeros(path.m, complex)
            e[k] = 1.0
            u = [1j * simple_kernel(path, t + j * h, s) @ e for j in (-2, -1, 0, 1, 2)]
            du = sum(c * v for c, v in zip(_FD, u)) / h
            cols.append(-1j * du + path.A_at(t) @ u[2] + 1j * Bt @ u[2])
        out["residual"] = float(np.linalg.norm(np.stack(cols, 1), 2))
    return out


def almost_orthogonality_constants(path: OperatorPath, calc: DyadicCalculus, t: float,
                                   s: float, floor: float = 1e-12) -> Dict[str, float]:
    """Normalized almost-orthogonality constants at ``(t, s)``.

    * ``a``: ``max_j 2^j ||(kappa_j(B(t)) - kappa_j(B(s))) (I + B(s)^2)^{-1/2}|| / |t-s|``
    * ``b``: ``max_{|i-j| >= 3} ||kappa_i(B(t)) kappa_j(B(s))|| / (|t-s| 2^{-|i-j|})``
    * ``c``: ``max_j ||kappa_j(B(t)) - kappa_j(B(s))|| / |t-s|``
    * ``d``: ``max_j 2^{-j} ||B(t) (kappa_j(B(t)) - kappa_j(B(s)))|| / |t-s|``

    Numerators below ``floor`` count as zero.
    """
    dt = abs(t - s)
    if dt == 0:
        raise ValueError("constants need t != s")
    wt, Vt = path.eig_B(t)
    ws, Vs = path.eig_B(s)
    calc.check_range(wt)
    calc.check_range(ws)
    Kt = [(Vt * calc.kappa(j, wt)) @ Vt.conj().T for j in range(calc.J + 1)]
    Ks = [(Vs * calc.kappa(j, ws)) @ Vs.conj().T for j in range(calc.J + 1)]
    R = (Vs / np.sqrt(1 + ws ** 2)) @ Vs.conj().T
    Bt = path.B_at(t)

    def nz(x):
        return x if x > floor else 0.0

    a = b = c = d = 0.0
    for j in range(calc.J + 1):
        D = Kt[j] - Ks[j]
        a = max(a, 2.0 ** j * nz(np.linalg.norm(D @ R, 2)) / dt)
        c = max(c, nz(np.linalg.norm(D, 2)) / dt)
        d = max(d, 2.0 ** -j * nz(np.linalg.norm(Bt @ D, 2)) / dt)
        for i in range(calc.J + 1):
            if abs(i - j) >= 3:
                b = max(b, nz(np.linalg.norm(Kt[i] @ Ks[j], 2)) / (dt * 2.0 ** -abs(i - j)))
    return {"a": a, "b": b, "c": c, "d": d}


def ort_halving_ratio(path: OperatorPath, calc: DyadicCalculus, t: float, s: float,
                      floor: float = 1e-9) -> Dict[str, float]:
    """``max(C(t,s), C(t,s')) / min(...)`` with ``|t - s'| = |t - s|/2``.

    Constants that are zero (below ``floor``) at both separations give 1.
    """
    s2 = t - 0.5 * (t - s)
    c1 = almost_orthogonality_constants(path, calc, t, s)
    c2 = almost_orthogonality_constants(path, calc, t, s2)
    out = {}
    for k in c1:
        x, y = c1[k], c2[k]
        if x <= floor and y <= floor:
            out[k] = 1.0
        elif min(x, y) <= floor:
            out[k] = float("inf")
        else:
            out[k] = max(x, y) / min(x, y)
    return out


def delta_scan(path: OperatorPath, calc: DyadicCalculus, deltas: Sequence[float],
               probes: Sequence[DeltaForcing], n_eval: int = 17,
               floor: float = 1e-8) -> ScanResult:
    """Mapping and residual constants of the ``delta`` parametrix versus ``delta``.

    The mapping constant is ``max ||H_delta f||_{L^inf}`` over probe atoms
    (values on a fine time grid); the residual constant is
    ``max ||(D_t + A + i delta B) H_delta f - f||_{L^inf}``.  The fitted
    slope refers to the mapping constant; the residual exponent is stored in
    ``extra`` (``nan`` when all residuals are below ``floor``).
    """
    base = np.linspace(0.0, 1.0, 129)
    maps, res = [], []
    for dl in deltas:
        m_best = r_best = 0.0
        for f in probes:
            # both one-sided limits at the atom times, where the sup is attained
            ts = np.union1d(base, np.concatenate([f.times, np.nextafter(f.times, -np.inf)]))
            ts = ts[(ts >= 0) & (ts <= 1)]
            u = dyadic_parametrix_apply(path, calc, f, ts, delta=dl)
            m_best = max(m_best, float(np.max(np.linalg.norm(u, axis=1))))
            r_best = max(r_best, atom_residual(path, f, "dyadic", calc, dl, n_eval=n_eval))
        maps.append(m_best)
        res.append(r_best)
    slope, icpt, rms = exponent_fit(list(zip(deltas, maps)))
    if min(res) > floor:
        r_slope = exponent_fit(list(zip(deltas, res)))[0]
    else:
        r_slope = float("nan")
    return ScanResult("delta_scan", path.m, list(map(float, deltas)), maps, slope, icpt, rms,
                      parameter="delta",
                      extra={"residual_slope": r_slope,
                             **{f"residual@{d:g}": r for d, r in zip(deltas, res)}})
