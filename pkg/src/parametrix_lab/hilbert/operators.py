"""Hermitian operator paths, their evolutions and commutator constants.

Conventions: ``D_t = -i d/dt``, so ``(D_t + A) u = 0`` means ``u' = -i A(t) u``
and ``[D_t + A, B] = -i B'(t) + [A, B]``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Dict, Optional, Sequence, Tuple

import numpy as np

__all__ = [
    "UnitarityError",
    "OperatorPath",
    "evolve",
    "functional_calculus",
    "spectral",
    "commutator_constant",
    "bdiff_constant",
    "random_hermitian",
    "random_unitary",
    "commuting_path",
    "constant_path",
    "near_commuting_path",
    "make_path",
    "PATH_GENERATORS",
]

HERMITIAN_TOL = 1e-12


class UnitarityError(RuntimeError):
    """Evolution lost more unitarity than allowed (too few steps)."""


def _check_hermitian(M: np.ndarray, name: str = "matrix", tol: float = HERMITIAN_TOL):
    M = np.asarray(M)
    scale = max(1.0, float(np.max(np.abs(M)))) if M.size else 1.0
    if np.max(np.abs(M - np.conj(np.swapaxes(M, -1, -2)))) > tol * scale:
        raise ValueError(f"{name} is not Hermitian")


def spectral(M: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Eigenvalues and eigenvectors of a Hermitian matrix."""
    _check_hermitian(M)
    return np.linalg.eigh(M)


def functional_calculus(M: np.ndarray, g: Callable[[np.ndarray], np.ndarray]) -> np.ndarray:
    """``g(M) = U g(Lambda) U^*`` for Hermitian ``M``.

    Examples
    --------
    >>> functional_calculus(np.diag([1.0, 3.0]), lambda x: (x < 2).astype(float)).real
    array([[1., 0.],
           [0., 0.]])
    """
    w, V = spectral(M)
    gw = np.asarray(g(w))
    if gw.shape == ():
        gw = np.full_like(w, gw, dtype=complex)
    return (V * gw) @ V.conj().T


@dataclass
class OperatorPath:
    """Hermitian paths ``A(t), B(t)`` on ``[0, 1]``.

    Between grid times the matrices are interpolated linearly unless the
    analytic callables ``A_fn``/``B_fn`` are supplied.  The propagator
    ``U(t) = S(t, 0)`` is precomputed with RK4 on a uniform grid of
    ``fine_steps`` cells and reused for every ``S(t, s) = U(t) U(s)^*``.
    """

    times: np.ndarray
    A: np.ndarray
    B: np.ndarray
    A_fn: Optional[Callable[[float], np.ndarray]] = None
    B_fn: Optional[Callable[[float], np.ndarray]] = None
    dB_fn: Optional[Callable[[float], np.ndarray]] = None
    fine_steps: int = 4096
    name: str = "path"
    _U: Optional[np.ndarray] = field(default=None, repr=False)
    _eig_cache: Dict[float, Tuple[np.ndarray, np.ndarray]] = field(default_factory=dict, repr=False)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.A = np.asarray(self.A, dtype=complex)
        self.B = np.asarray(self.B, dtype=complex)
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("time grid must be strictly increasing")
        if self.times[0] < 0 or self.times[-1] > 1:
            raise ValueError("time grid must lie in [0, 1]")
        if self.A.shape != self.B.shape or self.A.shape[0] != len(self.times):
            raise ValueError("A and B must have one matrix per grid time")
        _check_hermitian(self.A, "A")
        _check_hermitian(self.B, "B")

    @property
    def m(self) -> int:
        return self.A.shape[-1]

    def _interp(self, M, t):
        t = float(t)
        k = int(np.clip(np.searchsorted(self.times, t) - 1, 0, len(self.times) - 2))
        t0, t1 = self.times[k], self.times[k + 1]
        w = (t - t0) / (t1 - t0)
        return (1 - w) * M[k] + w * M[k + 1]

    def A_at(self, t: float) -> np.ndarray:
        return np.asarray(self.A_fn(t), complex) if self.A_fn else self._interp(self.A, t)

    def B_at(self, t: float) -> np.ndarray:
        return np.asarray(self.B_fn(t), complex) if self.B_fn else self._interp(self.B, t)

    def dB_at(self, t: float, fd_step: float = 1e-5) -> np.ndarray:
        """``B'(t)``: analytic when available, else centered differences."""
        if self.dB_fn is not None:
            return np.asarray(self.dB_fn(t), complex)
        lo, hi = max(0.0, t - fd_step), min(1.0, t + fd_step)
        return (self.B_at(hi) - self.B_at(lo)) / (hi - lo)

    def eig_B(self, t: float):
        key = round(float(t), 14)
        if key not in self._eig_cache:
            self._eig_cache[key] = spectral(self.B_at(t))
        return self._eig_cache[key]

    # propagator ---------------------------------------------------------
    def _rk4_matrix(self, U, t, h, steps):
        for _ in range(steps):
            k1 = -1j * self.A_at(t) @ U
            k2 = -1j * self.A_at(t + h / 2) @ (U + 0.5 * h * k1)
            k3 = -1j * self.A_at(t + h / 2) @ (U + 0.5 * h * k2)
            k4 = -1j * self.A_at(t + h) @ (U + h * k3)
            U = U + (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4)
            t += h
        return U

    def _build_U(self):
        n = self.fine_steps
        h = 1.0 / n
        U = np.empty((n + 1, self.m, self.m), dtype=complex)
        U[0] = np.eye(self.m)
        for k in range(n):
            U[k + 1] = self._rk4_matrix(U[k], k * h, h, 1)
        self._U = U

    def U(self, t: float) -> np.ndarray:
        """``S(t, 0)``."""
        if self._U is None:
            self._build_U()
        n = self.fine_steps
        x = float(t) * n
        k = int(round(x))
        if abs(x - k) < 1e-9:
            return self._U[k]
        k = int(np.floor(x))
        dt = float(t) - k / n
        return self._rk4_matrix(self._U[k], k / n, dt / 4, 4)

    def S(self, t: float, s: float) -> np.ndarray:
        """``S(t, s) = U(t) U(s)^*``."""
        return self.U(t) @ self.U(s).conj().T

    def scaled(self, delta: float) -> "OperatorPath":
        """The path ``(A, delta B)`` sharing the cached propagator."""
        B_fn = (lambda t: delta * self.B_fn(t)) if self.B_fn else None
        dB_fn = (lambda t: delta * self.dB_fn(t)) if self.dB_fn else None
        out = OperatorPath(self.times, self.A, delta * self.B, self.A_fn, B_fn, dB_fn,
                           self.fine_steps, f"{self.name}*{delta:g}")
        if self._U is None:
            self._build_U()
        out._U = self._U
        return out


def evolve(path: OperatorPath, s: float, t: float, v: np.ndarray, steps: int = None,
           tol: float = 1e-6) -> np.ndarray:
    """``S(t, s) v`` by fixed-step RK4 on ``u' = -i A(t) u``.

    Raises
    ------
    UnitarityError
        If ``| ||S v|| - ||v|| | > tol ||v||``.
    """
    if not (0 <= s <= 1 and 0 <= t <= 1):
        raise ValueError("s and t must lie in [0, 1]")
    v = np.asarray(v, dtype=complex)
    if t == s:
        return v.copy()
    if steps is None:
        steps = max(1, int(np.ceil(abs(t - s) * path.fine_steps)))
    h = (t - s) / steps
    u = v.reshape(path.m, -1)
    u = path._rk4_matrix(u, s, h, steps)
    u = u.reshape(v.shape)
    n0 = np.linalg.norm(v)
    if n0 and abs(np.linalg.norm(u) - n0) > tol * n0:
        raise UnitarityError(f"unitarity defect {abs(np.linalg.norm(u) / n0 - 1):.2e} "
                             f"with {steps} steps")
    return u


def _worst_direction(D: np.ndarray, B: np.ndarray) -> np.ndarray:
    """``(I + B^2)^{-1/2} v`` with ``v`` the top right singular vector of
    ``D (I + B^2)^{-1/2}``; its ratio is within ``sqrt 2`` of the supremum."""
    w, V = spectral(B)
    R = (V / np.sqrt(1 + w ** 2)) @ V.conj().T
    _, _, vh = np.linalg.svd(D @ R)
    return R @ vh[0].conj()


def _ratio(D, B, samples):
    num = np.linalg.norm(D @ samples, axis=0)
    den = np.linalg.norm(B @ samples, axis=0) + np.linalg.norm(samples, axis=0)
    return float(np.max(num / den))


def _samples_with_worst(samples, D, B):
    worst = _worst_direction(D, B)[:, None]
    if samples is None:
        return worst
    return np.concatenate([np.asarray(samples, complex).reshape(B.shape[0], -1), worst], 1)


def commutator_constant(path: OperatorPath, samples: np.ndarray = None,
                        times: Sequence[float] = None, fd_step: float = 1e-5) -> float:
    """``sup ||(-i B' + [A, B]) u|| / (||B u|| + ||u||)`` over samples and times.

    ``samples`` are columns; the maximizing direction of the generalized
    ratio is always added.
    """
    if times is None:
        times = path.times
    best = 0.0
    for t in times:
        A, B = path.A_at(t), path.B_at(t)
        C = -1j * path.dB_at(t, fd_step) + (A @ B - B @ A)
        if not np.any(C):
            continue
        best = max(best, _ratio(C, B, _samples_with_worst(samples, C, B)))
    return best


def bdiff_constant(path: OperatorPath, s: float, t: float, samples: np.ndarray = None) -> float:
    """``sup ||(B(t) S(t,s) - S(t,s) B(s)) u|| / (|t-s| (||B(s) u|| + ||u||))``."""
    if t == s:
        raise ValueError("bdiff constant needs t != s")
    S = path.S(t, s)
    Bs = path.B_at(s)
    D = path.B_at(t) @ S - S @ Bs
    if not np.any(np.abs(D) > 1e-14):
        return 0.0
    return _ratio(D, Bs, _samples_with_worst(samples, D, Bs)) / abs(t - s)


# ---------------------------------------------------------------------------
# model generators
# ---------------------------------------------------------------------------

def random_unitary(m: int, rng: np.random.Generator) -> np.ndarray:
    Z = rng.normal(size=(m, m)) + 1j * rng.normal(size=(m, m))
    Q, R = np.linalg.qr(Z)
    return Q * (np.diag(R) / np.abs(np.diag(R)))


def random_hermitian(m: int, rng: np.random.Generator, norm: float = 1.0) -> np.ndarray:
    Z = rng.normal(size=(m, m)) + 1j * rng.normal(size=(m, m))
    H = 0.5 * (Z + Z.conj().T)
    return norm * H / np.linalg.norm(H, 2)


def _grid(n_steps):
    return np.linspace(0.0, 1.0, n_steps + 1)


def constant_path(A: np.ndarray, B: np.ndarray, n_steps: int = 256, fine_steps: int = 4096,
                  name: str = "constant") -> OperatorPath:
    """Time-independent path."""
    A = np.asarray(A, complex)
    B = np.asarray(B, complex)
    t = _grid(n_steps)
    z = np.zeros_like(B)
    return OperatorPath(t, np.broadcast_to(A, (len(t),) + A.shape),
                        np.broadcast_to(B, (len(t),) + B.shape),
                        A_fn=lambda _: A, B_fn=lambda _: B, dB_fn=lambda _: z,
                        fine_steps=fine_steps, name=name)


def commuting_path(m: int = 16, seed: int = 0, n_steps: int = 256, fine_steps: int = 4096,
                   b_min: float = 4.0, b_max: float = 24.0) -> OperatorPath:
    """Constant commuting ``A``, ``B``; ``|spec B|`` in ``[b_min, b_max]``."""
    rng = np.random.default_rng(seed)
    Q = random_unitary(m, rng)
    a = rng.uniform(-2, 2, m)
    b = rng.choice([-1, 1], m) * np.exp(rng.uniform(np.log(b_min), np.log(b_max), m))
    A = (Q * a) @ Q.conj().T
    B = (Q * b) @ Q.conj().T
    return constant_path(0.5 * (A + A.conj().T), 0.5 * (B + B.conj().T), n_steps, fine_steps,
                         name=f"commuting(seed={seed})")


def near_commuting_path(m: int = 16, seed: int = 0, n_steps: int = 256, fine_steps: int = 4096,
                        comm_bound: float = 0.1, b_max: float = 24.0) -> OperatorPath:
    """Smooth path with ``max_t ||[A(t), B(t)]|| <= comm_bound``.

    ``A = Q diag(a0 + sin(2 pi t) a1) Q^* + eps E_A`` and
    ``B = Q diag(b (1 + t/4)) Q^* + eps t E_B`` with random Hermitian
    ``E_A``, ``E_B`` of unit norm; ``eps`` is shrunk until the bound holds.
    """
    rng = np.random.default_rng(seed)
    Q = random_unitary(m, rng)
    a0 = rng.uniform(-2, 2, m)
    a1 = rng.uniform(-1, 1, m)
    b = rng.choice([-1, 1], m) * np.exp(rng.uniform(0.0, np.log(b_max), m))
    EA = random_hermitian(m, rng)
    EB = random_hermitian(m, rng)
    Qh = Q.conj().T

    def diagA(t):
        return (Q * (a0 + np.sin(2 * np.pi * t) * a1)) @ Qh

    def diagB(t):
        return (Q * (b * (1 + 0.25 * t))) @ Qh

    t_grid = _grid(n_steps)
    probe = np.linspace(0, 1, 17)
    eps = 1.0
    for _ in range(60):
        worst = max(np.linalg.norm((diagA(t) + eps * EA) @ (diagB(t) + eps * t * EB)
                                   - (diagB(t) + eps * t * EB) @ (diagA(t) + eps * EA), 2)
                    for t in probe)
        if worst <= 0.9 * comm_bound:
            break
        eps *= 0.5

    def A_fn(t):
        M = diagA(t) + eps * EA
        return 0.5 * (M + M.conj().T)

    def B_fn(t):
        M = diagB(t) + eps * t * EB
        return 0.5 * (M + M.conj().T)

    def dB_fn(t):
        M = (Q * (0.25 * b)) @ Qh + eps * EB
        return 0.5 * (M + M.conj().T)

    A = np.stack([A_fn(t) for t in t_grid])
    B = np.stack([B_fn(t) for t in t_grid])
    return OperatorPath(t_grid, A, B, A_fn, B_fn, dB_fn, fine_steps,
                        name=f"near_commuting(seed={seed}, eps={eps:.3g})")


PATH_GENERATORS = {
    "commuting": commuting_path,
    "near_commuting": near_commuting_path,
}


def make_path(generator: str, **kwargs) -> OperatorPath:
    """Build a model path from a generator name and keyword parameters."""
    try:
        gen = PATH_GENERATORS[generator]
    except KeyError:
        raise KeyError(f"unknown path generator {generator!r}") from None
    return gen(**kwargs)
