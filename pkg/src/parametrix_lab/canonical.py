"""Formal canonical form ``e (xi_1 + i p_im) = xi_1 + a + i b`` at a frozen point.

Series live in the two formal variables ``(xi_1, q_0)`` with coefficients
frozen to numbers.  Coefficients live in one of three rings: ``"float"``
(complex128), ``"mp"`` (mpmath complex numbers at ``MP_DPS`` digits) or
``"exact"`` (sympy Gaussian rationals).  The recursion divides by
``1 + i q_1`` at every level, so coefficients grow like ``|1 + i q_1|^{-n}``
and double precision loses absolute accuracy accordingly.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, List, Sequence, Tuple

import mpmath
import numpy as np
import sympy as sp

__all__ = [
    "TruncatedSeries2",
    "series_arith",
    "ssn_recursion",
    "residual_order",
    "canonical_table",
    "NormalizationError",
    "elliptic_normalize_real",
    "freeze",
]


MP_DPS = 32
RINGS = ("float", "mp", "exact")


def _zero(ring):
    if ring == "exact":
        return sp.Integer(0)
    if ring == "mp":
        return mpmath.mpc(0)
    return 0j


def _convert(v, ring):
    if ring == "exact":
        return _to_exact(v)
    if ring == "mp":
        if isinstance(v, sp.Basic):
            v = complex(v)
        return mpmath.mpc(v)
    return complex(v)


def _imag_unit(ring):
    return {"exact": sp.I, "mp": mpmath.mpc(0, 1), "float": 1j}[ring]


def _clean(x):
    if isinstance(x, sp.Basic):
        return sp.expand(sp.radsimp(x))
    return x


@dataclass
class TruncatedSeries2:
    """``sum_{k + l <= N} c[k, l] xi_1^k q_0^l``.

    Examples
    --------
    >>> one = TruncatedSeries2.constant(1, 2)
    >>> x = TruncatedSeries2.xi1(2)
    >>> ((one + x) * (one - x)).coeffs[2, 0]
    (-1+0j)
    """

    coeffs: np.ndarray
    N: int
    ring: str = "float"

    def __post_init__(self):
        if self.ring not in RINGS:
            raise ValueError(f"ring must be one of {RINGS}")
        c = np.asarray(self.coeffs, dtype=complex if self.ring == "float" else object)
        if c.shape != (self.N + 1, self.N + 1):
            raise ValueError("coefficient array must be (N+1, N+1)")
        k, l = np.indices(c.shape)
        c = c.copy()
        c[k + l > self.N] = _zero(self.ring)
        if self.ring == "float" and not np.all(np.isfinite(c)):
            raise ValueError("coefficients must be finite")
        self.coeffs = c

    @classmethod
    def zeros(cls, N: int, ring: str = "float") -> "TruncatedSeries2":
        z = _zero(ring)
        c = np.empty((N + 1, N + 1), dtype=complex if ring == "float" else object)
        c[...] = z
        return cls(c, N, ring)

    @classmethod
    def constant(cls, value, N: int, ring: str = "float") -> "TruncatedSeries2":
        s = cls.zeros(N, ring)
        s.coeffs[0, 0] = _convert(value, ring)
        return s

    @classmethod
    def monomial(cls, k: int, l: int, N: int, value=1, ring: str = "float") -> "TruncatedSeries2":
        s = cls.zeros(N, ring)
        if k + l <= N:
            s.coeffs[k, l] = _convert(value, ring)
        return s

    @classmethod
    def xi1(cls, N: int, ring: str = "float") -> "TruncatedSeries2":
        return cls.monomial(1, 0, N, ring=ring)

    @classmethod
    def q0(cls, N: int, ring: str = "float") -> "TruncatedSeries2":
        return cls.monomial(0, 1, N, ring=ring)

    def _check(self, other):
        if not isinstance(other, TruncatedSeries2):
            return TruncatedSeries2.constant(other, self.N, self.ring)
        if other.N != self.N:
            raise ValueError("degree caps differ")
        if other.ring != self.ring:
            raise ValueError("coefficient rings differ")
        return other

    def __add__(self, other):
        other = self._check(other)
        return TruncatedSeries2(self.coeffs + other.coeffs, self.N, self.ring)

    __radd__ = __add__

    def __neg__(self):
        return TruncatedSeries2(-self.coeffs, self.N, self.ring)

    def __sub__(self, other):
        return self + (-self._check(other))

    def __rsub__(self, other):
        return self._check(other) - self

    def __mul__(self, other):
        if not isinstance(other, TruncatedSeries2):
            return TruncatedSeries2(self.coeffs * _convert(other, self.ring), self.N, self.ring)
        other = self._check(other)
        N = self.N
        out = TruncatedSeries2.zeros(N, self.ring).coeffs
        a, b = self.coeffs, other.coeffs
        for k1 in range(N + 1):
            for l1 in range(N + 1 - k1):
                if a[k1, l1] == 0:
                    continue
                for k2 in range(N + 1 - k1 - l1):
                    for l2 in range(N + 1 - k1 - l1 - k2):
                        out[k1 + k2, l1 + l2] = out[k1 + k2, l1 + l2] + a[k1, l1] * b[k2, l2]
        return TruncatedSeries2(out, N, self.ring)

    __rmul__ = __mul__

    def truncate(self, N: int) -> "TruncatedSeries2":
        if N > self.N:
            raise ValueError("can only truncate to a lower degree")
        return TruncatedSeries2(self.coeffs[:N + 1, :N + 1], N, self.ring)

    def degree_part(self, n: int) -> List:
        """Coefficients ``c[j, n-j]`` of total degree ``n``."""
        return [self.coeffs[j, n - j] for j in range(n + 1)]

    def max_abs(self, max_degree: int = None) -> float:
        max_degree = self.N if max_degree is None else max_degree
        k, l = np.indices(self.coeffs.shape)
        vals = self.coeffs[k + l <= max_degree]
        return float(max(abs(complex(v)) for v in vals)) if vals.size else 0.0


def series_arith(x: TruncatedSeries2, y: TruncatedSeries2, op: str) -> TruncatedSeries2:
    """``x + y`` or ``x * y`` with truncation at the common degree cap."""
    if op == "add":
        return x + y
    if op == "mul":
        return x * y
    raise ValueError(f"unknown op {op!r}")


def _to_exact(z):
    if isinstance(z, sp.Basic):
        return z
    z = complex(z)
    return sp.nsimplify(z.real, rational=True) + sp.I * sp.nsimplify(z.imag, rational=True)


def ssn_recursion(q: Sequence, N: int, ring: str = "float"
                  ) -> Tuple[TruncatedSeries2, TruncatedSeries2, TruncatedSeries2]:
    """Coefficients of ``e^{N-1}``, ``a^N`` and ``b^N``.

    ``q[k]`` is the Taylor coefficient of ``p_im`` in ``xi_1`` (``q[0]`` only
    marks the formal variable ``q_0``); ``q`` must hold ``q_1, ..., q_{N+1}``.
    Level ``n`` solves, homogeneously in degree ``n``,

        sum_{k+l=n-1} e_{k,l} xi_1^k q_0^l (xi_1 (1 + i q_1) + i q_0)
            = c_n q_0^n + T_n - i sum_{k+l<n-1} e_{k,l} q_{n-k-l} xi_1^{n-l} q_0^l,

    with ``T_1 = xi_1`` and ``T_n = 0`` otherwise, by synthetic division in
    ``xi_1``; ``a_n = Re c_n`` and ``b_n = Im c_n``.

    Returns
    -------
    e, a, b : TruncatedSeries2
        ``e`` has degree cap ``N`` but only terms up to degree ``N - 1``;
        ``a`` and ``b`` contain only ``q_0^l`` terms, ``1 <= l <= N``.

    Examples
    --------
    >>> e, a, b = ssn_recursion([0, 1, 0], 1)
    >>> complex(e.coeffs[0, 0]), a.coeffs[0, 1].real, b.coeffs[0, 1].real
    ((0.5-0.5j), 0.5, 0.5)
    """
    if N < 1:
        raise ValueError("N must be >= 1")
    if ring not in RINGS:
        raise ValueError(f"ring must be one of {RINGS}")
    q = list(q)
    if len(q) < N + 2:
        raise ValueError(f"need q_0..q_{N + 1}")
    with mpmath.workdps(MP_DPS):
        q = [_convert(v, ring) for v in q]
        I = _imag_unit(ring)
        c1 = 1 + I * q[1]
        if c1 == 0:
            raise ZeroDivisionError("1 + i q_1 = 0: division blocked")
        e = TruncatedSeries2.zeros(N, ring)
        a = TruncatedSeries2.zeros(N, ring)
        b = TruncatedSeries2.zeros(N, ring)
        for n in range(1, N + 1):
            # r[j]: coefficient of xi_1^j q_0^{n-j} on the right, without c_n
            r = [_zero(ring) for _ in range(n + 1)]
            if n == 1:
                r[1] += 1
            for k in range(n - 1):
                for l in range(n - 1 - k):
                    r[n - l] -= I * e.coeffs[k, l] * q[n - k - l]
            s = [None] * n
            s[n - 1] = _clean(r[n] / c1)
            for j in range(n - 1, 0, -1):
                s[j - 1] = _clean((r[j] - I * s[j]) / c1)
            cn = _clean(I * s[0] - r[0])
            for j in range(n):
                e.coeffs[j, n - 1 - j] = s[j]
            if ring == "exact":
                re, im = sp.re(cn), sp.im(cn)
            else:
                re, im = cn.real, cn.imag
            a.coeffs[0, n] = _convert(re, ring)
            b.coeffs[0, n] = _convert(im, ring)
    return e, a, b


def residual_order(e: TruncatedSeries2, a: TruncatedSeries2, b: TruncatedSeries2,
                   q: Sequence, N: int) -> float:
    """Largest coefficient of degree ``<= N`` in
    ``e^{N-1} (xi_1 + i p_im) - (xi_1 + a^N + i b^N)``.

    ``p_im = q_0 + sum_{k=1}^{N+1} q_k xi_1^k`` with ``q_0`` the formal
    variable; arithmetic happens in the ring of ``e``.  For exact inputs the
    coefficients are simplified first, so an exact identity returns ``0.0``.
    """
    ring = e.ring
    with mpmath.workdps(MP_DPS):
        I = _imag_unit(ring)
        qq = [_convert(v, ring) for v in q]
        eN = e.truncate(N) if e.N != N else e
        k, l = np.indices(eN.coeffs.shape)
        ec = eN.coeffs.copy()
        ec[k + l > N - 1] = _zero(ring)
        eN = TruncatedSeries2(ec, N, ring)
        p = TruncatedSeries2.q0(N, ring)
        for kk in range(1, min(N, len(qq) - 1) + 1):
            p = p + TruncatedSeries2.monomial(kk, 0, N, qq[kk], ring)
        lhs = eN * (TruncatedSeries2.xi1(N, ring) + p * I)
        rhs = TruncatedSeries2.xi1(N, ring) + a.truncate(N) + b.truncate(N) * I
        res = lhs - rhs
        if ring == "exact":
            vals = [sp.simplify(_clean(v)) for v in res.coeffs.ravel()]
            return float(max(abs(complex(v)) for v in vals))
        return res.max_abs(N)


def canonical_table(e, a, b) -> List[Tuple[str, int, int, complex]]:
    """Rows ``(name, k, l, value)`` for the nonzero coefficients."""
    rows = []
    N = e.N
    for kk in range(N + 1):
        for ll in range(N + 1 - kk):
            if e.coeffs[kk, ll] != 0:
                rows.append(("e", kk, ll, complex(e.coeffs[kk, ll])))
    for name, s in (("a", a), ("b", b)):
        for ll in range(1, N + 1):
            rows.append((name, 0, ll, complex(s.coeffs[0, ll])))
    return rows


# ---------------------------------------------------------------------------
# real elliptic normalization
# ---------------------------------------------------------------------------

class NormalizationError(ValueError):
    """No simple root, several roots, or a vanishing derivative."""


def freeze(sym, x0, xi_rest, t: float = 0.0, axis: int = 0) -> Callable[[np.ndarray], np.ndarray]:
    """``xi_1 -> p(t, x0, xi)`` with the other frequency components fixed."""
    x0 = np.asarray(x0, float)
    xi_rest = np.asarray(xi_rest, float)

    def f(s):
        s = np.asarray(s, float)
        xi = np.insert(np.broadcast_to(xi_rest, s.shape + xi_rest.shape), axis, s, axis=-1)
        return np.real(sym(t, np.broadcast_to(x0, xi.shape), xi))
    return f


def elliptic_normalize_real(p: Callable, grid: np.ndarray, deriv_floor: float = 1e-6,
                            tol: float = 1e-14) -> dict:
    """``e = xi_1 / p`` after moving the root of ``p`` to ``xi_1 = 0``.

    Parameters
    ----------
    p : callable
        Real frozen symbol ``xi_1 -> p(xi_1)``.
    grid : ndarray
        Increasing ``xi_1`` samples bracketing one simple root.

    Returns
    -------
    dict
        ``root``, ``eta`` (shifted grid), ``e`` and ``defect = sup |e p - eta|``.
    """
    grid = np.asarray(grid, float)
    v = np.asarray(p(grid), float)
    if np.any(~np.isfinite(v)):
        raise NormalizationError("p is not finite on the grid")
    sign = np.sign(v)
    exact = np.flatnonzero(v == 0)
    changes = np.flatnonzero(sign[:-1] * sign[1:] < 0)
    n_roots = len(changes) + len(exact)
    if n_roots == 0:
        raise NormalizationError("no root of p on the grid")
    if n_roots > 1:
        raise NormalizationError(f"{n_roots} roots of p on the grid")
    if len(exact):
        root = float(grid[exact[0]])
    else:
        i = int(changes[0])
        lo, hi = grid[i], grid[i + 1]
        flo = float(p(np.array(lo)))
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            fm = float(p(np.array(mid)))
            if fm == 0 or hi - lo < tol * max(1.0, abs(mid)):
                break
            if np.sign(fm) == np.sign(flo):
                lo, flo = mid, fm
            else:
                hi = mid
        root = 0.5 * (lo + hi)
    h = 1e-6 * max(1.0, abs(root))
    dp = (float(p(np.array(root + h))) - float(p(np.array(root - h)))) / (2 * h)
    if abs(dp) < deriv_floor:
        raise NormalizationError("d p / d xi_1 vanishes at the root")
    eta = grid - root
    pv = np.asarray(p(eta + root), float)
    with np.errstate(divide="ignore", invalid="ignore"):
        e = np.where(np.abs(eta) > 1e-12 * max(1.0, abs(root)), eta / pv, 1.0 / dp)
    defect = float(np.max(np.abs(e * pv - eta)))
    return {"root": root, "eta": eta, "e": e, "defect": defect}
