"""Phase-space symbols, derivative oracles and assumption checkers.

A :class:`Symbol` wraps a function ``a(t, x, xi)`` together with an evaluator
for its mixed derivatives ``d_x^alpha d_xi^beta a``.  Model symbols are built
from sympy expressions, so their derivatives are exact; arbitrary callables
fall back to fourth-order central differences.

Arrays follow one convention throughout: ``x`` and ``xi`` have shape
``(..., d)`` and every evaluation broadcasts over the leading axes.
"""
from __future__ import annotations

import csv
import io
import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
import sympy as sp

MultiIndex = Tuple[int, ...]

__all__ = [
    "OrderExceededError",
    "PrincipalTypeError",
    "PhasePoint",
    "Symbol",
    "CutoffSymbol",
    "AssumptionEntry",
    "AssumptionReport",
    "eval_symbol",
    "model_symbol",
    "symbol_from_expression",
    "symbol_from_function",
    "multi_indices",
    "check_symbol_class",
    "poisson_bracket",
    "curvature_minor",
    "find_characteristic_point",
    "project_to_intersection",
    "check_assumptions",
    "smoothstep",
]


class OrderExceededError(ValueError):
    """Requested derivative order is above what the evaluator supports."""


class PrincipalTypeError(ValueError):
    """Gradient of a symbol degenerates where a nonzero gradient is needed."""


@dataclass(frozen=True)
class PhasePoint:
    """Point ``(t, x, xi)`` in time and phase space.

    ``x`` and ``xi`` may carry leading batch axes; the last axis is the
    spatial dimension.
    """

    t: float
    x: np.ndarray
    xi: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        xi = np.asarray(self.xi, dtype=float)
        if x.ndim == 0:
            x = x.reshape(1)
        if xi.ndim == 0:
            xi = xi.reshape(1)
        if x.shape[-1] != xi.shape[-1]:
            raise ValueError("x and xi must share the last (dimension) axis")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(xi)) and np.isfinite(self.t)):
            raise ValueError("PhasePoint entries must be finite")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "xi", xi)

    @property
    def d(self) -> int:
        return self.x.shape[-1]


def multi_indices(d: int, order: int) -> List[MultiIndex]:
    """All multi-indices in ``d`` variables with total degree ``<= order``."""
    out = []
    for total in range(order + 1):
        for combo in itertools.combinations_with_replacement(range(d), total):
            idx = [0] * d
            for c in combo:
                idx[c] += 1
            out.append(tuple(idx))
    return out


def smoothstep(u):
    """C-infinity step: 0 for ``u <= 0``, 1 for ``u >= 1``."""
    u = np.clip(np.asarray(u, dtype=float), 0.0, 1.0)
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        f0 = np.where(u > 0, np.exp(-1.0 / np.where(u > 0, u, 1.0)), 0.0)
        f1 = np.where(u < 1, np.exp(-1.0 / np.where(u < 1, 1.0 - u, 1.0)), 0.0)
    return f0 / (f0 + f1)


@dataclass(frozen=True)
class Symbol:
    """A symbol ``a(t, x, xi)`` with a derivative evaluator.

    Parameters
    ----------
    d : int
        Spatial dimension.
    lam : float
        Frequency scale.
    j : int
        Class order in the ``S_lambda^j`` hierarchy.
    k_order : float
        Power of ``lam`` in the symbol size.
    evaluator : callable
        ``evaluator(t, x, xi, alpha, beta)`` returning the derivative array.
    analytic_derivs : bool
        True when derivatives are closed form.
    max_order : int
        Largest supported ``|alpha| + |beta|``.
    weyl_form : str or None
        ``"multiplier"`` for x-independent symbols, ``"isotropic_quadratic"``
        for ``a0(x) + g(x)|xi|^2``; used by the Weyl quantizer.
    """

    d: int
    lam: float
    evaluator: Callable = field(repr=False, compare=False)
    j: int = 2
    k_order: float = 1.0
    analytic_derivs: bool = True
    max_order: int = 4
    name: str = "symbol"
    is_real: bool = True
    weyl_form: Optional[str] = None
    params: Tuple = ()
    jet_fn: Optional[Callable] = field(default=None, repr=False, compare=False)

    def deriv(self, t, x, xi, alpha: Sequence[int] = (), beta: Sequence[int] = ()):
        alpha = _normalize_index(alpha, self.d)
        beta = _normalize_index(beta, self.d)
        if sum(alpha) + sum(beta) > self.max_order:
            raise OrderExceededError(
                f"order {sum(alpha) + sum(beta)} exceeds supported {self.max_order}"
            )
        x = np.asarray(x, dtype=float)
        xi = np.asarray(xi, dtype=float)
        shape = np.broadcast_shapes(x.shape[:-1], xi.shape[:-1])
        val = self.evaluator(t, x, xi, alpha, beta)
        val = np.broadcast_to(np.asarray(val), shape)
        return np.array(val, dtype=float if self.is_real else complex)

    def __call__(self, t, x, xi):
        return self.deriv(t, x, xi)

    # convenience accessors -------------------------------------------------
    def grad_xi(self, t, x, xi):
        return np.stack([self.deriv(t, x, xi, beta=_unit(i, self.d)) for i in range(self.d)], -1)

    def grad_x(self, t, x, xi):
        return np.stack([self.deriv(t, x, xi, alpha=_unit(i, self.d)) for i in range(self.d)], -1)

    def _hess(self, t, x, xi, first: str, second: str):
        d = self.d
        rows = []
        for i in range(d):
            row = []
            for k in range(d):
                a = [0] * d
                b = [0] * d
                (a if first == "x" else b)[i] += 1
                (a if second == "x" else b)[k] += 1
                row.append(self.deriv(t, x, xi, alpha=a, beta=b))
            rows.append(np.stack(row, -1))
        return np.stack(rows, -2)

    def hess_xixi(self, t, x, xi):
        return self._hess(t, x, xi, "xi", "xi")

    def hess_xx(self, t, x, xi):
        return self._hess(t, x, xi, "x", "x")

    def hess_xix(self, t, x, xi):
        """Matrix with entries ``d_xi_i d_x_k a``."""
        return self._hess(t, x, xi, "xi", "x")

    def hess_full(self, t, x, xi):
        """Full Hessian in the joint variable ``(x, xi)``."""
        hxx = self.hess_xx(t, x, xi)
        hxk = np.swapaxes(self.hess_xix(t, x, xi), -1, -2)
        hkk = self.hess_xixi(t, x, xi)
        top = np.concatenate([hxx, hxk], -1)
        bot = np.concatenate([np.swapaxes(hxk, -1, -2), hkk], -1)
        return np.concatenate([top, bot], -2)

    def jet2(self, t, x, xi):
        """``(a, a_x, a_xi, a_xx, a_xix, a_xixi)`` in one call.

        Symbols built from expressions evaluate all second-order data with a
        single compiled function; others fall back to :meth:`deriv`.
        """
        if self.jet_fn is not None:
            x = np.asarray(x, dtype=float)
            xi = np.asarray(xi, dtype=float)
            return self.jet_fn(t, x, xi)
        return (self(t, x, xi), self.grad_x(t, x, xi), self.grad_xi(t, x, xi),
                self.hess_xx(t, x, xi), self.hess_xix(t, x, xi), self.hess_xixi(t, x, xi))

    def with_evaluator(self, evaluator, **changes) -> "Symbol":
        kw = dict(
            d=self.d, lam=self.lam, evaluator=evaluator, j=self.j, k_order=self.k_order,
            analytic_derivs=self.analytic_derivs, max_order=self.max_order, name=self.name,
            is_real=self.is_real, weyl_form=self.weyl_form, params=self.params,
        )
        # a new evaluator invalidates the compiled jet
        kw.update(changes)
        return Symbol(**kw)

    def scaled(self, c: float) -> "Symbol":
        """Return ``c * a``."""
        ev = self.evaluator
        return self.with_evaluator(lambda t, x, xi, a, b: c * ev(t, x, xi, a, b),
                                   name=f"{c}*{self.name}")

    def fd_deriv(self, t, x, xi, alpha=(), beta=()):
        """Finite-difference derivative built on the order-zero evaluator."""
        base = lambda tt, xx, kk: self.evaluator(tt, xx, kk, (0,) * self.d, (0,) * self.d)
        return _fd_derivative(base, t, np.asarray(x, float), np.asarray(xi, float),
                              _normalize_index(alpha, self.d), _normalize_index(beta, self.d),
                              self.lam)


def _normalize_index(idx, d) -> MultiIndex:
    idx = tuple(int(i) for i in idx)
    if len(idx) == 0:
        return (0,) * d
    if len(idx) != d or min(idx) < 0:
        raise ValueError(f"multi-index {idx} incompatible with dimension {d}")
    return idx


def _unit(i, d) -> MultiIndex:
    e = [0] * d
    e[i] = 1
    return tuple(e)


def eval_symbol(sym: Symbol, p: PhasePoint, alpha=(), beta=()):
    """Evaluate ``d_x^alpha d_xi^beta a`` at a phase point."""
    val = sym.deriv(p.t, p.x, p.xi, alpha, beta)
    if not np.all(np.isfinite(val)):
        raise FloatingPointError("non-finite symbol value")
    return val[()] if val.ndim == 0 else val


# ---------------------------------------------------------------------------
# construction
# ---------------------------------------------------------------------------

def symbol_from_expression(expr, t_sym, x_syms, xi_syms, lam: float, **kwargs) -> Symbol:
    """Build a symbol with exact derivatives from a sympy expression."""
    x_syms = tuple(x_syms)
    xi_syms = tuple(xi_syms)
    d = len(x_syms)
    args = (t_sym,) + x_syms + xi_syms
    cache: Dict[Tuple[MultiIndex, MultiIndex], Callable] = {}
    is_real = kwargs.pop("is_real", None)
    if is_real is None:
        is_real = not expr.has(sp.I)

    def evaluator(t, x, xi, alpha, beta):
        key = (alpha, beta)
        fn = cache.get(key)
        if fn is None:
            e = expr
            for var, n in zip(x_syms + xi_syms, alpha + beta):
                if n:
                    e = sp.diff(e, var, n)
            fn = sp.lambdify(args, e, "numpy")
            cache[key] = fn
        x = np.asarray(x, dtype=float)
        xi = np.asarray(xi, dtype=float)
        with np.errstate(all="ignore"):
            return fn(t, *(x[..., i] for i in range(d)), *(xi[..., i] for i in range(d)))

    jet_cache = []

    def jet_fn(t, x, xi):
        if not jet_cache:
            grads_x = [sp.diff(expr, v) for v in x_syms]
            grads_k = [sp.diff(expr, v) for v in xi_syms]
            hxx = [[sp.diff(g, v) for v in x_syms] for g in grads_x]
            hkx = [[sp.diff(g, v) for v in x_syms] for g in grads_k]
            hkk = [[sp.diff(g, v) for v in xi_syms] for g in grads_k]
            flat = [expr] + grads_x + grads_k + sum(hxx, []) + sum(hkx, []) + sum(hkk, [])
            jet_cache.append(sp.lambdify(args, flat, "numpy"))
        shape = np.broadcast_shapes(x.shape[:-1], xi.shape[:-1])
        with np.errstate(all="ignore"):
            vals = jet_cache[0](t, *(x[..., i] for i in range(d)), *(xi[..., i] for i in range(d)))
        dt = float if is_real else complex
        vals = [np.broadcast_to(np.asarray(v, dtype=dt), shape) for v in vals]
        a = vals[0]
        gx = np.stack(vals[1:1 + d], -1)
        gk = np.stack(vals[1 + d:1 + 2 * d], -1)
        off = 1 + 2 * d
        mats = []
        for m in range(3):
            block = vals[off + m * d * d: off + (m + 1) * d * d]
            mats.append(np.stack(block, -1).reshape(shape + (d, d)))
        return (a, gx, gk) + tuple(mats)

    return Symbol(d=d, lam=float(lam), evaluator=evaluator, analytic_derivs=True,
                  is_real=is_real, jet_fn=jet_fn, **kwargs)


def _fd_step(order: int, x, xi, lam) -> np.ndarray:
    # Step grows with the derivative order so nested stencils stay above roundoff.
    base = {1: 1e-4, 2: 1e-3, 3: 5e-3, 4: 1e-2}.get(order, 2e-2)
    scale = np.maximum(1.0, np.maximum(np.max(np.abs(x)), np.max(np.abs(xi)) / lam))
    return base * scale


_FD4 = (np.array([-2, -1, 1, 2]), np.array([1.0, -8.0, 8.0, -1.0]) / 12.0)


def _fd_derivative(base, t, x, xi, alpha, beta, lam):
    """Nested fourth-order central differences for ``d_x^alpha d_xi^beta``."""
    d = x.shape[-1]
    dirs = []
    for i, n in enumerate(alpha):
        dirs += [("x", i)] * n
    for i, n in enumerate(beta):
        dirs += [("xi", i)] * n
    if not dirs:
        return base(t, x, xi)
    order = len(dirs)
    h = _fd_step(order, x, xi, lam)
    h_xi = h * lam

    def rec(xx, kk, k):
        if k == len(dirs):
            return base(t, xx, kk)
        kind, i = dirs[k]
        step = h if kind == "x" else h_xi
        acc = 0.0
        for s, w in zip(*_FD4):
            if kind == "x":
                x2 = np.array(xx, copy=True)
                x2[..., i] += s * step
                acc = acc + w * rec(x2, kk, k + 1)
            else:
                k2 = np.array(kk, copy=True)
                k2[..., i] += s * step
                acc = acc + w * rec(xx, k2, k + 1)
        return acc / step

    return rec(x, xi, 0)


def symbol_from_function(fn: Callable, d: int, lam: float, **kwargs) -> Symbol:
    """Wrap ``fn(t, x, xi)`` with finite-difference derivatives."""

    def evaluator(t, x, xi, alpha, beta):
        return _fd_derivative(fn, t, np.asarray(x, float), np.asarray(xi, float), alpha, beta, lam)

    kwargs.setdefault("is_real", True)
    return Symbol(d=d, lam=float(lam), evaluator=evaluator, analytic_derivs=False, **kwargs)


def _coords(d):
    # no real=True: sqrt(xi**2) must not collapse to Abs, whose derivative is singular
    t = sp.Symbol("t")
    xs = sp.symbols(f"x0:{d}")
    ks = sp.symbols(f"xi0:{d}")
    return t, xs, ks


def _sym_smoothstep(u):
    f0 = sp.exp(-1 / u)
    f1 = sp.exp(-1 / (1 - u))
    return f0 / (f0 + f1)


def model_symbol(name: str, d: int = 1, lam: float = 16.0, normalization: str = "physical",
                 **params) -> Symbol:
    """Construct a symbol from the model library.

    Parameters
    ----------
    name : str
        One of ``schrodinger``, ``half_wave``, ``degenerate``,
        ``variable_metric``, ``zero``, ``constant``, ``linear``, ``sphere``,
        ``drift``, ``flat``, ``paraboloid``, ``bump``.
    normalization : {"physical", "paper"}
        ``"paper"`` divides quadratic symbols by ``lam`` so they have size
        ``lam`` at frequency ``lam``.

    Examples
    --------
    >>> a = model_symbol("schrodinger", d=1)
    >>> float(a(0.0, [0.0], [2.0]))
    4.0
    """
    t, xs, ks = _coords(d)
    r2 = sum(k ** 2 for k in ks)
    scale = sp.Integer(1) / sp.Float(lam) if normalization == "paper" else sp.Integer(1)
    weyl = None
    k_order = 1.0
    j = 2
    if name == "schrodinger":
        expr = scale * r2
        weyl = "isotropic_quadratic"
        k_order = 1.0 if normalization == "paper" else 2.0
    elif name == "variable_metric":
        eps = params.get("eps", 0.1)
        if abs(eps) > 0.2 + 1e-12:
            raise ValueError("variable metric requires |eps| <= 0.2")
        kx = sp.Float(params.get("wavenumber", 1.0))
        expr = scale * (1 + eps * sp.sin(kx * xs[0])) * r2
        weyl = "isotropic_quadratic"
        k_order = 1.0 if normalization == "paper" else 2.0
    elif name == "half_wave":
        r0 = params.get("radius", 0.1 * lam)
        r = sp.sqrt(r2)
        cap = (r2 + r0 ** 2) / (2 * r0)
        w = _sym_smoothstep((r - r0 / 2) / (r0 / 2))
        expr = sp.Piecewise((cap, r <= r0 / 2), (r, r >= r0), (w * r + (1 - w) * cap, True))
        weyl = "multiplier"
    elif name == "degenerate":
        k = params.get("k", 1)
        expr = scale * sum(ks[i] ** 2 for i in range(d - k))
        weyl = "multiplier"
        k_order = 1.0 if normalization == "paper" else 2.0
    elif name == "zero":
        expr = sp.Integer(0)
        weyl = "isotropic_quadratic"
    elif name == "constant":
        expr = sp.Float(params.get("c", 1.0))
        weyl = "isotropic_quadratic"
    elif name == "linear":
        v = params.get("v", [1.0] * d)
        expr = sum(sp.Float(vi) * k for vi, k in zip(v, ks))
        weyl = "multiplier"
    elif name == "sphere":
        expr = r2 - sp.Float(lam) ** 2
        weyl = "multiplier"
        k_order = 2.0
    elif name == "drift":
        expr = sp.Float(lam) * ks[params.get("axis", 0)]
        weyl = "multiplier"
        k_order = 2.0
    elif name == "flat":
        expr = ks[0]
        weyl = "multiplier"
    elif name == "paraboloid":
        expr = ks[0] - sum(k ** 2 for k in ks[1:])
        weyl = "multiplier"
    elif name == "bump":
        expr = sp.Float(lam) * sp.exp(-r2 / sp.Float(lam) ** 2)
        weyl = "multiplier"
    else:
        raise KeyError(f"unknown model symbol {name!r}")
    if not (set(xs) | {t}) & expr.free_symbols:
        weyl = "multiplier"
    return symbol_from_expression(
        expr, t, xs, ks, lam, name=name, weyl_form=weyl, k_order=k_order, j=j,
        params=tuple(sorted(params.items())) + (("normalization", normalization),),
    )


# ---------------------------------------------------------------------------
# cutoffs
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CutoffSymbol:
    """Tensor-product smooth cutoff ``chi(x, xi) = chi1(x) chi2(xi)``.

    ``chi1`` is a radial bump equal to 1 on ``|x - x0| <= rx/2`` and vanishing
    for ``|x - x0| >= rx``.  ``chi2`` is the analogous bump around ``xi0`` with
    radius ``rxi``; with ``xi_inner > 0`` it becomes an annulus
    around the origin, equal to 1 for ``xi_inner <= |xi| <= rxi/2`` and
    vanishing below ``xi_inner/2``.
    """

    d: int
    x0: Tuple[float, ...] = ()
    rx: float = 1.0
    xi0: Tuple[float, ...] = ()
    rxi: float = 1.0
    xi_inner: float = 0.0

    def __post_init__(self):
        if not self.x0:
            object.__setattr__(self, "x0", (0.0,) * self.d)
        if not self.xi0:
            object.__setattr__(self, "xi0", (0.0,) * self.d)
        if self.rx <= 0 or self.rxi <= 0 or self.xi_inner < 0 or self.xi_inner >= self.rxi:
            raise ValueError("invalid cutoff radii")

    @staticmethod
    def _bump(r):
        # 1 on [0, 1/2], 0 on [1, inf)
        return 1.0 - smoothstep(2.0 * np.asarray(r) - 1.0)

    def chi_x(self, x):
        x = np.asarray(x, float)
        r = np.linalg.norm(x - np.asarray(self.x0), axis=-1) / self.rx
        return self._bump(r)

    def chi_xi(self, xi):
        xi = np.asarray(xi, float)
        if self.xi_inner > 0:
            r = np.linalg.norm(xi, axis=-1)
            outer = self._bump(r / self.rxi)
            # 0 below xi_inner/2, 1 above xi_inner
            inner = smoothstep(2.0 * r / self.xi_inner - 1.0)
            return outer * inner
        r = np.linalg.norm(xi - np.asarray(self.xi0), axis=-1) / self.rxi
        return self._bump(r)

    def __call__(self, x, xi):
        return self.chi_x(x) * self.chi_xi(xi)

    def as_symbol(self, lam: float) -> Symbol:
        fn = lambda t, x, xi: self(x, xi)
        return symbol_from_function(fn, self.d, lam, k_order=0.0, j=0, name="cutoff")


# ---------------------------------------------------------------------------
# symbol class check
# ---------------------------------------------------------------------------

def check_symbol_class(sym: Symbol, j: int, sample_set: Sequence[PhasePoint],
                       max_order: int = 4) -> Dict[Tuple[MultiIndex, MultiIndex], float]:
    """Measure the constants ``c_{alpha,beta}`` of the class ``lam^k S^j``.

    Each derivative is divided by ``lam^k_order`` times the class weight
    ``lam^{-|beta|}`` (``|alpha| <= j``) or ``lam^{(|alpha|-j)/2-|beta|}``
    (``|alpha| >= j``), and the sup over samples is returned.
    """
    if not sample_set:
        raise ValueError("sample_set must be nonempty")
    lam = sym.lam
    t = np.array([p.t for p in sample_set])
    x = np.stack([np.atleast_1d(p.x) for p in sample_set])
    xi = np.stack([np.atleast_1d(p.xi) for p in sample_set])
    out = {}
    d = sym.d
    for total in range(max_order + 1):
        for na in range(total + 1):
            for alpha in multi_indices(d, na):
                if sum(alpha) != na:
                    continue
                for beta in multi_indices(d, total - na):
                    if sum(beta) != total - na:
                        continue
                    vals = np.abs(np.asarray(sym.deriv(t, x, xi, alpha, beta)))
                    a, b = na, total - na
                    if a <= j:
                        w = lam ** (-b)
                    else:
                        w = lam ** ((a - j) / 2 - b)
                    out[(alpha, beta)] = float(np.max(vals)) / (w * lam ** sym.k_order)
    return out


# ---------------------------------------------------------------------------
# geometry on characteristic sets
# ---------------------------------------------------------------------------

def poisson_bracket(f: Symbol, g: Symbol, t, x, xi):
    """``{f, g} = f_xi . g_x - f_x . g_xi``."""
    return np.sum(f.grad_xi(t, x, xi) * g.grad_x(t, x, xi)
                  - f.grad_x(t, x, xi) * g.grad_xi(t, x, xi), axis=-1)


def _as_list(sym) -> List[Symbol]:
    return list(sym) if isinstance(sym, (list, tuple)) else [sym]


def _tangent_basis(grads: np.ndarray, tol: float) -> np.ndarray:
    """Orthonormal basis (columns) of the complement of the gradient span."""
    n = grads.shape[1]
    m = grads.shape[0]
    u, s, vt = np.linalg.svd(grads, full_matrices=True)
    if s.size < m or np.min(s) < tol:
        raise PrincipalTypeError("degenerate xi-gradient on the characteristic set")
    return vt[m:].T.reshape(n, n - m)


def curvature_minor(sym, p: PhasePoint, normal=None, size: Optional[int] = None,
                    tol: float = 1e-6, check_on_set: bool = True,
                    basis_rotation: Optional[np.ndarray] = None) -> float:
    """Best minor of the second fundamental form along a normal direction.

    Parameters
    ----------
    sym : Symbol or list of Symbol
        Defining functions of the characteristic set in xi (at fixed ``t, x``).
    p : PhasePoint
        Point on the set.
    normal : array_like, optional
        Normal covector ``nu`` in the span of the gradients.  Defaults to the
        unit gradient of the first symbol.
    size : int, optional
        Minor size; defaults to the tangent dimension.
    basis_rotation : ndarray, optional
        Orthogonal matrix applied to the tangent basis (invariance checks).

    Returns
    -------
    float
        Product of the ``size`` largest absolute eigenvalues of the shape
        operator restricted to the tangent space.  For a symmetric form this
        equals the maximum of ``|det|`` over all ``size``-dimensional
        orthonormal frames, so it dominates every coordinate minor.
    """
    syms = _as_list(sym)
    lam = syms[0].lam
    t, x, xi = p.t, p.x, p.xi
    if check_on_set:
        for s in syms:
            v = abs(complex(np.asarray(s(t, x, xi))))
            if v > tol * max(lam, 1.0) * max(1.0, lam ** (s.k_order - 1)):
                raise ValueError(f"point is off the characteristic set (|p|={v:.3e})")
    grads = np.stack([np.real(s.grad_xi(t, x, xi)) for s in syms])
    n = grads.shape[1]
    basis = _tangent_basis(grads, tol)
    if basis_rotation is not None:
        basis = basis @ basis_rotation
    if normal is None:
        normal = grads[0] / np.linalg.norm(grads[0])
    normal = np.asarray(normal, float)
    coef, *_ = np.linalg.lstsq(grads.T, normal, rcond=None)
    q = sum(c * np.real(s.hess_xixi(t, x, xi)) for c, s in zip(coef, syms))
    qt = basis.T @ q @ basis
    if size is None:
        size = qt.shape[0]
    if size == 0:
        return 1.0
    if size > qt.shape[0]:
        raise ValueError("minor size exceeds tangent dimension")
    ev = np.sort(np.abs(np.linalg.eigvalsh(0.5 * (qt + qt.T))))[::-1]
    return float(np.prod(ev[:size]))


def find_characteristic_point(sym: Symbol, t, x, direction, r_max: float,
                              tol: Optional[float] = None, n_scan: int = 64):
    """Root of ``sym`` along the ray ``r * direction``, ``0 < r <= r_max``.

    Scans for a sign change then bisects until ``|p| <= tol`` (default
    ``1e-8 * lam``).  Returns ``None`` when the ray has no root.
    """
    lam = sym.lam
    tol = 1e-8 * lam if tol is None else tol
    direction = np.asarray(direction, float)
    direction = direction / np.linalg.norm(direction)
    x = np.asarray(x, float)
    f = lambda r: float(np.real(sym(t, x, r * direction)))
    rs = np.linspace(0.0, r_max, n_scan + 1)
    vals = np.array([f(r) for r in rs])
    idx = np.nonzero(np.sign(vals[:-1]) * np.sign(vals[1:]) <= 0)[0]
    if idx.size == 0:
        return None
    lo, hi = rs[idx[0]], rs[idx[0] + 1]
    flo = vals[idx[0]]
    if flo == 0:
        return lo * direction
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if abs(fm) <= tol:
            return mid * direction
        if np.sign(fm) == np.sign(flo):
            lo, flo = mid, fm
        else:
            hi = mid
    return 0.5 * (lo + hi) * direction


def project_to_intersection(syms: Sequence[Symbol], t, x, xi0, tol=None, max_iter=50):
    """Gauss-Newton projection of ``xi0`` onto ``{s = 0 for s in syms}``."""
    xi = np.asarray(xi0, float).copy()
    lam = syms[0].lam
    tol = 1e-8 * lam if tol is None else tol
    for _ in range(max_iter):
        vals = np.array([float(np.real(s(t, x, xi))) for s in syms])
        if np.max(np.abs(vals)) <= tol:
            return xi
        g = np.stack([np.real(s.grad_xi(t, x, xi)) for s in syms])
        step, *_ = np.linalg.lstsq(g, vals, rcond=None)
        xi = xi - step
        if not np.all(np.isfinite(xi)):
            return None
    return None


@dataclass
class AssumptionEntry:
    assumption: str
    constant: float
    threshold: float
    passed: bool
    worst_point: Optional[Tuple[float, ...]]


@dataclass
class AssumptionReport:
    """One entry per requested assumption plus skipped-ray bookkeeping."""

    entries: List[AssumptionEntry]
    skipped_rays: int = 0

    def __getitem__(self, label) -> AssumptionEntry:
        for e in self.entries:
            if e.assumption == label:
                return e
        raise KeyError(label)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["assumption", "constant", "threshold", "pass", "worst_point"])
        for e in self.entries:
            wp = "" if e.worst_point is None else " ".join(f"{v:.6g}" for v in e.worst_point)
            w.writerow([e.assumption, f"{e.constant:.6e}", f"{e.threshold:.6g}", e.passed, wp])
        return buf.getvalue()


ALL_ASSUMPTIONS = ("A1", "A1'", "A2", "A2'", "A3", "A3'", "A4", "A4'", "A5'", "A6'", "B1", "B2")
_LOWER = {"A2", "A2'", "A3", "A3'", "A4", "A4'", "A5'", "A6'"}
_SMALL = {"B1", "B2"}
DEFAULT_THRESHOLDS = {"lower": 0.1, "upper": 10.0, "small": 0.1}


def _wedge(a, b):
    return math.sqrt(max(float(a @ a) * float(b @ b) - float(a @ b) ** 2, 0.0))


def _best_normal_minor(syms, p, size, n_angles=64):
    """Maximize the curvature minor over unit normals in the gradient span."""
    grads = np.stack([np.real(s.grad_xi(p.t, p.x, p.xi)) for s in syms])
    q, _ = np.linalg.qr(grads.T)
    best = 0.0
    for th in np.linspace(0, np.pi, n_angles, endpoint=False):
        nu = math.cos(th) * q[:, 0] + math.sin(th) * q[:, 1]
        best = max(best, curvature_minor(syms, p, nu, size, check_on_set=False))
    return best


def check_assumptions(p_re: Symbol, p_im: Optional[Symbol], k: int, sample_set,
                      assumptions: Iterable[str] = None, axis: int = 0,
                      thresholds: Optional[Dict] = None, r_max: Optional[float] = None,
                      ) -> AssumptionReport:
    """Numerically evaluate the geometric assumptions on sampled points.

    Parameters
    ----------
    p_re, p_im : Symbol
        Real and imaginary parts of the principal symbol (``p_im`` may be
        None when only real-part assumptions are requested).
    k : int
        Curvature deficiency.
    sample_set : sequence of PhasePoint
        Seeds.  Their ``xi`` gives the ray direction used to locate points
        on the characteristic sets; unprojected seeds are used for A1.
    axis : int
        Index of the distinguished coordinate ``xi_1``.
    thresholds : dict, optional
        Keys ``lower`` (for "gtrsim 1"), ``upper`` ("lesssim 1") and
        ``small`` ("ll 1"), or per-assumption overrides.
    """
    th = dict(DEFAULT_THRESHOLDS)
    th.update(thresholds or {})
    if assumptions is None:
        assumptions = ALL_ASSUMPTIONS if p_im is not None else ("A2", "A3", "A4")
    n = p_re.d
    lam = p_re.lam
    r_max = 2.0 * lam if r_max is None else r_max

    # points on Sigma^re and on Sigma = Sigma^re cap Sigma^im
    sig_re: List[PhasePoint] = []
    sig: List[PhasePoint] = []
    skipped = 0
    for s in sample_set:
        root = find_characteristic_point(p_re, s.t, s.x, s.xi, r_max)
        if root is None:
            skipped += 1
            continue
        sig_re.append(PhasePoint(s.t, s.x, root))
        if p_im is not None:
            xi = project_to_intersection([p_re, p_im], s.t, s.x, root)
            if xi is None:
                skipped += 1
            else:
                sig.append(PhasePoint(s.t, s.x, xi))

    def grad(sym, p):
        # gradients are measured in the lam * S normalization
        return np.real(sym.grad_xi(p.t, p.x, p.xi)) / lam ** (sym.k_order - 1)

    def pt(p):
        return tuple(np.concatenate([[p.t], p.x, p.xi]).tolist())

    entries = []
    for label in assumptions:
        kind = "lower" if label in _LOWER else ("small" if label in _SMALL else "upper")
        thr = th.get(label, th[kind])
        vals: List[Tuple[float, PhasePoint]] = []
        if label == "A1":
            for s in sample_set:
                b = abs(float(poisson_bracket(p_re, p_im, s.t, s.x, s.xi)))
                den = abs(float(p_re(s.t, s.x, s.xi))) + abs(float(p_im(s.t, s.x, s.xi))) + 1.0
                vals.append((b / den, s))
        elif label == "A1'":
            vals = [(abs(float(poisson_bracket(p_re, p_im, p.t, p.x, p.xi))), p) for p in sig]
        elif label == "A2":
            vals = [(float(np.linalg.norm(grad(p_re, p))), p) for p in sig_re]
        elif label in ("A2'", "B1"):
            vals = [(_wedge(grad(p_re, p), grad(p_im, p)), p) for p in sig]
        elif label == "A3":
            size = n - 1 - k
            vals = [(curvature_minor(p_re, p, None, size, check_on_set=False)
                     / lam ** (k - n + 1), p) for p in sig_re]
        elif label == "A3'":
            size = n - 2 - k
            vals = [(_best_normal_minor([p_re, p_im], p, size) / lam ** (k - n + 2), p)
                    for p in sig]
        elif label == "A4":
            vals = [(abs(grad(p_re, p)[axis]), p) for p in sig_re]
        elif label == "A4'":
            vals = [(abs(complex(grad(p_re, p)[axis] + 1j * grad(p_im, p)[axis])), p)
                    for p in sig]
        elif label == "A5'":
            size = n - 2 - k
            for p in sig:
                g = np.stack([grad(p_re, p), grad(p_im, p)])
                # combination with vanishing xi_1 component
                c = np.array([g[1, axis], -g[0, axis]])
                nu = c @ g
                if np.linalg.norm(nu) < 1e-14:
                    vals.append((0.0, p))
                    continue
                nu /= np.linalg.norm(nu)
                vals.append((curvature_minor([p_re, p_im], p, nu, size, check_on_set=False)
                             / lam ** (k - n + 2), p))
        elif label == "A6'":
            size = n - 2 - k
            for p in sig:
                g = np.stack([grad(p_re, p), grad(p_im, p)])
                basis = _tangent_basis(g, 1e-12)
                h = np.real(p_re.hess_xixi(p.t, p.x, p.xi)) / (np.linalg.norm(g[0]) * lam ** (p_re.k_order - 1))
                ev = np.sort(np.abs(np.linalg.eigvalsh(basis.T @ h @ basis)))[::-1]
                vals.append((float(np.prod(ev[:size])) / lam ** (k - n + 2), p))
        elif label == "B2":
            for p in sig:
                e = [0] * n
                e[axis] = 1
                d1 = abs(float(p_im.deriv(p.t, p.x, p.xi, beta=e)))
                d2 = 0.0
                for i in range(n):
                    ee = list(e)
                    ee[i] += 1
                    d2 = max(d2, abs(float(p_im.deriv(p.t, p.x, p.xi, beta=ee))))
                vals.append((max(d1, lam * d2) / lam ** (p_im.k_order - 1), p))
        else:
            raise KeyError(f"unknown assumption {label!r}")

        if not vals:
            entries.append(AssumptionEntry(label, float("nan"), thr, False, None))
            continue
        if kind == "lower":
            const, worst = min(vals, key=lambda v: v[0])
            ok = const >= thr
        else:
            const, worst = max(vals, key=lambda v: v[0])
            ok = const <= thr
        entries.append(AssumptionEntry(label, float(const), float(thr), bool(ok), pt(worst)))
    return AssumptionReport(entries, skipped)
