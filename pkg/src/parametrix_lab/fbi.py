"""Discrete FBI transform on a Gaussian phase-space lattice.

Conventions (packet width 1, ``c_d = 2^{-d/2} pi^{-3d/4}``)::

    phi_{x,xi}(y) = c_d exp(i xi.(y - x) - |y - x|^2 / 2)
    T f(x, xi)    = <f, phi_{x,xi}> = c_d int exp(-i xi.(y - x) - |x - y|^2/2) f(y) dy

With these conventions ``T`` is an isometry ``L^2(R^d) -> L^2(R^{2d})``,
``T D_y = D_x T`` and ``T y = x T - (1/i) d_xi T``.

The lattice is a tensor product of one-dimensional lattices of pairs
``(x_j, xi_k)``.  Per axis the transform is a dense matrix ``M`` of shape
``(n_x * n_xi, N)``; the full transform applies these matrices axis by axis,
so the discrete adjoint is exact by construction.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple

import numpy as np

__all__ = [
    "GridSpec",
    "GridFunction",
    "WavePacketFrame",
    "coherent_state",
    "fbi_forward",
    "fbi_adjoint",
    "synthesize_packets",
    "conjugation_error",
    "BoundaryMassWarning",
    "random_band_limited",
    "lattice_norm",
]


class BoundaryMassWarning(UserWarning):
    """Input does not decay at the edge of the grid."""


@dataclass(frozen=True)
class GridSpec:
    """Uniform periodic grid: ``n`` points per axis, spacing ``h``, left ``origin``."""

    n: Tuple[int, ...]
    h: Tuple[float, ...]
    origin: Tuple[float, ...]

    def __post_init__(self):
        n = tuple(int(v) for v in np.atleast_1d(self.n))
        h = tuple(float(v) for v in np.atleast_1d(self.h))
        o = tuple(float(v) for v in np.atleast_1d(self.origin))
        if not (len(n) == len(h) == len(o)):
            raise ValueError("grid spec axes mismatch")
        for v in n:
            if v < 2 or v & (v - 1):
                raise ValueError("grid sizes must be powers of two")
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "h", h)
        object.__setattr__(self, "origin", o)

    @classmethod
    def centered(cls, n, length, d: int = 1) -> "GridSpec":
        """Grid of ``n`` points per axis covering ``[-length/2, length/2)``."""
        n = tuple(np.broadcast_to(np.atleast_1d(n), (d,)).tolist())
        length = np.broadcast_to(np.atleast_1d(length), (d,)).astype(float)
        return cls(n, tuple(length / np.array(n)), tuple(-length / 2))

    @property
    def d(self) -> int:
        return len(self.n)

    @property
    def lengths(self) -> np.ndarray:
        return np.array(self.n) * np.array(self.h)

    @property
    def cell(self) -> float:
        return float(np.prod(self.h))

    def axis(self, i: int) -> np.ndarray:
        return self.origin[i] + self.h[i] * np.arange(self.n[i])

    def mesh(self) -> np.ndarray:
        """Coordinates with shape ``n + (d,)``."""
        return np.stack(np.meshgrid(*[self.axis(i) for i in range(self.d)], indexing="ij"), -1)

    def freq_axis(self, i: int) -> np.ndarray:
        return 2 * np.pi * np.fft.fftfreq(self.n[i], d=self.h[i])

    def freq_mesh(self) -> np.ndarray:
        return np.stack(np.meshgrid(*[self.freq_axis(i) for i in range(self.d)],
                                    indexing="ij"), -1)

    @property
    def nyquist(self) -> np.ndarray:
        return np.pi / np.array(self.h)


@dataclass
class GridFunction:
    """Complex samples of a function on a :class:`GridSpec`."""

    grid: GridSpec
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=complex)
        if v.shape != self.grid.n:
            raise ValueError(f"values shape {v.shape} does not match grid {self.grid.n}")
        if not np.all(np.isfinite(v)):
            raise ValueError("grid function values must be finite")
        self.values = v

    def norm(self) -> float:
        return float(np.sqrt(self.grid.cell * np.sum(np.abs(self.values) ** 2)))

    def inner(self, other: "GridFunction") -> complex:
        """``<self, other>`` (linear in the first slot)."""
        return complex(self.grid.cell * np.sum(self.values * np.conj(other.values)))

    def __add__(self, other):
        return GridFunction(self.grid, self.values + other.values)

    def __sub__(self, other):
        return GridFunction(self.grid, self.values - other.values)

    def __mul__(self, c):
        return GridFunction(self.grid, self.values * c)

    __rmul__ = __mul__

    def fft(self) -> np.ndarray:
        return np.fft.fftn(self.values)

    @classmethod
    def from_fft(cls, grid: GridSpec, spec: np.ndarray) -> "GridFunction":
        return cls(grid, np.fft.ifftn(spec))


def _c1() -> float:
    return 2 ** -0.5 * math.pi ** -0.75


def coherent_state(grid: GridSpec, x0, xi0) -> GridFunction:
    """Samples of ``phi_{x0,xi0}`` on the grid."""
    x0 = np.broadcast_to(np.atleast_1d(np.asarray(x0, float)), (grid.d,))
    xi0 = np.broadcast_to(np.atleast_1d(np.asarray(xi0, float)), (grid.d,))
    vals = np.ones((), dtype=complex)
    for i in range(grid.d):
        y = grid.axis(i) - x0[i]
        f = _c1() * np.exp(1j * xi0[i] * y - 0.5 * y ** 2)
        vals = np.multiply.outer(vals, f)
    return GridFunction(grid, vals)


def _cell_nodes(lo, hi, step):
    """Midpoints of cells of size ``step`` covering ``[lo, hi]``."""
    n = max(1, int(math.ceil((hi - lo) / step - 1e-12)))
    mid = 0.5 * (lo + hi)
    return mid + step * (np.arange(n) - (n - 1) / 2)


@dataclass
class WavePacketFrame:
    """Product lattice of coherent states.

    Parameters
    ----------
    grid : GridSpec
        Grid on which functions live.
    x_box, xi_box : sequence of (lo, hi)
        Phase-space box per axis.  The x-lattice extends ``margin`` packet
        widths beyond ``x_box``.
    dx : sequence of float
        x-lattice spacing per axis.
    density : float
        Product ``dx * dxi`` per axis; must not exceed ``pi / 2``.
    """

    grid: GridSpec
    x_box: Tuple[Tuple[float, float], ...]
    xi_box: Tuple[Tuple[float, float], ...]
    dx: Tuple[float, ...]
    density: float = math.pi / 8
    margin: float = 4.0
    x_nodes: Tuple[np.ndarray, ...] = field(init=False, repr=False)
    xi_nodes: Tuple[np.ndarray, ...] = field(init=False, repr=False)
    _mats: Tuple[np.ndarray, ...] = field(init=False, repr=False)
    _dmats: Optional[Tuple[np.ndarray, ...]] = field(default=None, init=False, repr=False)
    frame_bound: Optional[float] = field(default=None, init=False)

    def __post_init__(self):
        d = self.grid.d
        self.x_box = tuple(tuple(map(float, b)) for b in self.x_box)
        self.xi_box = tuple(tuple(map(float, b)) for b in self.xi_box)
        self.dx = tuple(np.broadcast_to(np.atleast_1d(self.dx), (d,)).astype(float).tolist())
        if len(self.x_box) != d or len(self.xi_box) != d:
            raise ValueError("box dimension mismatch")
        if self.density > 2 * math.pi * 0.25 + 1e-12:
            raise ValueError("lattice too sparse: dx*dxi must be <= pi/2")
        if self.margin < 4:
            raise ValueError("margin must be at least 4 packet widths")
        xs, ks = [], []
        for i in range(d):
            lo, hi = self.x_box[i]
            xs.append(_cell_nodes(lo - self.margin, hi + self.margin, self.dx[i]))
            ks.append(_cell_nodes(self.xi_box[i][0], self.xi_box[i][1], self.dxi[i]))
        self.x_nodes = tuple(xs)
        self.xi_nodes = tuple(ks)
        self._mats = tuple(self._axis_matrix(i) for i in range(d))

    @classmethod
    def covering(cls, grid: GridSpec, xi_box, x_box=None, dx_cells: int = 5,
                 density: float = math.pi / 8, margin: float = 4.0) -> "WavePacketFrame":
        """Frame whose x-spacing is a whole number of grid cells."""
        d = grid.d
        if x_box is None:
            x_box = [(grid.origin[i] + margin, grid.origin[i] + grid.lengths[i] - margin)
                     for i in range(d)]
        xi_box = [tuple(b) for b in np.broadcast_to(np.asarray(xi_box, float), (d, 2))]
        dx = tuple(dx_cells * h for h in grid.h)
        return cls(grid, tuple(x_box), tuple(xi_box), dx, density, margin)

    @property
    def d(self) -> int:
        return self.grid.d

    @property
    def dxi(self) -> Tuple[float, ...]:
        return tuple(self.density / v for v in self.dx)

    @property
    def weight(self) -> float:
        """Lattice cell volume ``prod dx * dxi``."""
        return self.density ** self.d

    @property
    def normalization(self) -> float:
        return 2 ** (-self.d / 2) * math.pi ** (-0.75 * self.d)

    @property
    def shape(self) -> Tuple[int, ...]:
        return tuple(len(a) * len(b) for a, b in zip(self.x_nodes, self.xi_nodes))

    def axis_points(self, i: int) -> Tuple[np.ndarray, np.ndarray]:
        """Flattened ``(x, xi)`` pairs along axis ``i`` (x slow, xi fast)."""
        xx, kk = np.meshgrid(self.x_nodes[i], self.xi_nodes[i], indexing="ij")
        return xx.ravel(), kk.ravel()

    def points(self) -> Tuple[np.ndarray, np.ndarray]:
        """All lattice points as arrays of shape ``shape + (d,)``."""
        xs, ks = zip(*[self.axis_points(i) for i in range(self.d)])
        X = np.stack(np.meshgrid(*xs, indexing="ij"), -1)
        K = np.stack(np.meshgrid(*ks, indexing="ij"), -1)
        return X, K

    def _axis_matrix(self, i: int, factor: Optional[str] = None) -> np.ndarray:
        xp, kp = self.axis_points(i)
        y = self.grid.axis(i)
        diff = xp[:, None] - y[None, :]
        m = _c1() * self.grid.h[i] * np.exp(1j * kp[:, None] * diff - 0.5 * diff ** 2)
        if factor == "deriv":
            # (D_x - xi) T = d_xi T = i (x - y) * kernel
            m = m * (1j * diff)
        return m

    def derivative_mats(self) -> Tuple[np.ndarray, ...]:
        if self._dmats is None:
            self._dmats = tuple(self._axis_matrix(i, "deriv") for i in range(self.d))
        return self._dmats

    def analysis(self, values: np.ndarray, mats=None) -> np.ndarray:
        mats = self._mats if mats is None else mats
        out = values
        for i, m in enumerate(mats):
            out = np.moveaxis(np.tensordot(m, out, axes=(1, i)), 0, i)
        return out

    def synthesis(self, coeffs: np.ndarray) -> np.ndarray:
        out = coeffs
        for i, m in enumerate(self._mats):
            adj = np.conj(m).T / self.grid.h[i]
            out = np.moveaxis(np.tensordot(adj, out, axes=(1, i)), 0, i)
        return self.weight * out

    def measure_frame_bound(self, n_samples: int = 8, seed: int = 0,
                            band: Optional[float] = None) -> float:
        """Worst ``| ||Tf||^2 / ||f||^2 - 1 |`` over random band-limited f."""
        rng = np.random.default_rng(seed)
        worst = 0.0
        for _ in range(n_samples):
            f = random_band_limited(self, rng, band)
            c = fbi_forward(f, self, check=False)
            ratio = lattice_norm(c, self) ** 2 / f.norm() ** 2
            worst = max(worst, abs(ratio - 1))
        self.frame_bound = worst
        return worst


def lattice_norm(coeffs: np.ndarray, frame: WavePacketFrame) -> float:
    return float(np.sqrt(frame.weight * np.sum(np.abs(coeffs) ** 2)))


def random_band_limited(frame: WavePacketFrame, rng: np.random.Generator,
                        band: Optional[float] = None, n_packets: int = 6) -> GridFunction:
    """Random sum of Gaussian packets localized inside the frame box.

    Packet widths lie in ``[0.7, 1.5]``, centres at least 2.5 inside the
    x-box and frequencies at least ``band`` (default 8) inside the xi-box, so
    the transform is negligible outside the lattice.
    """
    grid = frame.grid
    margin = 8.0 if band is None else band
    vals = np.zeros(grid.n, dtype=complex)
    mesh = grid.mesh()
    for _ in range(n_packets):
        centre = np.array([rng.uniform(b[0] + 2.5, b[1] - 2.5) if b[1] - b[0] > 5
                           else 0.5 * (b[0] + b[1]) for b in frame.x_box])
        freq = np.array([rng.uniform(b[0] + margin, b[1] - margin) if b[1] - b[0] > 2 * margin
                         else 0.5 * (b[0] + b[1]) for b in frame.xi_box])
        width = rng.uniform(0.7, 1.5)
        amp = rng.normal() + 1j * rng.normal()
        r = mesh - centre
        vals += amp * np.exp(1j * r @ freq - 0.5 * np.sum(r ** 2, -1) / width ** 2)
    return GridFunction(grid, vals)


def _boundary_check(f: GridFunction, tol=1e-10):
    v = np.abs(f.values)
    peak = v.max()
    if peak == 0:
        return
    edge = 0.0
    for i in range(f.grid.d):
        edge = max(edge, np.take(v, 0, axis=i).max(), np.take(v, -1, axis=i).max())
    if edge > tol * peak:
        warnings.warn(f"input does not decay at the grid boundary (edge/peak={edge / peak:.2e})",
                      BoundaryMassWarning, stacklevel=3)


def fbi_forward(f: GridFunction, frame: WavePacketFrame, check: bool = True) -> np.ndarray:
    """Lattice samples of ``T f``; shape ``frame.shape``.

    Examples
    --------
    >>> g = GridSpec.centered(64, 16.0)
    >>> fr = WavePacketFrame.covering(g, [(-4, 4)], x_box=[(-2, 2)])
    >>> c = fbi_forward(coherent_state(g, 0.0, 0.0), fr)
    >>> c.shape == fr.shape
    True
    """
    if f.grid != frame.grid:
        raise ValueError("function and frame live on different grids")
    if check:
        _boundary_check(f)
    return frame.analysis(f.values)


def fbi_adjoint(coeffs: np.ndarray, frame: WavePacketFrame) -> GridFunction:
    """``T^* G = sum_p w G_p phi_p`` with lattice weight ``w``."""
    coeffs = np.asarray(coeffs, dtype=complex)
    if coeffs.shape != frame.shape:
        raise ValueError(f"coefficient shape {coeffs.shape} does not match lattice {frame.shape}")
    return GridFunction(frame.grid, frame.synthesis(coeffs))


def synthesize_packets(grid: GridSpec, centres_x: np.ndarray, centres_xi: np.ndarray,
                       coeffs: np.ndarray, weight: float, chunk: int = 2048) -> GridFunction:
    """``sum_p weight * coeffs_p * phi_{x_p, xi_p}`` for scattered packets.

    ``centres_x`` and ``centres_xi`` have shape ``(P, d)``.
    """
    centres_x = np.asarray(centres_x, float).reshape(-1, grid.d)
    centres_xi = np.asarray(centres_xi, float).reshape(-1, grid.d)
    coeffs = np.asarray(coeffs, complex).ravel()
    out = np.zeros(grid.n, dtype=complex)
    axes = [grid.axis(i) for i in range(grid.d)]
    letters = "abcdefgh"[:grid.d]
    spec = "p," + ",".join(f"p{c}" for c in letters) + "->" + letters
    for s in range(0, coeffs.size, chunk):
        sl = slice(s, s + chunk)
        factors = []
        for i in range(grid.d):
            y = axes[i][None, :] - centres_x[sl, i][:, None]
            factors.append(_c1() * np.exp(1j * centres_xi[sl, i][:, None] * y - 0.5 * y ** 2))
        out += np.einsum(spec, coeffs[sl], *factors)
    return GridFunction(grid, weight * out)


def conjugation_error(sym, f: GridFunction, frame: WavePacketFrame, t: float = 0.0) -> float:
    """``|| T a^w f - A~ T f || / || f ||`` on the lattice.

    ``A~ = a + a_xi . ((1/i) d_x - xi) - (1/i) a_x . d_xi``.  On the image
    of ``T`` both ``(D_x - xi) T f`` and ``d_xi T f`` equal the transform
    with kernel multiplied by ``i (x - y)``, which is applied exactly.
    """
    from .quantization import weyl_apply

    aw = weyl_apply(sym, f, t)
    lhs = fbi_forward(aw, frame, check=False)
    X, K = frame.points()
    a = sym(t, X, K)
    ak = sym.grad_xi(t, X, K)
    ax = sym.grad_x(t, X, K)
    rhs = a * frame.analysis(f.values)
    dm = frame.derivative_mats()
    for i in range(frame.d):
        mats = list(frame._mats)
        mats[i] = dm[i]
        g = frame.analysis(f.values, mats)
        rhs = rhs + (ak[..., i] + 1j * ax[..., i]) * g
    return lattice_norm(lhs - rhs, frame) / f.norm()
