"""Mixed norms, Strichartz constant scans and resolvent-type ratio scans."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .fbi import GridFunction, GridSpec
from .quantization import multiplier_values
from .symbols import CutoffSymbol, Symbol, smoothstep

__all__ = [
    "StrichartzPair",
    "ScanResult",
    "AliasingError",
    "mixed_norm",
    "exponent_fit",
    "strichartz_constant",
    "resolvent_symbol",
    "resolvent_ratio",
    "resolvent_ratio_scan",
    "sharpness_witness",
    "VARIANTS",
]


def _inv(p: float) -> float:
    return 0.0 if math.isinf(p) else 1.0 / p


@dataclass(frozen=True)
class StrichartzPair:
    """Exponent pair ``(q, r)`` with weight ``rho``.

    ``normalization="paper"`` checks ``2/q + (n-1-k)/r = (n-1-k)/2`` and sets
    ``rho = (n-1)/2 - 1/q - (n-1)/r``; ``"physical"`` checks the classical
    pairing ``2/q + d/r = d/2`` with ``d = n - 1`` and ``rho = 0``.

    Examples
    --------
    >>> StrichartzPair(6, 6, n=3, k=1).rho
    0.5
    """

    q: float
    r: float
    n: int
    k: int = 0
    normalization: str = "paper"
    tol: float = 1e-12

    def __post_init__(self):
        q, r = float(self.q), float(self.r)
        if not (2 <= q <= math.inf and 2 <= r <= math.inf):
            raise ValueError("need 2 <= q, r <= inf")
        if q == 2 and math.isinf(r):
            raise ValueError("the endpoint (2, inf) is excluded")
        if self.normalization == "paper":
            m = self.n - 1 - self.k
            defect = 2 * _inv(q) + m * _inv(r) - m / 2
        elif self.normalization == "physical":
            d = self.n - 1
            defect = 2 * _inv(q) + d * _inv(r) - d / 2
        else:
            raise ValueError(f"unknown normalization {self.normalization!r}")
        if abs(defect) > self.tol:
            raise ValueError(f"pair ({q}, {r}) is not admissible (defect {defect:.3e})")

    @property
    def rho(self) -> float:
        if self.normalization == "physical":
            return 0.0
        return (self.n - 1) / 2 - _inv(self.q) - (self.n - 1) * _inv(self.r)

    @staticmethod
    def rho_diagonal(q: float, n: int) -> float:
        """``rho(q) = (n-1)/2 - n/q``."""
        return (n - 1) / 2 - n * _inv(q)

    @staticmethod
    def critical_q(n: int, k: int = 0) -> float:
        """``q = 2(n+1-k)/(n-1-k)``."""
        return 2 * (n + 1 - k) / (n - 1 - k)


def mixed_norm(u: np.ndarray, q: float, r: float, cell: Sequence[float] = None) -> float:
    """``L^q`` in the first axis of ``L^r`` in the remaining axes.

    Parameters
    ----------
    u : ndarray
        Samples; the first axis is the outer variable.
    cell : sequence of float, optional
        Cell measure per axis; defaults to ``1/n`` (unit cube).
    """
    u = np.abs(np.asarray(u))
    if cell is None:
        cell = [1.0 / s for s in u.shape]
    cell = list(cell)
    inner_axes = tuple(range(1, u.ndim))
    inner_cell = float(np.prod(cell[1:])) if u.ndim > 1 else 1.0
    if u.ndim == 1:
        inner = u
    elif math.isinf(r):
        inner = np.max(u, axis=inner_axes)
    else:
        inner = (inner_cell * np.sum(u ** r, axis=inner_axes)) ** (1.0 / r)
    if math.isinf(q):
        return float(np.max(inner))
    return float((cell[0] * np.sum(inner ** q)) ** (1.0 / q))


def exponent_fit(points: Sequence[Tuple[float, float]]) -> Tuple[float, float, float]:
    """Least-squares slope, intercept and RMS residual in log-log coordinates."""
    pts = np.asarray(points, dtype=float)
    if pts.shape[0] < 3:
        raise ValueError("exponent fit needs at least 3 points")
    if np.any(pts <= 0):
        raise ValueError("exponent fit needs positive parameters and values")
    x, y = np.log(pts[:, 0]), np.log(pts[:, 1])
    A = np.column_stack([x, np.ones_like(x)])
    (slope, icpt), *_ = np.linalg.lstsq(A, y, rcond=None)
    res = float(np.sqrt(np.mean((A @ [slope, icpt] - y) ** 2)))
    return float(slope), float(icpt), res


@dataclass
class ScanResult:
    """Measured constants over a parameter grid and their fitted exponents."""

    variant: str
    n: int
    params: List[float]
    values: List[float]
    slope: float
    intercept: float
    residual: float
    parameter: str = "lambda"
    witness: Dict[float, float] = field(default_factory=dict)
    witness_slope: Optional[float] = None
    extra: Dict[str, float] = field(default_factory=dict)

    def rows(self):
        for p, v in zip(self.params, self.values):
            yield p, v, self.witness.get(p, float("nan"))


# ---------------------------------------------------------------------------
# Strichartz scans
# ---------------------------------------------------------------------------

def _evolve_series(sym: Symbol, u0: GridFunction, times: np.ndarray) -> np.ndarray:
    """``S(t, 0) u0`` for all ``times`` (Fourier multiplier symbols)."""
    m = multiplier_values(sym, u0.grid)
    spec = np.fft.fftn(u0.values)
    out = np.empty((len(times),) + u0.grid.n, dtype=complex)
    for i, t in enumerate(times):
        out[i] = np.fft.ifftn(np.exp(-1j * t * m) * spec)
    return out


def _band(grid: GridSpec, lam: float, lo: float, hi: float) -> np.ndarray:
    k = np.linalg.norm(grid.freq_mesh(), axis=-1) / lam
    return smoothstep((k - lo) / (0.25 * lo)) * (1 - smoothstep((k - hi) / (0.25 * hi)))


def _strichartz_samples(sym: Symbol, grid: GridSpec, lam: float, T: float, n_samples: int,
                        rng: np.random.Generator) -> List[GridFunction]:
    """Focusing packets, travelling packets and random band-limited data."""
    d = grid.d
    mesh = grid.mesh()
    kmesh = grid.freq_mesh()
    m = multiplier_values(sym, grid)
    out = []
    band = _band(grid, lam, 0.5, 1.0)
    for i in range(n_samples):
        kind = i % 3
        xf = rng.uniform(-0.4, 0.4, d)
        if kind == 0:
            # band-limited point focusing at time t_f
            tf = rng.uniform(0.1, 0.9) * T
            spec = band * np.exp(-1j * kmesh @ xf)
            out.append(GridFunction(grid, np.fft.ifftn(np.exp(1j * tf * m) * spec)))
        elif kind == 1:
            # Gaussian packet focusing at time t_f
            tf = rng.uniform(0.1, 0.9) * T
            w = rng.uniform(4.0, 10.0) / lam
            direction = rng.normal(size=d)
            direction /= np.linalg.norm(direction)
            xi0 = lam * rng.uniform(0.6, 0.9) * direction
            r = mesh - xf
            g = np.exp(1j * r @ xi0 - 0.5 * np.sum(r ** 2, -1) / w ** 2)
            out.append(GridFunction(grid, np.fft.ifftn(np.exp(1j * tf * m) * np.fft.fftn(g))))
        else:
            coef = rng.normal(size=grid.n) + 1j * rng.normal(size=grid.n)
            env = np.exp(-0.5 * np.sum((mesh - xf) ** 2, -1) / 0.3 ** 2)
            v = env * np.fft.ifftn(band * coef)
            out.append(GridFunction(grid, np.fft.ifftn(band * np.fft.fftn(v))))
    return out


def strichartz_constant(sym: Symbol, pair: StrichartzPair, lam: float, n_samples: int = 12,
                        grid: GridSpec = None, T: float = 1.0, n_times: int = None,
                        cutoff: CutoffSymbol = None, seed: int = 0,
                        samples: Sequence[GridFunction] = None) -> Dict[str, float]:
    """Sampled ``max ||chi^w u||_{L^q L^r} / (lam^rho ||u0||_2)`` on ``[0, T]``.

    Returns a dict with keys ``constant`` (the max ratio) and ``mean``.
    """
    from .parametrix import apply_cutoff

    if grid is None:
        raise ValueError("a grid is required")
    d = grid.d
    if cutoff is None:
        cutoff = CutoffSymbol(d, rx=1.0, rxi=8.0 * lam)
    if n_times is None:
        n_times = 129
    times = np.linspace(0.0, T, n_times)
    dt = times[1] - times[0]
    rng = np.random.default_rng(seed)
    if samples is None:
        samples = _strichartz_samples(sym, grid, lam, T, n_samples, rng)
    chi1 = cutoff.chi_x(grid.mesh())
    chi2 = cutoff.chi_xi(grid.freq_mesh())
    ratios = []
    for u0 in samples:
        u = _evolve_series(sym, u0, times)
        cu = chi1 * np.fft.ifftn(chi2 * np.fft.fftn(u, axes=tuple(range(1, d + 1))),
                                 axes=tuple(range(1, d + 1)))
        # trapezoid-like weights in time: drop half of the end cells
        w = np.ones(n_times)
        w[0] = w[-1] = 0.5
        cu = cu * (w ** (1.0 / pair.q) if not math.isinf(pair.q) else 1.0).reshape(
            (-1,) + (1,) * d)
        val = mixed_norm(cu, pair.q, pair.r, [dt] + list(grid.h))
        ratios.append(val / (lam ** pair.rho * u0.norm()))
    return {"constant": float(max(ratios)), "mean": float(np.mean(ratios)),
            "n_samples": len(ratios)}


# ---------------------------------------------------------------------------
# resolvent-type scans
# ---------------------------------------------------------------------------

VARIANTS = ("helmholtz", "helmholtz_iQ", "helmholtz_drift", "helmholtz_delta_drift")


class AliasingError(RuntimeError):
    """Spectral mass near the Nyquist frequency exceeds the tolerance."""


def resolvent_symbol(variant: str, grid: GridSpec, lam: float, delta: float = 1.0):
    """Symbol values on the FFT mesh and the exponent ``q`` for a variant."""
    k = grid.freq_mesh()
    n = grid.d
    base = -np.sum(k ** 2, -1) + lam ** 2
    if variant == "helmholtz":
        return base.astype(complex), 2 * (n + 1) / (n - 1)
    if variant == "helmholtz_iQ":
        return base + 1j * k[..., 0] ** 2, 2 * (n + 1) / (n - 1)
    if variant == "helmholtz_drift":
        return base + 1j * lam * k[..., 0], 2 * (n + 2) / n
    if variant == "helmholtz_delta_drift":
        return base + 1j * delta * lam * k[..., 0], 2 * (n + 2) / n
    raise KeyError(f"unknown variant {variant!r}")


def _check_aliasing(spec: np.ndarray, grid: GridSpec, tol: float = 1e-8):
    k = np.abs(grid.freq_mesh())
    high = np.any(k > 0.9 * grid.nyquist, axis=-1)
    p = np.abs(spec) ** 2
    frac = float(p[high].sum() / p.sum())
    if frac > tol:
        raise AliasingError(f"spectral mass above 0.9 Nyquist is {frac:.2e}")
    return frac


def resolvent_ratio(u: np.ndarray, symbol_vals: np.ndarray, q: float, grid: GridSpec,
                    check: bool = True) -> float:
    """``||u||_{L^q} / ||P u||_{L^q'}`` with ``P`` applied in Fourier space."""
    spec = np.fft.fftn(u)
    if check:
        _check_aliasing(spec, grid)
    pu = np.fft.ifftn(symbol_vals * spec)
    qp = q / (q - 1)
    cell = grid.cell
    num = (cell * np.sum(np.abs(u) ** q)) ** (1 / q)
    den = (cell * np.sum(np.abs(pu) ** qp)) ** (1 / qp)
    return float(num / den)


def _ball(mesh: np.ndarray) -> np.ndarray:
    r = np.linalg.norm(mesh, axis=-1)
    return 1.0 - smoothstep(2.0 * r - 1.0)


def _char_directions(variant: str, n: int, rng: np.random.Generator) -> np.ndarray:
    """Unit vector ``xi0/lam`` on the characteristic set of the variant."""
    if variant == "helmholtz":
        v = rng.normal(size=n)
    else:
        # characteristic set is |xi| = lam with xi_1 = 0
        v = rng.normal(size=n)
        v[0] = 0.0
    return v / np.linalg.norm(v)


def _resolvent_sample(variant, grid, mesh, lam, params):
    """Sample from a parameter dict drawn once per index (common random numbers)."""
    n = grid.d
    kind = params["kind"]
    ball = _ball(mesh)
    if kind == "tube":
        e = params["dir"]
        xi0 = lam * e
        r = mesh - params["centre"]
        along = r @ e
        perp2 = np.sum(r ** 2, -1) - along ** 2
        b = params["c"] * lam ** (-params["beta"])
        env = np.exp(-0.5 * along ** 2 / params["a"] ** 2 - 0.5 * perp2 / b ** 2)
        return ball * env * np.exp(1j * (mesh @ xi0))
    # random band-limited data near the characteristic set, then localized
    k = np.linalg.norm(grid.freq_mesh(), axis=-1)
    shell = np.exp(-0.5 * ((k - lam) / params["width"]) ** 2)
    if variant != "helmholtz":
        kx = np.abs(grid.freq_mesh()[..., 0])
        shell = shell * np.exp(-0.5 * (kx / (params["width"] * 2)) ** 2)
    rs = np.random.default_rng(params["seed"])
    coef = rs.normal(size=grid.n) + 1j * rs.normal(size=grid.n)
    return ball * np.fft.ifftn(shell * coef)


def _draw_params(variant: str, n: int, rng: np.random.Generator, n_samples: int) -> List[dict]:
    out = []
    for i in range(n_samples):
        if i % 8 == 7:
            out.append({"kind": "random", "width": rng.uniform(1.0, 4.0),
                        "seed": int(rng.integers(2 ** 31))})
            continue
        out.append({
            "kind": "tube",
            "dir": _char_directions(variant, n, rng),
            "centre": rng.uniform(-0.1, 0.1, n),
            "a": rng.uniform(0.1, 0.5),
            "beta": rng.choice([0.0, 0.25, 0.5]),
            "c": math.exp(rng.uniform(math.log(0.25), math.log(2.0))),
        })
    return out


def _max_ratio(variant, grid, lam, delta, params_list):
    sym, q = resolvent_symbol(variant, grid, lam, delta)
    mesh = grid.mesh()
    vals = [resolvent_ratio(_resolvent_sample(variant, grid, mesh, lam, p), sym, q, grid)
            for p in params_list]
    return float(max(vals)), vals


def resolvent_ratio_scan(n: int, variant: str, lam_list: Sequence[float],
                         delta_list: Sequence[float] = (1.0,), n_samples: int = 64,
                         grid_n: int = 512, box: float = 4.0, seed: int = 0,
                         witness: bool = True) -> ScanResult:
    """Sampled maxima of ``||u||_q / ||P u||_q'`` and their fitted exponent.

    With more than one entry in ``delta_list`` the scan runs over ``delta``
    at the single ``lam_list[0]`` and fits the ``delta``-exponent.
    Samples are tube packets ``ball * gaussian(along, across) * e^{i xi0 x}``
    with ``xi0`` on the characteristic set and transverse width
    ``c lam^{-beta}``, plus localized random band-limited data; their shape
    parameters are drawn once and reused for every ``lam`` and ``delta``.
    """
    if n not in (2, 3):
        raise ValueError("n must be 2 or 3")
    grid = GridSpec.centered(grid_n, box, d=n)
    rng = np.random.default_rng(seed)
    params_list = _draw_params(variant, n, rng, n_samples)
    if len(delta_list) > 1:
        lam = lam_list[0]
        vals = [_max_ratio(variant, grid, lam, dl, params_list)[0] for dl in delta_list]
        slope, icpt, res = exponent_fit(list(zip(delta_list, vals)))
        return ScanResult(variant, n, list(map(float, delta_list)), vals, slope, icpt, res,
                          parameter="delta", extra={"lambda": float(lam)})
    delta = delta_list[0]
    vals = [_max_ratio(variant, grid, lam, delta, params_list)[0] for lam in lam_list]
    slope, icpt, res = exponent_fit(list(zip(lam_list, vals)))
    out = ScanResult(variant, n, list(map(float, lam_list)), vals, slope, icpt, res,
                     extra={"delta": float(delta)})
    if witness:
        out.witness = {float(l): sharpness_witness(n, variant, l, grid_n=grid_n, box=box)
                       for l in lam_list}
        out.witness_slope = exponent_fit(list(out.witness.items()))[0]
    return out


def sharpness_witness(n: int, variant: str, lam: float, grid_n: int = 512, box: float = 4.0,
                      shape: str = "tube", delta: float = 1.0) -> float:
    """Ratio of a Knapp-type tube adapted to the characteristic circle.

    ``shape="tube"`` uses ``ball * exp(-x_1^2/(2 a^2) - lam |x'|^2 / (2 c^2))
    e^{i lam x_1}`` (width ``lam^{-1/2}`` across the frequency direction);
    ``shape="isotropic"`` drops the transverse compression.
    For variants with a drift the packet travels along ``x_2`` so that its
    frequency stays on the characteristic set.
    """
    grid = GridSpec.centered(grid_n, box, d=n)
    mesh = grid.mesh()
    axis = 0 if variant == "helmholtz" else 1
    along = mesh[..., axis]
    perp2 = np.sum(mesh ** 2, -1) - along ** 2
    a, c = 0.25, 0.5
    if shape == "tube":
        env = np.exp(-0.5 * along ** 2 / a ** 2 - 0.5 * lam * perp2 / c ** 2)
    elif shape == "isotropic":
        env = np.exp(-0.5 * (along ** 2 + perp2) / a ** 2)
    else:
        raise ValueError(f"unknown witness shape {shape!r}")
    u = _ball(mesh) * env * np.exp(1j * lam * along)
    sym, q = resolvent_symbol(variant, grid, lam, delta)
    return resolvent_ratio(u, sym, q, grid)
