"""Step functions, the ``V^2`` norm and the greedy ``V^2 -> U^q`` decomposition."""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from .operators import OperatorPath

__all__ = [
    "StepFunction",
    "v2_norm",
    "v2_norm_exhaustive",
    "UqDecomposition",
    "uq_decompose",
    "embedding_bound",
    "random_step_function",
]


@dataclass
class StepFunction:
    """Right-continuous step function on ``[0, 1]``.

    ``u(t) = values[k]`` for ``times[k] <= t < times[k+1]`` with
    ``times[0] = 0``.  With a path, the ``k``-th step is transported,
    ``u(t) = S(t, times[k]) values[k]``.
    """

    times: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.values = np.asarray(self.values, dtype=complex)
        if self.values.ndim == 1:
            self.values = self.values[:, None]
        if len(self.times) != len(self.values):
            raise ValueError("one value per jump time")
        if self.times[0] != 0.0 or self.times[-1] > 1.0:
            raise ValueError("jump times must start at 0 and lie in [0, 1]")
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("jump times must be strictly increasing")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("values must be finite")

    @property
    def K(self) -> int:
        return len(self.times) - 1

    @property
    def m(self) -> int:
        return self.values.shape[1]

    def __call__(self, t: float) -> np.ndarray:
        k = int(np.searchsorted(self.times, t, side="right") - 1)
        return self.values[max(k, 0)]

    def sup_norm(self) -> float:
        return float(np.max(np.linalg.norm(self.values, axis=1)))


def _weights(u: StepFunction, path: Optional[OperatorPath]) -> np.ndarray:
    """``W[a, b] = ||v_b - S(s_b, s_a) v_a||^2`` for ``a < b``."""
    v = u.values
    if path is None:
        diff = v[None, :, :] - v[:, None, :]
    else:
        pulled = np.stack([path.U(s).conj().T @ x for s, x in zip(u.times, v)])
        diff = pulled[None, :, :] - pulled[:, None, :]
    return np.sum(np.abs(diff) ** 2, axis=-1)


def v2_norm(u: StepFunction, path: OperatorPath = None, return_chain: bool = False):
    """``(||u(0)||^2 + sup_chains sum ||increments||^2)^{1/2}``.

    The supremum over increasing sequences of times is attained on jump
    times; dynamic programming over the last chosen index gives it exactly
    in ``O(K^2)``.

    Examples
    --------
    >>> round(v2_norm(StepFunction([0, .3, .6], [0., 1., 0.])) ** 2, 12)
    2.0
    >>> round(v2_norm(StepFunction([0, .3, .6], [0., 1., 2.])) ** 2, 12)
    4.0
    """
    W = _weights(u, path)
    n = u.K + 1
    best = np.zeros(n)
    prev = np.full(n, -1)
    for b in range(1, n):
        cand = best[:b] + W[:b, b]
        a = int(np.argmax(cand))
        if cand[a] > best[b]:
            best[b] = cand[a]
            prev[b] = a
    end = int(np.argmax(best))
    total = float(np.sum(np.abs(u.values[0]) ** 2) + best[end])
    if not return_chain:
        return float(np.sqrt(total))
    chain = [end]
    while prev[chain[-1]] >= 0:
        chain.append(int(prev[chain[-1]]))
    return float(np.sqrt(total)), [u.times[i] for i in reversed(chain)]


def v2_norm_exhaustive(u: StepFunction, path: OperatorPath = None) -> float:
    """Brute force over all increasing index subsequences (oracle, small ``K``)."""
    if u.K > 16:
        raise ValueError("exhaustive enumeration is limited to K <= 16")
    W = _weights(u, path)
    n = u.K + 1
    best = 0.0
    for r in range(2, n + 1):
        for sub in itertools.combinations(range(n), r):
            s = 0.0
            for a, b in zip(sub[:-1], sub[1:]):
                s += W[a, b]
            if s > best:
                best = s
    return float(np.sqrt(np.sum(np.abs(u.values[0]) ** 2) + best))


@dataclass
class UqDecomposition:
    """``u = sum_j coefficients[j] * atoms[j]`` up to ``reconstruction_error``.

    ``level_counts[j]`` is the number of intervals ``n_j`` of the partition
    at level ``j`` (``n_0 = 1``); ``bound`` is ``sum_j coefficients[j]``, an
    upper bound for ``||u||_{U^q}``, and ``formula_bound`` is
    ``||u||_{V^2} sum_j 2^{-j} n_j^{1/q}``.
    """

    q: float
    atoms: List[StepFunction]
    coefficients: List[float]
    levels: List[int]
    level_counts: List[int]
    v2: float
    bound: float
    formula_bound: float
    reconstruction_error: float
    partitions: List[List[float]] = field(default_factory=list)

    def reconstruct(self, times: np.ndarray) -> np.ndarray:
        return sum(c * np.stack([a(t) for t in times]) for c, a in zip(self.coefficients, self.atoms))

    def atom_defects(self) -> List[float]:
        """``|sum_steps ||step||^q - 1|`` per atom."""
        return [abs(float(np.sum(np.linalg.norm(a.values, axis=1) ** self.q)) - 1.0)
                for a in self.atoms]

    def count_audit(self) -> List[Tuple[int, int, float]]:
        """``(j, n_j - n_{j-1}, 2^{2j} ||u||_{V^2}^2)`` for the normalized input."""
        out = []
        for j in range(1, len(self.level_counts)):
            out.append((j, self.level_counts[j] - self.level_counts[j - 1], 4.0 ** j))
        return out


def uq_decompose(u: StepFunction, q: float, path: OperatorPath = None, eps_stop: float = 1e-13,
                 j_max: int = 40) -> UqDecomposition:
    """Greedy ``V^2 -> U^q`` decomposition of a step function.

    The input is normalized to ``||u||_{V^2} = 1``.  At level ``j`` each
    interval of the current partition is split at the first jump time where
    ``||u_j(t) - u_j(t_start)|| >= 2^{-j-1}`` (restarting from that time),
    ``v_{j+1}`` takes the value of ``u_j`` at the start of each new interval
    and ``u_{j+1} = u_j - v_{j+1}``.  Each nonzero ``v_{j+1}`` becomes one
    atom with coefficient ``(sum ||steps||^q)^{1/q}``.  With a path the
    values are first pulled back by ``S(0, t)``, and the atoms refer to that
    frame.
    """
    if q <= 2:
        raise ValueError("q must exceed 2")
    values = u.values
    if path is not None:
        values = np.stack([path.U(s).conj().T @ x for s, x in zip(u.times, values)])
    base = StepFunction(u.times, values)
    nrm = v2_norm(base)
    if nrm == 0:
        return UqDecomposition(q, [], [], [], [1], 0.0, 0.0, 0.0, 0.0)
    w = values / nrm
    n = len(u.times)
    starts = [0]
    counts = [1]
    atoms, coefs, levels, parts = [], [], [], []
    j = 0
    while np.max(np.linalg.norm(w, axis=1)) > eps_stop:
        if j >= j_max:
            raise RuntimeError(f"decomposition did not terminate within {j_max} levels")
        thr = 2.0 ** (-j - 1)
        ends = starts[1:] + [n]
        new_starts = []
        for a0, b0 in zip(starts, ends):
            a = a0
            new_starts.append(a)
            for k in range(a0 + 1, b0):
                if np.linalg.norm(w[k] - w[a]) >= thr:
                    a = k
                    new_starts.append(k)
        v = np.empty_like(w)
        seg_ends = new_starts[1:] + [n]
        for a, b in zip(new_starts, seg_ends):
            v[a:b] = w[a]
        steps = np.array([w[a] for a in new_starts])
        c = float(np.sum(np.linalg.norm(steps, axis=1) ** q) ** (1.0 / q))
        if c > 0:
            atom = StepFunction(u.times[new_starts], steps / c)
            atoms.append(atom)
            coefs.append(c * nrm)
            levels.append(j + 1)
        w = w - v
        starts = new_starts
        counts.append(len(starts))
        parts.append([float(u.times[a]) for a in starts])
        j += 1
    bound = float(sum(coefs))
    formula = nrm * float(sum(2.0 ** -jj * counts[jj] ** (1.0 / q) for jj in range(1, len(counts))))
    dec = UqDecomposition(q, atoms, coefs, levels, counts, nrm, bound, formula, 0.0, parts)
    rec = dec.reconstruct(u.times)
    dec.reconstruction_error = float(np.max(np.linalg.norm(rec - values, axis=1)))
    return dec


def embedding_bound(q: float, margin: float = 4.0, terms: int = 200) -> float:
    """``margin * sum_{j >= 0} 2^{(2/q - 1) j}``."""
    r = 2.0 ** (2.0 / q - 1.0)
    return margin * float(sum(r ** j for j in range(terms)))


def random_step_function(rng: np.random.Generator, K: int, m: int, kind: str = "gaussian") -> StepFunction:
    """Random step function with ``K`` jumps in ``(0, 1)``.

    ``kind`` is ``"gaussian"`` (independent values), ``"walk"`` (random-walk
    values) or ``"alternating"`` (unit jumps back and forth).
    """
    times = np.concatenate([[0.0], np.sort(rng.choice(np.arange(1, 4096), K, replace=False)) / 4096])
    if kind == "gaussian":
        vals = rng.normal(size=(K + 1, m)) + 1j * rng.normal(size=(K + 1, m))
    elif kind == "walk":
        steps = rng.normal(size=(K + 1, m)) + 1j * rng.normal(size=(K + 1, m))
        steps *= np.exp(rng.uniform(-3, 0, size=(K + 1, 1)))
        vals = np.cumsum(steps, axis=0)
    elif kind == "alternating":
        e = np.zeros(m)
        e[0] = 1.0
        vals = np.array([e * (k % 2) for k in range(K + 1)], dtype=complex)
    else:
        raise ValueError(f"unknown kind {kind!r}")
    return StepFunction(times, vals)
