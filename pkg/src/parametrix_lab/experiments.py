"""Experiment registry: parameter schemas, defaults and runners.

Each runner takes the resolved parameters, a seed and a worker count and
returns an :class:`ExperimentResult`.  Results rows carry a ``units`` column.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np

__all__ = ["Gate", "ExperimentResult", "Experiment", "REGISTRY", "pmap"]


@dataclass
class Gate:
    """Tolerance gate ``lo <= value <= hi``."""

    name: str
    value: float
    lo: float = -math.inf
    hi: float = math.inf

    @property
    def passed(self) -> bool:
        return bool(np.isfinite(self.value) and self.lo <= self.value <= self.hi)

    @classmethod
    def around(cls, name, value, target, tol):
        return cls(name, value, target - tol, target + tol)


@dataclass
class ExperimentResult:
    rows: List[Dict[str, object]]
    fits: List[Dict[str, object]] = field(default_factory=list)
    plots: Dict[str, List[tuple]] = field(default_factory=dict)
    gates: List[Gate] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(g.passed for g in self.gates)


@dataclass(frozen=True)
class Experiment:
    name: str
    anchor: str
    schema: dict
    defaults: dict
    runner: Callable[[dict, int, int], ExperimentResult]

    @property
    def required(self) -> List[str]:
        return list(self.schema.get("required", []))


def pmap(fn, items: Sequence, workers: int = 1) -> list:
    """Ordered map, threaded when ``workers > 1``."""
    items = list(items)
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, items))


_NUM = {"type": "number"}
_POS = {"type": "number", "exclusiveMinimum": 0}
_INT = {"type": "integer", "minimum": 1}


def _list(item=_POS, min_items=1):
    return {"type": "array", "items": item, "minItems": min_items}


def _tol():
    return {"type": "array", "items": _NUM, "minItems": 2, "maxItems": 2}


def _params(props: dict, required: Sequence[str] = ()) -> dict:
    return {"type": "object", "properties": props, "required": list(required),
            "additionalProperties": False}


# ---------------------------------------------------------------------------
# flow
# ---------------------------------------------------------------------------

def _run_flow(p, seed, workers):
    from .flow import flow_jacobian_check, integrate_flow, linearization_drift
    from .estimates import exponent_fit
    from .symbols import PhasePoint, model_symbol

    free = model_symbol("schrodinger")
    st = integrate_flow(free, PhasePoint(0, [0.0], [1.0]), 0, 0.5, 8)
    closed = max(abs(float(st.x[0]) - 1.0), abs(float(st.xi[0]) - 1.0),
                 abs(float(st.psi) - 0.5), abs(float(st.X[0, 0]) - 1.0))
    vm = model_symbol("variable_metric", eps=p["eps"])
    symp, fd = flow_jacobian_check(vm, PhasePoint(0, [0.0], [1.0]), 0, 1, p["steps"])
    vp = model_symbol("variable_metric", eps=p["eps"], normalization="paper", lam=p["lam"])
    start = PhasePoint(0, [p["start_x"]], [p["start_xi"]])
    drifts = pmap(lambda t0: linearization_drift(vp, start, t0, p["lam"]), p["t0_list"], workers)
    slope, icpt, res = exponent_fit(list(zip(p["t0_list"], drifts)))
    rows = [{"quantity": "linearization_drift", "t0": t0, "value": d, "units": "dimensionless"}
            for t0, d in zip(p["t0_list"], drifts)]
    rows.append({"quantity": "symplectic_defect", "t0": "", "value": symp, "units": "dimensionless"})
    rows.append({"quantity": "fd_jacobian_defect", "t0": "", "value": fd, "units": "dimensionless"})
    rows.append({"quantity": "closed_form_error", "t0": "", "value": closed, "units": "dimensionless"})
    gates = [Gate("closed_form_error", closed, hi=1e-10),
             Gate("symplectic_defect", symp, hi=p["symplectic_tol"]),
             Gate.around("drift_slope", slope, *p["drift_slope"])]
    return ExperimentResult(rows, [{"fit": "drift_vs_t0", "slope": slope, "intercept": icpt,
                                    "residual": res, "units": "log-log"}],
                            {"drift": list(zip(p["t0_list"], drifts))}, gates)


# ---------------------------------------------------------------------------
# fbi self-test
# ---------------------------------------------------------------------------

def _run_fbi(p, seed, workers):
    from .fbi import (GridSpec, WavePacketFrame, fbi_adjoint, fbi_forward, lattice_norm,
                      random_band_limited)

    g = GridSpec.centered(p["n"], p["length"])
    fr = WavePacketFrame.covering(g, [tuple(p["xi_box"])], x_box=[tuple(p["x_box"])],
                                  density=p["density"])
    rng = np.random.default_rng(seed)
    rows = []
    for k in range(p["n_samples"]):
        f = random_band_limited(fr, rng)
        c = fbi_forward(f, fr)
        ratio = lattice_norm(c, fr) ** 2 / f.norm() ** 2
        rec = (fbi_adjoint(c, fr) - f).norm() / f.norm()
        rows.append({"sample": k, "plancherel_ratio": ratio, "reconstruction_error": rec,
                     "units": "dimensionless"})
    lo = min(r["plancherel_ratio"] for r in rows)
    hi = max(r["plancherel_ratio"] for r in rows)
    rec = max(r["reconstruction_error"] for r in rows)
    gates = [Gate("plancherel_min", lo, *p["plancherel"]), Gate("plancherel_max", hi, *p["plancherel"]),
             Gate("reconstruction_error", rec, hi=p["reconstruction_tol"])]
    return ExperimentResult(rows, [{"fit": "frame", "plancherel_min": lo, "plancherel_max": hi,
                                    "reconstruction_max": rec, "units": "dimensionless"}], {}, gates)


# ---------------------------------------------------------------------------
# propagate (parametrix residual)
# ---------------------------------------------------------------------------

def _gaussian_samples(grid, lam, rng, n):
    from .fbi import GridFunction

    mu = math.sqrt(lam)
    y = grid.axis(0)
    out = []
    for _ in range(n):
        x0 = rng.uniform(-2, 2)
        k0 = rng.choice([-1, 1]) * rng.uniform(mu / 2, mu)
        w = rng.uniform(0.7, 1.5)
        out.append(GridFunction(grid, np.exp(1j * k0 * y - 0.5 * (y - x0) ** 2 / w ** 2)))
    return out


def propagate_residuals(model: str, lams: Sequence[float], seed: int = 0, n_samples: int = 4,
                        grid_n: int = 512, length: float = 48.0, t: float = 0.5,
                        eps: float = 0.1, workers: int = 1):
    """Parametrix residual and norm per ``lam`` in the ``sqrt(lam)`` frequency units."""
    from .fbi import GridSpec, WavePacketFrame
    from .parametrix import ParametrixConfig, parametrix_residual
    from .symbols import model_symbol

    def one(lam):
        mu = math.sqrt(lam)
        g = GridSpec.centered(grid_n, length)
        fr = WavePacketFrame.covering(g, [(-mu - 8, mu + 8)], x_box=[(-14, 14)])
        if model == "schrodinger":
            a = model_symbol("schrodinger")
        else:
            a = model_symbol(model, eps=eps, wavenumber=1 / mu)
        rng = np.random.default_rng([seed, int(lam)])
        rep = parametrix_residual(ParametrixConfig(a, fr, 0, t), _gaussian_samples(g, lam, rng, n_samples))
        return rep

    return pmap(one, lams, workers)


def _run_propagate(p, seed, workers):
    rows, gates, fits = [], [], []
    for model in p["models"]:
        reps = propagate_residuals(model, p["lambdas"], seed, p["n_samples"], workers=workers)
        res = [r.residual for r in reps]
        for lam, r in zip(p["lambdas"], reps):
            rows.append({"model": model, "lambda": lam, "residual": r.residual, "norm": r.norm,
                         "tau": r.tau, "tau_ok": int(r.tau_ok), "units": "L2->L2 operator norm"})
        ratios = [b / a for a, b in zip(res[:-1], res[1:])]
        fits.append({"model": model, "max_ratio": max(ratios), "max_norm": max(r.norm for r in reps),
                     "units": "dimensionless"})
        gates.append(Gate(f"{model}_finite", float(np.all(np.isfinite(res))), 1, 1))
        gates.append(Gate(f"{model}_ratio", max(ratios), hi=p["ratio_max"]))
        gates.append(Gate(f"{model}_norm", max(r.norm for r in reps), hi=p["norm_max"]))
    return ExperimentResult(rows, fits, {}, gates)


# ---------------------------------------------------------------------------
# decay scan
# ---------------------------------------------------------------------------

DECAY_DEFAULTS = {
    "schrodinger": {"d": 1, "lambdas": [32, 64, 128], "grid_n": 2048, "length": 16.0,
                    "normalization": "paper", "xi_inner": 0.0, "t_exponent": [-0.5, 0.05]},
    "half_wave": {"d": 2, "lambdas": [8, 16, 32], "grid_n": 256, "length": 8.0,
                  "normalization": "physical", "xi_inner": 0.5, "t_exponent": [-0.5, 0.1],
                  "lam_exponent": [1.5, 0.15]},
}


def decay_scan(model: str, lams, times, d=None, grid_n=None, length=None, xi_inner=None,
               normalization=None, min_lambda_t=1.0):
    """Fixed-time ``L^1 -> L^inf`` scan with the dyadic annulus cutoff.

    The cutoff is ``chi_1(x) chi_2(D)`` with ``chi_1`` flat on the unit
    ball and ``chi_2`` supported in ``xi_inner/2 * lam <= |xi| <= lam``.
    """
    from .fbi import GridSpec
    from .parametrix import fixed_time_decay_scan
    from .symbols import CutoffSymbol, model_symbol

    dflt = DECAY_DEFAULTS.get(model, DECAY_DEFAULTS["schrodinger"])
    d = dflt["d"] if d is None else d
    grid_n = dflt["grid_n"] if grid_n is None else grid_n
    length = dflt["length"] if length is None else length
    xi_inner = dflt["xi_inner"] if xi_inner is None else xi_inner
    normalization = dflt["normalization"] if normalization is None else normalization
    return fixed_time_decay_scan(
        lambda l: model_symbol(model, d=d, lam=l, normalization=normalization),
        lambda l: CutoffSymbol(d, rx=1.0, rxi=l, xi_inner=xi_inner * l),
        lams, times, GridSpec.centered(grid_n, length, d=d), min_lambda_t=min_lambda_t)


def _run_decay(p, seed, workers):
    sc = decay_scan(p["model"], p["lambdas"], p["times"], p.get("d"), p.get("grid_n"),
                    p.get("length"), p.get("xi_inner"), p.get("normalization"), p["min_lambda_t"])
    rows = [{"lambda": r[0], "t": r[1], "sup": r[2], "units": "L1->Linf kernel sup"} for r in sc.rows]
    fits = [{"fit": "joint", "t_exponent": sc.t_exponent, "lam_exponent": sc.lam_exponent,
             "intercept": sc.intercept, "residual": sc.residual, "units": "log-log"}]
    dflt = DECAY_DEFAULTS.get(p["model"], {})
    gates = []
    t_tol = p.get("t_exponent") or dflt.get("t_exponent")
    l_tol = p.get("lam_exponent") or dflt.get("lam_exponent")
    if t_tol:
        gates.append(Gate.around("t_exponent", sc.t_exponent, *t_tol))
    if l_tol:
        gates.append(Gate.around("lam_exponent", sc.lam_exponent, *l_tol))
    plots = {f"sup_lam{int(l)}": [(r[1], r[2]) for r in sc.rows if r[0] == l] for l in p["lambdas"]}
    return ExperimentResult(rows, fits, plots, gates)


# ---------------------------------------------------------------------------
# Strichartz scan
# ---------------------------------------------------------------------------

def strichartz_scan(model: str, lams, n_samples: int = 12, seed: int = 0, workers: int = 1):
    """Sampled constants for the free Schrodinger (d=1, physical (6,6) on
    ``[0, 1/lam]``) or the half-wave (d=2, ``(6,6)`` with ``rho = 1/2`` on
    ``[0, 1]``) model."""
    from .estimates import StrichartzPair, strichartz_constant
    from .fbi import GridSpec
    from .symbols import model_symbol

    def one(lam):
        if model == "schrodinger":
            sym = model_symbol("schrodinger", d=1, lam=lam)
            pair = StrichartzPair(6, 6, n=2, normalization="physical")
            return strichartz_constant(sym, pair, lam, n_samples, GridSpec.centered(1024, 8.0),
                                       T=1.0 / lam, n_times=max(129, 2 * int(lam) + 1), seed=seed)
        if model == "half_wave":
            sym = model_symbol("half_wave", d=2, lam=lam)
            pair = StrichartzPair(6, 6, n=3, k=1)
            return strichartz_constant(sym, pair, lam, n_samples, GridSpec.centered(256, 6.0, d=2),
                                       T=1.0, n_times=4 * int(lam) + 1, seed=seed)
        raise ValueError(f"no Strichartz setup for model {model!r}")

    return pmap(one, lams, workers)


def _run_strichartz(p, seed, workers):
    out = strichartz_scan(p["model"], p["lambdas"], p["n_samples"], seed, workers)
    cs = [o["constant"] for o in out]
    rows = [{"lambda": l, "constant": o["constant"], "mean": o["mean"],
             "units": "lambda-normalized LqLr/L2 ratio"} for l, o in zip(p["lambdas"], out)]
    spread = max(cs) / min(cs)
    return ExperimentResult(rows, [{"fit": "stability", "max_over_min": spread, "units": "dimensionless"}],
                            {"constant": list(zip(p["lambdas"], cs))},
                            [Gate("max_over_min", spread, hi=p["factor"])])


# ---------------------------------------------------------------------------
# Helmholtz scans and witness
# ---------------------------------------------------------------------------

HELMHOLTZ_TARGETS = {
    "helmholtz": (-2 / 3, 0.15),
    "helmholtz_drift": (-1.0, 0.15),
    "helmholtz_iQ": (-2 / 3, 0.2),
    "helmholtz_delta_drift": (-0.5, 0.15),
}


def _run_helmholtz(p, seed, workers):
    from .estimates import resolvent_ratio_scan

    v = p["variant"]
    deltas = p["deltas"] if v == "helmholtz_delta_drift" else [1.0]
    lams = p["lambdas"][:1] if len(deltas) > 1 else p["lambdas"]
    sc = resolvent_ratio_scan(p["n"], v, lams, deltas, p["n_samples"], p["grid_n"], p["box"], seed,
                              witness=(v == "helmholtz" and len(deltas) == 1))
    rows = [{"variant": v, sc.parameter: par, "max_ratio": val, "witness": w,
             "units": "Lq/Lq' ratio"} for par, val, w in sc.rows()]
    fits = [{"variant": v, "parameter": sc.parameter, "slope": sc.slope, "intercept": sc.intercept,
             "residual": sc.residual,
             "witness_slope": "" if sc.witness_slope is None else sc.witness_slope,
             "units": "log-log"}]
    target = p.get("expected") or HELMHOLTZ_TARGETS[v]
    gates = [Gate.around("slope", sc.slope, *target)]
    if sc.witness_slope is not None:
        gates.append(Gate.around("witness_slope", sc.witness_slope, -2 / 3, 0.2))
    return ExperimentResult(rows, fits, {"max_ratio": list(zip(sc.params, sc.values))}, gates)


def _run_witness(p, seed, workers):
    from .estimates import exponent_fit, sharpness_witness

    v = p["variant"]
    tube = pmap(lambda l: sharpness_witness(p["n"], v, l, p["grid_n"], p["box"]), p["lambdas"], workers)
    iso = pmap(lambda l: sharpness_witness(p["n"], v, l, p["grid_n"], p["box"], "isotropic"),
               p["lambdas"], workers)
    rows = [{"variant": v, "lambda": l, "tube": a, "isotropic": b, "units": "Lq/Lq' ratio"}
            for l, a, b in zip(p["lambdas"], tube, iso)]
    s_t = exponent_fit(list(zip(p["lambdas"], tube)))
    s_i = exponent_fit(list(zip(p["lambdas"], iso)))
    fits = [{"shape": "tube", "slope": s_t[0], "residual": s_t[2], "units": "log-log"},
            {"shape": "isotropic", "slope": s_i[0], "residual": s_i[2], "units": "log-log"}]
    gates = [Gate.around("tube_slope", s_t[0], *p["expected"])]
    return ExperimentResult(rows, fits, {"tube": list(zip(p["lambdas"], tube)),
                                         "isotropic": list(zip(p["lambdas"], iso))}, gates)


# ---------------------------------------------------------------------------
# Hilbert model
# ---------------------------------------------------------------------------

def hilbert_suite(seed: int, m: int = 16, pairs=((0.6, 0.3), (0.9, 0.1), (0.2, 0.7), (0.5, 0.45)),
                  ort_points=((0.5, 0.375), (0.8, 0.6)), comm_bound: float = 0.1) -> dict:
    """Norm, residual and almost-orthogonality measurements on one random path."""
    from .hilbert import (DyadicCalculus, bdiff_constant, commutator_constant, l1_atom,
                          atom_residual, near_commuting_path, ort_halving_ratio,
                          simple_parametrix_norms)

    path = near_commuting_path(m, seed, comm_bound=comm_bound)
    norms = [simple_parametrix_norms(path, t, s) for t, s in pairs]
    keys = ("H", "HB", "BH", "BHB")
    calc = DyadicCalculus.for_bound(40)
    rng = np.random.default_rng(seed)
    f = l1_atom(0.37, rng.normal(size=m) + 1j * rng.normal(size=m))
    ratios = [ort_halving_ratio(path, calc, t, s) for t, s in ort_points]
    return {
        "seed": seed,
        "max_norm": max(max(n[k] for k in keys) for n in norms),
        "residual": max(n["residual"] for n in norms),
        "bdiff": max(bdiff_constant(path, s, t) for t, s in pairs),
        "commutator": commutator_constant(path, times=np.linspace(0, 1, 9)),
        "dyadic_residual": atom_residual(path, f, "dyadic", calc, n_eval=9),
        "ort_ratio": max(max(r.values()) for r in ratios),
        "partition_defect": calc.partition_defect(),
    }


def commuting_check(seed: int = 0, m: int = 16) -> dict:
    """Residuals of both parametrices in the commuting constant case."""
    from .hilbert import DyadicCalculus, atom_residual, commuting_path, l1_atom, two_variation_atom

    path = commuting_path(m, seed)
    calc = DyadicCalculus.for_bound(30)
    rng = np.random.default_rng(seed)
    atoms = [l1_atom(0.37, rng.normal(size=m) + 1j * rng.normal(size=m)),
             two_variation_atom(path, [0.1, 0.45, 0.8], rng.normal(size=(2, m)))]
    return {"simple": max(atom_residual(path, a, "simple", n_eval=17) for a in atoms),
            "dyadic": max(atom_residual(path, a, "dyadic", calc, n_eval=17) for a in atoms)}


def _run_hilbert(p, seed, workers):
    comm = commuting_check(seed, p["m"])
    res = pmap(lambda s: hilbert_suite(s, p["m"]), p["seeds"], workers)
    rows = [dict(r, units="normalized operator norms") for r in res]
    gates = [Gate("commuting_simple_residual", comm["simple"], hi=1e-6),
             Gate("commuting_dyadic_residual", comm["dyadic"], hi=1e-6),
             Gate("max_norm", max(r["max_norm"] for r in res), hi=10),
             Gate("residual_over_bdiff", max(r["residual"] / r["bdiff"] for r in res), hi=10),
             Gate("partition_defect", max(r["partition_defect"] for r in res), hi=1e-10),
             Gate("ort_halving_ratio", max(r["ort_ratio"] for r in res), hi=2)]
    fits = [{"quantity": g.name, "value": g.value, "units": "dimensionless"} for g in gates]
    return ExperimentResult(rows, fits, {}, gates)


# ---------------------------------------------------------------------------
# V^2 / U^q
# ---------------------------------------------------------------------------

def _run_vp(p, seed, workers):
    from .hilbert import (embedding_bound, random_step_function, uq_decompose, v2_norm,
                          v2_norm_exhaustive)

    rng = np.random.default_rng(seed)
    kinds = ("gaussian", "walk", "alternating")
    rows = []
    worst_rec = worst_const = 0.0
    count_fail = 0
    for i in range(p["n_inputs"]):
        K = int(rng.integers(1, p["K_max"] + 1))
        m = int(rng.integers(1, p["m_max"] + 1))
        u = random_step_function(rng, K, m, kinds[i % 3])
        dec = uq_decompose(u, p["q"])
        worst_rec = max(worst_rec, dec.reconstruction_error / max(1.0, u.sup_norm()))
        worst_const = max(worst_const, dec.bound / dec.v2)
        count_fail += sum(dn > lim for _, dn, lim in dec.count_audit())
        if i < p["n_listed"]:
            for a, c, lev in zip(dec.atoms, dec.coefficients, dec.levels):
                ends = list(a.times[1:]) + [1.0]
                for s0, s1, v in zip(a.times, ends, a.values):
                    rows.append({"input": i, "level": lev, "t_start": s0, "t_end": s1,
                                 "coefficient": c, "vector_norm": float(np.linalg.norm(v)),
                                 "units": "L2 norm"})
    dp_fail = 0
    for _ in range(p["n_exhaustive"]):
        u = random_step_function(rng, int(rng.integers(1, 13)), int(rng.integers(1, 5)),
                                 kinds[int(rng.integers(3))])
        a, b = v2_norm(u), v2_norm_exhaustive(u)
        dp_fail += abs(a - b) > 1e-12 * max(1.0, b)
    limit = embedding_bound(p["q"])
    gates = [Gate("reconstruction_error", worst_rec, hi=1e-10),
             Gate("level_count_violations", count_fail, hi=0),
             Gate("embedding_constant", worst_const, hi=limit),
             Gate("dp_vs_exhaustive_mismatches", dp_fail, hi=0)]
    fits = [{"quantity": g.name, "value": g.value, "limit": g.hi, "units": "dimensionless"}
            for g in gates]
    return ExperimentResult(rows, fits, {}, gates)


# ---------------------------------------------------------------------------
# canonical form
# ---------------------------------------------------------------------------

def _run_canonical(p, seed, workers):
    from .canonical import canonical_table, residual_order, ssn_recursion

    N = p["N"]
    if p.get("q"):
        q = [complex(a, b) for a, b in p["q"]]
        if len(q) < N + 2:
            raise ValueError(f"q must list q_0..q_{N + 1}")
    else:
        rng = np.random.default_rng(seed)
        q = list(rng.uniform(0, 1, N + 2) * np.exp(2j * np.pi * rng.uniform(size=N + 2)))
    e, a, b = ssn_recursion(q, N, ring=p["ring"])
    res = residual_order(e, a, b, q, N)
    rows = [{"series": name, "k": k, "l": l, "re": v.real, "im": v.imag, "units": "coefficient"}
            for name, k, l, v in canonical_table(e, a, b)]
    return ExperimentResult(rows, [{"quantity": "residual_order", "value": res, "units": "coefficient"}],
                            {}, [Gate("residual_order", res, hi=p["tol"])])


REGISTRY: Dict[str, Experiment] = {}


def _register(name, anchor, props, required, defaults, runner):
    REGISTRY[name] = Experiment(name, anchor, _params(props, required), defaults, runner)


_register("flow", "Hamilton flow, symplecticity and O(sqrt t0) drift of the rescaled linearization",
          {"t0_list": _list(min_items=3), "lam": _POS, "eps": _NUM, "steps": _INT,
           "start_x": _NUM, "start_xi": _NUM, "symplectic_tol": _POS, "drift_slope": _tol()},
          ["t0_list"],
          {"lam": 16.0, "eps": 0.1, "steps": 4096, "start_x": 0.3, "start_xi": 1.0,
           "symplectic_tol": 1e-6, "drift_slope": [0.5, 0.2]}, _run_flow)
_register("fbi-selftest", "FBI transform is an isometry; T*T = I on band-limited data",
          {"n": _INT, "length": _POS, "density": _POS, "n_samples": _INT,
           "xi_box": _list(_NUM, 2), "x_box": _list(_NUM, 2), "plancherel": _tol(),
           "reconstruction_tol": _POS},
          ["n"],
          {"length": 32.0, "density": math.pi / 8, "n_samples": 20, "xi_box": [-18, 18],
           "x_box": [-7, 7], "plancherel": [0.999, 1.001], "reconstruction_tol": 1e-3}, _run_fbi)
_register("propagate", "L2 bound of the parametrix residual (D_t + a^w) K, uniform in lambda",
          {"lambdas": _list(min_items=2), "models": _list({"type": "string",
                                                           "enum": ["schrodinger", "variable_metric"]}),
           "n_samples": _INT, "ratio_max": _POS, "norm_max": _POS},
          ["lambdas"],
          {"models": ["schrodinger", "variable_metric"], "n_samples": 4, "ratio_max": 2.0,
           "norm_max": 1.05}, _run_propagate)
_register("decay-scan", "fixed-time L1 -> Linf kernel decay in lambda and |t| >= 1/lambda, rate set by the nonvanishing curvatures",
          {"model": {"type": "string", "enum": sorted(DECAY_DEFAULTS)}, "lambdas": _list(min_items=1),
           "times": _list(min_items=2), "d": _INT, "grid_n": _INT, "length": _POS, "xi_inner": _NUM,
           "normalization": {"type": "string", "enum": ["physical", "paper"]},
           "min_lambda_t": _NUM, "t_exponent": _tol(), "lam_exponent": _tol()},
          ["lambdas"],
          {"model": "schrodinger", "times": [1 / 32, 1 / 16, 1 / 8, 1 / 4, 1 / 2],
           "min_lambda_t": 1.0}, _run_decay)
_register("strichartz-scan", "lambda-normalized Strichartz constant l^rho LqLr stable in lambda",
          {"model": {"type": "string", "enum": ["schrodinger", "half_wave"]},
           "lambdas": _list(min_items=2), "n_samples": _INT, "factor": _POS},
          ["lambdas"],
          {"model": "schrodinger", "n_samples": 12, "factor": 3.0}, _run_strichartz)
_register("helmholtz-scan", "restriction-type bounds ||u||_q <~ lambda^{-e} ||P u||_q' for Helmholtz variants",
          {"variant": {"type": "string", "enum": sorted(HELMHOLTZ_TARGETS)}, "n": {"enum": [2, 3]},
           "lambdas": _list(min_items=1), "deltas": _list(min_items=1), "n_samples": _INT,
           "grid_n": _INT, "box": _POS, "expected": _tol()},
          ["lambdas"],
          {"variant": "helmholtz", "n": 2, "deltas": [1.0, 0.25, 0.0625], "n_samples": 64,
           "grid_n": 512, "box": 4.0}, _run_helmholtz)
_register("witness", "Knapp-type tube witness saturating the Helmholtz exponent",
          {"variant": {"type": "string", "enum": sorted(HELMHOLTZ_TARGETS)}, "n": {"enum": [2, 3]},
           "lambdas": _list(min_items=3), "grid_n": _INT, "box": _POS, "expected": _tol()},
          ["lambdas"],
          {"variant": "helmholtz", "n": 2, "grid_n": 512, "box": 4.0, "expected": [-2 / 3, 0.2]},
          _run_witness)
_register("hilbert-model", "simple and dyadic parametrices for D_t + A + iB with fixed-time bounds",
          {"seeds": _list({"type": "integer"}), "m": _INT},
          ["seeds"], {"m": 16}, _run_hilbert)
_register("vp-decompose", "V^2 embeds in U^q for q > 2 via the greedy level decomposition",
          {"n_inputs": _INT, "q": {"type": "number", "exclusiveMinimum": 2}, "K_max": _INT,
           "m_max": _INT, "n_listed": {"type": "integer", "minimum": 0}, "n_exhaustive": {"type": "integer", "minimum": 0}},
          ["n_inputs"],
          {"q": 4.0, "K_max": 64, "m_max": 8, "n_listed": 3, "n_exhaustive": 200}, _run_vp)
_register("canonical-form", "formal series e (xi_1 + i p_im) = xi_1 + a + i b by polynomial division",
          {"N": _INT, "q": _list({"type": "array", "items": _NUM, "minItems": 2, "maxItems": 2}),
           "ring": {"type": "string", "enum": ["float", "mp", "exact"]}, "tol": _POS},
          ["N"], {"ring": "mp", "tol": 1e-12}, _run_canonical)
