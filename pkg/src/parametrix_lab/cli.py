"""Command line runner: ``parametrix-lab run <config.json>`` and ``parametrix-lab list``.

Exit status is 0 when every tolerance gate passes, 1 when a gate fails and
2 on usage or schema errors (in which case nothing is written).
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import jsonschema

from .experiments import REGISTRY, ExperimentResult

__all__ = ["CONFIG_SCHEMA", "SCHEMA_VERSION", "OUT_ENV", "load_config", "resolve_config",
           "write_outputs", "list_experiments", "run", "main"]

SCHEMA_VERSION = 1
OUT_ENV = "PARAMETRIX_LAB_OUT"

CONFIG_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "properties": {
        "schema_version": {"const": SCHEMA_VERSION},
        "experiment": {"enum": sorted(REGISTRY)},
        "params": {"type": "object"},
        "seed": {"type": "integer", "minimum": 0},
        "output_dir": {"type": "string", "minLength": 1},
    },
    "required": ["schema_version", "experiment", "params"],
    "additionalProperties": False,
}


class ConfigError(ValueError):
    """Config failed to parse or validate."""


def _fmt(v) -> str:
    if isinstance(v, bool):
        return str(int(v))
    if isinstance(v, (int,)) and not isinstance(v, bool):
        return str(v)
    if isinstance(v, float) or hasattr(v, "dtype"):
        x = float(v)
        return repr(x) if math.isfinite(x) else str(x)
    return str(v)


def _csv_text(rows: Sequence[Dict[str, object]]) -> str:
    cols: List[str] = []
    for r in rows:
        for k in r:
            if k not in cols:
                cols.append(k)
    if "units" in cols:
        cols.remove("units")
    cols.append("units")
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    for r in rows:
        w.writerow([_fmt(r.get(c, "")) for c in cols])
    return buf.getvalue()


def load_config(path) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc


def resolve_config(cfg: dict, seed: Optional[int] = None) -> dict:
    """Validate ``cfg`` and fill experiment defaults.

    Raises
    ------
    ConfigError
        On any schema violation, including unknown or missing parameters.
    """
    try:
        jsonschema.validate(cfg, CONFIG_SCHEMA)
        exp = REGISTRY[cfg["experiment"]]
        jsonschema.validate(cfg["params"], exp.schema)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"schema violation at {where}: {exc.message}") from exc
    params = dict(exp.defaults)
    params.update(cfg["params"])
    out = {"schema_version": SCHEMA_VERSION, "experiment": exp.name, "anchor": exp.anchor,
           "params": params, "seed": cfg.get("seed", 0) if seed is None else seed}
    if "output_dir" in cfg:
        out["output_dir"] = cfg["output_dir"]
    return out


def _out_dir(resolved: dict, override: Optional[str]) -> Path:
    if override:
        return Path(override)
    if "output_dir" in resolved:
        return Path(resolved["output_dir"])
    return Path(os.environ.get(OUT_ENV, "runs")) / resolved["experiment"]


def write_outputs(result: ExperimentResult, resolved: dict, out: Path) -> List[Path]:
    out.mkdir(parents=True, exist_ok=True)
    written = []

    def put(name, text):
        p = out / name
        p.write_text(text, encoding="utf-8")
        written.append(p)

    put("results.csv", _csv_text(result.rows))
    put("fit.csv", _csv_text(result.fits))
    put("gates.csv", _csv_text([{"gate": g.name, "value": g.value, "lo": g.lo, "hi": g.hi,
                                 "passed": g.passed, "units": "as in fit.csv"} for g in result.gates]))
    cfg = {k: v for k, v in resolved.items() if k != "output_dir"}
    put("resolved_config.json", json.dumps(cfg, indent=2, sort_keys=True) + "\n")
    for name, pts in sorted(result.plots.items()):
        lines = ["# log10(x) log10(y)"]
        for x, y in pts:
            if x > 0 and y > 0:
                lines.append(f"{math.log10(x)!r} {math.log10(y)!r}")
        put(f"{name}.dat", "\n".join(lines) + "\n")
    return written


def list_experiments(stream=None) -> str:
    """Registry table: name, required keys, anchor.  Stable across runs."""
    lines = []
    for name in sorted(REGISTRY):
        e = REGISTRY[name]
        lines.append(f"{name}\t{','.join(e.required)}\t{e.anchor}")
    text = "\n".join(lines) + "\n"
    if stream is not None:
        stream.write(text)
    return text


def run(config_path, seed: Optional[int] = None, workers: int = 1, out: Optional[str] = None) -> int:
    try:
        resolved = resolve_config(load_config(config_path), seed)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    exp = REGISTRY[resolved["experiment"]]
    try:
        result = exp.runner(resolved["params"], resolved["seed"], workers)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    dest = _out_dir(resolved, out)
    write_outputs(result, resolved, dest)
    failing = [g for g in result.gates if not g.passed]
    for g in failing:
        print(f"FAIL {g.name}: value={g.value!r} allowed=[{g.lo!r}, {g.hi!r}]", file=sys.stderr)
    print(f"{exp.name}: {'pass' if not failing else 'FAIL'} -> {dest}")
    return 1 if failing else 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="parametrix-lab", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run one experiment from a JSON config")
    r.add_argument("config")
    r.add_argument("--seed", type=int, default=None, help="override the config seed")
    r.add_argument("--workers", type=int, default=1, help="worker threads (results do not depend on it)")
    r.add_argument("--out", default=None,
                   help=f"output directory (default: config output_dir, then ${OUT_ENV}/<experiment>)")
    sub.add_parser("list", help="list registered experiments")
    return ap


def main(argv: Optional[Sequence[str]] = None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if args.command == "list":
        list_experiments(sys.stdout)
        return 0
    if args.workers < 1:
        print("error: --workers must be positive", file=sys.stderr)
        return 2
    return run(args.config, args.seed, args.workers, args.out)


if __name__ == "__main__":
    sys.exit(main())
