import csv
import json

import pytest

from parametrix_lab.cli import OUT_ENV, list_experiments, main, resolve_config, ConfigError
from parametrix_lab.experiments import REGISTRY

NAMES = {"flow", "fbi-selftest", "propagate", "decay-scan", "strichartz-scan", "helmholtz-scan",
         "witness", "hilbert-model", "vp-decompose", "canonical-form"}


def _write(tmp_path, cfg, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(cfg))
    return str(p)


def test_registry_names_and_anchors():
    assert set(REGISTRY) == NAMES
    for e in REGISTRY.values():
        assert e.anchor.strip()
        assert e.required


def test_list_is_stable(capsys):
    assert main(["list"]) == 0
    first = capsys.readouterr().out
    assert main(["list"]) == 0
    assert capsys.readouterr().out == first == list_experiments()
    names = [line.split("\t")[0] for line in first.splitlines()]
    assert names == sorted(NAMES)


def test_missing_required_key_exits_2_without_outputs(tmp_path, capsys):
    cfg = _write(tmp_path, {"schema_version": 1, "experiment": "decay-scan", "params": {}})
    out = tmp_path / "out"
    assert main(["run", cfg, "--out", str(out)]) == 2
    assert "lambdas" in capsys.readouterr().err
    assert not out.exists()


@pytest.mark.parametrize("cfg", [
    {"schema_version": 2, "experiment": "flow", "params": {"t0_list": [0.1]}},
    {"schema_version": 1, "experiment": "nope", "params": {}},
    {"schema_version": 1, "experiment": "canonical-form", "params": {"N": 3, "bogus": 1}},
    {"schema_version": 1, "experiment": "canonical-form", "params": {"N": 3}, "extra": 0},
])
def test_schema_violations_rejected(cfg):
    with pytest.raises(ConfigError):
        resolve_config(cfg)


def test_unreadable_config(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text("{not json")
    assert main(["run", str(p), "--out", str(tmp_path / "o")]) == 2


def test_decay_scan_default_run(tmp_path):
    cfg = _write(tmp_path, {"schema_version": 1, "experiment": "decay-scan",
                            "params": {"lambdas": [32, 64, 128]}})
    out = tmp_path / "out"
    assert main(["run", cfg, "--out", str(out)]) == 0
    rows = list(csv.DictReader(open(out / "results.csv")))
    assert len(rows) >= 12
    assert list(rows[0])[-1] == "units"
    fit = next(csv.DictReader(open(out / "fit.csv")))
    assert float(fit["t_exponent"]) == pytest.approx(-0.5, abs=0.05)
    resolved = json.loads((out / "resolved_config.json").read_text())
    assert resolved["params"]["model"] == "schrodinger"
    assert resolved["anchor"] == REGISTRY["decay-scan"].anchor
    assert (out / "sup_lam64.dat").read_text().startswith("# log10")


def test_results_independent_of_workers(tmp_path):
    cfg = _write(tmp_path, {"schema_version": 1, "experiment": "strichartz-scan",
                            "params": {"lambdas": [8, 16], "n_samples": 3}, "seed": 4})
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["run", cfg, "--out", str(a), "--workers", "1"]) == 0
    assert main(["run", cfg, "--out", str(b), "--workers", "2"]) == 0
    for name in ("results.csv", "fit.csv", "gates.csv", "resolved_config.json"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_seed_override_recorded(tmp_path):
    cfg = _write(tmp_path, {"schema_version": 1, "experiment": "canonical-form", "params": {"N": 3}})
    out = tmp_path / "o"
    assert main(["run", cfg, "--out", str(out), "--seed", "11"]) == 0
    assert json.loads((out / "resolved_config.json").read_text())["seed"] == 11


def test_output_root_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv(OUT_ENV, str(tmp_path / "root"))
    cfg = _write(tmp_path, {"schema_version": 1, "experiment": "canonical-form", "params": {"N": 3}})
    assert main(["run", cfg]) == 0
    assert (tmp_path / "root" / "canonical-form" / "results.csv").exists()


def test_output_dir_in_config(tmp_path):
    dest = tmp_path / "here"
    cfg = _write(tmp_path, {"schema_version": 1, "experiment": "canonical-form", "params": {"N": 2},
                            "output_dir": str(dest)})
    assert main(["run", cfg]) == 0
    assert "output_dir" not in json.loads((dest / "resolved_config.json").read_text())


def test_gate_failure_exits_1(tmp_path, capsys):
    cfg = _write(tmp_path, {"schema_version": 1, "experiment": "decay-scan",
                            "params": {"lambdas": [32, 64], "t_exponent": [0.5, 0.01]}})
    out = tmp_path / "out"
    assert main(["run", cfg, "--out", str(out)]) == 1
    err = capsys.readouterr().err
    assert err.startswith("FAIL t_exponent: value=")
    assert "allowed=[0.49" in err
    assert (out / "gates.csv").exists()


def test_bad_workers_and_usage():
    assert main(["run", "x.json", "--workers", "0"]) == 2
    assert main([]) == 2
