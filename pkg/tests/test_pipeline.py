import csv
import json
import math

import pytest
import yaml

from discrest import ConfigError
from discrest.pipeline import ExperimentConfig, derive_seed, emit_report, plan, run_config

STOCHASTIC = {
    "seed": 17,
    "pipeline": [
        {"name": "lam", "op": "gen_separated_sample", "surface": "paraboloid", "n": 2, "delta": "1/64"},
        {"name": "l4", "op": "lpnorm", "points": "lam", "p": 4, "R": 80, "samples": 5000},
        {"name": "sweep", "op": "energy_sweep", "generator": {"kind": "lattice_subset", "n": 3, "N": 6},
         "sizes": [10, 20, 40], "k": 2},
        {"name": "slope", "op": "fit", "pairs": "sweep"},
        {"name": "sph", "op": "gen_sphere_rational", "n": 3, "q": 5, "size": 20},
        {"name": "gap", "op": "min_energy_gap", "points": "lam"},
    ],
}


def test_empty_pipeline(tmp_path):
    rep = run_config({"pipeline": []})
    assert rep.steps == {} and not rep.partial and rep.exit_code == 0
    emit_report(rep, "json", tmp_path)
    assert json.loads((tmp_path / "report.json").read_text())["schema_version"]


def test_energy_example():
    rep = run_config({"pipeline": [
        {"name": "lam", "op": "gen_lattice_paraboloid", "n": 2, "N": 1},
        {"name": "e2", "op": "energy", "points": "lam", "k": 2},
    ]})
    assert rep.steps["e2"]["result"]["value"] == 15


def test_cycle_is_config_error():
    cfg = {"pipeline": [
        {"name": "a", "op": "energy", "points": "b"},
        {"name": "b", "op": "fit", "pairs": "a"},
    ]}
    with pytest.raises(ConfigError):
        run_config(cfg)


@pytest.mark.parametrize("doc", [
    {"pipeline": [{"name": "a", "op": "nope"}]},
    {"pipeline": [{"name": "a", "op": "energy"}, {"name": "a", "op": "energy"}]},
    {"pipeline": "x"},
    {"pipeline": [], "colour": 1},
    {"pipeline": [], "format": "xml"},
])
def test_invalid_configs(doc):
    with pytest.raises(ConfigError):
        plan(ExperimentConfig.from_dict(doc))


def test_topological_order():
    cfg = ExperimentConfig.from_dict({"pipeline": [
        {"name": "e", "op": "energy", "points": "lam"},
        {"name": "lam", "op": "gen_lattice_paraboloid", "n": 2, "N": 1},
    ]})
    assert plan(cfg) == ["lam", "e"]
    assert run_config(cfg).steps["e"]["result"]["value"] == 15


def test_failed_step_is_partial():
    rep = run_config({"pipeline": [
        {"name": "big", "op": "gen_lattice_subset", "n": 3, "N": 20, "size": 300},
        {"name": "gap", "op": "min_energy_gap", "points": "big"},
        {"name": "after", "op": "fit", "pairs": "gap"},
        {"name": "ok", "op": "gen_lattice_paraboloid", "n": 2, "N": 1},
        {"name": "alias", "op": "lpnorm", "points": "ok", "method": "torus", "p": 4, "grid": 3},
    ]})
    assert rep.partial
    assert rep.steps["gap"]["status"] == "failed" and rep.steps["gap"]["exit_code"] == 3
    assert rep.steps["after"]["status"] == "skipped"
    assert rep.steps["ok"]["status"] == "ok"
    assert rep.steps["alias"]["exit_code"] == 4
    assert {w["step"] for w in rep.warnings} == {"gap", "alias"}
    assert rep.exit_code == 4


def test_seed_derivation():
    assert derive_seed(1, "a") == derive_seed(1, "a")
    assert derive_seed(1, "a") != derive_seed(1, "b")
    assert derive_seed(1, "a") != derive_seed(2, "a")


def test_byte_identical_reports(tmp_path):
    for d in ("one", "two"):
        emit_report(run_config(STOCHASTIC), "json", tmp_path / d)
        emit_report(run_config(STOCHASTIC), "csv", tmp_path / d)
    for name in ("report.json", "results.csv", "sweep_sweep.csv", "lam.pts", "sph.pts"):
        assert (tmp_path / "one" / name).read_bytes() == (tmp_path / "two" / name).read_bytes()
    changed = dict(STOCHASTIC, seed=18)
    emit_report(run_config(changed), "json", tmp_path / "three")
    assert (tmp_path / "three" / "report.json").read_bytes() != (tmp_path / "one" / "report.json").read_bytes()


def test_sweep_csv_columns(tmp_path):
    emit_report(run_config(STOCHASTIC), "csv", tmp_path)
    with open(tmp_path / "sweep_sweep.csv") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["size", "k", "energy", "log_size", "log_energy"]
    assert [int(r[0]) for r in rows[1:]] == [10, 20, 40]
    for r in rows[1:]:
        assert float(r[3]) == math.log(int(r[0])) and float(r[4]) == math.log(int(r[2]))


def test_results_csv_shape(tmp_path):
    emit_report(run_config(STOCHASTIC), "csv", tmp_path)
    with open(tmp_path / "results.csv") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["step", "field", "value"]
    fields = {(r[0], r[1]) for r in rows[1:]}
    assert ("l4", "value") in fields and ("slope", "slope") in fields


def test_timings_outside_report(tmp_path):
    emit_report(run_config(STOCHASTIC), "json", tmp_path)
    doc = json.loads((tmp_path / "report.json").read_text())
    assert "timings" not in doc
    assert set(json.loads((tmp_path / "timings.json").read_text())) == {s["name"] for s in STOCHASTIC["pipeline"]}


def test_load_yaml_with_point_file(tmp_path):
    (tmp_path / "pts.txt").write_text("n=2 surface=paraboloid delta=none\n-1/1 1/1\n0/1 0/1\n1/1 1/1\n")
    (tmp_path / "cfg.yaml").write_text(yaml.safe_dump({"pipeline": [{"name": "e", "op": "energy", "points": "pts.txt"}]}))
    rep = run_config(ExperimentConfig.load(tmp_path / "cfg.yaml"))
    assert rep.steps["e"]["result"]["value"] == 15


def test_missing_point_file(tmp_path):
    rep = run_config(ExperimentConfig.from_dict({"pipeline": [{"name": "e", "op": "energy", "points": "nope.txt"}]},
                                                tmp_path))
    assert rep.steps["e"]["status"] == "failed" and rep.exit_code == 2


def test_emit_unwritable(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    with pytest.raises(OSError):
        emit_report(run_config({"pipeline": []}), "json", blocker / "sub")
