import json

import pytest

from rbgd.bench import reference
from rbgd.bench.cli import ConfigError, load_config, main, reproduction_grid

NEPV_TOML = """
name = "tiny"
seeds = [0]

[problem]
kind = "nepv"
m = 50
p = 5

[[methods]]
method = "R_RBGD"
"""


def write(tmp_path, text, name="exp.toml"):
    path = tmp_path / name
    path.write_text(text)
    return path


def test_minimal_run_writes_outputs(tmp_path):
    cfg = write(tmp_path, NEPV_TOML)
    out = tmp_path / "out"
    assert main(["run", str(cfg), "--out", str(out)]) == 0
    files = sorted(p.name for p in (out / "tiny").iterdir())
    assert files == ["R_RBGD_seed0.csv", "report.json", "table.txt"]
    doc = json.loads((out / "tiny" / "report.json").read_text())
    assert doc["cells"][0]["status"] == "Converged"
    assert doc["cells"][0]["final_grad_norm"] <= 1e-4


def test_json_config_and_seed_override(tmp_path):
    cfg = {"name": "js", "problem": {"kind": "sensing", "m": 12, "r": 2, "N": 30},
           "methods": [{"method": "P_RBGD", "max_iters": 5}, {"method": "RSD", "max_iters": 5}]}
    path = write(tmp_path, json.dumps(cfg), "exp.json")
    out = tmp_path / "o"
    code = main(["run", str(path), "--out", str(out), "--seed-override", "3", "4"])
    assert code in (0, 1)
    names = {p.name for p in (out / "js").iterdir()}
    assert {"P_RBGD_seed3.csv", "P_RBGD_seed4.csv", "RSD_seed3.csv", "RSD_seed4.csv"} <= names


@pytest.mark.parametrize("text", [
    "not = [valid",
    NEPV_TOML.replace('kind = "nepv"', 'kind = "poisson"'),
    NEPV_TOML.replace("p = 5", "p = 500"),
    NEPV_TOML + "\n[extra]\nx = 1\n",
    NEPV_TOML.replace('method = "R_RBGD"', 'method = "R_RBGD"\nbogus = 1'),
    NEPV_TOML.replace('method = "R_RBGD"', 'method = "newton"'),
    NEPV_TOML.replace("seeds = [0]", "seeds = [-1]"),
])
def test_malformed_config_exit_2(tmp_path, text):
    assert main(["run", str(write(tmp_path, text)), "--out", str(tmp_path / "o")]) == 2
    assert not (tmp_path / "o").exists()


def test_stochastic_on_fixed_rank_rejected(tmp_path):
    text = """
seeds = [0]
[problem]
kind = "sensing"
m = 20
r = 2
[[methods]]
method = "S_P_RBGD"
fixed_alpha = 0.1
batch_size = 10
"""
    assert main(["run", str(write(tmp_path, text)), "--out", str(tmp_path / "o")]) == 2
    ok = text.replace('r = 2', 'r = 2\nmanifold = "stiefel"').replace(
        "batch_size = 10", "batch_size = 10\nmax_iters = 5")
    assert main(["run", str(write(tmp_path, ok)), "--out", str(tmp_path / "o")]) in (0, 1)


def test_missing_file_and_bad_args(tmp_path):
    assert main(["run", str(tmp_path / "nope.toml")]) == 2
    assert main(["frobnicate"]) == 2
    assert main(["reproduce", "table9"]) == 2


def test_no_timing_is_byte_deterministic(tmp_path):
    cfg = write(tmp_path, NEPV_TOML)
    outs = []
    for k in range(2):
        out = tmp_path / f"o{k}"
        assert main(["run", str(cfg), "--out", str(out), "--no-timing"]) == 0
        outs.append(out / "tiny")
    for name in ("R_RBGD_seed0.csv", "report.json"):
        assert (outs[0] / name).read_bytes() == (outs[1] / name).read_bytes()
    assert all(l.endswith(",0") for l in (outs[0] / "R_RBGD_seed0.csv").read_text().splitlines()[1:])


def test_parallel_jobs_match_serial(tmp_path):
    text = NEPV_TOML.replace("seeds = [0]", "seeds = [0, 1]") + '\n[[methods]]\nmethod = "P_RBGD"\n'
    cfg = write(tmp_path, text)
    main(["run", str(cfg), "--out", str(tmp_path / "a"), "--no-timing"])
    main(["run", str(cfg), "--out", str(tmp_path / "b"), "--no-timing", "--jobs", "2"])
    for p in (tmp_path / "a" / "tiny").iterdir():
        assert p.read_bytes() == (tmp_path / "b" / "tiny" / p.name).read_bytes()


def test_load_config_defaults(tmp_path):
    exp = load_config(write(tmp_path, NEPV_TOML.replace('name = "tiny"\n', "")))
    assert exp.name == "exp" and exp.seeds == [0] and exp.jobs == 1
    with pytest.raises(ConfigError):
        load_config(write(tmp_path, "seeds = [0]\n", "x.toml"))


def test_reproduction_grids():
    [t2] = reproduction_grid("table2", "desk")
    assert (t2.problem["m"], t2.problem["p"], t2.seeds) == (5000, 10, [0, 1, 2])
    assert len(reproduction_grid("table1", "paper")) == len(reference.TABLE1)
    assert len(reproduction_grid("fig-sensing", "paper")) == 12
    with pytest.raises(ConfigError):
        reproduction_grid("table3", "desk")


def test_reference_lookup():
    assert reference.reference_fval("table2", 5000, 10) == "2.8429e+02"
    assert float(reference.reference_fval("table1", 500, 50)) == 27674.0
    assert reference.reference_iters("table1", 500, 50, "RSD") == 7566
