import hashlib
import json
import subprocess
import sys

import pytest

import oracles as orc
from pathmeasure import __version__
from pathmeasure.cli import load_config, main

DECAY = {
    "experiment": "decay",
    "parameters": {"masses": [10.0, 3.0, 2.0], "c": 1.0, "t_I": 0.0, "t_F": 10.0,
                   "x1": [0.0], "x2": [2.0], "x3": [-3.0]},
    "seed": 0,
}

BERNOULLI = {"experiment": "bernoulli", "parameters": {"alpha": 0.5, "n_sequences": 20, "n_digits": 2000}, "seed": 3}


def write(tmp_path, cfg, name="cfg.json"):
    path = tmp_path / name
    path.write_text(cfg if isinstance(cfg, str) else json.dumps(cfg, indent=2))
    return path


def run_cli(tmp_path, cfg, out="out", extra=()):
    path = write(tmp_path, cfg)
    return main(["--config", str(path), "--output", str(tmp_path / out), *extra])


def manifest(tmp_path, out="out"):
    return json.loads((tmp_path / out / "manifest.json").read_text())


def test_decay_run(tmp_path, capsys):
    assert run_cli(tmp_path, DECAY) == 0
    vertex = json.loads((tmp_path / "out" / "vertex.json").read_text())
    assert vertex["t"] == pytest.approx(orc.DECAY_T, abs=1e-12)
    assert vertex["p2"] == pytest.approx([orc.DECAY_P2])
    summary = json.loads(capsys.readouterr().out)
    assert summary["t"] == pytest.approx(8.267949, abs=1e-6)


def test_manifest_lists_every_artifact_with_its_hash(tmp_path):
    assert run_cli(tmp_path, BERNOULLI) == 0
    man = manifest(tmp_path)
    assert man["version"] == __version__
    assert man["experiment"] == "bernoulli"
    assert man["wall_time_s"] >= 0
    files = sorted(p.name for p in (tmp_path / "out").iterdir() if p.name != "manifest.json")
    assert sorted(a["path"] for a in man["artifacts"]) == files
    for art in man["artifacts"]:
        digest = hashlib.sha256((tmp_path / "out" / art["path"]).read_bytes()).hexdigest()
        assert digest == art["sha256"]
    effective = {"experiment": "bernoulli", "parameters": BERNOULLI["parameters"], "seed": 3}
    assert man["config_sha256"] == hashlib.sha256(json.dumps(effective, sort_keys=True).encode()).hexdigest()


def test_bernoulli_summary(tmp_path):
    cfg = {"experiment": "bernoulli", "parameters": {"alpha": 0.5, "n_sequences": 200, "n_digits": 10000}}
    assert run_cli(tmp_path, cfg) == 0
    summary = manifest(tmp_path)["summary"]
    assert 0.49 <= summary["mean_zero_frequency"] <= 0.51
    assert summary["orbit_frequencies"]["1/3"] == 0.5


@pytest.mark.parametrize("cfg", [
    BERNOULLI,
    {"experiment": "scatter", "parameters": {"potential": {"type": "hard_sphere", "R": 1.0}, "energy": 1.0,
                                             "n_scan": 50}},
    {"experiment": "correlate", "parameters": {"n_samples": 500}, "seed": 5},
])
def test_repeated_runs_are_byte_identical(tmp_path, cfg):
    assert run_cli(tmp_path, cfg, "a") == 0
    assert run_cli(tmp_path, cfg, "b") == 0
    a, b = manifest(tmp_path, "a"), manifest(tmp_path, "b")
    assert a["artifacts"] == b["artifacts"]
    for art in a["artifacts"]:
        assert (tmp_path / "a" / art["path"]).read_bytes() == (tmp_path / "b" / art["path"]).read_bytes()


def test_seed_flag_overrides_config(tmp_path):
    assert run_cli(tmp_path, BERNOULLI, "a", ["--seed", "11"]) == 0
    assert run_cli(tmp_path, BERNOULLI, "b") == 0
    assert manifest(tmp_path, "a")["seed"] == 11
    assert manifest(tmp_path, "b")["seed"] == 3
    assert (tmp_path / "a" / "frequencies.csv").read_bytes() != (tmp_path / "b" / "frequencies.csv").read_bytes()


def test_missing_field_names_field_and_line(tmp_path, capsys):
    cfg = '{\n  "experiment": "decay",\n  "parameters": {\n    "t_I": 0.0,\n    "t_F": 10.0\n  }\n}\n'
    assert run_cli(tmp_path, cfg) == 2
    err = capsys.readouterr().err
    assert "parameters.masses" in err
    assert "line 3" in err


def test_wrong_type_is_a_config_error(tmp_path, capsys):
    bad = json.loads(json.dumps(DECAY))
    bad["parameters"]["t_F"] = "ten"
    assert run_cli(tmp_path, bad) == 2
    assert "parameters.t_F" in capsys.readouterr().err


def test_invalid_json_reports_location(tmp_path, capsys):
    assert run_cli(tmp_path, '{"experiment": "decay",\n "parameters": {,}}') == 2
    assert "line 2" in capsys.readouterr().err


def test_unknown_fields_and_experiments(tmp_path, capsys):
    assert run_cli(tmp_path, {"experiment": "decay", "parameters": {}, "colour": "red"}) == 2
    assert "colour" in capsys.readouterr().err
    assert run_cli(tmp_path, {"experiment": "teleport"}) == 2
    assert main(["decay", "--output", str(tmp_path / "o")]) == 2


def test_experiment_mismatch(tmp_path):
    path = write(tmp_path, DECAY)
    assert main(["bernoulli", "--config", str(path), "--output", str(tmp_path / "o")]) == 2


def test_domain_failure_exits_2(tmp_path, capsys):
    cfg = json.loads(json.dumps(DECAY))
    cfg["parameters"]["masses"] = [5.0, 3.0, 2.0]
    assert run_cli(tmp_path, cfg) == 2
    assert "mass defect" in capsys.readouterr().err


def test_numerical_failure_exits_3(tmp_path, capsys):
    cfg = {"experiment": "propagate", "parameters": {
        "masses": [1.0, 1.0], "terms": [{"type": "pair", "i": 0, "j": 1,
                                         "shape": {"type": "screened_coulomb", "k": -1.0, "a": 10.0}}],
        "x0": [-1.0, 1.0], "p0": [0.0, 0.0], "t_end": 10.0}}
    assert run_cli(tmp_path, cfg) == 3
    assert "IntegrationError" in capsys.readouterr().err


def test_io_failure_exits_4(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    path = write(tmp_path, DECAY)
    assert main(["--config", str(path), "--output", str(blocker)]) == 4
    assert main(["--config", str(tmp_path / "absent.json"), "--output", str(tmp_path / "o")]) == 4


def test_threads_must_be_positive(tmp_path):
    assert run_cli(tmp_path, DECAY, extra=["--threads", "0"]) == 2


def test_load_config_fills_defaults(tmp_path):
    cfg, text = load_config(write(tmp_path, {"experiment": "correlate"}))
    assert cfg["parameters"] == {}
    assert '"experiment"' in text


def test_propagate_artifacts(tmp_path):
    cfg = {"experiment": "propagate", "parameters": {
        "masses": [1.0], "dimension": 2, "x0": [1.0, -3.0], "p0": [0.7, -1.1], "t_end": 1.0,
        "n_samples": 11, "p_limit": True}}
    assert run_cli(tmp_path, cfg) == 0
    summary = manifest(tmp_path)["summary"]
    assert summary["p_limit"] == pytest.approx([0.7, -1.1], abs=1e-9)
    header = (tmp_path / "out" / "trajectory.csv").read_text().splitlines()[0]
    assert header == "t,x1,x2,p1,p2,energy"
    assert (tmp_path / "out" / "p_limit.csv").exists()


def test_semiclassical_artifacts(tmp_path):
    cfg = {"experiment": "semiclassical", "parameters": {"masses": [1.0], "omega": 1.0,
                                                         "times": [0.5, 2.0], "endpoints": [[0.3], [1.0]]}}
    assert run_cli(tmp_path, cfg) == 0
    assert manifest(tmp_path)["summary"]["max_rel_error"] <= 1e-9


def test_fringes_artifacts(tmp_path):
    cfg = {"experiment": "fringes", "parameters": {"L": 10.0, "s": 10.0, "p": 1.0, "screen": {"n": 61}}}
    assert run_cli(tmp_path, cfg) == 0
    summary = manifest(tmp_path)["summary"]
    assert summary["spacing_rel_error"] < 0.02
    assert summary["rho_FC_spread"] <= 1e-10


def test_module_entry_point(tmp_path):
    path = write(tmp_path, DECAY)
    proc = subprocess.run([sys.executable, "-m", "pathmeasure", "--config", str(path), "--output", str(tmp_path / "o")],
                          capture_output=True, text=True, env={"PATHMEASURE_LOG": "debug", "PATH": ""})
    assert proc.returncode == 0, proc.stderr
    assert json.loads(proc.stdout)["method"] == "closed_form"
