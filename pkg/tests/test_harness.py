import json
import os

import pytest

from multiwell.harness import (
    EXIT_CONFIG,
    EXIT_INFEASIBLE,
    EXIT_OK,
    PRESETS,
    config_hash,
    list_presets,
    main,
    run,
)

DW = {"name": "scalar-double-well", "domain": {"lo": [-1.0], "hi": [1.0]}}


def _write_config(tmp_path, payload, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(payload))
    return str(path)


def test_presets_listing(capsys):
    names = [n for n, _ in list_presets()]
    assert names == sorted(names)
    for expected in ("double-well-sweep", "moving-wells-1d", "dirichlet-1d",
                     "counterexample"):
        assert expected in names
    assert main(["presets"]) == EXIT_OK
    out = capsys.readouterr().out
    assert "double-well-sweep" in out
    # the shipped sweep presets produce four-row tables
    for name in ("double-well-sweep", "moving-wells-1d", "dirichlet-1d"):
        assert len(PRESETS[name]["config"]["epsilons"]) == 4


def test_geodesic_command(tmp_path):
    cfg = _write_config(tmp_path, {
        "potential": DW, "x": [0.0], "p": [-1.0], "q": [1.0], "nodes": 96})
    out = str(tmp_path / "run")
    assert main(["geodesic", "--config", cfg, "--out", out]) == EXIT_OK
    result = json.loads((tmp_path / "run" / "geodesic.json").read_text())
    assert result["cost"] == pytest.approx(8.0 / 3.0, rel=1e-3)
    manifest = json.loads((tmp_path / "run" / "manifest.json").read_text())
    listed = set(manifest["files"])
    for root, _, names in os.walk(out):
        for f in names:
            assert os.path.relpath(os.path.join(root, f), out) in listed


def test_profile_command(tmp_path):
    cfg = _write_config(tmp_path, {
        "potential": DW, "x": [0.0], "p": [-1.0], "q": [1.0], "eps": 0.05})
    out = str(tmp_path / "prof")
    assert main(["profile", "--config", cfg, "--out", out]) == EXIT_OK
    meta = json.loads((tmp_path / "prof" / "profile.json").read_text())
    assert meta["tau"] > 0
    header = (tmp_path / "prof" / "profile.csv").read_text().splitlines()[0]
    assert header.split(",") == ["t", "g", "u1", "integrand"]


def test_minimize_command(tmp_path):
    cfg = _write_config(tmp_path, {
        "potential": DW, "eps": 0.05,
        "constraint": {"type": "mass", "value": [0.0]}})
    out = str(tmp_path / "min")
    assert main(["minimize", "--config", cfg, "--out", out]) == EXIT_OK
    meta = json.loads((tmp_path / "min" / "minimize.json").read_text())
    assert meta["energy"] == pytest.approx(8.0 / 3.0, rel=0.05)
    assert meta["mass_error"] <= 1e-10


def test_sweep_preset_and_determinism(tmp_path):
    out1, out2 = str(tmp_path / "a"), str(tmp_path / "b")
    cfg = json.loads(json.dumps(PRESETS["double-well-sweep"]["config"]))
    cfg["epsilons"] = [0.1, 0.05]
    code, _ = run("sweep", cfg, out1)
    assert code == EXIT_OK
    code, _ = run("sweep", cfg, out2)
    assert code == EXIT_OK
    for name in ("sweep.csv", "final_field.csv"):
        a = (tmp_path / "a" / name).read_bytes()
        b = (tmp_path / "b" / name).read_bytes()
        assert a == b
    rows = (tmp_path / "a" / "sweep.csv").read_text().splitlines()
    assert rows[0] == "epsilon,energy,interface,iterations"
    assert len(rows) == 3


def test_sweep_parallel_rows_match_serial(tmp_path):
    cfg = {"potential": DW, "epsilons": [0.1, 0.05],
           "constraint": {"type": "mass", "value": [0.0]},
           "warm_start": False}
    code, _ = run("sweep", cfg, str(tmp_path / "serial"), threads=1)
    assert code == EXIT_OK
    code, _ = run("sweep", cfg, str(tmp_path / "par"), threads=2)
    assert code == EXIT_OK
    assert (tmp_path / "serial" / "sweep.csv").read_bytes() == \
        (tmp_path / "par" / "sweep.csv").read_bytes()


def test_counterexample_preset(tmp_path):
    out = str(tmp_path / "cex")
    assert main(["geodesic", "--preset", "counterexample", "--out", out]) == EXIT_OK
    lines = (tmp_path / "cex" / "well_scan.csv").read_text().splitlines()
    header = lines[0].split(",")
    assert header[-2:] == ["reference_bound", "within_bound"]
    for line in lines[1:]:
        assert line.split(",")[-1] == "1"


def test_sharp_command(tmp_path):
    cfg = _write_config(tmp_path, {
        "potential": DW, "jumps": [0.0], "labels": [1, 2]})
    out = str(tmp_path / "sharp")
    assert main(["sharp", "--config", cfg, "--out", out]) == EXIT_OK
    data = json.loads((tmp_path / "sharp" / "sharp.json").read_text())
    assert data["F0"] == pytest.approx(8.0 / 3.0, abs=1e-3)


def test_validate_command(tmp_path):
    cfg = _write_config(tmp_path, {"potential": DW, "sample_density": 100})
    out = str(tmp_path / "val")
    assert main(["validate", "--config", cfg, "--out", out]) == EXIT_OK
    data = json.loads((tmp_path / "val" / "validate.json").read_text())
    assert any(c["name"] == "linear-growth" and c["passed"] for c in data["checks"])


def test_invalid_json_exits_2(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    code = main(["sweep", "--config", str(bad), "--out", str(tmp_path / "o")])
    assert code == EXIT_CONFIG
    assert "config error" in capsys.readouterr().err


def test_schema_violation_exits_2(tmp_path):
    cfg = _write_config(tmp_path, {"potential": DW})  # no epsilons
    code = main(["sweep", "--config", cfg, "--out", str(tmp_path / "o")])
    assert code == EXIT_CONFIG
    manifest = json.loads((tmp_path / "o" / "manifest.json").read_text())
    assert manifest["status"] == "config-error"


def test_infeasible_exit_code(tmp_path):
    cfg = {"potential": DW, "minimal_jump": {"labels": [1, 2], "mass": [9.0]}}
    code, manifest = run("sharp", cfg, str(tmp_path / "o"))
    assert code == EXIT_INFEASIBLE
    assert manifest["status"] == "infeasible"


def test_config_hash_stable():
    a = config_hash({"b": 1, "a": [1.0, 2.0]})
    b = config_hash({"a": [1.0, 2.0], "b": 1})
    assert a == b
    assert a != config_hash({"a": [1.0, 2.0], "b": 2})


def test_preset_command_mismatch(tmp_path, capsys):
    code = main(["sharp", "--preset", "double-well-sweep",
                 "--out", str(tmp_path / "o")])
    assert code == EXIT_CONFIG


def test_geodesic_extra_inits(tmp_path):
    detour = [[-1.0], [0.0], [1.0]]
    cfg = _write_config(tmp_path, {
        "potential": DW, "x": [0.0], "p": [-1.0], "q": [1.0],
        "nodes": 64, "inits": [detour]})
    out = str(tmp_path / "run")
    assert main(["geodesic", "--config", cfg, "--out", out]) == EXIT_OK
    result = json.loads((tmp_path / "run" / "geodesic.json").read_text())
    assert result["cost"] == pytest.approx(8.0 / 3.0, rel=1e-2)


def test_threads_env_default(tmp_path, monkeypatch):
    monkeypatch.setenv("MULTIWELL_THREADS", "2")
    cfg = _write_config(tmp_path, {
        "potential": DW, "epsilons": [0.1, 0.05],
        "constraint": {"type": "mass", "value": [0.0]},
        "warm_start": False})
    out = str(tmp_path / "env")
    assert main(["sweep", "--config", cfg, "--out", out]) == EXIT_OK
    assert (tmp_path / "env" / "sweep.csv").exists()
