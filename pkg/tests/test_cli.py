import json
import xml.etree.ElementTree as ET
from pathlib import Path

import numpy as np
import pytest

from urnflow.cli import main
from urnflow.config import dump_config, load_config, parse_config
from urnflow.errors import ConfigError

ROOT = Path(__file__).resolve().parents[1]


def _write(tmp_path, cfg: dict) -> str:
    p = tmp_path / "exp.json"
    p.write_text(json.dumps(cfg))
    return str(p)


def _sim_config(**over):
    cfg = {
        "model": {"kind": "replicator", "k": 3, "b": 1.0, "d": 2.5, "nu": 4.0,
                  "B": "hypercycle", "D": "zero"},
        "run": {"kind": "simulate", "z0": [10, 10, 10],
                "stop": {"max_steps": 500}, "seed": 7},
        "output": {"formats": ["csv", "svg"]},
    }
    cfg.update(over)
    return cfg


def test_config_round_trip_idempotent(tmp_path):
    cfg = parse_config(_sim_config())
    text = dump_config(cfg)
    again = parse_config(json.loads(text))
    assert again.normalized == cfg.normalized
    assert dump_config(again) == text


def test_unknown_keys_rejected():
    bad = _sim_config()
    bad["model"]["typo"] = 1
    with pytest.raises(ConfigError, match="model.typo"):
        parse_config(bad)
    bad2 = _sim_config()
    bad2["run"]["stop"]["max_step"] = 5
    with pytest.raises(ConfigError, match="run.stop.max_step"):
        parse_config(bad2)


def test_malformed_json_reports_line(tmp_path):
    p = tmp_path / "broken.json"
    p.write_text('{"model": [,]}')
    with pytest.raises(ConfigError, match=r":1:\d+"):
        load_config(str(p))


def test_cli_bad_config_exit_code(tmp_path, capsys):
    path = _write(tmp_path, {"model": {"kind": "nope"}, "run": {"kind": "simulate"}})
    assert main(["simulate", path, "--out", str(tmp_path)]) == 2
    assert "config error" in capsys.readouterr().err


def test_cmd_simulate_outputs(tmp_path, capsys):
    path = _write(tmp_path, _sim_config())
    assert main(["simulate", path, "--out", str(tmp_path)]) == 0
    text = (tmp_path / "path.csv").read_text()
    lines = [l for l in text.strip().splitlines() if not l.startswith("#")]
    header = lines[0].split(",")
    assert header == ["n", "tau", "z_1", "z_2", "z_3", "x_1", "x_2", "x_3", "pop",
                      "growth"]
    taus = np.array([float(l.split(",")[1]) for l in lines[1:]])
    assert (np.diff(taus) > 0).all()
    svg_text = (tmp_path / "path.svg").read_text()
    root = ET.fromstring(svg_text)  # valid XML
    assert root.get("viewBox", "").startswith("0 0 900")


def test_cmd_simulate_thinning_row_count(tmp_path):
    cfg = _sim_config()
    cfg["output"] = {"formats": ["csv"], "thin": 100}
    path = _write(tmp_path, cfg)
    assert main(["simulate", path, "--out", str(tmp_path)]) == 0
    lines = [
        l for l in (tmp_path / "path.csv").read_text().strip().splitlines()
        if not l.startswith("#")
    ]
    assert len(lines) - 1 == 500 // 100 + 1


def test_cmd_simulate_extinct_start_warns(tmp_path, capsys):
    cfg = _sim_config()
    cfg["run"]["z0"] = [0, 0, 0]
    path = _write(tmp_path, cfg)
    assert main(["simulate", path, "--out", str(tmp_path)]) == 0
    out = capsys.readouterr().out
    assert "warning" in out
    lines = [
        l for l in (tmp_path / "path.csv").read_text().strip().splitlines()
        if not l.startswith("#")
    ]
    assert len(lines) == 2  # header + single row


def test_cmd_ode_hypercycle_three_converges(tmp_path):
    cfg = {
        "model": {"kind": "replicator", "k": 3, "b": 1.0, "d": 2.5, "nu": 4.0,
                  "B": "hypercycle", "D": "zero"},
        "run": {"kind": "ode", "x0": [0.6, 0.3, 0.1], "T": 500.0},
        "output": {"formats": ["csv"]},
    }
    path = _write(tmp_path, cfg)
    assert main(["ode", path, "--out", str(tmp_path)]) == 0
    last = (tmp_path / "flow.csv").read_text().strip().splitlines()[-1]
    vals = np.array([float(v) for v in last.split(",")[1:4]])
    assert np.linalg.norm(vals - 1.0 / 3.0) < 1e-6


def test_cmd_ode_analysis_lists_equilibria(tmp_path):
    cfg = {
        "model": {"kind": "replicator", "k": 5, "b": 1.0, "d": 2.5, "nu": 4.0,
                  "B": "hypercycle", "D": "zero"},
        "run": {"kind": "ode", "x0": "center", "T": 10.0, "analyze": True},
        "output": {"formats": ["csv"]},
    }
    path = _write(tmp_path, cfg)
    assert main(["ode", path, "--out", str(tmp_path)]) == 0
    text = (tmp_path / "analysis.csv").read_text()
    assert text.count("equilibrium,") == 5
    assert "growth_condition=0.0133" in text
    assert "permanence,min=1.066666666666" in text


def test_cmd_ensemble_prints_estimate_and_is_deterministic(tmp_path, capsys):
    cfg = {
        "model": {"kind": "custom", "name": "pure_death", "k": 1},
        "run": {"kind": "ensemble", "replicates": 20, "master_seed": 1, "z0": [5],
                "stop": {"max_steps": 500, "max_population": 50},
                "survival_threshold": 50, "checkpoints": [], "attractor": None},
        "output": {"formats": ["csv"]},
    }
    path = _write(tmp_path, cfg)
    out1 = tmp_path / "a"
    out4 = tmp_path / "b"
    assert main(["ensemble", path, "--out", str(out1), "--jobs", "1"]) == 0
    text = capsys.readouterr().out
    assert "establishment: 0.000 [0.000," in text
    assert main(["ensemble", path, "--out", str(out4), "--jobs", "4"]) == 0
    assert (out1 / "ensemble.csv").read_bytes() == (out4 / "ensemble.csv").read_bytes()


def test_cmd_verify_subset(capsys):
    assert main(["verify", "growth-value-hypercycle", "permanence-witness"]) == 0
    out = capsys.readouterr().out
    assert "growth-value-hypercycle" in out and "PASS" in out


def test_cmd_verify_tamper_negative_control(capsys):
    assert main(["verify", "drift-oracles", "--tamper"]) == 1
    out = capsys.readouterr().out
    assert "FAIL" in out
    assert "drift-oracle-replicator" in out


def test_bundled_configs_parse():
    for name in (
        "hypercycle_growth.json",
        "hypercycle_decline.json",
        "selection_mutation_cycle.json",
    ):
        cfg = load_config(str(ROOT / "configs" / name))
        assert cfg.run_kind in ("simulate", "ensemble", "ode")


def test_command_config_kind_mismatch(tmp_path):
    path = _write(tmp_path, _sim_config())
    assert main(["ode", path, "--out", str(tmp_path)]) == 2
