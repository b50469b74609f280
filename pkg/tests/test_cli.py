import json
from pathlib import Path

import numpy as np
import pytest

from comdf.cli import main
from comdf.exceptions import ScenarioError
from comdf.scenario import dump_scenario, load_scenario, tracking_scenario, parse_scenario, scenario_to_dict

EXAMPLE = Path(__file__).resolve().parents[1] / "scenarios" / "tracking_example.json"


def _doc(**overrides):
    doc = json.loads(EXAMPLE.read_text())
    for key, value in overrides.items():
        doc[key] = value
    return doc


def _write(tmp_path, doc, name="s.json"):
    p = tmp_path / name
    p.write_text(json.dumps(doc))
    return str(p)


def test_example_file_matches_builtin():
    cfg = load_scenario(EXAMPLE)
    ref = tracking_scenario(seed=cfg.seed)
    assert cfg == ref


def test_round_trip(tmp_path):
    cfg = load_scenario(EXAMPLE)
    out = tmp_path / "rt.json"
    dump_scenario(cfg, out)
    again = load_scenario(out)
    assert again == cfg
    assert scenario_to_dict(again) == scenario_to_dict(cfg)
    explicit = _doc(design={"policy": "explicit", "mu_table": (0.2 * np.ones((5, 5))).tolist()})
    cfg = parse_scenario(explicit)
    assert parse_scenario(scenario_to_dict(cfg)) == cfg


@pytest.mark.parametrize(
    "doc, fragment",
    [
        (_doc(extra=1), "unknown key"),
        (_doc(plant={"preset": "constant_velocity", "T": 0.25, "Q": [[1]]}), "preset takes only T"),
        (_doc(plant={"A": [[1, 0], [0, 1]], "Q": [[1]]}), "plant.Q"),
        (_doc(graph={"nodes": 4, "edges": [[1, 2]]}), "graph.nodes"),
        (_doc(graph={"edges": [[1, 9]]}), "graph.edges"),
        (_doc(sensors=[{"type": "sonar", "R": [[1]]}] * 5), "unknown sensor type"),
        (_doc(sensors=[{"type": "position", "R": [[1]]}] * 5), "sensors[0].R"),
        (_doc(design={"policy": "explicit"}), "mu_table"),
        (_doc(run={"l": 1.5}), "run.l"),
        (_doc(run={"trials": 0}), "trials"),
    ],
)
def test_parse_errors(doc, fragment):
    with pytest.raises(ScenarioError) as info:
        parse_scenario(doc)
    assert fragment in str(info.value)


def test_design_report(tmp_path, capsys):
    out = tmp_path / "design.json"
    assert main(["design", str(EXAMPLE), "--out", str(out)]) == 0
    report = json.loads(out.read_text())
    assert report["strongly_connected"] and report["observable"]
    assert report["rho_G"] < 1
    assert len(report["mu"]) == 5
    for key in ("norm_G", "norm_A_KCA", "norm_K", "norm_CA", "l0", "l0_note"):
        assert key in report
    # Directed stand-in: ||G||_2 >= 1, so no threshold is available.
    assert report["l0"] is None and "spectral norm" in report["l0_note"]


def test_design_stdout_json(capsys):
    assert main(["design", str(EXAMPLE), "--json"]) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["rho_G"] == pytest.approx(0.944125388798854, rel=1e-9)


def test_design_not_strongly_connected(tmp_path, capsys):
    doc = _doc(graph={"nodes": 5, "edges": [[1, 2], [2, 3], [3, 4], [4, 5]]})
    assert main(["design", _write(tmp_path, doc)]) == 1
    assert "not strongly connected" in capsys.readouterr().err


def test_design_unobservable(tmp_path, capsys):
    doc = _doc(sensors=[{"type": "velocity", "R": [[5, 0], [0, 5]]}] * 5)
    assert main(["design", _write(tmp_path, doc)]) == 1
    assert "not observable" in capsys.readouterr().err


def test_malformed_json(tmp_path, capsys):
    p = tmp_path / "bad.json"
    p.write_text('{"plant": ')
    assert main(["design", str(p)]) == 2
    assert "line 1" in capsys.readouterr().err
    assert main(["design", str(tmp_path / "missing.json")]) == 2
    assert main(["frobnicate"]) == 2


def test_gap_csv(tmp_path):
    out = tmp_path / "gap.csv"
    assert main(["gap", str(EXAMPLE), "--l-min", "3", "--l-max", "3", "--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "l,gap,bound_radius,bound_norm,rho_G,norm_G,status"
    assert len(lines) == 3 and lines[1].startswith("3,") and lines[1].endswith(",ok")
    footer = json.loads(lines[2][2:])
    assert {"M1", "M2", "log_slope", "radius_regime", "norm_regime"} <= set(footer)
    assert main(["gap", str(EXAMPLE), "--l-min", "5", "--l-max", "2"]) == 2


def test_gap_unstable_row(tmp_path):
    out = tmp_path / "gap.csv"
    assert main(["gap", str(EXAMPLE), "--l-min", "0", "--l-max", "1", "--out", str(out)]) == 0
    rows = out.read_text().splitlines()
    assert rows[1].startswith("0,nan,") and rows[1].endswith(",unstable")
    assert rows[2].endswith(",ok")


def test_gap_undirected_slope(tmp_path):
    doc = _doc()
    edges = doc["graph"]["edges"]
    doc["graph"]["edges"] = edges + [[b, a] for a, b in edges]
    out = tmp_path / "gap.csv"
    assert main(["gap", _write(tmp_path, doc), "--l-min", "1", "--l-max", "40", "--out", str(out)]) == 0
    footer = json.loads(out.read_text().splitlines()[-1][2:])
    assert footer["norm_regime"]
    assert footer["log_slope"] <= np.log(footer["norm_G"]) + 0.05


def test_simulate_noiseless(tmp_path):
    doc = {
        "plant": {"A": [[0.9]], "Q": [[0.0]]},
        "sensors": [{"type": "custom", "C": [[1.0]], "R": [[1e-300]]}] * 2,
        "graph": {"edges": [[1, 2], [2, 1]]},
        "run": {"l": 3, "horizon": 10, "trials": 1, "x0": [1.0], "P0": [[0.0]]},
    }
    out = tmp_path / "mse.csv"
    assert main(["simulate", _write(tmp_path, doc), "--out", str(out)]) == 0
    rows = out.read_text().splitlines()[1:]
    assert len(rows) == 30
    assert all(float(r.split(",")[2]) == 0.0 for r in rows)
    summary = json.loads((tmp_path / "mse.csv.summary.json").read_text())
    assert summary["steady_mse_central"] == 0.0


def test_simulate_seed_override(tmp_path):
    doc = _doc(run={"l": 2, "horizon": 5, "trials": 3, "seed": 1})
    path = _write(tmp_path, doc)
    a, b, c = (tmp_path / n for n in ("a.csv", "b.csv", "c.csv"))
    assert main(["simulate", path, "--out", str(a)]) == 0
    assert main(["simulate", path, "--out", str(b), "--seed", "1"]) == 0
    assert main(["simulate", path, "--out", str(c), "--seed", "2"]) == 0
    assert a.read_bytes() == b.read_bytes()
    assert a.read_bytes() != c.read_bytes()
