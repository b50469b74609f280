"""JSON scenario files.

Layout (matrices are row-major nested lists; graph edges are 1-based
``[from, to]`` pairs)::

    {
      "plant":   {"preset": "constant_velocity", "T": 0.25}   or   {"A": ..., "Q": ...},
      "sensors": [{"type": "position" | "velocity" | "custom", "C": ..., "R": ...}, ...],
      "graph":   {"nodes": 5, "edges": [[1, 2], ...]},
      "design":  {"policy": "distributed" | "unified" | "explicit",
                  "slack": 1.0, "shift": 1.0, "mu_table": ...},
      "run":     {"l": 10, "horizon": 400, "trials": 1000, "seed": 0,
                  "x0": [...], "P0": ..., "init": "shared" | "independent",
                  "anchor_own_measurement": false}
    }

``position`` sensors observe the first half of the state and ``velocity``
sensors the second half; ``C`` is only given for ``custom`` sensors.
Unknown keys are rejected.
"""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .exceptions import ScenarioError
from .graph import DEFAULT_EDGES, DiGraph
from .model import PlantModel, Sensor, SensorSuite, constant_velocity, tracking_sensor_suite
from .sim import ScenarioConfig

__all__ = ["load_scenario", "parse_scenario", "scenario_to_dict", "dump_scenario", "tracking_scenario"]

_TOP = {"plant", "sensors", "graph", "design", "run"}
_PLANT = {"preset", "T", "A", "Q"}
_SENSOR = {"type", "C", "R"}
_GRAPH = {"nodes", "edges"}
_DESIGN = {"policy", "slack", "shift", "mu_table"}
_RUN = {"l", "horizon", "trials", "seed", "x0", "P0", "init", "anchor_own_measurement"}


def _check_keys(obj, allowed, where, required=()):
    if not isinstance(obj, dict):
        raise ScenarioError(f"{where}: expected an object")
    extra = sorted(set(obj) - allowed)
    if extra:
        raise ScenarioError(f"{where}: unknown key(s) {', '.join(extra)}")
    missing = [k for k in required if k not in obj]
    if missing:
        raise ScenarioError(f"{where}: missing key(s) {', '.join(missing)}")


def _matrix(value, where, shape=None):
    try:
        arr = np.array(value, dtype=float)
    except (TypeError, ValueError):
        raise ScenarioError(f"{where}: not a numeric matrix") from None
    if arr.ndim != 2:
        raise ScenarioError(f"{where}: expected a matrix (list of rows)")
    if shape is not None and arr.shape != shape:
        raise ScenarioError(f"{where}: expected {shape[0]}x{shape[1]}, got {arr.shape[0]}x{arr.shape[1]}")
    if not np.all(np.isfinite(arr)):
        raise ScenarioError(f"{where}: entries must be finite")
    return arr


def _number(value, where, kind=float):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ScenarioError(f"{where}: expected a number")
    if kind is int and int(value) != value:
        raise ScenarioError(f"{where}: expected an integer")
    return kind(value)


def _plant(obj) -> PlantModel:
    _check_keys(obj, _PLANT, "plant")
    if "preset" in obj:
        if obj["preset"] != "constant_velocity":
            raise ScenarioError(f"plant.preset: unknown preset {obj['preset']!r}")
        if set(obj) - {"preset", "T"}:
            raise ScenarioError("plant: a preset takes only T")
        T = _number(obj.get("T", 0.25), "plant.T")
        if T <= 0:
            raise ScenarioError("plant.T: must be positive")
        return constant_velocity(T)
    if "A" not in obj or "Q" not in obj:
        raise ScenarioError("plant: give either a preset or both A and Q")
    A = _matrix(obj["A"], "plant.A")
    try:
        return PlantModel(A, _matrix(obj["Q"], "plant.Q", A.shape))
    except ValueError as exc:
        raise ScenarioError(f"plant: {exc}") from None


def _sensor(obj, n, where) -> Sensor:
    _check_keys(obj, _SENSOR, where, required=("type", "R"))
    kind = obj["type"]
    if kind == "custom":
        if "C" not in obj:
            raise ScenarioError(f"{where}.C: required for custom sensors")
        C = _matrix(obj["C"], f"{where}.C")
        if C.shape[1] != n:
            raise ScenarioError(f"{where}.C: expected {n} columns, got {C.shape[1]}")
    elif kind in ("position", "velocity"):
        if "C" in obj:
            raise ScenarioError(f"{where}.C: only custom sensors take C")
        if n % 2:
            raise ScenarioError(f"{where}.type: {kind} sensors need an even state dimension")
        half = n // 2
        C = np.zeros((half, n))
        offset = 0 if kind == "position" else half
        C[:, offset:offset + half] = np.eye(half)
    else:
        raise ScenarioError(f"{where}.type: unknown sensor type {kind!r}")
    R = _matrix(obj["R"], f"{where}.R", (C.shape[0], C.shape[0]))
    try:
        return Sensor(C, R)
    except ValueError as exc:
        raise ScenarioError(f"{where}: {exc}") from None


def parse_scenario(doc: dict) -> ScenarioConfig:
    _check_keys(doc, _TOP, "scenario", required=("plant", "sensors", "graph"))
    plant = _plant(doc["plant"])
    sensors_doc = doc["sensors"]
    if not isinstance(sensors_doc, list) or not sensors_doc:
        raise ScenarioError("sensors: expected a non-empty list")
    suite = SensorSuite(tuple(_sensor(s, plant.n, f"sensors[{i}]") for i, s in enumerate(sensors_doc)))

    g = doc["graph"]
    _check_keys(g, _GRAPH, "graph", required=("edges",))
    nodes = _number(g.get("nodes", suite.N), "graph.nodes", int)
    if nodes != suite.N:
        raise ScenarioError(f"graph.nodes: {nodes} nodes for {suite.N} sensors")
    if not isinstance(g["edges"], list):
        raise ScenarioError("graph.edges: expected a list of [from, to] pairs")
    try:
        graph = DiGraph.from_edges(nodes, g["edges"])
    except (ValueError, TypeError) as exc:
        raise ScenarioError(f"graph.edges: {exc}") from None

    d = doc.get("design", {})
    _check_keys(d, _DESIGN, "design")
    policy = d.get("policy", "distributed")
    if policy not in ("distributed", "unified", "explicit"):
        raise ScenarioError(f"design.policy: unknown policy {policy!r}")
    mu_table = None
    if policy == "explicit":
        if "mu_table" not in d:
            raise ScenarioError("design.mu_table: required for the explicit policy")
        mu_table = _matrix(d["mu_table"], "design.mu_table", (suite.N, suite.N))
    elif "mu_table" in d:
        raise ScenarioError("design.mu_table: only allowed with the explicit policy")

    run = doc.get("run", {})
    _check_keys(run, _RUN, "run")
    n = plant.n
    x0 = np.zeros(n)
    if "x0" in run:
        x0 = np.array(_matrix([run["x0"]], "run.x0", (1, n))[0])
    P0 = _matrix(run["P0"], "run.P0", (n, n)) if "P0" in run else np.eye(n)
    anchor = run.get("anchor_own_measurement", False)
    if not isinstance(anchor, bool):
        raise ScenarioError("run.anchor_own_measurement: expected true or false")
    try:
        return ScenarioConfig(
            plant=plant,
            suite=suite,
            graph=graph,
            fusion_steps=_number(run.get("l", 10), "run.l", int),
            horizon=_number(run.get("horizon", 400), "run.horizon", int),
            trials=_number(run.get("trials", 1000), "run.trials", int),
            seed=_number(run.get("seed", 0), "run.seed", int),
            x0=x0,
            P0=P0,
            mu_policy=policy,
            slack=_number(d.get("slack", 1.0), "design.slack"),
            shift=_number(d.get("shift", 1.0), "design.shift"),
            mu_table=mu_table,
            init_mode=run.get("init", "shared"),
            anchor_own_measurement=anchor,
        )
    except ValueError as exc:
        raise ScenarioError(f"run: {exc}") from None


def load_scenario(path) -> ScenarioConfig:
    text = Path(path).read_text()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"{path}: invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    return parse_scenario(doc)


def scenario_to_dict(cfg: ScenarioConfig) -> dict:
    """Explicit (preset-free) document that parses back to an equal config."""
    design = {"policy": cfg.mu_policy, "slack": cfg.slack, "shift": cfg.shift}
    if cfg.mu_policy == "explicit":
        design["mu_table"] = np.asarray(cfg.mu_table).tolist()
    return {
        "plant": {"A": cfg.plant.A.tolist(), "Q": cfg.plant.Q.tolist()},
        "sensors": [{"type": "custom", "C": s.C.tolist(), "R": s.R.tolist()} for s in cfg.suite.sensors],
        "graph": {"nodes": cfg.graph.n_nodes, "edges": [list(e) for e in cfg.graph.edges()]},
        "design": design,
        "run": {
            "l": cfg.fusion_steps,
            "horizon": cfg.horizon,
            "trials": cfg.trials,
            "seed": cfg.seed,
            "x0": cfg.x0.tolist(),
            "P0": cfg.P0.tolist(),
            "init": cfg.init_mode,
            "anchor_own_measurement": cfg.anchor_own_measurement,
        },
    }


def dump_scenario(cfg: ScenarioConfig, path) -> None:
    Path(path).write_text(json.dumps(scenario_to_dict(cfg), indent=2) + "\n")


def tracking_scenario(fusion_steps=10, horizon=400, trials=1000, seed=0, undirected=False) -> ScenarioConfig:
    """Five-sensor constant-velocity tracking setup on the default topology."""
    graph = DiGraph.from_edges(5, DEFAULT_EDGES)
    if undirected:
        graph = graph.undirected()
    return ScenarioConfig(
        plant=constant_velocity(0.25),
        suite=tracking_sensor_suite(),
        graph=graph,
        fusion_steps=fusion_steps,
        horizon=horizon,
        trials=trials,
        seed=seed,
        x0=np.ones(4),
        P0=10.0 * np.eye(4),
    )
