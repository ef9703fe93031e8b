"""Experiment configuration: strict JSON schema with round-trip parsing.

One experiment per file: a model block, a run block, and an output block.
Unknown keys are rejected with their full key path; parse -> serialize ->
parse is idempotent on the normalized form.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Any

import numpy as np

from .errors import ConfigError
from .models import (
    ReplicatorParams,
    SelectionMutationParams,
    build_replicator,
    build_selection_mutation,
    coin_flip,
    cyclic_mutation_example,
    hypercycle,
    pure_birth,
    pure_death,
    type_switch,
)
from .urn import StopCondition

CUSTOM_MODELS = {
    "pure_death": pure_death,
    "pure_birth": pure_birth,
    "coin_flip": coin_flip,
    "type_switch": type_switch,
}


def _reject_unknown(block: dict, allowed: set[str], path: str) -> None:
    for key in block:
        if key not in allowed:
            raise ConfigError(f"{path}.{key}: unknown key")


def _need(block: dict, key: str, path: str):
    if key not in block:
        raise ConfigError(f"{path}.{key}: missing required key")
    return block[key]


def _number(v, path: str) -> float:
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{path}: expected a number, got {v!r}")
    return float(v)


def _int(v, path: str) -> int:
    if isinstance(v, bool) or not isinstance(v, int):
        raise ConfigError(f"{path}: expected an integer, got {v!r}")
    return v


def _matrix(v, k: int, path: str) -> np.ndarray:
    try:
        m = np.array(v, dtype=np.float64)
    except Exception as exc:
        raise ConfigError(f"{path}: not a numeric matrix ({exc})")
    if m.shape != (k, k):
        raise ConfigError(f"{path}: expected a {k}x{k} matrix, got shape {m.shape}")
    return m


def _vector(v, path: str) -> np.ndarray:
    try:
        out = np.array(v, dtype=np.int64)
    except Exception as exc:
        raise ConfigError(f"{path}: not an integer vector ({exc})")
    if out.ndim != 1:
        raise ConfigError(f"{path}: expected a flat vector")
    return out


@dataclass
class ExperimentConfig:
    """Parsed experiment: builders resolved, normalized dict retained."""

    normalized: dict
    model_kind: str
    run_kind: str

    def build_model(self):
        """(model, system-or-None) for the configured model."""
        m = self.normalized["model"]
        if m["kind"] == "replicator":
            params = replicator_params_from(m)
            model, system, _ = build_replicator(params)
            return model, system
        if m["kind"] == "selection_mutation":
            params = selection_mutation_params_from(m)
            model, system = build_selection_mutation(params)
            return model, system
        model = CUSTOM_MODELS[m["name"]](m["k"])
        return model, None

    @property
    def run(self) -> dict:
        return self.normalized["run"]

    @property
    def output(self) -> dict:
        return self.normalized["output"]


def replicator_params_from(m: dict) -> ReplicatorParams:
    k = m["k"]
    B = np.array(m["B"], dtype=np.float64) if m["B"] != "hypercycle" else None
    if B is None:
        params = hypercycle(k, b=m["b"], d=m["d"], nu=m["nu"])
        if m["D"] != "zero":
            params = ReplicatorParams(
                k=k, b=m["b"], d=m["d"], nu=m["nu"], B=params.B,
                D=np.array(m["D"], dtype=np.float64),
            )
        return params
    D = np.zeros((k, k)) if m["D"] == "zero" else np.array(m["D"], dtype=np.float64)
    return ReplicatorParams(k=k, b=m["b"], d=m["d"], nu=m["nu"], B=B, D=D)


def selection_mutation_params_from(m: dict) -> SelectionMutationParams:
    if m.get("example") == "cyclic":
        return cyclic_mutation_example(
            f=m["f"], s=m["s"], mu1=m["mu1"], mu2=m["mu2"], nu=m["nu"], d=m["d"]
        )
    return SelectionMutationParams(
        k=len(m["F"]),
        d=m["d"],
        nu=m["nu"],
        F=np.array(m["F"], dtype=np.float64),
        Mu=np.array(m["Mu"], dtype=np.float64),
    )


def stop_from(block: dict, path: str) -> StopCondition:
    _reject_unknown(
        block, {"max_steps", "max_population", "max_tau", "on_extinction", "mode"}, path
    )
    kw: dict[str, Any] = {}
    if "max_steps" in block:
        kw["max_steps"] = _int(block["max_steps"], f"{path}.max_steps")
    if "max_population" in block:
        kw["max_population"] = _int(block["max_population"], f"{path}.max_population")
    if "max_tau" in block:
        kw["max_tau"] = _number(block["max_tau"], f"{path}.max_tau")
    if "on_extinction" in block:
        if not isinstance(block["on_extinction"], bool):
            raise ConfigError(f"{path}.on_extinction: expected true/false")
        kw["on_extinction"] = block["on_extinction"]
    if "mode" in block:
        if block["mode"] not in ("any", "all"):
            raise ConfigError(f"{path}.mode: expected 'any' or 'all'")
        kw["mode"] = block["mode"]
    try:
        return StopCondition(**kw)
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}")


def _normalize_model(m: Any) -> dict:
    if not isinstance(m, dict):
        raise ConfigError("model: expected an object")
    kind = _need(m, "kind", "model")
    if kind == "replicator":
        _reject_unknown(m, {"kind", "k", "b", "d", "nu", "B", "D"}, "model")
        k = _int(_need(m, "k", "model"), "model.k")
        out = {
            "kind": kind,
            "k": k,
            "b": _number(_need(m, "b", "model"), "model.b"),
            "d": _number(_need(m, "d", "model"), "model.d"),
            "nu": _number(_need(m, "nu", "model"), "model.nu"),
        }
        B = _need(m, "B", "model")
        out["B"] = "hypercycle" if B == "hypercycle" else _matrix(B, k, "model.B").tolist()
        D = m.get("D", "zero")
        out["D"] = "zero" if D == "zero" else _matrix(D, k, "model.D").tolist()
        return out
    if kind == "selection_mutation":
        if "example" in m:
            _reject_unknown(
                m, {"kind", "example", "f", "s", "mu1", "mu2", "nu", "d"}, "model"
            )
            if m["example"] != "cyclic":
                raise ConfigError("model.example: only 'cyclic' is available")
            return {
                "kind": kind,
                "example": "cyclic",
                "f": _number(m.get("f", 1.0), "model.f"),
                "s": None if m.get("s") is None else _number(m["s"], "model.s"),
                "mu1": _number(m.get("mu1", 0.10), "model.mu1"),
                "mu2": _number(m.get("mu2", 0.05), "model.mu2"),
                "nu": _number(m.get("nu", 1.0), "model.nu"),
                "d": _number(m.get("d", 1.0), "model.d"),
            }
        _reject_unknown(m, {"kind", "d", "nu", "F", "Mu"}, "model")
        F = _need(m, "F", "model")
        if not isinstance(F, list) or not F:
            raise ConfigError("model.F: expected a matrix")
        k = len(F)
        return {
            "kind": kind,
            "d": _number(_need(m, "d", "model"), "model.d"),
            "nu": _number(_need(m, "nu", "model"), "model.nu"),
            "F": _matrix(F, k, "model.F").tolist(),
            "Mu": _matrix(_need(m, "Mu", "model"), k, "model.Mu").tolist(),
        }
    if kind == "custom":
        _reject_unknown(m, {"kind", "name", "k"}, "model")
        name = _need(m, "name", "model")
        if name not in CUSTOM_MODELS:
            raise ConfigError(
                f"model.name: unknown custom model {name!r} "
                f"(available: {sorted(CUSTOM_MODELS)})"
            )
        return {"kind": kind, "name": name, "k": _int(m.get("k", 1), "model.k")}
    raise ConfigError(f"model.kind: unknown kind {kind!r}")


def _normalize_run(r: Any) -> dict:
    if not isinstance(r, dict):
        raise ConfigError("run: expected an object")
    kind = _need(r, "kind", "run")
    if kind == "simulate":
        _reject_unknown(r, {"kind", "z0", "stop", "seed"}, "run")
        out = {
            "kind": kind,
            "z0": _vector(_need(r, "z0", "run"), "run.z0").tolist(),
            "seed": _int(r.get("seed", 0), "run.seed"),
        }
        stop_block = _need(r, "stop", "run")
        stop_from(stop_block, "run.stop")  # validate now
        out["stop"] = dict(stop_block)
        return out
    if kind == "ode":
        _reject_unknown(
            r, {"kind", "x0", "T", "h", "burn_in", "analyze", "detect_orbit"}, "run"
        )
        x0 = r.get("x0", "center")
        if x0 != "center":
            x0 = [_number(v, "run.x0") for v in x0]
        return {
            "kind": kind,
            "x0": x0,
            "T": _number(_need(r, "T", "run"), "run.T"),
            "h": _number(r.get("h", 0.01), "run.h"),
            "burn_in": _number(r.get("burn_in", 0.0), "run.burn_in"),
            "analyze": bool(r.get("analyze", False)),
            "detect_orbit": bool(r.get("detect_orbit", False)),
        }
    if kind == "ensemble":
        _reject_unknown(
            r,
            {"kind", "replicates", "master_seed", "z0", "stop",
             "survival_threshold", "checkpoints", "attractor"},
            "run",
        )
        stop_block = _need(r, "stop", "run")
        stop_from(stop_block, "run.stop")
        attractor = r.get("attractor")
        if attractor not in (None, "orbit", "center"):
            raise ConfigError("run.attractor: expected null, 'orbit', or 'center'")
        return {
            "kind": kind,
            "replicates": _int(_need(r, "replicates", "run"), "run.replicates"),
            "master_seed": _int(r.get("master_seed", 0), "run.master_seed"),
            "z0": _vector(_need(r, "z0", "run"), "run.z0").tolist(),
            "stop": dict(stop_block),
            "survival_threshold": _int(
                _need(r, "survival_threshold", "run"), "run.survival_threshold"
            ),
            "checkpoints": [
                _int(c, "run.checkpoints") for c in r.get("checkpoints", [])
            ],
            "attractor": attractor,
        }
    if kind == "analyze":
        _reject_unknown(r, {"kind", "detect_orbit", "x0", "T"}, "run")
        x0 = r.get("x0", "center")
        if x0 != "center":
            x0 = [_number(v, "run.x0") for v in x0]
        return {
            "kind": kind,
            "detect_orbit": bool(r.get("detect_orbit", True)),
            "x0": x0,
            "T": _number(r.get("T", 4000.0), "run.T"),
        }
    if kind == "verify":
        _reject_unknown(r, {"kind", "criteria"}, "run")
        crit = r.get("criteria", "all")
        if crit != "all" and not (
            isinstance(crit, list) and all(isinstance(c, str) for c in crit)
        ):
            raise ConfigError("run.criteria: expected 'all' or a list of names")
        return {"kind": kind, "criteria": crit}
    raise ConfigError(f"run.kind: unknown kind {kind!r}")


def _normalize_output(o: Any) -> dict:
    if o is None:
        o = {}
    if not isinstance(o, dict):
        raise ConfigError("output: expected an object")
    _reject_unknown(o, {"dir", "formats", "thin"}, "output")
    formats = o.get("formats", ["csv"])
    if not isinstance(formats, list) or not set(formats) <= {"csv", "svg"}:
        raise ConfigError("output.formats: subset of ['csv', 'svg'] expected")
    return {
        "dir": o.get("dir"),
        "formats": sorted(set(formats)),
        "thin": _int(o.get("thin", 1), "output.thin"),
    }


def parse_config(raw: dict) -> ExperimentConfig:
    if not isinstance(raw, dict):
        raise ConfigError("top level: expected an object")
    _reject_unknown(raw, {"model", "run", "output"}, "config")
    model = _normalize_model(_need(raw, "model", "config"))
    run = _normalize_run(_need(raw, "run", "config"))
    normalized = {
        "model": model,
        "run": run,
        "output": _normalize_output(raw.get("output")),
    }
    return ExperimentConfig(
        normalized=normalized, model_kind=model["kind"], run_kind=run["kind"]
    )


def load_config(path: str) -> ExperimentConfig:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            raw = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}")
    return parse_config(raw)


def dump_config(cfg: ExperimentConfig) -> str:
    return json.dumps(cfg.normalized, indent=2) + "\n"
