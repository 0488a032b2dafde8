"""Benchmark configuration: defaults per workload, JSON loading, overrides, validation."""

from __future__ import annotations

import copy
import json
from dataclasses import dataclass, field
from pathlib import Path

WORKLOADS = ("stft-chirp", "sdnn-video", "sigma-delta-sweep")

# smallest side that survives the five PilotNet convolutions
PILOTNET_MIN_SIDE = 61

# full scale of 16-bit activations; 1% of it is the default delta threshold
_ONE_PERCENT = 327

DEFAULTS = {
    "stft-chirp": {
        "f_start": 50.0,
        "f_end": 1000.0,
        "duration": 1.0,
        "sample_rate": 4096.0,
        "amplitude": 0.5,
        "bank_f_min": 1.0,
        "bank_f_max": 1000.0,
        "n_neurons": 200,
        "window": 200,
        "threshold": 1 << 17,
        "input_scale_exp": 15,
        "signal_file": None,
    },
    "sdnn-video": {
        "shape": [64, 64, 3],
        "frames": 100,
        "step_scale": 0.005,
        "stream": "correlated",
        "input_threshold": _ONE_PERCENT,
        "hidden_threshold": _ONE_PERCENT,
        "output_threshold": 0,
        "network_file": None,
    },
    "sigma-delta-sweep": {
        "length": 4096,
        "step_scale": 0.01,
        "thresholds": [0, 1, 2, 5, 10, 20, 50, 100, 200, 500, 1000],
    },
}


class ConfigError(ValueError):
    pass


@dataclass
class BenchConfig:
    workload: str
    seed: int = 0
    params: dict = field(default_factory=dict)
    out_dir: str | None = None

    def to_dict(self) -> dict:
        return {"workload": self.workload, "seed": self.seed, "params": copy.deepcopy(self.params)}


def _type_ok(default, value) -> bool:
    if default is None:
        return value is None or isinstance(value, str)
    if isinstance(default, bool):
        return isinstance(value, bool)
    if isinstance(default, int):
        return isinstance(value, int) and not isinstance(value, bool)
    if isinstance(default, float):
        return isinstance(value, (int, float)) and not isinstance(value, bool)
    if isinstance(default, list):
        return isinstance(value, list)
    return isinstance(value, type(default))


def _type_name(default) -> str:
    if default is None:
        return "string or null"
    if isinstance(default, float):
        return "number"
    return {int: "integer", list: "list", str: "string", bool: "boolean"}.get(type(default), type(default).__name__)


def parse_override(text: str) -> tuple[str, object]:
    if "=" not in text:
        raise ConfigError(f"override {text!r} is not of the form key=value")
    key, raw = text.split("=", 1)
    key = key.strip()
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    return key, value


def resolve(workload: str, file_doc: dict | None = None, seed: int | None = None, overrides=()) -> BenchConfig:
    """Merge defaults, an optional config document, CLI seed and overrides."""
    if workload not in WORKLOADS:
        raise ConfigError(f"unknown workload {workload!r}; choose one of {', '.join(WORKLOADS)}")
    params = copy.deepcopy(DEFAULTS[workload])
    cfg_seed = 0
    if file_doc is not None:
        if not isinstance(file_doc, dict):
            raise ConfigError("config file must hold a JSON object")
        unknown = set(file_doc) - {"workload", "seed", "params"}
        if unknown:
            raise ConfigError(f"unknown top-level config keys: {sorted(unknown)}; allowed: workload, seed, params")
        if "workload" in file_doc and file_doc["workload"] != workload:
            raise ConfigError(f"config file is for workload {file_doc['workload']!r}, not {workload!r}")
        if "seed" in file_doc:
            cfg_seed = file_doc["seed"]
        _merge(params, file_doc.get("params", {}), workload)
    _merge(params, dict(overrides), workload)
    if seed is not None:
        cfg_seed = seed
    if not isinstance(cfg_seed, int) or isinstance(cfg_seed, bool) or not 0 <= cfg_seed < 2**64:
        raise ConfigError("seed must be an integer in [0, 2**64)")
    _validate(workload, params)
    return BenchConfig(workload, cfg_seed, params)


def _merge(params: dict, updates: dict, workload: str) -> None:
    if not isinstance(updates, dict):
        raise ConfigError("'params' must be a JSON object")
    for key, value in updates.items():
        if key not in params:
            raise ConfigError(
                f"unknown parameter {key!r} for workload {workload}; valid keys: {', '.join(sorted(params))}"
            )
        default = DEFAULTS[workload][key]
        if not _type_ok(default, value):
            raise ConfigError(f"parameter {key!r} must be of type {_type_name(default)}, got {value!r}")
        params[key] = float(value) if isinstance(default, float) else value


def _validate(workload: str, p: dict) -> None:
    def need(cond, msg):
        if not cond:
            raise ConfigError(msg)

    if workload == "stft-chirp":
        nyq = p["sample_rate"] / 2
        need(p["sample_rate"] > 0, "sample_rate must be positive")
        need(0 < p["f_start"] <= p["f_end"] < nyq, f"need 0 < f_start <= f_end < {nyq} (Nyquist)")
        need(0 < p["bank_f_min"] < p["bank_f_max"] < nyq, f"need 0 < bank_f_min < bank_f_max < {nyq}")
        need(p["duration"] > 0, "duration must be positive")
        need(0.0 <= p["amplitude"] <= 1.0, "amplitude is a fraction of full scale in [0, 1]")
        need(p["n_neurons"] >= 1, "n_neurons must be >= 1")
        need(p["window"] >= 1, "window must be >= 1")
        if p["signal_file"] is None:
            need(p["duration"] * p["sample_rate"] >= p["window"], "signal must be at least one window long")
        need(p["threshold"] > 0, "threshold must be positive")
    elif workload == "sdnn-video":
        need(len(p["shape"]) == 3 and all(isinstance(s, int) and s > 0 for s in p["shape"]),
             "shape must be [height, width, channels] of positive integers")
        if p["network_file"] is None:
            need(min(p["shape"][:2]) >= PILOTNET_MIN_SIDE,
                 f"the built-in PilotNet topology needs height and width >= {PILOTNET_MIN_SIDE}")
        need(p["frames"] >= 1, "frames must be >= 1")
        need(p["step_scale"] >= 0, "step_scale must be >= 0")
        need(p["stream"] in ("correlated", "uncorrelated"), "stream must be 'correlated' or 'uncorrelated'")
        for k in ("input_threshold", "hidden_threshold", "output_threshold"):
            need(p[k] >= 0, f"{k} must be >= 0")
    else:
        need(p["length"] >= 1, "length must be >= 1")
        need(p["step_scale"] >= 0, "step_scale must be >= 0")
        ts = p["thresholds"]
        need(len(ts) >= 1 and all(isinstance(t, int) and t >= 0 for t in ts),
             "thresholds must be a non-empty list of non-negative integers")
        need(ts == sorted(ts), "thresholds must be sorted ascending")


def load_file(path) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}") from None
