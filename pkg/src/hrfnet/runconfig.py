"""Flat dotted-key run configuration with per-key provenance.

Sources are merged in increasing priority: built-in defaults, a YAML config
file, ``HRFNET_*`` environment variables, then command-line flags. An env var
name is the key upper-cased with dots replaced by double underscores, e.g.
``HRFNET_TRAIN__EPOCHS=2``.
"""
from __future__ import annotations

import os
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .datasynth.dataset import SynthConfig
from .errors import ConfigError
from .train.schedule import TrainConfig

ENV_PREFIX = "HRFNET_"
SOURCES = ("default", "file", "env", "flag")


def _listify(v):
    return list(v) if isinstance(v, tuple) else v


def default_values() -> dict:
    d = {f"train.{k}": _listify(v) for k, v in TrainConfig().to_dict().items()}
    d.update({f"synth.{k}": _listify(v) for k, v in SynthConfig().to_dict().items()})
    d.update({
        "synth.bases": None,
        "synth.out": None,
        "synth.synthetic_bases": 0,
        # model shape is derived from the data size; these are the free knobs
        "model.width_multiplier": 1.0,
        "model.use_srm": True,
        "model.smooth_activations": False,
        "model.srm_threshold": 2.0,
        "model.deep_input_size": None,
        "model.aspp_rates": None,
        "train.data": None,
        "train.out": None,
        "train.max_steps": None,
        "eval.checkpoint": None,
        "eval.data": None,
        "eval.split": "test",
        "eval.mode": "pooled",
        "eval.out": None,
        "bench.checkpoint": None,
        "bench.size": 1000,
        "bench.iters": 20,
        "bench.warmup": 3,
        "bench.device": "cpu",
        "bench.method": None,
        "bench.out": None,
        "predict.image": None,
        "predict.checkpoint": None,
        "predict.threshold": 0.5,
        "predict.out": None,
        "visualize.data": None,
        "visualize.split": "test",
        "visualize.checkpoints": [],
        "visualize.count": 4,
        "visualize.out": None,
    })
    return d


def _coerce(key, value, default):
    """Check ``value`` against the type of the key's default (None defaults accept anything)."""
    value = _listify(value)
    if default is None or value is None:
        return value
    kind = type(default)
    if kind is bool:
        ok = isinstance(value, bool)
    elif kind is int:
        ok = isinstance(value, int) and not isinstance(value, bool)
    elif kind is float:
        ok = isinstance(value, (int, float)) and not isinstance(value, bool)
        value = float(value) if ok else value
    else:
        ok = isinstance(value, kind)
    if not ok:
        raise ConfigError(f"{key} expects {kind.__name__}, got {value!r}")
    return value


_DEFAULTS = default_values()


@dataclass
class RunConfig:
    values: dict = field(default_factory=default_values)
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        for k in self.values:
            self.provenance.setdefault(k, "default")

    def __getitem__(self, key):
        return self.values[key]

    def set(self, key, value, source: str) -> None:
        if key not in self.values:
            raise ConfigError(f"unknown config key {key!r}")
        if source not in SOURCES:
            raise ValueError(f"unknown source {source!r}")
        self.values[key] = _coerce(key, value, _DEFAULTS[key])
        self.provenance[key] = source

    def update(self, mapping: dict, source: str) -> None:
        for k, v in mapping.items():
            self.set(k, v, source)

    def section(self, name: str) -> dict:
        prefix = name + "."
        return {k[len(prefix):]: v for k, v in self.values.items() if k.startswith(prefix)}

    def to_yaml(self) -> str:
        return yaml.safe_dump({"values": self.values, "provenance": self.provenance}, sort_keys=True)

    def save(self, path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(self.to_yaml())
        return path


def read_config_file(path) -> dict:
    """Dotted keys from a YAML file. A saved RunConfig is accepted too."""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    try:
        doc = yaml.safe_load(path.read_text()) or {}
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from None
    if not isinstance(doc, dict):
        raise ConfigError(f"{path} must hold a mapping of dotted keys")
    if set(doc) == {"values", "provenance"}:
        doc = doc["values"]
    return doc


def env_overrides(environ=None) -> dict:
    environ = os.environ if environ is None else environ
    out = {}
    for name, raw in environ.items():
        if name.startswith(ENV_PREFIX):
            key = name[len(ENV_PREFIX):].lower().replace("__", ".")
            out[key] = yaml.safe_load(raw)
    return out


def resolve(config_file=None, flags: dict | None = None, environ=None) -> RunConfig:
    cfg = RunConfig()
    if config_file is not None:
        cfg.update(read_config_file(config_file), "file")
    cfg.update(env_overrides(environ), "env")
    cfg.update(flags or {}, "flag")
    return cfg
