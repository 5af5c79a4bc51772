"""Run configuration: one declarative file resolves every run parameter.

A config is YAML (JSON also parses); missing keys take the defaults below,
unknown keys are rejected. The fully resolved config is persisted next to
the outputs together with a manifest (config hash, package version, seeds,
argv), which is enough to re-run a command exactly.
"""

from __future__ import annotations

import copy
import hashlib
import json
from pathlib import Path

import yaml

from .errors import ConfigError

DEFAULTS: dict = {
    "seed": 0,
    "out_dir": "runs/out",
    "dataset": {
        "kind": "canonical",  # canonical | fi2010 | synth
        "path": None,
        "setup": 2,  # 1 | 2 | rolling
        "fold": 1,
        "val_fraction": 0.1,
        "lookback": 5,
        "normalize": None,  # default: True unless kind == fi2010
        "train_frac": 0.5,  # rolling protocol day fractions
        "val_frac": 0.25,
    },
    "synth": {
        "n_days": 10,
        "events_per_day": 20000,
        "signal_strength": 0.9,
        "regime_flip_prob": 5e-4,
        "market_order_prob": 0.25,
        "inside_quote_prob": 0.15,
        "imbalance_gain": 0.5,
        "tick": 0.01,
        "base_price": 100.0,
        "base_volume": 100.0,
    },
    "labels": {
        "horizons": [10, 20, 50],
        "method": "future-mean",  # future-mean | bilateral-mean
        "past_window": "printed",  # printed | symmetric
        "alpha": "terciles",  # number, {horizon: number}, or "terciles"
    },
    "model": {
        "time_steps": 100,
        "features": 40,
        "conv_channels": 16,
        "inception_channels": 32,
        "lstm_hidden": 64,
        "leaky_slope": 0.01,
        "temporal_kernel": 4,
    },
    "train": {
        "batch_size": 32,
        "max_epochs": 100,
        "patience": 20,
        "lr": 0.01,
        "adam_epsilon": 1.0,
        "train_stride": 1,
        "stop_at_val_acc": None,
    },
    "trading": {"mu": 1.0, "delay": 5, "close_only": False},
    "explain": {"n_samples": 1000, "day_index": 0, "anchor": None, "target_class": None},
    "bench": {"batch_sizes": [1, 8, 32], "repeats": 1000},
}


def _merge(base: dict, override: dict, path: str = "") -> dict:
    out = copy.deepcopy(base)
    for key, value in override.items():
        here = f"{path}.{key}" if path else key
        if key not in base:
            raise ConfigError(f"unknown config key {here!r}")
        if isinstance(base[key], dict) and isinstance(value, dict):
            out[key] = _merge(base[key], value, here)
        else:
            out[key] = value
    return out


class RunConfig:
    """Resolved run parameters with typed accessors."""

    def __init__(self, data: dict):
        self.data = data

    @classmethod
    def load(cls, path=None, overrides: dict | None = None) -> "RunConfig":
        raw: dict = {}
        if path is not None:
            path = Path(path)
            if not path.exists():
                raise ConfigError(f"config file {path} does not exist")
            try:
                raw = yaml.safe_load(path.read_text()) or {}
            except yaml.YAMLError as exc:
                raise ConfigError(f"config file {path} does not parse: {exc}") from exc
            if not isinstance(raw, dict):
                raise ConfigError(f"config file {path} must hold a mapping")
        data = _merge(DEFAULTS, raw)
        for key, value in (overrides or {}).items():
            section = data
            parts = key.split(".")
            for part in parts[:-1]:
                section = section[part]
            if parts[-1] not in section:
                raise ConfigError(f"unknown config key {key!r}")
            section[parts[-1]] = value
        return cls(data)

    def __getitem__(self, key: str):
        return self.data[key]

    @property
    def seed(self) -> int:
        return int(self.data["seed"])

    @property
    def out_dir(self) -> Path:
        return Path(self.data["out_dir"])

    def generator_config(self):
        from .data.synthetic import GeneratorConfig

        return GeneratorConfig(**self.data["synth"])

    def model_config(self):
        from .model import ModelConfig

        return ModelConfig(**self.data["model"])

    def train_schedule(self):
        from .train import TrainSchedule

        t = self.data["train"]
        return TrainSchedule(
            batch_size=int(t["batch_size"]),
            max_epochs=int(t["max_epochs"]),
            patience=int(t["patience"]),
            lr=float(t["lr"]),
            adam_epsilon=float(t["adam_epsilon"]),
            seed=self.seed,
            stop_at_val_acc=t["stop_at_val_acc"],
        )

    def alpha_for(self, horizon: int):
        """Configured threshold for one horizon, or None for tercile tuning."""
        alpha = self.data["labels"]["alpha"]
        if alpha == "terciles" or alpha is None:
            return None
        if isinstance(alpha, dict):
            if horizon not in alpha and str(horizon) not in alpha:
                raise ConfigError(f"labels.alpha has no entry for horizon {horizon}")
            return float(alpha.get(horizon, alpha.get(str(horizon))))
        return float(alpha)

    def should_normalize(self) -> bool:
        flag = self.data["dataset"]["normalize"]
        if flag is None:
            return self.data["dataset"]["kind"] != "fi2010"
        return bool(flag)

    def canonical_json(self) -> str:
        return json.dumps(self.data, sort_keys=True, separators=(",", ":"))

    def sha256(self) -> str:
        return hashlib.sha256(self.canonical_json().encode()).hexdigest()


def write_manifest(out_dir, config: RunConfig, command: str, argv: list[str]) -> Path:
    from . import __version__

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "config.resolved.yaml").write_text(yaml.safe_dump(config.data, sort_keys=True))
    manifest = {
        "command": command,
        "argv": argv,
        "config_sha256": config.sha256(),
        "seed": config.seed,
        "version": __version__,
    }
    path = out_dir / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True))
    return path
