"""Experiment configuration: defaults, TOML overrides, semantic hashing.

An empty TOML file reproduces the reference setup (sizes 5/10/20/40,
connection probabilities 0.2..0.8, 10 topologies and 10 seeds per cell,
5000-step traces, context 10, horizon 1). The hash covers every field
that changes results; output location and thread count are excluded.
"""

import sys
from dataclasses import dataclass, field

import numpy as np

from spikecause.errors import ConfigError
from spikecause.fileio import config_hash
from spikecause.train import TrainConfig

if sys.version_info >= (3, 11):
    import tomllib as _toml
else:
    import tomli as _toml


@dataclass
class SimulatorConfig:
    noise_mean: float = 5.0
    noise_std: float = float(np.sqrt(5.0))
    coupling_strength: float = 5.0

    def to_dict(self):
        return {
            "noise_mean": self.noise_mean,
            "noise_std": self.noise_std,
            "coupling_strength": self.coupling_strength,
        }


@dataclass
class BaselineConfig:
    max_order: int = 20
    segment: str = "full"     # "full" or "train": rows handed to the VAR

    def __post_init__(self):
        if self.max_order < 1:
            raise ConfigError(f"max_order must be >= 1, got {self.max_order}")
        if self.segment not in ("full", "train"):
            raise ConfigError(f"segment must be 'full' or 'train', got {self.segment!r}")

    def to_dict(self):
        return {"max_order": self.max_order, "segment": self.segment}


@dataclass
class ExperimentConfig:
    sizes: list = field(default_factory=lambda: [5, 10, 20, 40])
    probs: list = field(default_factory=lambda: [0.2, 0.4, 0.6, 0.8])
    topologies_per_cell: int = 10
    seeds_per_network: int = 10
    steps: int = 5000
    context: int = 10
    horizon: int = 1
    seed: int = 1
    token_mix: str = "sum"
    simulator: SimulatorConfig = field(default_factory=SimulatorConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    baseline: BaselineConfig = field(default_factory=BaselineConfig)

    def __post_init__(self):
        if not self.sizes or not self.probs:
            raise ConfigError("sizes and probs must be nonempty")
        if any(n < 2 for n in self.sizes):
            raise ConfigError("every network size must be >= 2")
        if any(not 0 < p <= 1 for p in self.probs):
            raise ConfigError("every probability must lie in (0, 1]")
        if min(self.topologies_per_cell, self.seeds_per_network) < 1:
            raise ConfigError("topology and seed counts must be >= 1")
        if self.steps < 50:
            raise ConfigError(f"steps too small to split and window: {self.steps}")
        if self.context < 1 or self.horizon < 1:
            raise ConfigError("context and horizon must be >= 1")

    def to_dict(self):
        """Semantic content only; feeds the config hash."""
        return {
            "sizes": [int(x) for x in self.sizes],
            "probs": [float(x) for x in self.probs],
            "topologies_per_cell": self.topologies_per_cell,
            "seeds_per_network": self.seeds_per_network,
            "steps": self.steps,
            "context": self.context,
            "horizon": self.horizon,
            "seed": self.seed,
            "token_mix": self.token_mix,
            "simulator": self.simulator.to_dict(),
            "train": self.train.to_dict(),
            "baseline": self.baseline.to_dict(),
        }

    def hash(self):
        return config_hash(self.to_dict())


_SECTION_KEYS = {
    "experiment": {
        "sizes", "probs", "topologies_per_cell", "seeds_per_network",
        "steps", "context", "horizon", "seed", "token_mix",
    },
    "simulator": {"noise_mean", "noise_std", "coupling_strength"},
    "train": {
        "seed", "batch_size", "lr", "lr_decay", "lr_patience",
        "weight_decay", "max_epochs", "early_stop_patience", "dropout",
    },
    "baseline": {"max_order", "segment"},
}


def load_config(path=None):
    """ExperimentConfig from a TOML file; None means all defaults."""
    raw = {}
    if path is not None:
        try:
            with open(path, "rb") as f:
                raw = _toml.load(f)
        except FileNotFoundError:
            raise ConfigError(f"config file not found: {path}")
        except _toml.TOMLDecodeError as exc:
            raise ConfigError(f"invalid TOML in {path}: {exc}")

    for section, table in raw.items():
        if section not in _SECTION_KEYS:
            raise ConfigError(f"unknown config section [{section}]")
        unknown = set(table) - _SECTION_KEYS[section]
        if unknown:
            raise ConfigError(
                f"unknown key(s) in [{section}]: {', '.join(sorted(unknown))}"
            )

    try:
        sim = SimulatorConfig(**raw.get("simulator", {}))
        train = TrainConfig(**raw.get("train", {}))
        baseline = BaselineConfig(**raw.get("baseline", {}))
        return ExperimentConfig(
            simulator=sim, train=train, baseline=baseline,
            **raw.get("experiment", {}),
        )
    except TypeError as exc:
        raise ConfigError(f"bad config value: {exc}")
