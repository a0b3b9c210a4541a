"""Spiking-network forecasting and attention-based causal discovery.

The package simulates networks of Izhikevich neurons with known wiring,
trains an encoder-decoder transformer whose attention is restricted so
that cross-neuron information flows through exactly one recorded
sublayer, reduces those recordings to a causal score matrix, and
benchmarks the result against a VAR Granger-causality baseline.
"""

__version__ = "1.0.0"

from spikecause.backend import resolve_backend
from spikecause.dataset import WindowedDataset, build_dataset
from spikecause.errors import SpikecauseError
from spikecause.extract import CausalEstimate, extract_for_model
from spikecause.metrics import RocResult, auroc
from spikecause.model import CausalTransformer, ModelConfig
from spikecause.network import NetworkTopology, generate_topology
from spikecause.rng import Rng, derive_seed
from spikecause.simulate import SimulationTrace, simulate
from spikecause.train import TrainConfig, TrainReport, evaluate_r2, train
from spikecause.var_gc import GcMatrix, pairwise_conditional_gc, select_order

__all__ = [
    "CausalEstimate", "CausalTransformer", "GcMatrix", "ModelConfig",
    "NetworkTopology", "RocResult", "Rng", "SimulationTrace",
    "SpikecauseError", "TrainConfig", "TrainReport", "WindowedDataset",
    "auroc", "build_dataset", "derive_seed", "evaluate_r2",
    "extract_for_model", "generate_topology", "pairwise_conditional_gc",
    "resolve_backend", "select_order", "simulate", "train",
]
