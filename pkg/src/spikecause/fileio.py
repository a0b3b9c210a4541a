"""Artifact persistence: topologies, traces, checkpoints, estimates, results.

All JSON is written canonically (sorted keys, fixed separators, trailing
newline) so identical content always produces identical bytes, which is
what makes rerun-equals-resume checks as simple as file comparison.
Floats in CSV files use Python's shortest round-trip repr, so reading a
trace back reproduces the simulated values bit for bit. Writes go
through a temp file + rename, so an interrupted run never leaves a
half-written artifact that a resume would mistake for a finished one.
"""

import hashlib
import json
import os

import numpy as np

from spikecause.errors import ConfigError
from spikecause.extract import CausalEstimate
from spikecause.model import CausalTransformer, ModelConfig
from spikecause.network import NetworkTopology

CHECKPOINT_SCHEMA = 1
RESULTS_SCHEMA = 1


def canonical_json(obj):
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def atomic_write_text(path, text):
    tmp = f"{path}.tmp"
    with open(tmp, "w") as f:
        f.write(text)
    os.replace(tmp, path)


def atomic_write_bytes(path, blob):
    tmp = f"{path}.tmp"
    with open(tmp, "wb") as f:
        f.write(blob)
    os.replace(tmp, path)


def write_json(path, obj):
    atomic_write_text(path, canonical_json(obj))


def read_json(path):
    with open(path) as f:
        return json.load(f)


def config_hash(obj):
    """Short stable digest of a semantic configuration dict."""
    digest = hashlib.sha256(canonical_json(obj).encode()).hexdigest()
    return digest[:12]


# --- topology ---------------------------------------------------------------

def write_topology(path, topology):
    write_json(path, topology.to_dict())


def read_topology(path):
    return NetworkTopology.from_dict(read_json(path))


# --- voltage traces ---------------------------------------------------------

def write_trace(csv_path, meta_path, trace, noise_mean, noise_std):
    n = trace.n
    lines = [",".join(["t"] + [f"v_{i}" for i in range(n)])]
    for t in range(trace.v.shape[0]):
        row = [str(t)] + [repr(float(x)) for x in trace.v[t]]
        lines.append(",".join(row))
    atomic_write_text(csv_path, "\n".join(lines) + "\n")
    write_json(meta_path, {
        "rows": int(trace.v.shape[0]),
        "n": int(n),
        "noise_mean": float(noise_mean),
        "noise_std": float(noise_std),
        "total_spikes": int(trace.spikes.sum()),
    })


def read_trace(csv_path):
    """Voltage matrix (rows, n) from a trace CSV."""
    with open(csv_path) as f:
        header = f.readline().strip().split(",")
        n = len(header) - 1
        rows = [line.strip().split(",")[1:] for line in f if line.strip()]
    return np.array(rows, dtype=np.float64).reshape(len(rows), n)


# --- model checkpoints ------------------------------------------------------

def save_checkpoint(prefix, model, extra=None):
    """Manifest JSON + little-endian float32 blob in manifest order.

    Parameter order in the blob follows the manifest's entry list, which
    is the store's lexicographic name order.
    """
    store = model.store
    entries = [
        {"name": name, "shape": list(store[name].data.shape)}
        for name in store.names()
    ]
    manifest = {
        "schema": CHECKPOINT_SCHEMA,
        "dtype": "<f4",
        "model_config": model.config.to_dict(),
        "params": entries,
        "extra": extra or {},
    }
    blob = store.to_flat().astype("<f4").tobytes()
    write_json(f"{prefix}.json", manifest)
    atomic_write_bytes(f"{prefix}.bin", blob)


def load_checkpoint(prefix):
    """Rebuild a model from a manifest + blob pair; returns (model, extra).

    Parameters pass through float32 on the way in, so two checkpoints
    with equal bytes always evaluate identically regardless of how the
    in-memory training states differed below float32 resolution.
    """
    manifest = read_json(f"{prefix}.json")
    if manifest.get("schema") != CHECKPOINT_SCHEMA:
        raise ConfigError(f"unsupported checkpoint schema in {prefix}.json")
    config = ModelConfig.from_dict(manifest["model_config"])
    model = CausalTransformer(config, rng=None)
    flat = np.frombuffer(
        open(f"{prefix}.bin", "rb").read(), dtype="<f4"
    ).astype(np.float64)
    expected = [(e["name"], tuple(e["shape"])) for e in manifest["params"]]
    actual = [(n, model.store[n].data.shape) for n in model.store.names()]
    if expected != actual:
        raise ConfigError(f"checkpoint {prefix} does not match the model layout")
    model.store.load_flat(flat)
    return model, manifest.get("extra", {})


# --- causal estimates and ROC curves ---------------------------------------

def write_estimate(path, estimate):
    write_json(path, estimate.to_dict())


def read_estimate(path):
    return CausalEstimate.from_dict(read_json(path))


def write_roc_csv(path, roc):
    lines = ["fpr,tpr"]
    for x, y in zip(roc.fpr, roc.tpr):
        lines.append(f"{repr(float(x))},{repr(float(y))}")
    atomic_write_text(path, "\n".join(lines) + "\n")
