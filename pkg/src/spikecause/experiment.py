"""End-to-end sweep orchestration with resumable, per-artifact jobs.

For every (size, probability) cell and topology index the pipeline is:
generate topology -> simulate -> window/normalize -> train one model per
seed -> reduce recorded attention to a causal estimate -> fit the VAR
baseline with AIC- and BIC-selected orders -> score everything against
the known wiring. Each stage persists its artifact atomically and is
skipped on rerun when the file already exists, so an interrupted sweep
resumes where it stopped; a root stamp refuses to mix configurations in
one output directory.

Every job draws from its own seed stream derived from (master seed, job
tags), so results are independent of execution order and thread count.
"""

import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from spikecause import fileio
from spikecause.dataset import build_dataset, normalize, split_indices
from spikecause.errors import ConfigError, SpikecauseError
from spikecause.extract import CausalEstimate, average_models, extract_for_model
from spikecause.metrics import auroc
from spikecause.model import CausalTransformer, ModelConfig
from spikecause.network import generate_topology
from spikecause.rng import Rng, derive_seed
from spikecause.simulate import simulate
from spikecause.train import TrainConfig, evaluate_r2, train
from spikecause.var_gc import pairwise_conditional_gc, select_order


def _cell_name(n, p):
    return f"N{n}_p{p:g}"


def _ensure_stamp(cfg, out_dir):
    path = os.path.join(out_dir, "run.json")
    stamp = {"schema": fileio.RESULTS_SCHEMA, "config_hash": cfg.hash()}
    if os.path.exists(path):
        prior = fileio.read_json(path)
        if prior.get("config_hash") != stamp["config_hash"]:
            raise ConfigError(
                f"{out_dir} holds results for config {prior.get('config_hash')}, "
                f"current config is {stamp['config_hash']}; use a fresh directory"
            )
    else:
        fileio.write_json(path, stamp)


def simulate_cell(cfg, topo_dir, n, p, k):
    """Topology + trace artifacts for one network; skips finished files."""
    topo_path = os.path.join(topo_dir, "topology.json")
    trace_path = os.path.join(topo_dir, "trace.csv")
    meta_path = os.path.join(topo_dir, "trace.meta.json")
    if os.path.exists(topo_path) and os.path.exists(trace_path):
        return
    os.makedirs(topo_dir, exist_ok=True)
    topo_rng = Rng(derive_seed(cfg.seed, "topology", n, f"{p:g}", k))
    topology = generate_topology(
        n, p, topo_rng, coupling_strength=cfg.simulator.coupling_strength
    )
    sim_rng = Rng(derive_seed(cfg.seed, "simulate", n, f"{p:g}", k))
    trace = simulate(
        topology, cfg.steps, sim_rng,
        noise_mean=cfg.simulator.noise_mean,
        noise_std=cfg.simulator.noise_std,
    )
    fileio.write_topology(topo_path, topology)
    fileio.write_trace(trace_path, meta_path, trace,
                       cfg.simulator.noise_mean, cfg.simulator.noise_std)


def _load_dataset(cfg, topo_dir):
    series = fileio.read_trace(os.path.join(topo_dir, "trace.csv"))
    return build_dataset(series, cfg.context, cfg.horizon), series


def _model_config(cfg, n):
    # normalize window-relative step indices by the window's span
    return ModelConfig(
        n=n, context=cfg.context, horizon=cfg.horizon,
        dropout=cfg.train.dropout, token_mix=cfg.token_mix,
        time_denom=float(cfg.context + cfg.horizon + 1),
    )


def train_seed(cfg, topo_dir, n, p, k, s):
    """Train one seed's model; persists checkpoint + training report."""
    seed_dir = os.path.join(topo_dir, f"seed{s}")
    prefix = os.path.join(seed_dir, "checkpoint")
    if os.path.exists(f"{prefix}.json") and os.path.exists(f"{prefix}.bin"):
        return
    os.makedirs(seed_dir, exist_ok=True)
    data, _ = _load_dataset(cfg, topo_dir)
    init_rng = Rng(derive_seed(cfg.seed, "init", n, f"{p:g}", k, s))
    model = CausalTransformer(_model_config(cfg, n), rng=init_rng)
    tcfg = replace(cfg.train, seed=derive_seed(cfg.seed, "train", n, f"{p:g}", k, s))
    _, report = train(model, data, tcfg)
    fileio.save_checkpoint(prefix, model, extra={
        "train_config": tcfg.to_dict(),
        "best_val_loss": float(report.best_val_loss),
    })
    fileio.write_json(os.path.join(seed_dir, "report.json"), report.to_dict())
    return report.wall_seconds


def _train_worker(payload):
    from spikecause.config import load_config  # re-hydrate in subprocess
    cfg = load_config(payload["config_path"]) if payload["config_path"] else None
    if cfg is None:
        raise ConfigError("worker requires a config file path")
    return train_seed(cfg, payload["topo_dir"], payload["n"],
                      payload["p"], payload["k"], payload["s"])


def evaluate_seed(cfg, topo_dir, n, p, k, s):
    """R^2 and sample-averaged attention from the saved checkpoint.

    Evaluation always goes through the float32 checkpoint on disk, so a
    fresh run and a resumed run produce identical numbers.
    """
    seed_dir = os.path.join(topo_dir, f"seed{s}")
    eval_path = os.path.join(seed_dir, "eval.json")
    samp_path = os.path.join(seed_dir, "sampavg.json")
    if os.path.exists(eval_path) and os.path.exists(samp_path):
        payload = fileio.read_json(eval_path)
        samp = fileio.read_estimate(samp_path)
        return payload, samp.scores
    data, _ = _load_dataset(cfg, topo_dir)
    model, _ = fileio.load_checkpoint(os.path.join(seed_dir, "checkpoint"))
    per_neuron, mean_r2 = evaluate_r2(model, data)
    sampavg = extract_for_model(model, data)
    payload = {
        "r2_per_neuron": [float(x) for x in per_neuron],
        "mean_r2": float(mean_r2),
    }
    fileio.write_json(eval_path, payload)
    fileio.write_estimate(samp_path, CausalEstimate(
        scores=sampavg, provenance="attention", diagonal_zeroed=False,
    ))
    return payload, sampavg


def run_baseline(cfg, topo_dir, criterion):
    """VAR Granger matrix with the order picked by AIC or BIC."""
    path = os.path.join(topo_dir, f"mvgc_{criterion}.json")
    meta_path = os.path.join(topo_dir, f"mvgc_{criterion}.meta.json")
    if os.path.exists(path) and os.path.exists(meta_path):
        est = fileio.read_estimate(path)
        meta = fileio.read_json(meta_path)
        return est.scores, meta["order"]
    series = fileio.read_trace(os.path.join(topo_dir, "trace.csv"))
    train_end, _ = split_indices(series.shape[0])
    normalized, _, _ = normalize(series, train_end)
    if cfg.baseline.segment == "train":
        normalized = normalized[:train_end]
    order = select_order(normalized, cfg.baseline.max_order, criterion)
    gc = pairwise_conditional_gc(normalized, order)
    fileio.write_estimate(path, CausalEstimate(
        scores=gc.F, provenance="var_f", diagonal_zeroed=True,
    ))
    fileio.write_json(os.path.join(topo_dir, f"mvgc_{criterion}.meta.json"), {
        "order": int(order),
        "criterion": criterion,
        "failures": [list(f[:2]) + [str(f[2])] for f in gc.failures],
    })
    return gc.F, order


def process_topology(cfg, out_dir, n, p, k, progress=None):
    """All stages for one topology; returns its results record."""
    topo_dir = os.path.join(out_dir, _cell_name(n, p), f"topo{k}")
    started = time.perf_counter()

    simulate_cell(cfg, topo_dir, n, p, k)
    topology = fileio.read_topology(os.path.join(topo_dir, "topology.json"))

    seed_reports = []
    sampavg_mats = []
    for s in range(cfg.seeds_per_network):
        train_seed(cfg, topo_dir, n, p, k, s)
        payload, sampavg = evaluate_seed(cfg, topo_dir, n, p, k, s)
        seed_reports.append(payload)
        sampavg_mats.append(sampavg)
        if progress:
            progress(f"  seed {s}: mean R2 {payload['mean_r2']:.4f}")

    modelavg = average_models(sampavg_mats)
    est_path = os.path.join(topo_dir, "attention_estimate.json")
    fileio.write_estimate(est_path, CausalEstimate(
        scores=modelavg, provenance="attention", diagonal_zeroed=True,
    ))

    truth = topology.adjacency
    scores = {"attention": modelavg}
    orders = {}
    for criterion in ("aic", "bic"):
        f_matrix, order = run_baseline(cfg, topo_dir, criterion)
        scores[f"mvgc_{criterion}"] = f_matrix
        orders[criterion] = order

    record = {
        "n": int(n), "p": float(p), "topology": int(k),
        "auroc": {}, "auroc_offdiag": {},
        "per_seed_r2": [r["mean_r2"] for r in seed_reports],
        "mean_r2": float(np.mean([r["mean_r2"] for r in seed_reports])),
        "var_order": orders,
    }
    for method, matrix in scores.items():
        roc = auroc(matrix, truth, include_diagonal=True)
        record["auroc"][method] = roc.auroc
        fileio.write_roc_csv(os.path.join(topo_dir, f"roc_{method}.csv"), roc)
        record["auroc_offdiag"][method] = auroc(
            matrix, truth, include_diagonal=False
        ).auroc
    fileio.write_json(os.path.join(topo_dir, "summary.json"), record)
    return record, time.perf_counter() - started


def run_experiment(cfg, out_dir, threads=1, config_path=None, progress=None):
    """Sweep every (size, prob, topology); returns (records, failures).

    With ``threads`` > 1 the training jobs of all cells run in a process
    pool first (each owns its artifact files), then aggregation proceeds
    sequentially; artifacts and results are identical either way.
    """
    os.makedirs(out_dir, exist_ok=True)
    _ensure_stamp(cfg, out_dir)

    jobs = [
        (n, p, k)
        for n in cfg.sizes for p in cfg.probs
        for k in range(cfg.topologies_per_cell)
    ]

    if threads > 1 and config_path is not None:
        for n, p, k in jobs:
            simulate_cell(cfg, os.path.join(out_dir, _cell_name(n, p), f"topo{k}"),
                          n, p, k)
        payloads = [
            {"config_path": config_path, "n": n, "p": p, "k": k, "s": s,
             "topo_dir": os.path.join(out_dir, _cell_name(n, p), f"topo{k}")}
            for n, p, k in jobs for s in range(cfg.seeds_per_network)
        ]
        with ProcessPoolExecutor(max_workers=threads) as pool:
            list(pool.map(_train_worker, payloads))

    records, failures, timings = [], [], {}
    for n, p, k in jobs:
        label = f"{_cell_name(n, p)}/topo{k}"
        if progress:
            progress(f"[{label}] starting")
        try:
            record, seconds = process_topology(cfg, out_dir, n, p, k, progress)
            records.append(record)
            timings[label] = seconds
            if progress:
                progress(
                    f"[{label}] mean R2 {record['mean_r2']:.4f}, AUROC "
                    + ", ".join(f"{m} {v:.3f}" for m, v in record["auroc"].items())
                )
        except SpikecauseError as exc:
            failures.append({"cell": label, "error": str(exc)})
            if progress:
                progress(f"[{label}] FAILED: {exc}")

    results = {
        "schema": fileio.RESULTS_SCHEMA,
        "config_hash": cfg.hash(),
        "records": records,
        "failures": failures,
    }
    fileio.write_json(os.path.join(out_dir, "results.json"), results)
    fileio.write_json(os.path.join(out_dir, "timings.json"),
                      {"seconds": timings})
    return records, failures
