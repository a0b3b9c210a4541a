"""Command-line entry point.

Subcommands cover the pipeline stages individually (simulate, train,
extract, mvgc, evaluate, plot, benchmark) and as a whole (experiment).
Exit codes: 0 success, 1 configuration/usage problems, 2 runtime errors.
"""

import argparse
import os
import sys

from spikecause.errors import ConfigError, SpikecauseError


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"error: {message}\n")
        raise SystemExit(1)


def _build_parser():
    parser = _Parser(prog="spikecause",
                     description="Spiking-network simulation, attention-based "
                                 "causal discovery, and VAR baselines.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, config=True, out=True):
        if config:
            p.add_argument("--config", help="TOML config file (defaults apply)")
        if out:
            p.add_argument("--out", required=True, help="artifact directory")

    p = sub.add_parser("simulate", parents=[], help="write topology + trace")
    common(p)
    p.add_argument("--size", type=int, help="override network size")
    p.add_argument("--prob", type=float, help="override connection probability")
    p.add_argument("--index", type=int, default=0, help="topology index (seed tag)")

    p = sub.add_parser("train", help="train one model on a simulated directory")
    common(p)
    p.add_argument("--seed", type=int, default=0, help="model seed index")

    p = sub.add_parser("extract", help="aggregate attention from checkpoints")
    common(p)

    p = sub.add_parser("mvgc", help="VAR Granger baseline on a trace")
    common(p)
    p.add_argument("--criterion", choices=["aic", "bic", "both"], default="both")

    p = sub.add_parser("evaluate", help="AUROC (and R2) from artifacts")
    p.add_argument("--estimate", required=True, help="estimate JSON path")
    p.add_argument("--topology", required=True, help="topology JSON path")
    p.add_argument("--exclude-diagonal", action="store_true")

    p = sub.add_parser("experiment", help="full sweep from a config")
    common(p)
    p.add_argument("--threads", type=int, default=1)

    p = sub.add_parser("plot", help="plot data CSV + SVGs from results.json")
    p.add_argument("--results", required=True, help="results.json path")
    p.add_argument("--out", required=True)

    p = sub.add_parser("benchmark", help="compare compiled and numpy kernels")
    p.add_argument("--repeats", type=int, default=3)
    return parser


def _config(args):
    from spikecause.config import load_config
    return load_config(getattr(args, "config", None))


def _cell_overrides(cfg, args):
    n = args.size if args.size is not None else cfg.sizes[0]
    p = args.prob if args.prob is not None else cfg.probs[0]
    return n, p


def _cmd_simulate(args):
    from spikecause.experiment import simulate_cell
    cfg = _config(args)
    n, p = _cell_overrides(cfg, args)
    simulate_cell(cfg, args.out, n, p, args.index)
    print(f"wrote topology.json, trace.csv, trace.meta.json to {args.out}")
    return 0


def _cmd_train(args):
    from spikecause import fileio
    from spikecause.experiment import train_seed
    cfg = _config(args)
    series = fileio.read_trace(os.path.join(args.out, "trace.csv"))
    n = series.shape[1]
    p = cfg.probs[0]
    train_seed(cfg, args.out, n, p, 0, args.seed)
    report = fileio.read_json(os.path.join(args.out, f"seed{args.seed}", "report.json"))
    print(f"trained seed {args.seed}: best val loss {report['best_val_loss']:.6f} "
          f"at epoch {report['best_epoch']} of {report['stopped_epoch']}")
    return 0


def _cmd_extract(args):
    import glob

    from spikecause import fileio
    from spikecause.errors import ConfigError
    from spikecause.experiment import evaluate_seed
    from spikecause.extract import CausalEstimate, average_models
    cfg = _config(args)
    seed_dirs = sorted(glob.glob(os.path.join(args.out, "seed*")))
    if not seed_dirs:
        raise ConfigError(f"no seed directories under {args.out}")
    series = fileio.read_trace(os.path.join(args.out, "trace.csv"))
    n = series.shape[1]
    mats = []
    for seed_dir in seed_dirs:
        s = int(os.path.basename(seed_dir)[4:])
        _, sampavg = evaluate_seed(cfg, args.out, n, cfg.probs[0], 0, s)
        mats.append(sampavg)
    modelavg = average_models(mats)
    path = os.path.join(args.out, "attention_estimate.json")
    fileio.write_estimate(path, CausalEstimate(
        scores=modelavg, provenance="attention", diagonal_zeroed=True,
    ))
    print(f"wrote {path} from {len(mats)} model(s)")
    return 0


def _cmd_mvgc(args):
    from spikecause import fileio
    from spikecause.experiment import run_baseline
    from spikecause.metrics import auroc
    cfg = _config(args)
    criteria = ["aic", "bic"] if args.criterion == "both" else [args.criterion]
    topo_path = os.path.join(args.out, "topology.json")
    topology = fileio.read_topology(topo_path) if os.path.exists(topo_path) else None
    for criterion in criteria:
        f_matrix, order = run_baseline(cfg, args.out, criterion)
        line = f"mvgc_{criterion}: order {order}"
        if topology is not None:
            roc = auroc(f_matrix, topology.adjacency, include_diagonal=True)
            line += f", AUROC {roc.auroc:.4f}"
        print(line)
    return 0


def _cmd_evaluate(args):
    from spikecause import fileio
    from spikecause.metrics import auroc
    estimate = fileio.read_estimate(args.estimate)
    topology = fileio.read_topology(args.topology)
    roc = auroc(estimate.scores, topology.adjacency,
                include_diagonal=not args.exclude_diagonal)
    mode = "off-diagonal" if args.exclude_diagonal else "diagonal-included"
    print(f"AUROC ({estimate.provenance}, {mode}): {roc.auroc:.4f} "
          f"[{roc.positives} positives / {roc.negatives} negatives]")
    return 0


def _cmd_experiment(args):
    from spikecause.experiment import run_experiment
    cfg = _config(args)
    records, failures = run_experiment(
        cfg, args.out, threads=args.threads, config_path=args.config,
        progress=print,
    )
    print(f"completed {len(records)} topology record(s), {len(failures)} failure(s)")
    print(f"results: {os.path.join(args.out, 'results.json')}")
    return 2 if failures else 0


def _cmd_plot(args):
    from spikecause import fileio
    from spikecause.plotting import emit_plot_data
    results = fileio.read_json(args.results)
    written = emit_plot_data(results.get("records", []), args.out)
    for path in written:
        print(f"wrote {path}")
    return 0


def _cmd_benchmark(args):
    from spikecause.benchmark import run_benchmark
    for line in run_benchmark(repeats=args.repeats):
        print(line)
    return 0


_HANDLERS = {
    "simulate": _cmd_simulate,
    "train": _cmd_train,
    "extract": _cmd_extract,
    "mvgc": _cmd_mvgc,
    "evaluate": _cmd_evaluate,
    "experiment": _cmd_experiment,
    "plot": _cmd_plot,
    "benchmark": _cmd_benchmark,
}


def main(argv=None):
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        return _HANDLERS[args.command](args)
    except SystemExit as exc:
        return exc.code if exc.code is not None else 0
    except ConfigError as exc:
        sys.stderr.write(f"config error: {exc}\n")
        return 1
    except SpikecauseError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 2
    except FileNotFoundError as exc:
        sys.stderr.write(f"missing file: {exc}\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())
