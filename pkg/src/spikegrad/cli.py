"""Command-line front end: train, eval, sweep, fracdemo, inspect, cost.

Configuration precedence: built-in defaults < JSON config file (--config)
< command-line flags. The effective configuration is echoed into every run
summary so runs are self-describing. Every command is deterministic given
(config, seed, input files); the report-producing commands write delimited
output first and render a companion matplotlib figure next to it unless
--no-figures is passed.

Exit codes: 0 success, 2 config error, 3 data/format error, 4 numerical
divergence.
"""

import argparse
import json
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__, checkpoint, encoding, figures, network
from .data import TEST_IMAGES, TEST_LABELS, TRAIN_IMAGES, TRAIN_LABELS, load_dataset
from .errors import ConfigError, DataFormatError, DivergenceError, ShapeError
from .fracgrad import FractionalStepParams, minimize_convex
from .metrics import ComplexityModel, computational_cost, emit_csv, epoch_complexity, first_attainment_epochs, parse_csv

DATA_DIR_ENV = "SPIKEGRAD_DATA_DIR"

# Published FO-STDGD test accuracies (two epochs, 784-500-150-10) per
# fractional order; carried into sweep summaries as reference targets.
REFERENCE_TEST_ACCURACY = {
    0.1: 0.0466, 0.2: 0.0466, 0.3: 0.0462, 0.4: 0.0467, 0.5: 0.0474,
    0.6: 0.0491, 0.7: 0.0534, 0.8: 0.0697, 0.9: 0.1318, 1.0: 0.3837,
    1.1: 0.6679, 1.2: 0.7947, 1.3: 0.8704, 1.4: 0.9060, 1.5: 0.9338,
    1.6: 0.9576, 1.7: 0.9713, 1.8: 0.9760, 1.9: 0.9764,
}

CONFIG_DEFAULTS = {
    "hidden": [500, 150],
    "theta": 15.0,
    "tau": 50,
    "T": 100,
    "alpha": 1.9,
    "mu": 0.00033,
    "beta": 2.0,
    "epsilon": 1e-5,
    "batch_size": 50,
    "seed": 0,
    "rate_scale": 0.25,
    "weight_init_stddev": 1.0,
    "epochs": 1,
    "eval_every": 400,
    "train_limit": None,
    "test_limit": None,
    "data_dir": None,
    "out_dir": "spikegrad_out",
    "figures": True,
    "trace_neurons": None,
}


def _parse_int_list(text):
    try:
        return [int(x) for x in str(text).split(",") if x.strip() != ""]
    except ValueError:
        raise ConfigError(f"expected comma-separated integers, got {text!r}") from None


def _parse_float_list(text):
    try:
        return [float(x) for x in str(text).split(",") if x.strip() != ""]
    except ValueError:
        raise ConfigError(f"expected comma-separated reals, got {text!r}") from None


def _parse_neuron_list(text):
    pairs = []
    for item in str(text).split(","):
        item = item.strip()
        if not item:
            continue
        try:
            layer, neuron = item.split(":")
            pairs.append((int(layer), int(neuron)))
        except ValueError:
            raise ConfigError(f"expected layer:index pairs, got {item!r}") from None
    return pairs


def build_run_config(args):
    """Merge defaults, JSON config file and CLI flags into one dict."""
    cfg = dict(CONFIG_DEFAULTS)
    config_path = getattr(args, "config", None)
    if config_path:
        try:
            with open(config_path, "r", encoding="utf-8") as f:
                loaded = json.load(f)
        except FileNotFoundError:
            raise ConfigError(f"config file not found: {config_path}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file {config_path} is not valid JSON: {exc}") from None
        unknown = set(loaded) - set(cfg)
        if unknown:
            raise ConfigError(f"unknown config keys in {config_path}: {sorted(unknown)}")
        cfg.update(loaded)
    flag_map = {
        "alpha": "alpha", "lr": "mu", "epochs": "epochs", "seed": "seed",
        "train_limit": "train_limit", "test_limit": "test_limit",
        "out_dir": "out_dir", "data_dir": "data_dir", "eval_every": "eval_every",
        "batch_size": "batch_size", "rate_scale": "rate_scale",
    }
    for flag, key in flag_map.items():
        value = getattr(args, flag, None)
        if value is not None:
            cfg[key] = value
    if getattr(args, "hidden", None) is not None:
        cfg["hidden"] = _parse_int_list(args.hidden)
    if getattr(args, "no_figures", False):
        cfg["figures"] = False
    if getattr(args, "neurons", None) is not None:
        cfg["trace_neurons"] = [list(p) for p in _parse_neuron_list(args.neurons)]
    if cfg["data_dir"] is None:
        cfg["data_dir"] = os.environ.get(DATA_DIR_ENV)
    if not isinstance(cfg["epochs"], int) or cfg["epochs"] < 1:
        raise ConfigError(f"epochs must be >= 1, got {cfg['epochs']!r}")
    if not isinstance(cfg["eval_every"], int) or cfg["eval_every"] < 1:
        raise ConfigError(f"eval_every must be >= 1, got {cfg['eval_every']!r}")
    return cfg


def network_config(cfg, n_in=784, n_out=10):
    return network.NetworkConfig(
        layer_sizes=(n_in, *cfg["hidden"], n_out),
        theta=cfg["theta"],
        tau=cfg["tau"],
        T=cfg["T"],
        alpha=cfg["alpha"],
        mu=cfg["mu"],
        beta=cfg["beta"],
        epsilon=cfg["epsilon"],
        batch_size=cfg["batch_size"],
        seed=cfg["seed"],
        rate_scale=cfg["rate_scale"],
        weight_init_stddev=cfg["weight_init_stddev"],
    )


def _require_data_dir(cfg):
    data_dir = cfg.get("data_dir")
    if not data_dir:
        raise DataFormatError(
            f"no data directory: pass --data-dir, set {DATA_DIR_ENV}, or put data_dir in the config file"
        )
    data_dir = Path(data_dir)
    if not data_dir.is_dir():
        raise DataFormatError(f"data directory {data_dir} does not exist")
    return data_dir


def _load_mnist(data_dir, train=True, test=True, train_limit=None, test_limit=None):
    out = []
    if train:
        ds = load_dataset(data_dir / TRAIN_IMAGES, data_dir / TRAIN_LABELS)
        out.append(ds.subset(train_limit))
    if test:
        ds = load_dataset(data_dir / TEST_IMAGES, data_dir / TEST_LABELS)
        out.append(ds.subset(test_limit))
    return out


def run_training(cfg, out_dir):
    """Shared train pipeline: load, train, evaluate, write artifacts.

    Returns the summary dict. Used by cmd_train and per-cell by cmd_sweep.
    """
    data_dir = _require_data_dir(cfg)
    train_ds, test_ds = _load_mnist(
        data_dir, train_limit=cfg["train_limit"], test_limit=cfg["test_limit"]
    )
    net_cfg = network_config(cfg)
    store = network.init_network(net_cfg)

    def eval_fn(s):
        acc, _ = network.evaluate(s, test_ds, net_cfg)
        return acc

    t0 = time.perf_counter()
    run_metrics = network.train(
        store, train_ds, net_cfg, epochs=cfg["epochs"], eval_fn=eval_fn, eval_every=cfg["eval_every"]
    )
    test_accuracy, test_loss = network.evaluate(store, test_ds, net_cfg)
    wall_ms = (time.perf_counter() - t0) * 1000.0

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    with open(out_dir / "metrics.csv", "w", encoding="utf-8", newline="\n") as f:
        emit_csv(run_metrics, f)
    checkpoint.save_checkpoint(out_dir / "checkpoint.json", store, net_cfg, run_metrics.rows[-1].iteration if run_metrics.rows else 0)

    tail = run_metrics.rows[-10:]
    summary = {
        "config": cfg,
        "layer_sizes": list(net_cfg.layer_sizes),
        "iterations": run_metrics.rows[-1].iteration if run_metrics.rows else 0,
        "train_samples": len(train_ds),
        "test_samples": len(test_ds),
        "final_train_accuracy": float(np.mean([r.batch_accuracy for r in tail])) if tail else None,
        "final_train_loss": float(np.mean([r.batch_loss for r in tail])) if tail else None,
        "test_accuracy": test_accuracy,
        "test_loss": test_loss,
        "homeostasis": network.homeostasis_report(store, net_cfg),
        "wall_time_ms": wall_ms,
        "version": __version__,
    }
    with open(out_dir / "summary.json", "w", encoding="utf-8", newline="\n") as f:
        json.dump(summary, f, indent=2, sort_keys=True)
        f.write("\n")
    if cfg["figures"] and run_metrics.rows:
        figures.plot_metrics(run_metrics.rows, out_dir / "metrics.png")
    return summary


def cmd_train(args):
    cfg = build_run_config(args)
    summary = run_training(cfg, cfg["out_dir"])
    print(f"trained {summary['iterations']} iterations "
          f"(alpha={cfg['alpha']}, layers={summary['layer_sizes']})")
    print(f"final train accuracy {summary['final_train_accuracy']:.4f}, "
          f"loss {summary['final_train_loss']:.4f}")
    print(f"test accuracy {summary['test_accuracy']:.4f}, test loss {summary['test_loss']:.4f}")
    print(f"outputs in {cfg['out_dir']}")
    return 0


def cmd_eval(args):
    cfg = build_run_config(args)
    store, net_cfg, iteration = checkpoint.load_checkpoint(args.checkpoint)
    data_dir = _require_data_dir(cfg)
    (test_ds,) = _load_mnist(data_dir, train=False, test_limit=cfg["test_limit"])
    accuracy, mean_loss = network.evaluate(store, test_ds, net_cfg)
    print(f"checkpoint: {args.checkpoint} (iteration {iteration})")
    print(f"test accuracy {accuracy:.6f}")
    print(f"test mean loss {mean_loss:.6f}")
    return 0


def cmd_sweep(args):
    cfg = build_run_config(args)
    alphas = _parse_float_list(args.alphas)
    if not alphas or any(not (0.0 < a < 2.0) for a in alphas):
        raise ConfigError(f"sweep alphas must lie in (0, 2), got {alphas}")
    repeats = args.repeats
    if repeats < 1:
        raise ConfigError(f"repeats must be >= 1, got {repeats}")
    out_dir = Path(cfg["out_dir"])
    out_dir.mkdir(parents=True, exist_ok=True)
    base_seed = cfg["seed"]
    rows = []
    for alpha in alphas:
        cell = {"train_accuracy": [], "test_accuracy": [], "train_loss": []}
        for rep in range(repeats):
            cell_cfg = dict(cfg)
            cell_cfg["alpha"] = alpha
            cell_cfg["seed"] = base_seed + rep
            cell_dir = out_dir / f"alpha_{alpha:g}" / f"rep{rep}"
            summary = run_training(cell_cfg, cell_dir)
            cell["train_accuracy"].append(summary["final_train_accuracy"])
            cell["test_accuracy"].append(summary["test_accuracy"])
            cell["train_loss"].append(summary["final_train_loss"])
            print(f"alpha={alpha:g} rep={rep} seed={cell_cfg['seed']} "
                  f"test_accuracy={summary['test_accuracy']:.4f}", flush=True)
        row = {"alpha": alpha, "repeats": repeats}
        for key in ("train_accuracy", "test_accuracy", "train_loss"):
            row[f"{key}_mean"] = float(np.mean(cell[key]))
            row[f"{key}_std"] = float(np.std(cell[key]))
        row["reference_test_accuracy"] = REFERENCE_TEST_ACCURACY.get(round(alpha, 1))
        rows.append(row)

    columns = ["alpha", "repeats", "train_accuracy_mean", "train_accuracy_std",
               "test_accuracy_mean", "test_accuracy_std", "train_loss_mean",
               "train_loss_std", "reference_test_accuracy"]
    with open(out_dir / "sweep.csv", "w", encoding="utf-8", newline="\n") as f:
        f.write(",".join(columns) + "\n")
        for row in rows:
            f.write(",".join(
                "" if row[c] is None else (f"{row[c]:.17g}" if isinstance(row[c], float) else str(row[c]))
                for c in columns
            ) + "\n")
    if cfg["figures"]:
        figures.plot_sweep(rows, out_dir / "sweep.png")
    print(f"sweep summary in {out_dir / 'sweep.csv'}")
    return 0


def cmd_fracdemo(args):
    cfg = build_run_config(args)
    alphas = _parse_float_list(args.alphas)
    if not alphas or any(not (0.0 < a < 2.0) for a in alphas):
        raise ConfigError(f"fracdemo alphas must lie in (0, 2), got {alphas}")
    if args.iters < 1:
        raise ConfigError(f"iters must be >= 1, got {args.iters}")
    target = 5.0
    grad = lambda x: 2.0 * (x - target)  # noqa: E731

    out_dir = Path(cfg["out_dir"])
    out_dir.mkdir(parents=True, exist_ok=True)
    results = []
    diverged = []
    for alpha in alphas:
        params = FractionalStepParams(alpha=alpha, mu=args.mu, epsilon=args.eps)
        try:
            traj = minimize_convex(grad, args.x0, params, args.iters, args.tol)
            xs = np.array([p[1] for p in traj.points])
        except DivergenceError as exc:
            xs = np.array([p[1] for p in exc.trajectory.points])
            diverged.append(alpha)
            print(f"alpha={alpha:g}: diverged after {len(xs) - 1} iterations", flush=True)
        results.append((alpha, xs, (xs - target) ** 2))

    write_trajectories_csv(results, out_dir / "trajectories.csv")

    for alpha, xs, _fs in results:
        close = np.flatnonzero(np.abs(xs - target) < 0.01)
        hit = f"iter {close[0]}" if close.size else "never"
        print(f"alpha={alpha:g}: {len(xs) - 1} iterations, final x={xs[-1]:.6f}, "
              f"|x-5|<0.01 at {hit}")
    if cfg["figures"]:
        figures.plot_fracdemo(results, out_dir / "fracdemo.png")
    print(f"trajectories in {out_dir / 'trajectories.csv'}")
    return 4 if diverged else 0


def write_trajectories_csv(results, path):
    """Concatenate the per-order (alpha, x, f) columns into one CSV."""
    import polars as pl

    total = sum(len(xs) for _, xs, _ in results)
    alpha_col = np.empty(total)
    iter_col = np.empty(total, dtype=np.int64)
    x_col = np.empty(total)
    f_col = np.empty(total)
    at = 0
    for alpha, xs, fs in results:
        n = len(xs)
        alpha_col[at : at + n] = alpha
        iter_col[at : at + n] = np.arange(n)
        x_col[at : at + n] = xs
        f_col[at : at + n] = fs
        at += n
    pl.DataFrame(
        {"alpha": alpha_col, "iteration": iter_col, "x": x_col, "f": f_col}
    ).write_csv(path)


def cmd_inspect(args):
    cfg = build_run_config(args)
    store, net_cfg, _ = checkpoint.load_checkpoint(args.checkpoint)
    data_dir = _require_data_dir(cfg)
    (test_ds,) = _load_mnist(data_dir, train=False)
    if not (0 <= args.sample_index < len(test_ds)):
        raise ConfigError(f"sample index {args.sample_index} out of range [0, {len(test_ds)})")
    sizes = net_cfg.layer_sizes
    if cfg["trace_neurons"]:
        trace = [(int(l), int(i)) for l, i in cfg["trace_neurons"]]
    else:
        trace = [(len(sizes) - 1, i) for i in range(sizes[-1])]
    for layer, idx in trace:
        if not (1 <= layer < len(sizes)):
            raise ConfigError(f"trace layer {layer} out of range [1, {len(sizes) - 1}]")
        if not (0 <= idx < sizes[layer]):
            raise ConfigError(f"neuron {idx} out of range for layer {layer} (size {sizes[layer]})")

    stream = network.eval_encode_stream(net_cfg, args.sample_index)
    raster = encoding.poisson_encode(
        test_ds.images[args.sample_index], net_cfg.T, net_cfg.rate_scale, stream
    )
    rec = network.forward_sample(store, raster, net_cfg, record_potentials=True)

    out_dir = Path(cfg["out_dir"])
    out_dir.mkdir(parents=True, exist_ok=True)
    rows = []
    for layer, idx in trace:
        u_trace = rec.potentials[layer - 1][idx]
        s_trace = rec.rasters[layer][idx]
        rows.extend((t, layer, idx, float(u_trace[t]), bool(s_trace[t])) for t in range(net_cfg.T))
    with open(out_dir / "traces.csv", "w", encoding="utf-8", newline="\n") as f:
        f.write("t,layer,neuron,u,spiked\n")
        for t, layer, idx, u, spiked in rows:
            f.write(f"{t + 1},{layer},{idx},{u!r},{int(spiked)}\n")
    if cfg["figures"]:
        figures.plot_traces(
            [(t + 1, layer, idx, u, spiked) for t, layer, idx, u, spiked in rows],
            net_cfg.theta, out_dir / "traces.png",
        )
    label = int(test_ds.labels[args.sample_index])
    predicted = encoding.classify(rec.rasters[-1])
    print(f"sample {args.sample_index}: label {label}, predicted {predicted}")
    print(f"traces for {len(trace)} neurons in {out_dir / 'traces.csv'}")
    return 0


def cmd_cost(args):
    levels = _parse_float_list(args.levels)
    if not levels:
        raise ConfigError("at least one error level is required")
    model = ComplexityModel(l=args.l, m=args.m, n=args.n)
    complexity = epoch_complexity(model)
    with open(args.metrics, "r", encoding="utf-8") as f:
        parsed = parse_csv(f)
    trajectory = [1.0 - r.test_accuracy for r in parsed.rows if r.test_accuracy is not None]
    if not trajectory:
        raise DataFormatError(f"{args.metrics} holds no test-accuracy entries")
    epochs = first_attainment_epochs(trajectory, levels)
    cost = computational_cost(trajectory, levels, complexity)
    print(f"per-epoch complexity O({args.l},{args.m},{args.n}) = {complexity}")
    for level, epoch in zip(levels, epochs):
        state = f"first reached at evaluation {epoch}" if epoch is not None else "never reached"
        print(f"error level {level:g}: {state}")
    print(f"computational cost = {cost:.17g}")
    return 0


def _add_common(p, data=True):
    p.add_argument("--config", help="JSON config file (defaults < file < flags)")
    p.add_argument("--out-dir", dest="out_dir", help="output directory")
    p.add_argument("--no-figures", dest="no_figures", action="store_true",
                   help="skip matplotlib figure rendering")
    if data:
        p.add_argument("--data-dir", dest="data_dir",
                       help=f"MNIST IDX directory (falls back to ${DATA_DIR_ENV})")
        p.add_argument("--test-limit", dest="test_limit", type=int,
                       help="use only the first N test images")


def _add_train_flags(p):
    p.add_argument("--alpha", type=float, help="fractional order in (0, 2)")
    p.add_argument("--lr", type=float, help="learning rate mu")
    p.add_argument("--epochs", type=int, help="training epochs")
    p.add_argument("--seed", type=int, help="run seed")
    p.add_argument("--train-limit", dest="train_limit", type=int,
                   help="use only the first N training images")
    p.add_argument("--hidden", help="comma-separated hidden layer widths, e.g. 500,150")
    p.add_argument("--eval-every", dest="eval_every", type=int,
                   help="iterations between test-set evaluations")
    p.add_argument("--batch-size", dest="batch_size", type=int, help="metrics batch size")
    p.add_argument("--rate-scale", dest="rate_scale", type=float,
                   help="peak input firing probability per step")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="spikegrad",
        description="Fractional-order spike-timing-dependent gradient descent for spiking networks",
    )
    parser.add_argument("--version", action="version", version=f"spikegrad {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train a network on MNIST")
    _add_common(p)
    _add_train_flags(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate a checkpoint on the test set")
    _add_common(p)
    p.add_argument("--checkpoint", required=True, help="checkpoint JSON path")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("sweep", help="train across fractional orders and seeds")
    _add_common(p)
    _add_train_flags(p)
    p.add_argument("--alphas", default="0.5,1.0,1.5,1.9",
                   help="comma-separated fractional orders")
    p.add_argument("--repeats", type=int, default=1, help="repeats per order (derived seeds)")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("fracdemo", help="scalar fractional descent on f(x) = (x-5)^2")
    _add_common(p, data=False)
    p.add_argument("--alphas", default="0.3,0.5,1.0,1.3,1.5,1.8,1.9",
                   help="comma-separated fractional orders")
    p.add_argument("--mu", type=float, default=0.02, help="learning rate")
    p.add_argument("--x0", type=float, default=0.0, help="starting point")
    p.add_argument("--iters", type=int, default=800000, help="maximum iterations per order")
    p.add_argument("--tol", type=float, default=1e-8, help="stop when |x_{k+1} - x_k| < tol")
    p.add_argument("--eps", type=float, default=1e-5, help="singularity guard")
    p.set_defaults(func=cmd_fracdemo)

    p = sub.add_parser("inspect", help="membrane traces of one forward pass")
    _add_common(p)
    p.add_argument("--checkpoint", required=True, help="checkpoint JSON path")
    p.add_argument("--sample-index", dest="sample_index", type=int, default=0,
                   help="test-set sample to simulate")
    p.add_argument("--neurons", help="layer:index pairs, e.g. 3:0,3:1 (default: output layer)")
    p.set_defaults(func=cmd_inspect)

    p = sub.add_parser("cost", help="computational-cost metric from a metrics CSV")
    p.add_argument("--metrics", required=True, help="metrics CSV from a training run")
    p.add_argument("--levels", required=True, help="comma-separated error levels")
    p.add_argument("--l", type=int, required=True, help="input neuron count")
    p.add_argument("--m", type=int, required=True, help="hidden neuron count")
    p.add_argument("--n", type=int, required=True, help="output neuron count")
    p.set_defaults(func=cmd_cost)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (DataFormatError, ShapeError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 3
    except DivergenceError as exc:
        print(f"divergence: {exc}", file=sys.stderr)
        return 4
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
