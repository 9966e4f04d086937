"""Matplotlib rendering for the CLI report paths.

Every report-producing command writes its delimited output first and then,
unless figures are disabled, renders a companion PNG next to it. Imports
matplotlib lazily so library users and figure-less runs never pay for it.
"""


def _plt():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def plot_fracdemo(results, path):
    """Objective value vs iteration, one curve per fractional order.

    results holds (alpha, x array, f array) triples.
    """
    import numpy as np

    plt = _plt()
    fig, ax = plt.subplots(figsize=(7, 4.5))
    for alpha, _xs, fs in results:
        ax.semilogy(np.arange(len(fs)), np.maximum(fs, 1e-30),
                    label=f"$\\alpha$ = {alpha:g}", linewidth=1.2)
    ax.set_xlabel("Iteration")
    ax.set_ylabel("f(x)")
    ax.set_title("Fractional gradient descent on $f(x) = (x-5)^2$")
    ax.legend(fontsize=8)
    ax.set_xlim(0, min(400, max(len(fs) for _, _, fs in results)))
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_metrics(rows, path):
    """Batch loss and accuracy curves over training iterations."""
    plt = _plt()
    fig, axes = plt.subplots(2, 1, figsize=(7, 6), sharex=True)
    its = [r.iteration for r in rows]
    axes[0].plot(its, [r.batch_loss for r in rows], color="tab:red", linewidth=1.0)
    axes[0].set_ylabel("Batch loss")
    axes[1].plot(its, [r.batch_accuracy for r in rows], color="tab:blue", linewidth=1.0,
                 label="batch accuracy")
    evals = [(r.iteration, r.test_accuracy) for r in rows if r.test_accuracy is not None]
    if evals:
        axes[1].plot(*zip(*evals), "o-", color="tab:green", markersize=3, label="test accuracy")
    axes[1].set_ylabel("Accuracy")
    axes[1].set_xlabel("Iteration")
    axes[1].set_ylim(0, 1)
    axes[1].legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_sweep(rows, path):
    """Mean test/train accuracy and loss vs fractional order, with error bars."""
    plt = _plt()
    fig, axes = plt.subplots(2, 1, figsize=(7, 6), sharex=True)
    alphas = [r["alpha"] for r in rows]
    axes[0].errorbar(alphas, [r["train_accuracy_mean"] for r in rows],
                     yerr=[r["train_accuracy_std"] for r in rows],
                     marker="o", capsize=3, label="train")
    axes[0].errorbar(alphas, [r["test_accuracy_mean"] for r in rows],
                     yerr=[r["test_accuracy_std"] for r in rows],
                     marker="s", capsize=3, label="test")
    ref = [(r["alpha"], r["reference_test_accuracy"]) for r in rows
           if r.get("reference_test_accuracy") is not None]
    if ref:
        axes[0].plot(*zip(*ref), "k--", alpha=0.5, label="published reference")
    axes[0].set_ylabel("Accuracy")
    axes[0].set_ylim(0, 1)
    axes[0].legend(fontsize=8)
    axes[1].errorbar(alphas, [r["train_loss_mean"] for r in rows],
                     yerr=[r["train_loss_std"] for r in rows], marker="o", capsize=3)
    axes[1].set_ylabel("Training loss")
    axes[1].set_xlabel("Fractional order $\\alpha$")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_traces(trace_rows, theta, path):
    """Membrane potential traces, one panel per traced neuron."""
    plt = _plt()
    keys = []
    series = {}
    for t, layer, neuron, u, spiked in trace_rows:
        key = (layer, neuron)
        if key not in series:
            keys.append(key)
            series[key] = []
        series[key].append((t, u, spiked))
    n = len(keys)
    fig, axes = plt.subplots(n, 1, figsize=(7, 1.4 * n + 1), sharex=True, squeeze=False)
    for ax, key in zip(axes[:, 0], keys):
        pts = series[key]
        ts = [p[0] for p in pts]
        us = [p[1] for p in pts]
        ax.plot(ts, us, linewidth=0.9)
        spikes = [p[0] for p in pts if p[2]]
        if spikes:
            ax.plot(spikes, [theta] * len(spikes), "r|", markersize=8)
        ax.axhline(theta, color="gray", linestyle=":", linewidth=0.7)
        ax.set_ylabel(f"L{key[0]} n{key[1]}", fontsize=7)
    axes[-1, 0].set_xlabel("Time step (ms)")
    fig.suptitle("Membrane potential traces (pre-reset)", fontsize=10)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
