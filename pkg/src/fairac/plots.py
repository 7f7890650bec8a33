"""Figure rendering for experiment reports (Agg backend, files only)."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402


def _prepare(path: Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    return path


def loss_trace_figure(trace, path) -> Path:
    """Per-epoch component losses of a completion-model training run."""
    path = _prepare(path)
    fig, ax = plt.subplots(figsize=(7, 4))
    epochs = range(len(trace.total))
    ax.plot(epochs, trace.l_ae, label="reconstruction")
    ax.plot(epochs, trace.l_cs, label="sensitive classifier")
    ax.plot(epochs, trace.l_c, label="completion")
    ax.plot(epochs, trace.l_t, label="topological fairness")
    ax.set_xlabel("epoch")
    ax.set_ylabel("loss")
    ax.legend(frameon=False)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def beta_sweep_figure(rows: list[dict], path) -> Path:
    """Accuracy and dSP+dEO versus the fairness trade-off weight."""
    path = _prepare(path)
    rows = sorted(rows, key=lambda r: r["beta"])
    betas = [r["beta"] for r in rows]
    fig, ax1 = plt.subplots(figsize=(6, 4))
    ax1.plot(betas, [r["acc_mean"] for r in rows], "o-", color="tab:blue")
    ax1.set_xlabel(r"$\beta$")
    ax1.set_ylabel("accuracy (%)", color="tab:blue")
    ax2 = ax1.twinx()
    ax2.plot(betas, [r["combined_mean"] for r in rows], "s--", color="tab:red")
    ax2.set_ylabel(r"$\Delta$SP + $\Delta$EO (pp)", color="tab:red")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def alpha_sweep_figure(rows: list[dict], path) -> Path:
    """Fairness gap versus attribute missing rate, one line per method."""
    path = _prepare(path)
    fig, ax = plt.subplots(figsize=(6, 4))
    methods = sorted({r["method"] for r in rows})
    for m in methods:
        sub = sorted((r for r in rows if r["method"] == m), key=lambda r: r["alpha"])
        ax.plot([r["alpha"] for r in sub], [r["combined_mean"] for r in sub],
                "o-", label=m)
    ax.set_xlabel(r"missing rate $\alpha$")
    ax.set_ylabel(r"$\Delta$SP + $\Delta$EO (pp)")
    ax.legend(frameon=False)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path
