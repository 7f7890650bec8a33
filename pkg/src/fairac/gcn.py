"""Two-layer GCN node classifier with a fairness-aware checkpoint protocol.

Each training epoch records validation accuracy and validation fairness;
the reported model is the epoch minimizing validation dSP+dEO among epochs
whose accuracy clears a threshold.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .autodiff import Tensor, parameter
from .graph import Graph, NodeSplit
from .metrics import delta_sp, delta_eo
from .optim import Adam

log = logging.getLogger(__name__)


def normalize_adjacency(g: Graph) -> np.ndarray:
    """Symmetric normalization with self-loops: D^-1/2 (A + I) D^-1/2."""
    a = (g.adj + sp.eye(g.num_nodes, format="csr")).toarray()
    deg = a.sum(axis=1)
    inv_sqrt = 1.0 / np.sqrt(deg)
    return a * inv_sqrt[:, None] * inv_sqrt[None, :]


@dataclass(frozen=True)
class GCNTrainConfig:
    hidden: int = 64
    epochs: int = 1000
    learning_rate: float = 1e-3
    weight_decay: float = 1e-5
    dropout: float = 0.5
    accuracy_threshold: float = 0.65
    seed: int = 0


class GCNParams:
    def __init__(self, in_dim: int, hidden: int, rng: np.random.Generator):
        self.w1 = parameter(None, rng, (in_dim, hidden))
        self.b1 = parameter(np.zeros(hidden))
        self.w2 = parameter(None, rng, (hidden, 1))
        self.b2 = parameter(np.zeros(1))

    def params(self) -> list[Tensor]:
        return [self.w1, self.b1, self.w2, self.b2]

    def snapshot(self) -> list[np.ndarray]:
        return [p.data.copy() for p in self.params()]

    def restore(self, snap: list[np.ndarray]) -> None:
        for p, d in zip(self.params(), snap):
            p.data = d.copy()


def gcn_forward(params: GCNParams, h: np.ndarray, a_hat: np.ndarray,
                dropout_mask: np.ndarray | None = None) -> Tensor:
    """Sigmoid(A (relu(A H W1 + b1) [* mask]) W2 + b2), one probability per node."""
    ah = Tensor(a_hat @ h)
    z1 = (ah @ params.w1 + params.b1).leaky_relu(slope=0.0)
    if dropout_mask is not None:
        z1 = z1 * Tensor(dropout_mask)
    az1 = Tensor(a_hat) @ z1
    return (az1 @ params.w2 + params.b2).sigmoid()


def predict(params: GCNParams, h: np.ndarray, a_hat: np.ndarray) -> np.ndarray:
    """Per-node probabilities, no dropout."""
    return gcn_forward(params, h, a_hat).data.reshape(-1)


@dataclass
class EpochRecord:
    val_acc: float
    val_combined: float  # percentage points; nan when undefined on val


@dataclass
class GCNResult:
    params: GCNParams
    trace: list[EpochRecord]
    selected_epoch: int
    below_threshold: bool
    final_params_snapshot: list = field(default_factory=list)


def select_checkpoint(trace: list[EpochRecord], accuracy_threshold: float
                      ) -> tuple[int, bool]:
    """Earliest epoch minimizing val fairness among accuracy-qualifying
    epochs; falls back (flagged) to the max-accuracy epoch."""
    if not trace:
        raise ValueError("empty trace")
    best = None
    for i, rec in enumerate(trace):
        if rec.val_acc >= accuracy_threshold:
            comb = rec.val_combined if np.isfinite(rec.val_combined) else np.inf
            if best is None or comb < best[1]:
                best = (i, comb)
    if best is not None:
        return best[0], False
    accs = [rec.val_acc for rec in trace]
    return int(np.argmax(accs)), True


def train_classifier(h: np.ndarray, a_hat: np.ndarray, labels: np.ndarray,
                     sensitive: np.ndarray, split: NodeSplit,
                     cfg: GCNTrainConfig) -> GCNResult:
    """Full-batch BCE training on the train ids; deterministic given seed.

    Restores the parameters of the protocol-selected epoch before returning.
    """
    ss = np.random.SeedSequence([cfg.seed, 0x6C17])
    init_rng, drop_rng = (np.random.default_rng(s) for s in ss.spawn(2))
    params = GCNParams(h.shape[1], cfg.hidden, init_rng)
    opt = Adam(params.params(), lr=cfg.learning_rate, weight_decay=cfg.weight_decay)

    train_ids, val_ids = split.train_ids, split.val_ids
    y_train = labels[train_ids].astype(np.float64).reshape(-1, 1)
    trace: list[EpochRecord] = []
    snapshots: dict[int, list[np.ndarray]] = {}
    sel_prev: tuple[int, bool] | None = None

    for epoch in range(cfg.epochs):
        mask = None
        if cfg.dropout > 0:
            keep = (drop_rng.random((h.shape[0], cfg.hidden)) >= cfg.dropout)
            mask = keep / (1.0 - cfg.dropout)
        probs = gcn_forward(params, h, a_hat, mask)
        loss = probs.take_rows(train_ids).bce_mean(y_train)
        loss.backward()
        if not np.isfinite(loss.data):
            raise RuntimeError(f"GCN training diverged at epoch {epoch}")
        opt.step()

        val_probs = predict(params, h, a_hat)[val_ids]
        val_hard = (val_probs >= 0.5).astype(int)
        val_acc = float((val_hard == labels[val_ids]).mean()) if val_ids.size else 0.0
        try:
            comb = (delta_sp(val_hard, sensitive[val_ids])
                    + delta_eo(val_hard, labels[val_ids], sensitive[val_ids])) * 100.0
        except ValueError:
            comb = float("nan")
        trace.append(EpochRecord(val_acc=val_acc, val_combined=comb))

        sel = select_checkpoint(trace, cfg.accuracy_threshold)
        if sel != sel_prev:
            if sel[0] == epoch:
                snapshots[epoch] = params.snapshot()
            sel_prev = sel

    selected, flagged = select_checkpoint(trace, cfg.accuracy_threshold)
    final_snapshot = params.snapshot()
    params.restore(snapshots[selected])
    if flagged:
        log.warning("no epoch reached accuracy threshold %.3f; using max-accuracy "
                    "epoch %d", cfg.accuracy_threshold, selected)
    return GCNResult(params=params, trace=trace, selected_epoch=selected,
                     below_threshold=flagged, final_params_snapshot=final_snapshot)


def export_predictions(path, probs: np.ndarray, labels: np.ndarray,
                       sensitive: np.ndarray, ids: np.ndarray) -> None:
    """One record per line: id, probability, hard label, ground truth, sensitive."""
    with open(path, "w") as f:
        f.write("id,prob,pred,label,sensitive\n")
        for i in ids:
            f.write(f"{i},{probs[i]:.10g},{int(probs[i] >= 0.5)},"
                    f"{labels[i]},{sensitive[i]}\n")
