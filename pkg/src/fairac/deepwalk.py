"""Topological node embeddings via truncated random walks and skip-gram.

Walks are uniform over neighbors; the skip-gram is trained with negative
sampling (unigram^0.75 noise) and a linearly decaying SGD learning rate.
Embeddings cover every node, so the completion stage always has topology
input even for nodes without attributes.
"""

from __future__ import annotations

import hashlib
import json
import logging
from dataclasses import dataclass, asdict, field
from pathlib import Path

import numpy as np

from .graph import Graph

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class WalkConfig:
    walk_length: int = 100
    walks_per_node: int = 10
    window: int = 5
    dim: int = 64
    epochs: int = 10
    negatives_per_positive: int = 5
    learning_rate: float = 0.025
    batch_size: int = 1024
    seed: int = 0

    def __post_init__(self):
        if self.walk_length < 1 or self.window < 1 or self.dim < 1:
            raise ValueError("walk_length, window and dim must all be >= 1")

    def hash(self) -> str:
        payload = json.dumps(asdict(self), sort_keys=True).encode()
        return hashlib.sha256(payload).hexdigest()[:16]


@dataclass(frozen=True)
class TopoEmbeddingTable:
    T: np.ndarray  # N x dim


def generate_walks(g: Graph, cfg: WalkConfig) -> list[np.ndarray]:
    """walks_per_node uniform walks from every node, advanced in lockstep.

    A walk hitting an isolated node stops there (walks from isolated nodes
    have length 1).
    """
    rng = np.random.default_rng(cfg.seed)
    indptr, indices = g.adj.indptr, g.adj.indices
    starts = np.repeat(np.arange(g.num_nodes, dtype=np.int64), cfg.walks_per_node)
    n_walks = starts.size
    trace = np.full((n_walks, cfg.walk_length), -1, dtype=np.int64)
    trace[:, 0] = starts
    cur = starts.copy()
    alive = np.ones(n_walks, dtype=bool)
    for step in range(1, cfg.walk_length):
        deg = indptr[cur + 1] - indptr[cur]
        alive &= deg > 0
        if not alive.any():
            break
        draw = rng.random(n_walks)
        pick = indptr[cur[alive]] + (draw[alive] * deg[alive]).astype(np.int64)
        cur[alive] = indices[pick]
        trace[alive, step] = cur[alive]
    return [row[row >= 0] for row in trace]


def _skipgram_pairs(walks: list[np.ndarray], window: int) -> np.ndarray:
    """(center, context) pairs for every position within the window."""
    pairs = []
    for walk in walks:
        L = walk.size
        for off in range(1, window + 1):
            if L <= off:
                continue
            a, b = walk[:-off], walk[off:]
            pairs.append(np.stack([a, b], axis=1))
            pairs.append(np.stack([b, a], axis=1))
    if not pairs:
        return np.empty((0, 2), dtype=np.int64)
    return np.concatenate(pairs, axis=0)


def _noise_distribution(walks: list[np.ndarray], num_nodes: int) -> np.ndarray:
    counts = np.zeros(num_nodes)
    for walk in walks:
        np.add.at(counts, walk, 1.0)
    probs = counts ** 0.75
    total = probs.sum()
    if total == 0:
        return np.full(num_nodes, 1.0 / num_nodes)
    return probs / total


def sg_loss(emb_in: np.ndarray, emb_out: np.ndarray, centers: np.ndarray,
            contexts: np.ndarray, negatives: np.ndarray) -> float:
    """Negative-sampling objective: -log s(u.v+) - sum log s(-u.v-)."""
    u = emb_in[centers]
    pos = np.einsum("bd,bd->b", u, emb_out[contexts])
    neg = np.einsum("bd,bkd->bk", u, emb_out[negatives])
    return float(np.mean(_softplus(-pos) + _softplus(neg).sum(axis=1)))


def sg_grads(emb_in: np.ndarray, emb_out: np.ndarray, centers: np.ndarray,
             contexts: np.ndarray, negatives: np.ndarray):
    """Mean-loss gradients as (grad_in, grad_out) dense tables."""
    b = centers.size
    u = emb_in[centers]
    vp = emb_out[contexts]
    vn = emb_out[negatives]
    sp = _sigmoid(np.einsum("bd,bd->b", u, vp))
    sn = _sigmoid(np.einsum("bd,bkd->bk", u, vn))
    gu = ((sp - 1.0)[:, None] * vp + np.einsum("bk,bkd->bd", sn, vn)) / b
    gvp = (sp - 1.0)[:, None] * u / b
    gvn = sn[:, :, None] * u[:, None, :] / b
    grad_in = np.zeros_like(emb_in)
    grad_out = np.zeros_like(emb_out)
    np.add.at(grad_in, centers, gu)
    np.add.at(grad_out, contexts, gvp)
    np.add.at(grad_out, negatives.ravel(), gvn.reshape(-1, emb_out.shape[1]))
    return grad_in, grad_out


def _sigmoid(x):
    return np.where(x >= 0, 1.0 / (1.0 + np.exp(-np.abs(x))),
                    np.exp(-np.abs(x)) / (1.0 + np.exp(-np.abs(x))))


def _softplus(x):
    return np.logaddexp(0.0, x)


def init_embeddings(cfg: WalkConfig, num_nodes: int,
                    rng: np.random.Generator) -> np.ndarray:
    return rng.uniform(-0.5 / cfg.dim, 0.5 / cfg.dim, size=(num_nodes, cfg.dim))


def train_skipgram(walks: list[np.ndarray], cfg: WalkConfig,
                   num_nodes: int) -> TopoEmbeddingTable:
    """SGD over shuffled pair batches; returns the input-embedding table."""
    if not walks:
        raise ValueError("walks must be non-empty")
    for walk in walks:
        if walk.size and (walk.min() < 0 or walk.max() >= num_nodes):
            raise ValueError("walk contains node id out of range")

    rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, 0xD331]))
    emb_in = init_embeddings(cfg, num_nodes, rng)
    init = emb_in.copy()
    emb_out = np.zeros((num_nodes, cfg.dim))

    pairs = _skipgram_pairs(walks, cfg.window)
    if pairs.shape[0] == 0 or cfg.epochs == 0:
        return _finalize(init, init, walks, num_nodes)

    noise = _noise_distribution(walks, num_nodes)
    noise_cdf = np.cumsum(noise)
    noise_cdf[-1] = 1.0

    n_pairs = pairs.shape[0]
    batches_per_epoch = max(1, int(np.ceil(n_pairs / cfg.batch_size)))
    total_batches = batches_per_epoch * cfg.epochs
    lr_min = 1e-4
    batch_idx = 0
    for epoch in range(cfg.epochs):
        order = rng.permutation(n_pairs)
        epoch_loss = 0.0
        for start in range(0, n_pairs, cfg.batch_size):
            sel = order[start:start + cfg.batch_size]
            centers, contexts = pairs[sel, 0], pairs[sel, 1]
            draws = rng.random((sel.size, cfg.negatives_per_positive))
            negatives = np.searchsorted(noise_cdf, draws)
            lr = cfg.learning_rate + (lr_min - cfg.learning_rate) * (batch_idx / total_batches)
            epoch_loss += _sgns_batch_step(emb_in, emb_out, centers, contexts,
                                           negatives, lr)
            batch_idx += 1
        log.debug("skipgram epoch %d loss %.4f", epoch, epoch_loss / n_pairs)

    return _finalize(emb_in, init, walks, num_nodes)


def _sgns_batch_step(emb_in: np.ndarray, emb_out: np.ndarray,
                     centers: np.ndarray, contexts: np.ndarray,
                     negatives: np.ndarray, lr: float) -> float:
    """One summed-SGD step over a pair batch; returns the summed loss.

    Per-pair updates are accumulated with sparse matmuls instead of
    scatter-adds, which is much faster at small vocabulary sizes.
    """
    import scipy.sparse as sp

    n, b = emb_in.shape[0], centers.size
    k = negatives.shape[1]
    u = emb_in[centers]
    vp = emb_out[contexts]
    vn = emb_out[negatives]
    pos = np.einsum("bd,bd->b", u, vp)
    neg = np.einsum("bd,bkd->bk", u, vn)
    s_pos = _sigmoid(pos)
    s_neg = _sigmoid(neg)
    loss = float(_softplus(-pos).sum() + _softplus(neg).sum())

    # Aggregate per-pair gradients and average per row, so every embedding
    # row takes one lr-sized step per batch regardless of how often it occurs.
    gu = (s_pos - 1.0)[:, None] * vp + np.einsum("bk,bkd->bd", s_neg, vn)
    cols = np.arange(b)
    agg_in = sp.coo_matrix((np.ones(b), (centers, cols)), shape=(n, b)).tocsr()
    cnt_in = np.maximum(np.bincount(centers, minlength=n), 1)
    rows = np.concatenate([contexts, negatives.ravel()])
    cols_out = np.concatenate([cols, np.repeat(cols, k)])
    data = np.concatenate([s_pos - 1.0, s_neg.ravel()])
    agg_out = sp.coo_matrix((data, (rows, cols_out)), shape=(n, b)).tocsr()
    cnt_out = np.maximum(np.bincount(rows, minlength=n), 1)
    emb_in -= lr * (agg_in @ gu) / cnt_in[:, None]
    emb_out -= lr * (agg_out @ u) / cnt_out[:, None]
    return loss


def _finalize(emb_in: np.ndarray, init: np.ndarray, walks: list[np.ndarray],
              num_nodes: int) -> TopoEmbeddingTable:
    # Isolated nodes never appear as contexts: keep their init, unit-scaled.
    touched = np.zeros(num_nodes, dtype=bool)
    for walk in walks:
        if walk.size > 1:
            touched[walk] = True
    table = emb_in.copy()
    lonely = ~touched
    if lonely.any():
        rows = init[lonely]
        norms = np.maximum(np.linalg.norm(rows, axis=1, keepdims=True), 1e-12)
        table[lonely] = rows / norms
    return TopoEmbeddingTable(T=table)


def embed_all(g: Graph, cfg: WalkConfig, cache_dir: str | Path | None = None) -> TopoEmbeddingTable:
    """Walks + skip-gram, cached to disk keyed by (topology hash, config hash)."""
    cache_path = None
    if cache_dir is not None:
        cache_dir = Path(cache_dir)
        cache_dir.mkdir(parents=True, exist_ok=True)
        cache_path = cache_dir / f"deepwalk_{g.topology_hash()}_{cfg.hash()}.npz"
        if cache_path.exists():
            try:
                with np.load(cache_path, allow_pickle=False) as z:
                    T = z["T"]
                    ok = (str(z["graph_hash"]) == g.topology_hash()
                          and str(z["cfg_hash"]) == cfg.hash()
                          and T.shape == (g.num_nodes, cfg.dim))
                if ok:
                    return TopoEmbeddingTable(T=T)
                log.warning("embedding cache %s failed validation; recomputing", cache_path)
            except Exception:
                log.warning("embedding cache %s unreadable; recomputing", cache_path)

    walks = generate_walks(g, cfg)
    table = train_skipgram(walks, cfg, g.num_nodes)
    if cache_path is not None:
        np.savez(cache_path, T=table.T, N=g.num_nodes, dim=cfg.dim,
                 graph_hash=g.topology_hash(), cfg_hash=cfg.hash())
    return table
