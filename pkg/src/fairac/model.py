"""Fair attribute completion model.

Three trainable blocks, optimized in alternation each epoch:
  - an autoencoder mapping attributes to 128-d embeddings and back,
  - a sensitive classifier trained adversarially against the encoder,
  - K bilinear attention heads over topological embeddings that complete
    embeddings for attribute-less nodes from their attributed neighbors.

The completion loss and the topological-fairness loss update only the
attention matrices; encoder outputs are detached there, and the sensitive
classifier is frozen everywhere except its own step.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .autodiff import Tensor, parameter
from .graph import Graph, NodeSplit, sample_keep_drop
from .deepwalk import TopoEmbeddingTable
from .optim import Adam

log = logging.getLogger(__name__)

NEG_INF = -1e30

LT_MODES = ("uniform_target", "negated_bce")


@dataclass(frozen=True)
class FairACConfig:
    beta: float = 1.0
    num_heads: int = 2
    embed_dim: int = 128
    epochs: int = 1000
    sensitive_hidden: int = 64
    alpha: float = 0.3           # keep/drop resampling rate
    learning_rate: float = 1e-3
    weight_decay: float = 1e-5
    seed: int = 0
    lt_mode: str = "uniform_target"

    def __post_init__(self):
        if self.beta < 0:
            raise ValueError("beta must be >= 0")
        if self.num_heads < 1:
            raise ValueError("num_heads must be >= 1")
        if self.lt_mode not in LT_MODES:
            raise ValueError(f"lt_mode must be one of {LT_MODES}")


class FairACParams:
    """All trainable tensors, grouped by which optimizer step owns them."""

    def __init__(self, attr_dim: int, topo_dim: int, cfg: FairACConfig,
                 rng: np.random.Generator):
        d, e, h = attr_dim, cfg.embed_dim, cfg.sensitive_hidden
        self.enc_w = parameter(None, rng, (d, e))
        self.enc_b = parameter(np.zeros(e))
        self.dec_w = parameter(None, rng, (e, d))
        self.dec_b = parameter(np.zeros(d))
        self.cs_w1 = parameter(None, rng, (e, h))
        self.cs_b1 = parameter(np.zeros(h))
        self.cs_w2 = parameter(None, rng, (h, 1))
        self.cs_b2 = parameter(np.zeros(1))
        self.attn_w = [parameter(None, rng, (topo_dim, topo_dim))
                       for _ in range(cfg.num_heads)]

    def autoencoder_params(self) -> list[Tensor]:
        return [self.enc_w, self.enc_b, self.dec_w, self.dec_b]

    def cs_params(self) -> list[Tensor]:
        return [self.cs_w1, self.cs_b1, self.cs_w2, self.cs_b2]

    def attention_params(self) -> list[Tensor]:
        return list(self.attn_w)

    def all_params(self) -> list[Tensor]:
        return self.autoencoder_params() + self.cs_params() + self.attention_params()


# -- forward pieces -------------------------------------------------------

def encode(params: FairACParams, x: Tensor) -> Tensor:
    return x @ params.enc_w + params.enc_b


def decode(params: FairACParams, h: Tensor) -> Tensor:
    return h @ params.dec_w + params.dec_b


def sensitive_forward(params: FairACParams, h: Tensor, frozen: bool = False) -> Tensor:
    """Sensitive-attribute probability per row; frozen=True cuts the
    classifier weights out of the gradient graph."""
    w1, b1, w2, b2 = params.cs_params()
    if frozen:
        w1, b1, w2, b2 = (t.detach() for t in (w1, b1, w2, b2))
    hidden = (h @ w1 + b1).leaky_relu()
    return (hidden @ w2 + b2).sigmoid()


def encode_np(params: FairACParams, x: np.ndarray) -> np.ndarray:
    """Gradient-free encoder forward."""
    return x @ params.enc_w.data + params.enc_b.data


# -- losses ---------------------------------------------------------------

def loss_ae(params: FairACParams, x_keep: np.ndarray) -> Tensor:
    if x_keep.shape[0] == 0:
        raise ValueError("loss_ae: empty batch")
    x = Tensor(x_keep)
    recon = decode(params, encode(params, x))
    return (recon - x).row_l2_mean()


def loss_cs(params: FairACParams, h: Tensor, s: np.ndarray) -> Tensor:
    p = sensitive_forward(params, h)
    return p.bce_mean(np.asarray(s, dtype=np.float64).reshape(-1, 1))


def loss_feature_fairness(params: FairACParams, x_keep: np.ndarray,
                          s_keep: np.ndarray, beta: float) -> Tensor:
    """L_ae - beta * L_cs over the keep batch; classifier frozen."""
    x = Tensor(x_keep)
    h = encode(params, x)
    recon = decode(params, h)
    l_ae = (recon - x).row_l2_mean()
    if beta == 0.0:
        return l_ae
    p = sensitive_forward(params, h, frozen=True)
    l_cs = p.bce_mean(np.asarray(s_keep, dtype=np.float64).reshape(-1, 1))
    return l_ae + (-beta) * l_cs


def attention_score(w: Tensor, t_u: np.ndarray, t_v: np.ndarray) -> Tensor:
    """tanh of the bilinear form t_u^T W t_v."""
    tu = Tensor(np.asarray(t_u, dtype=np.float64).reshape(1, -1))
    tv = Tensor(np.asarray(t_v, dtype=np.float64).reshape(-1, 1))
    return ((tu @ w) @ tv).tanh().sum()


def attention_coefficients(scores: Tensor) -> Tensor:
    """Softmax over a node's attributed-neighbor scores (1 x n row)."""
    return scores.softmax_rows()


def complete_embedding(params: FairACParams, t_u: np.ndarray,
                       neighbor_ids: np.ndarray, t_table: np.ndarray,
                       h_table: np.ndarray) -> Tensor:
    """Multi-head completion for a single node from its attributed neighbors."""
    if len(neighbor_ids) == 0:
        raise ValueError("complete_embedding: no attributed neighbors (use fallback)")
    tu = Tensor(np.asarray(t_u, dtype=np.float64).reshape(1, -1))
    tn = Tensor(t_table[neighbor_ids])
    hn = Tensor(h_table[neighbor_ids])
    acc = None
    for w in params.attn_w:
        scores = ((tu @ w) @ tn.T).tanh()
        coef = scores.softmax_rows()
        agg = coef @ hn
        acc = agg if acc is None else acc + agg
    return (1.0 / len(params.attn_w)) * acc


def _completion_batch(params: FairACParams, drop_ids: np.ndarray,
                      keep_ids: np.ndarray, t_table: np.ndarray,
                      h_keep: np.ndarray, adj) -> tuple[Tensor, np.ndarray, np.ndarray]:
    """Vectorized completion for all drop nodes with >=1 attributed neighbor.

    Returns (completed rows tensor, boolean has-neighbor mask over drop_ids,
    fallback row). Gradients flow only into the attention matrices.
    """
    sub = adj[drop_ids][:, keep_ids].toarray()
    has_nbr = sub.sum(axis=1) > 0
    fallback = h_keep.mean(axis=0)
    if not has_nbr.any():
        return None, has_nbr, fallback
    mask = np.where(sub[has_nbr] > 0, 0.0, NEG_INF)
    td = Tensor(t_table[drop_ids[has_nbr]])
    tk_t = Tensor(t_table[keep_ids].T)
    hk = Tensor(h_keep)
    acc = None
    for w in params.attn_w:
        scores = ((td @ w) @ tk_t).tanh() + Tensor(mask)
        agg = scores.softmax_rows() @ hk
        acc = agg if acc is None else acc + agg
    return (1.0 / len(params.attn_w)) * acc, has_nbr, fallback


def loss_completion(params: FairACParams, drop_ids: np.ndarray,
                    keep_ids: np.ndarray, t_table: np.ndarray,
                    x: np.ndarray, adj) -> Tensor:
    """Mean Euclidean norm of (completed - encoded) over drop nodes.

    Encoder outputs are treated as constants; only the attention matrices
    receive gradient. Drop nodes without attributed neighbors contribute
    their fallback residual as a constant.
    """
    if drop_ids.size == 0:
        raise ValueError("loss_completion: empty drop set")
    h_keep = encode_np(params, x[keep_ids])
    h_drop = encode_np(params, x[drop_ids])
    completed, has_nbr, fallback = _completion_batch(
        params, drop_ids, keep_ids, t_table, h_keep, adj)
    m = drop_ids.size
    fb_term = 0.0
    n_fb = int((~has_nbr).sum())
    if n_fb:
        fb_norms = np.linalg.norm(fallback[None, :] - h_drop[~has_nbr], axis=1)
        fb_term = float(fb_norms.sum() / m)
    if completed is None:
        return Tensor(fb_term) + 0.0 * params.attn_w[0].sum()
    resid = completed - Tensor(h_drop[has_nbr])
    return (has_nbr.sum() / m) * resid.row_l2_mean() + fb_term


def loss_topo_fairness(params: FairACParams, drop_ids: np.ndarray,
                       keep_ids: np.ndarray, t_table: np.ndarray,
                       x: np.ndarray, s: np.ndarray, adj,
                       lt_mode: str = "uniform_target") -> Tensor:
    """Push the frozen sensitive classifier toward 0.5 on completed rows.

    uniform_target: per-node cross-entropy against the uniform target,
    -(log p + log(1-p)) / 2. negated_bce: negative cross-entropy against the
    true sensitive label. Only the attention matrices receive gradient.
    """
    if drop_ids.size == 0:
        raise ValueError("loss_topo_fairness: empty drop set")
    h_keep = encode_np(params, x[keep_ids])
    completed, has_nbr, _ = _completion_batch(
        params, drop_ids, keep_ids, t_table, h_keep, adj)
    if completed is None:
        return Tensor(0.0) + 0.0 * params.attn_w[0].sum()
    p = sensitive_forward(params, completed, frozen=True)
    if lt_mode == "uniform_target":
        ones = np.ones_like(p.data)
        per_node = 0.5 * (p.bce_mean(ones) + p.bce_mean(np.zeros_like(p.data)))
        scale = has_nbr.sum() / drop_ids.size
        return scale * per_node
    targets = np.asarray(s[drop_ids[has_nbr]], dtype=np.float64).reshape(-1, 1)
    return (-has_nbr.sum() / drop_ids.size) * p.bce_mean(targets)


def total_loss(l_f: float, l_c: float, l_t: float, beta: float) -> float:
    """Logged composite; optimization itself is component-wise."""
    return l_f + l_c + beta * l_t


# -- training loop ---------------------------------------------------------

@dataclass
class TrainTrace:
    l_ae: list = field(default_factory=list)
    l_cs: list = field(default_factory=list)
    l_f: list = field(default_factory=list)
    l_c: list = field(default_factory=list)
    l_t: list = field(default_factory=list)
    total: list = field(default_factory=list)


def train_fairac(g: Graph, topo: TopoEmbeddingTable, cfg: FairACConfig
                 ) -> tuple[FairACParams, TrainTrace]:
    """Alternating optimization: classifier step, adversarial autoencoder
    step, keep/drop resample, completion step, topological-fairness step."""
    if g.v_plus.size == 0:
        raise ValueError("cannot train without attributed nodes")
    if topo.T.shape[0] != g.num_nodes:
        raise ValueError("topological embeddings must cover every node")

    ss = np.random.SeedSequence([cfg.seed, 0xFA1C])
    init_rng, split_rng = (np.random.default_rng(s) for s in ss.spawn(2))
    params = FairACParams(g.attr_dim, topo.T.shape[1], cfg, init_rng)

    opt_ae = Adam(params.autoencoder_params(), lr=cfg.learning_rate,
                  weight_decay=cfg.weight_decay)
    opt_cs = Adam(params.cs_params(), lr=cfg.learning_rate,
                  weight_decay=cfg.weight_decay)
    opt_w = Adam(params.attention_params(), lr=cfg.learning_rate,
                 weight_decay=cfg.weight_decay)

    trace = TrainTrace()
    split = sample_keep_drop(g, cfg.alpha, seed=int(split_rng.integers(2 ** 31)))
    x, s = g.x, g.sensitive

    for _ in range(cfg.epochs):
        keep = split.v_keep

        # classifier step: encoder outputs are constants here
        h_keep = Tensor(encode_np(params, x[keep]))
        lcs = loss_cs(params, h_keep, s[keep])
        lcs.backward()
        opt_cs.step()

        # adversarial autoencoder step, classifier frozen
        lf = loss_feature_fairness(params, x[keep], s[keep], cfg.beta)
        lf.backward()
        opt_ae.step()
        lae = loss_ae(params, x[keep])  # post-step value, logging only

        split = sample_keep_drop(g, cfg.alpha, seed=int(split_rng.integers(2 ** 31)))

        lc_val = lt_val = 0.0
        if split.v_drop.size:
            lc = loss_completion(params, split.v_drop, split.v_keep, topo.T, x, g.adj)
            lc.backward()
            opt_w.step()
            lc_val = float(lc.data)

            if cfg.beta > 0:
                lt = loss_topo_fairness(params, split.v_drop, split.v_keep,
                                        topo.T, x, s, g.adj, cfg.lt_mode)
                scaled = cfg.beta * lt
                scaled.backward()
                opt_w.step()
                lt_val = float(lt.data)

        trace.l_ae.append(float(lae.data))
        trace.l_cs.append(float(lcs.data))
        trace.l_f.append(float(lf.data))
        trace.l_c.append(lc_val)
        trace.l_t.append(lt_val)
        trace.total.append(total_loss(float(lf.data), lc_val, lt_val, cfg.beta))
        if not np.isfinite(trace.total[-1]):
            raise RuntimeError(f"training diverged at epoch {len(trace.total) - 1}")

    return params, trace


# -- inference --------------------------------------------------------------

@dataclass(frozen=True)
class EmbeddingSet:
    H: np.ndarray              # N x embed_dim
    provenance: np.ndarray     # per row: 'encoded' or 'completed'


def infer_embeddings(g: Graph, params: FairACParams,
                     topo: TopoEmbeddingTable) -> EmbeddingSet:
    """Encoded rows for attributed nodes, completed rows for the rest."""
    embed_dim = params.enc_w.data.shape[1]
    h = np.zeros((g.num_nodes, embed_dim))
    provenance = np.array(["encoded"] * g.num_nodes, dtype=object)
    h[g.v_plus] = encode_np(params, g.x[g.v_plus])
    if g.v_minus.size:
        provenance[g.v_minus] = "completed"
        h_plus = h[g.v_plus]
        completed, has_nbr, fallback = _completion_batch(
            params, g.v_minus, g.v_plus, topo.T, h_plus, g.adj)
        if completed is not None:
            h[g.v_minus[has_nbr]] = completed.data
        n_fb = int((~has_nbr).sum())
        if n_fb:
            log.info("completion fallback (mean embedding) for %d isolated nodes", n_fb)
            h[g.v_minus[~has_nbr]] = fallback
    return EmbeddingSet(H=h, provenance=provenance)


# -- checkpointing -----------------------------------------------------------

CHECKPOINT_VERSION = 1


def save_checkpoint(path, params: FairACParams, cfg: FairACConfig) -> None:
    arrays = {
        "enc_w": params.enc_w.data, "enc_b": params.enc_b.data,
        "dec_w": params.dec_w.data, "dec_b": params.dec_b.data,
        "cs_w1": params.cs_w1.data, "cs_b1": params.cs_b1.data,
        "cs_w2": params.cs_w2.data, "cs_b2": params.cs_b2.data,
    }
    for k, w in enumerate(params.attn_w):
        arrays[f"attn_w{k}"] = w.data
    np.savez(path, version=CHECKPOINT_VERSION, beta=cfg.beta,
             num_heads=cfg.num_heads, embed_dim=cfg.embed_dim,
             sensitive_hidden=cfg.sensitive_hidden, seed=cfg.seed,
             lt_mode=cfg.lt_mode, **arrays)


def load_checkpoint(path) -> tuple[FairACParams, FairACConfig]:
    with np.load(path, allow_pickle=False) as z:
        if int(z["version"]) != CHECKPOINT_VERSION:
            raise ValueError(f"unsupported checkpoint version {z['version']}")
        cfg = FairACConfig(beta=float(z["beta"]), num_heads=int(z["num_heads"]),
                           embed_dim=int(z["embed_dim"]),
                           sensitive_hidden=int(z["sensitive_hidden"]),
                           seed=int(z["seed"]), lt_mode=str(z["lt_mode"]))
        attr_dim = z["enc_w"].shape[0]
        topo_dim = z["attn_w0"].shape[0]
        params = FairACParams(attr_dim, topo_dim, cfg, np.random.default_rng(0))
        params.enc_w.data = z["enc_w"]
        params.enc_b.data = z["enc_b"]
        params.dec_w.data = z["dec_w"]
        params.dec_b.data = z["dec_b"]
        params.cs_w1.data = z["cs_w1"]
        params.cs_b1.data = z["cs_b1"]
        params.cs_w2.data = z["cs_w2"]
        params.cs_b2.data = z["cs_b2"]
        for k in range(cfg.num_heads):
            params.attn_w[k].data = z[f"attn_w{k}"]
    return params, cfg


def export_embeddings(path, emb: EmbeddingSet) -> None:
    """Plain-text export: node id followed by the embedding values."""
    with open(path, "w") as f:
        for i, row in enumerate(emb.H):
            f.write(str(i) + " " + " ".join(f"{v:.10g}" for v in row) + "\n")
