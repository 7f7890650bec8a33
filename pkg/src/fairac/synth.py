"""Synthetic social-graph benchmark with planted group bias.

Produces node/edge CSV files in the loader's format at the same scale as the
small public basketball-player graph (403 nodes, 16570 edges by default).
The generator plants the two failure modes the model is built to remove:
some attribute columns are noisy proxies of the sensitive group, and edges
are homophilous in both latent position and group, so naive neighbor
averaging leaks group membership.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .graph import DatasetSpec, Graph, load_dataset

DEFAULT_NODES = 403
DEFAULT_EDGES = 16570


def generate_benchmark(seed: int = 30, num_nodes: int = DEFAULT_NODES,
                       num_edges: int = DEFAULT_EDGES, latent_dim: int = 8,
                       signal_cols: int = 24, proxy_cols: int = 12,
                       group_rate: float = 0.5, label_bias: float = 0.5,
                       group_shift: float = 0.0, proxy_noise: float = 0.8,
                       homophily: float = 1.0, label_noise: float = 0.2):
    """Return (x, sensitive, labels, edge array) as plain numpy arrays."""
    rng = np.random.default_rng(np.random.SeedSequence([seed, 0x5E17]))
    z = rng.standard_normal((num_nodes, latent_dim))
    s = (rng.random(num_nodes) < group_rate).astype(np.int64)

    w_y = rng.standard_normal(latent_dim)
    w_y /= np.linalg.norm(w_y)
    # group mean shift along the predictive direction: group membership leaks
    # into exactly the features a naive classifier relies on
    z = z + group_shift * (2 * s - 1)[:, None] * w_y[None, :]
    logit = 2.0 * z @ w_y + label_bias * (2 * s - 1) + label_noise * rng.standard_normal(num_nodes)
    labels = (logit > np.median(logit)).astype(np.int64)

    mix = rng.standard_normal((latent_dim, signal_cols))
    x_signal = z @ mix + 0.3 * rng.standard_normal((num_nodes, signal_cols))
    x_proxy = ((2 * s - 1)[:, None]
               + proxy_noise * rng.standard_normal((num_nodes, proxy_cols)))
    x = np.concatenate([x_signal, x_proxy], axis=1)

    # Affinity favors nearby latents and same-group pairs; keep the top pairs.
    iu, ju = np.triu_indices(num_nodes, k=1)
    d2 = ((z[iu] - z[ju]) ** 2).sum(axis=1)
    same = (s[iu] == s[ju]).astype(np.float64)
    affinity = -d2 / latent_dim + homophily * same + 0.5 * rng.standard_normal(iu.size)
    if num_edges > iu.size:
        raise ValueError("requested more edges than node pairs")
    top = np.argpartition(affinity, -num_edges)[-num_edges:]
    edges = np.stack([iu[top], ju[top]], axis=1)
    edges = edges[np.lexsort((edges[:, 1], edges[:, 0]))]
    return x, s, labels, edges


def write_benchmark(out_dir: str | Path, seed: int = 30, **kwargs) -> DatasetSpec:
    """Write nodes.csv / edges.csv and return the matching DatasetSpec."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    x, s, labels, edges = generate_benchmark(seed=seed, **kwargs)
    node_file = out_dir / "nodes.csv"
    edge_file = out_dir / "edges.csv"
    with open(node_file, "w") as f:
        cols = [f"attr{j}" for j in range(x.shape[1])]
        f.write("node_id," + ",".join(cols) + ",sensitive,label\n")
        for i in range(x.shape[0]):
            vals = ",".join(f"{v:.8g}" for v in x[i])
            f.write(f"{i},{vals},{s[i]},{labels[i]}\n")
    with open(edge_file, "w") as f:
        for u, v in edges:
            f.write(f"{u},{v}\n")
    return DatasetSpec(node_file=node_file, edge_file=edge_file,
                       sensitive_column="sensitive", label_column="label")


def benchmark_graph(seed: int = 30, **kwargs) -> Graph:
    """Generate in a temp dir and load through the standard loader."""
    import tempfile

    with tempfile.TemporaryDirectory() as tmp:
        spec = write_benchmark(tmp, seed=seed, **kwargs)
        return load_dataset(spec)
