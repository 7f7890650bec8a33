"""Graph container, CSV ingestion, splits, attribute-missing simulation.

Node file format: comma-separated with a header row; first column is the node
id, every other column is numeric. The sensitive and label columns are named
in DatasetSpec. Edge file: two comma-separated node ids per line.
"""

from __future__ import annotations

import csv
import hashlib
import logging
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
import scipy.sparse as sp

log = logging.getLogger(__name__)

UNLABELED = -1


def round_half_up(x: float) -> int:
    return int(np.floor(x + 0.5))


@dataclass(frozen=True)
class DatasetSpec:
    node_file: Path
    edge_file: Path
    sensitive_column: str
    label_column: str
    drop_columns: tuple = ()


@dataclass(frozen=True)
class Graph:
    """Undirected graph with (possibly unavailable) node attributes.

    `x`, `sensitive` and `labels` always hold a row/entry per node; rows of
    nodes in `v_minus` are unavailable to training code by contract (the
    masked-data poisoning test in the suite enforces this). `labels` uses -1
    for unlabeled nodes. Immutable after construction.
    """

    num_nodes: int
    edges: frozenset          # frozenset of (u, v) tuples with u < v
    adj: sp.csr_matrix        # symmetric 0/1, zero diagonal
    x: np.ndarray             # N x D, standardized over v_plus
    sensitive: np.ndarray     # N, values in {0, 1}
    labels: np.ndarray        # N, values in {0, 1, UNLABELED}
    v_plus: np.ndarray        # sorted node ids with available attributes
    v_minus: np.ndarray       # sorted node ids without

    def __post_init__(self):
        object.__setattr__(self, "x", _readonly(self.x))
        object.__setattr__(self, "sensitive", _readonly(self.sensitive))
        object.__setattr__(self, "labels", _readonly(self.labels))
        object.__setattr__(self, "v_plus", _readonly(self.v_plus))
        object.__setattr__(self, "v_minus", _readonly(self.v_minus))

    @property
    def attr_dim(self) -> int:
        return self.x.shape[1]

    @property
    def labeled_ids(self) -> np.ndarray:
        return np.flatnonzero(self.labels != UNLABELED)

    def neighbors(self, u: int) -> np.ndarray:
        return self.adj.indices[self.adj.indptr[u]:self.adj.indptr[u + 1]]

    def topology_hash(self) -> str:
        """Hash of (N, sorted edge list); attribute-independent."""
        h = hashlib.sha256()
        h.update(str(self.num_nodes).encode())
        edge_arr = np.array(sorted(self.edges), dtype=np.int64).reshape(-1, 2)
        h.update(edge_arr.tobytes())
        return h.hexdigest()[:16]


@dataclass(frozen=True)
class NodeSplit:
    """Keep/drop partition of v_plus and/or train/val/test ids."""

    v_keep: np.ndarray = field(default_factory=lambda: np.array([], dtype=np.int64))
    v_drop: np.ndarray = field(default_factory=lambda: np.array([], dtype=np.int64))
    train_ids: np.ndarray = field(default_factory=lambda: np.array([], dtype=np.int64))
    val_ids: np.ndarray = field(default_factory=lambda: np.array([], dtype=np.int64))
    test_ids: np.ndarray = field(default_factory=lambda: np.array([], dtype=np.int64))
    alpha: float = 0.0


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.asarray(a)
    a.setflags(write=False)
    return a


def _build_adjacency(n: int, edges: frozenset) -> sp.csr_matrix:
    if not edges:
        return sp.csr_matrix((n, n))
    arr = np.array(sorted(edges), dtype=np.int64)
    rows = np.concatenate([arr[:, 0], arr[:, 1]])
    cols = np.concatenate([arr[:, 1], arr[:, 0]])
    data = np.ones(rows.size)
    return sp.csr_matrix((data, (rows, cols)), shape=(n, n))


def standardize_columns(x: np.ndarray, ids: np.ndarray) -> np.ndarray:
    """Zero mean / unit variance per column over rows `ids`; constant columns map to 0."""
    mean = x[ids].mean(axis=0)
    std = x[ids].std(axis=0)
    out = x - mean
    nonconst = std > 0
    out[:, nonconst] /= std[nonconst]
    out[:, ~nonconst] = 0.0
    return out


def load_dataset(spec: DatasetSpec) -> Graph:
    """Load node and edge files; all nodes start in v_plus.

    Attributes are standardized per column. Duplicate edges and self-loops
    are dropped with a logged count.
    """
    node_path = Path(spec.node_file)
    edge_path = Path(spec.edge_file)
    for p in (node_path, edge_path):
        if not p.exists():
            raise FileNotFoundError(f"dataset file not found: {p}")

    with open(node_path, newline="") as f:
        reader = csv.reader(f)
        header = next(reader)
        rows = [r for r in reader if r]
    id_col = header[0]
    for col in (spec.sensitive_column, spec.label_column):
        if col not in header[1:]:
            raise ValueError(f"column {col!r} missing from node file header")
    drop = set(spec.drop_columns)
    unknown_drop = drop - set(header[1:])
    if unknown_drop:
        raise ValueError(f"drop_columns not in header: {sorted(unknown_drop)}")

    attr_cols = [c for c in header[1:]
                 if c not in drop and c not in (spec.sensitive_column, spec.label_column)]
    col_index = {c: header.index(c) for c in header}

    raw_ids = []
    for r in rows:
        raw_ids.append(r[0])
    if len(set(raw_ids)) != len(raw_ids):
        raise ValueError("duplicate node ids in node file")
    id_map = {rid: i for i, rid in enumerate(raw_ids)}
    n = len(raw_ids)

    def cell(row, col, what):
        try:
            return float(row[col_index[col]])
        except ValueError:
            raise ValueError(
                f"non-numeric {what} value {row[col_index[col]]!r} "
                f"in column {col!r} for node {row[0]!r}") from None

    x = np.empty((n, len(attr_cols)))
    sensitive = np.empty(n, dtype=np.int64)
    labels = np.empty(n, dtype=np.int64)
    for i, r in enumerate(rows):
        for j, c in enumerate(attr_cols):
            x[i, j] = cell(r, c, "attribute")
        sensitive[i] = int(cell(r, spec.sensitive_column, "sensitive"))
        labels[i] = int(cell(r, spec.label_column, "label"))

    edges = set()
    dropped = 0
    with open(edge_path) as f:
        for line in f:
            line = line.strip()
            if not line:
                continue
            a, b = (t.strip() for t in line.split(",")[:2])
            if a not in id_map or b not in id_map:
                raise ValueError(f"edge references unknown node id: {a},{b}")
            u, v = id_map[a], id_map[b]
            if u == v:
                dropped += 1
                continue
            e = (min(u, v), max(u, v))
            if e in edges:
                dropped += 1
            else:
                edges.add(e)
    if dropped:
        log.info("dropped %d duplicate/self-loop edge lines from %s", dropped, edge_path)

    all_ids = np.arange(n, dtype=np.int64)
    x = standardize_columns(x, all_ids)
    return Graph(
        num_nodes=n,
        edges=frozenset(edges),
        adj=_build_adjacency(n, frozenset(edges)),
        x=x,
        sensitive=sensitive,
        labels=labels,
        v_plus=all_ids,
        v_minus=np.array([], dtype=np.int64),
    )


def apply_attribute_missing(g: Graph, alpha: float, seed: int) -> Graph:
    """Move round(alpha * N) uniformly sampled nodes into v_minus."""
    if not 0.0 <= alpha < 1.0:
        raise ValueError(f"alpha must be in [0, 1), got {alpha}")
    k = round_half_up(alpha * g.num_nodes)
    rng = np.random.default_rng(seed)
    perm = rng.permutation(g.num_nodes)
    v_minus = np.sort(perm[:k]).astype(np.int64)
    v_plus = np.sort(perm[k:]).astype(np.int64)
    return replace(g, v_plus=v_plus, v_minus=v_minus)


def sample_keep_drop(g: Graph, alpha: float, seed: int) -> NodeSplit:
    """Partition v_plus into keep/drop at the attribute missing rate."""
    if g.v_plus.size == 0:
        raise ValueError("v_plus is empty")
    if not 0.0 <= alpha < 1.0:
        raise ValueError(f"alpha must be in [0, 1), got {alpha}")
    k = round_half_up(alpha * g.v_plus.size)
    rng = np.random.default_rng(seed)
    perm = rng.permutation(g.v_plus.size)
    return NodeSplit(
        v_keep=np.sort(g.v_plus[perm[k:]]),
        v_drop=np.sort(g.v_plus[perm[:k]]),
        alpha=alpha,
    )


def train_test_split(g: Graph, seed: int) -> NodeSplit:
    """75/25 train-pool/test over labeled nodes, then 25% of the pool as val.

    Pool size is floor(0.75 * n_labeled); validation is floor(0.25 * pool).
    """
    labeled = g.labeled_ids
    if labeled.size < 4:
        raise ValueError(f"need at least 4 labeled nodes, got {labeled.size}")
    rng = np.random.default_rng(seed)
    perm = rng.permutation(labeled.size)
    shuffled = labeled[perm]
    n_pool = int(np.floor(0.75 * labeled.size))
    pool, test = shuffled[:n_pool], shuffled[n_pool:]
    n_val = int(np.floor(0.25 * n_pool))
    return NodeSplit(
        train_ids=np.sort(pool[n_val:]),
        val_ids=np.sort(pool[:n_val]),
        test_ids=np.sort(test),
    )


def neighbor_mean_completion(g: Graph) -> np.ndarray:
    """Fill v_minus rows with the mean of attributed one-hop neighbors.

    Nodes with no attributed neighbor get the global mean over v_plus.
    """
    if g.v_plus.size == 0:
        raise ValueError("v_plus is empty")
    out = g.x.copy()
    has_attr = np.zeros(g.num_nodes, dtype=bool)
    has_attr[g.v_plus] = True
    global_mean = g.x[g.v_plus].mean(axis=0)
    for u in g.v_minus:
        nbrs = g.neighbors(u)
        nbrs = nbrs[has_attr[nbrs]]
        out[u] = g.x[nbrs].mean(axis=0) if nbrs.size else global_mean
    return out
