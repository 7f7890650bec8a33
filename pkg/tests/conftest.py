import numpy as np
import pytest
import scipy.sparse as sp

from fairac.graph import Graph


def make_graph(num_nodes, edge_list, x=None, sensitive=None, labels=None,
               v_minus=()):
    """Small hand-built Graph for unit tests."""
    edges = frozenset((min(u, v), max(u, v)) for u, v in edge_list)
    if edges:
        arr = np.array(sorted(edges), dtype=np.int64)
        rows = np.concatenate([arr[:, 0], arr[:, 1]])
        cols = np.concatenate([arr[:, 1], arr[:, 0]])
        adj = sp.csr_matrix((np.ones(rows.size), (rows, cols)),
                            shape=(num_nodes, num_nodes))
    else:
        adj = sp.csr_matrix((num_nodes, num_nodes))
    if x is None:
        x = np.zeros((num_nodes, 2))
    if sensitive is None:
        sensitive = np.zeros(num_nodes, dtype=np.int64)
    if labels is None:
        labels = np.zeros(num_nodes, dtype=np.int64)
    v_minus = np.array(sorted(v_minus), dtype=np.int64)
    v_plus = np.setdiff1d(np.arange(num_nodes, dtype=np.int64), v_minus)
    return Graph(num_nodes=num_nodes, edges=edges, adj=adj,
                 x=np.asarray(x, dtype=np.float64),
                 sensitive=np.asarray(sensitive, dtype=np.int64),
                 labels=np.asarray(labels, dtype=np.int64),
                 v_plus=v_plus, v_minus=v_minus)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
