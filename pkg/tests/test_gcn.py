"""Downstream GCN classifier and its fairness-aware checkpoint protocol."""

import numpy as np
import pytest

from fairac.gcn import (EpochRecord, GCNParams, GCNTrainConfig, export_predictions,
                        gcn_forward, normalize_adjacency, predict,
                        select_checkpoint, train_classifier)
from fairac.graph import NodeSplit
from fairac.metrics import delta_eo, delta_sp

from conftest import make_graph


def test_normalize_adjacency_two_nodes():
    # single edge: A+I is all-ones, degrees 2, so every entry is 1/2
    g = make_graph(2, [(0, 1)])
    a_hat = normalize_adjacency(g)
    assert np.allclose(a_hat, 0.5)


def test_normalize_adjacency_symmetric_and_isolated():
    g = make_graph(4, [(0, 1), (1, 2)])
    a_hat = normalize_adjacency(g)
    assert np.allclose(a_hat, a_hat.T)
    assert a_hat[3, 3] == 1.0  # isolated node: only the self-loop
    assert np.allclose(a_hat[3, :3], 0.0)
    # spot value: edge (0,1), degrees 2 and 3 -> 1/sqrt(6)
    assert np.isclose(a_hat[0, 1], 1.0 / np.sqrt(6.0))


def test_gcn_forward_hand_case():
    # identity-ish network on 4 nodes: W1 = I, W2 = ones, no dropout
    g = make_graph(4, [(0, 1), (2, 3)])
    a_hat = normalize_adjacency(g)
    h = np.array([[1.0, 0.0], [0.0, 1.0], [1.0, 1.0], [0.0, 0.0]])
    params = GCNParams(2, 2, np.random.default_rng(0))
    params.w1.data = np.eye(2)
    params.b1.data = np.zeros(2)
    params.w2.data = np.ones((2, 1))
    params.b2.data = np.zeros(1)
    z1 = np.maximum(a_hat @ h, 0.0)
    logits = (a_hat @ z1) @ np.ones((2, 1))
    want = 1.0 / (1.0 + np.exp(-logits))
    got = gcn_forward(params, h, a_hat)
    assert np.allclose(got.data, want, atol=1e-12)
    assert np.allclose(predict(params, h, a_hat), want.reshape(-1))


def test_select_checkpoint_min_combined_above_threshold():
    trace = [EpochRecord(0.70, 12.0), EpochRecord(0.60, 1.0),
             EpochRecord(0.80, 5.0), EpochRecord(0.75, 5.0)]
    sel, flagged = select_checkpoint(trace, 0.65)
    assert sel == 2 and not flagged  # epoch 1 fails the accuracy bar


def test_select_checkpoint_prefers_earliest_tie():
    trace = [EpochRecord(0.70, 5.0), EpochRecord(0.71, 5.0)]
    sel, flagged = select_checkpoint(trace, 0.65)
    assert sel == 0 and not flagged


def test_select_checkpoint_fallback_flags():
    trace = [EpochRecord(0.50, 1.0), EpochRecord(0.60, 9.0)]
    sel, flagged = select_checkpoint(trace, 0.65)
    assert sel == 1 and flagged  # max accuracy, flagged below threshold


def test_select_checkpoint_handles_nan_fairness():
    trace = [EpochRecord(0.70, float("nan")), EpochRecord(0.70, 3.0)]
    sel, flagged = select_checkpoint(trace, 0.65)
    assert sel == 1 and not flagged
    with pytest.raises(ValueError):
        select_checkpoint([], 0.65)


def small_training_setup(seed=0, n=24):
    # no edges: A_hat is the identity and the GCN reduces to an MLP, which
    # keeps the toy problem separable
    rng = np.random.default_rng(seed)
    labels = np.array([(i // 2) % 2 for i in range(n)], dtype=np.int64)
    sensitive = np.array([i % 2 for i in range(n)], dtype=np.int64)
    h = np.c_[2.0 * labels - 1.0, rng.standard_normal((n, 5))]
    g = make_graph(n, [], sensitive=sensitive, labels=labels)
    a_hat = normalize_adjacency(g)
    # val window [2, 8) holds positives and negatives of both groups
    split = NodeSplit(train_ids=np.arange(8, 20), val_ids=np.arange(2, 8),
                      test_ids=np.arange(20, n))
    return h, a_hat, labels, sensitive, split


def test_train_classifier_deterministic():
    h, a_hat, labels, sensitive, split = small_training_setup()
    cfg = GCNTrainConfig(hidden=8, epochs=30, seed=4)
    r1 = train_classifier(h, a_hat, labels, sensitive, split, cfg)
    r2 = train_classifier(h, a_hat, labels, sensitive, split, cfg)
    for a, b in zip(r1.params.params(), r2.params.params()):
        assert np.array_equal(a.data, b.data)
    assert r1.selected_epoch == r2.selected_epoch
    np.testing.assert_array_equal(
        np.array([(t.val_acc, t.val_combined) for t in r1.trace]),
        np.array([(t.val_acc, t.val_combined) for t in r2.trace]))


def test_train_classifier_restores_selected_epoch():
    h, a_hat, labels, sensitive, split = small_training_setup()
    cfg = GCNTrainConfig(hidden=8, epochs=40, dropout=0.0, seed=1,
                         accuracy_threshold=0.0)
    res = train_classifier(h, a_hat, labels, sensitive, split, cfg)
    # recompute val metrics with the restored parameters; they must match the
    # trace entry of the selected epoch
    val_probs = predict(res.params, h, a_hat)[split.val_ids]
    val_hard = (val_probs >= 0.5).astype(int)
    rec = res.trace[res.selected_epoch]
    assert float((val_hard == labels[split.val_ids]).mean()) == rec.val_acc
    comb = (delta_sp(val_hard, sensitive[split.val_ids])
            + delta_eo(val_hard, labels[split.val_ids],
                       sensitive[split.val_ids])) * 100.0
    assert np.isclose(comb, rec.val_combined)
    assert len(res.final_params_snapshot) == 4


def test_train_classifier_learns_separable_data():
    h, a_hat, labels, sensitive, split = small_training_setup()
    cfg = GCNTrainConfig(hidden=8, epochs=300, dropout=0.0, seed=0,
                         accuracy_threshold=0.8)
    res = train_classifier(h, a_hat, labels, sensitive, split, cfg)
    assert not res.below_threshold
    assert res.trace[res.selected_epoch].val_acc >= 0.8
    probs = predict(res.params, h, a_hat)
    train_acc = ((probs[split.train_ids] >= 0.5).astype(int)
                 == labels[split.train_ids]).mean()
    assert train_acc >= 0.75


def test_train_classifier_below_threshold_flag():
    h, a_hat, labels, sensitive, split = small_training_setup()
    cfg = GCNTrainConfig(hidden=8, epochs=5, seed=0, accuracy_threshold=1.01)
    res = train_classifier(h, a_hat, labels, sensitive, split, cfg)
    assert res.below_threshold


def test_export_predictions_roundtrip(tmp_path):
    probs = np.array([0.9, 0.2, 0.5])
    labels = np.array([1, 0, 1])
    sensitive = np.array([0, 1, 0])
    path = tmp_path / "preds.csv"
    export_predictions(path, probs, labels, sensitive, np.array([2, 0]))
    lines = path.read_text().splitlines()
    assert lines[0] == "id,prob,pred,label,sensitive"
    assert lines[1].split(",") == ["2", "0.5", "1", "1", "0"]
    assert lines[2].split(",") == ["0", "0.9", "1", "1", "0"]
