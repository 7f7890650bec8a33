"""Group-fairness and classification metrics.

Parity/opportunity gaps are reported as absolute values in percentage
points; accuracy and AUC stay as fractions in [0, 1].
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.stats import rankdata


def delta_sp(y_hat: np.ndarray, s: np.ndarray) -> float:
    """|P(yhat=1 | s=0) - P(yhat=1 | s=1)| as a fraction."""
    y_hat = np.asarray(y_hat)
    s = np.asarray(s)
    g0, g1 = y_hat[s == 0], y_hat[s == 1]
    if g0.size == 0 or g1.size == 0:
        raise ValueError("delta_sp needs both sensitive groups non-empty")
    return abs(float(g0.mean()) - float(g1.mean()))


def delta_eo(y_hat: np.ndarray, y: np.ndarray, s: np.ndarray) -> float:
    """|TPR(s=0) - TPR(s=1)| as a fraction."""
    y_hat = np.asarray(y_hat)
    y = np.asarray(y)
    s = np.asarray(s)
    tprs = []
    for grp in (0, 1):
        pos = (s == grp) & (y == 1)
        if not pos.any():
            raise ValueError(f"delta_eo: group {grp} has no positive labels")
        tprs.append(float(y_hat[pos].mean()))
    return abs(tprs[0] - tprs[1])


def auc(scores: np.ndarray, y: np.ndarray) -> float:
    """P(score of random positive > random negative), ties counted 1/2."""
    scores = np.asarray(scores, dtype=np.float64)
    y = np.asarray(y)
    n_pos = int((y == 1).sum())
    n_neg = int((y == 0).sum())
    if n_pos == 0 or n_neg == 0:
        raise ValueError("auc needs both classes present")
    ranks = rankdata(scores)
    rank_sum = ranks[y == 1].sum()
    return float((rank_sum - n_pos * (n_pos + 1) / 2) / (n_pos * n_neg))


@dataclass
class EvaluationReport:
    accuracy: float          # fraction
    auc: float               # fraction
    delta_sp: float          # percentage points
    delta_eo: float          # percentage points
    combined: float          # delta_sp + delta_eo, percentage points
    counts: dict             # (group, label, prediction) -> count
    meta: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "accuracy": self.accuracy,
            "auc": self.auc,
            "delta_sp": self.delta_sp,
            "delta_eo": self.delta_eo,
            "combined": self.combined,
            **{f"meta.{k}": v for k, v in self.meta.items()},
        }


def evaluate(y_hat: np.ndarray, scores: np.ndarray, y: np.ndarray,
             s: np.ndarray, meta: dict | None = None) -> EvaluationReport:
    """Full report over aligned prediction/label/sensitive vectors."""
    y_hat = np.asarray(y_hat)
    y = np.asarray(y)
    s = np.asarray(s)
    if not (len(y_hat) == len(scores) == len(y) == len(s)):
        raise ValueError("evaluate: input vectors must be aligned")
    counts = {}
    for grp, lab, pred in zip(s, y, y_hat):
        key = (int(grp), int(lab), int(pred))
        counts[key] = counts.get(key, 0) + 1
    dsp = delta_sp(y_hat, s) * 100.0
    deo = delta_eo(y_hat, y, s) * 100.0
    return EvaluationReport(
        accuracy=float((y_hat == y).mean()),
        auc=auc(scores, y),
        delta_sp=dsp,
        delta_eo=deo,
        combined=dsp + deo,
        counts=counts,
        meta=dict(meta or {}),
    )
