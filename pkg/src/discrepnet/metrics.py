"""Binary-detection metrics with brute-force-checkable definitions.

Labels follow the package convention: 0 = real, 1 = fake; scores are
"probability fake", higher meaning more likely forged.
"""

from dataclasses import dataclass

import numpy as np
from scipy.stats import rankdata

from .errors import UndefinedMetricError


def _as_arrays(scores, labels):
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    if scores.shape != labels.shape or scores.ndim != 1:
        raise UndefinedMetricError(
            f"scores {scores.shape} and labels {labels.shape} must be equal-length 1-D")
    if scores.size == 0:
        raise UndefinedMetricError("empty input")
    return scores, labels.astype(np.int64)


def auc(scores, labels):
    """Rank statistic P(score_pos > score_neg) + 0.5 P(tie)."""
    scores, labels = _as_arrays(scores, labels)
    n_pos = int((labels == 1).sum())
    n_neg = int((labels == 0).sum())
    if n_pos == 0 or n_neg == 0:
        raise UndefinedMetricError(
            f"AUC needs both classes (n_pos={n_pos}, n_neg={n_neg})")
    ranks = rankdata(scores, method="average")
    return float((ranks[labels == 1].sum() - n_pos * (n_pos + 1) / 2.0)
                 / (n_pos * n_neg))


def eer(scores, labels):
    """Equal error rate and the threshold achieving it.

    Predicting fake when score >= t, sweep t over the sorted unique scores
    plus a +inf sentinel and return ((FPR+FNR)/2, t) at the first point
    minimising |FPR - FNR|.
    """
    scores, labels = _as_arrays(scores, labels)
    n_pos = int((labels == 1).sum())
    n_neg = int((labels == 0).sum())
    if n_pos == 0 or n_neg == 0:
        raise UndefinedMetricError(
            f"EER needs both classes (n_pos={n_pos}, n_neg={n_neg})")
    thresholds = np.concatenate([np.unique(scores), [np.inf]])
    pos = np.sort(scores[labels == 1])
    neg = np.sort(scores[labels == 0])
    # counts of scores >= t via sorted-array search
    fpr = (n_neg - np.searchsorted(neg, thresholds, side="left")) / n_neg
    fnr = np.searchsorted(pos, thresholds, side="left") / n_pos
    best = int(np.argmin(np.abs(fpr - fnr)))
    return float((fpr[best] + fnr[best]) / 2.0), float(thresholds[best])


@dataclass
class MetricsReport:
    acc: float
    auc: float
    eer: float
    eer_threshold: float
    n_pos: int
    n_neg: int

    CSV_HEADER = "acc,auc,eer,eer_threshold,n_pos,n_neg"

    def csv_row(self):
        return (f"{self.acc:.6f},{self.auc:.6f},{self.eer:.6f},"
                f"{self.eer_threshold:.6g},{self.n_pos},{self.n_neg}")

    def table(self):
        lines = [
            "metric     value",
            f"ACC        {self.acc:.4f}",
            f"AUC        {self.auc:.4f}",
            f"EER        {self.eer:.4f} (thr={self.eer_threshold:.4g})",
            f"samples    {self.n_pos} fake / {self.n_neg} real",
        ]
        return "\n".join(lines)


def metrics_report(scores, labels, threshold=0.5) -> MetricsReport:
    scores_arr, labels_arr = _as_arrays(scores, labels)
    predictions = (scores_arr >= threshold).astype(np.int64)
    acc = float((predictions == labels_arr).mean())
    auc_value = auc(scores_arr, labels_arr)
    eer_value, eer_thr = eer(scores_arr, labels_arr)
    return MetricsReport(acc=acc, auc=auc_value, eer=eer_value,
                         eer_threshold=eer_thr,
                         n_pos=int((labels_arr == 1).sum()),
                         n_neg=int((labels_arr == 0).sum()))
