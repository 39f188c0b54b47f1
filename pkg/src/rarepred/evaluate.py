"""Confusion matrices, classification metrics, ROC curves, report bundles.

Undefined metrics (zero denominators) come back as nan together with a flag
naming them, so callers on heavily imbalanced data can distinguish "model
never fires" from "metric not computable".
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field

import numpy as np

from .dataset import DatasetError

__all__ = [
    "ConfusionMatrix",
    "Metrics",
    "ModelEvaluation",
    "confusion",
    "metrics",
    "roc",
    "auc",
    "auc_pair_count",
    "evaluate_scores",
    "write_report",
]


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int
    fn: int
    fp: int
    tn: int

    @property
    def total(self) -> int:
        return self.tp + self.fn + self.fp + self.tn


@dataclass(frozen=True)
class Metrics:
    """Point metrics at a fixed threshold. nan fields are listed in flags."""

    accuracy: float
    kappa: float
    sensitivity: float
    specificity: float
    undefined: tuple[str, ...] = ()


def _as_binary(y: np.ndarray, what: str) -> np.ndarray:
    arr = np.asarray(y)
    if arr.ndim != 1:
        raise DatasetError(f"{what} must be 1-d")
    if not np.isin(arr, (0, 1)).all():
        raise DatasetError(f"{what} must be 0/1")
    return arr.astype(np.int64)


def confusion(y_true: np.ndarray, y_pred: np.ndarray) -> ConfusionMatrix:
    yt = _as_binary(y_true, "labels")
    yp = _as_binary(y_pred, "predictions")
    if yt.shape != yp.shape:
        raise DatasetError("labels and predictions differ in length")
    return ConfusionMatrix(
        tp=int(((yt == 1) & (yp == 1)).sum()),
        fn=int(((yt == 1) & (yp == 0)).sum()),
        fp=int(((yt == 0) & (yp == 1)).sum()),
        tn=int(((yt == 0) & (yp == 0)).sum()),
    )


def metrics(cm: ConfusionMatrix) -> Metrics:
    """Accuracy, Cohen's kappa, sensitivity, specificity from counts.

    Kappa compares observed agreement with the agreement expected from the
    marginal prediction and label rates; it is undefined when that expected
    agreement is 1 (single-class data met by single-class predictions).
    """
    total = cm.total
    if total == 0:
        raise DatasetError("empty confusion matrix")
    undefined: list[str] = []
    accuracy = (cm.tp + cm.tn) / total

    pos = cm.tp + cm.fn
    neg = cm.fp + cm.tn
    if pos > 0:
        sensitivity = cm.tp / pos
    else:
        sensitivity = math.nan
        undefined.append("sensitivity")
    if neg > 0:
        specificity = cm.tn / neg
    else:
        specificity = math.nan
        undefined.append("specificity")

    pred_pos = cm.tp + cm.fp
    p_e = (pos / total) * (pred_pos / total) + (neg / total) * ((total - pred_pos) / total)
    if p_e < 1.0:
        kappa = (accuracy - p_e) / (1.0 - p_e)
    else:
        kappa = math.nan
        undefined.append("kappa")

    return Metrics(
        accuracy=accuracy,
        kappa=kappa,
        sensitivity=sensitivity,
        specificity=specificity,
        undefined=tuple(undefined),
    )


def roc(y_true: np.ndarray, scores: np.ndarray) -> np.ndarray:
    """ROC curve as an (k, 3) array of (threshold, fpr, tpr) rows.

    Thresholds are the unique scores in descending order, predicting
    positive at score >= threshold; tied scores move the curve in one step.
    A leading (+inf, 0, 0) row anchors the origin and the final row is
    always (min score, 1, 1).
    """
    yt = _as_binary(y_true, "labels")
    s = np.asarray(scores, dtype=np.float64)
    if s.shape != yt.shape:
        raise DatasetError("labels and scores differ in length")
    if not np.all(np.isfinite(s)):
        raise DatasetError("scores must be finite")
    pos = int(yt.sum())
    neg = yt.size - pos
    if pos == 0 or neg == 0:
        raise DatasetError("ROC needs both classes present")
    order = np.argsort(-s, kind="stable")
    s_sorted = s[order]
    y_sorted = yt[order]
    # group boundaries where the sorted score changes
    boundary = np.flatnonzero(np.diff(s_sorted) != 0)
    last = np.concatenate([boundary, [s.size - 1]])
    cum_tp = np.cumsum(y_sorted)[last]
    cum_fp = np.cumsum(1 - y_sorted)[last]
    rows = np.column_stack(
        [s_sorted[last], cum_fp / neg, cum_tp / pos]
    )
    return np.vstack([[math.inf, 0.0, 0.0], rows])


def auc(y_true: np.ndarray, scores: np.ndarray) -> float:
    """Area under the ROC curve by trapezoid over the grouped-tie curve.

    Equals the pair-counting statistic: the fraction of (positive,
    negative) pairs the score orders correctly, ties counting one half.
    """
    curve = roc(y_true, scores)
    fpr, tpr = curve[:, 1], curve[:, 2]
    return float(np.sum(np.diff(fpr) * (tpr[1:] + tpr[:-1]) * 0.5))


def auc_pair_count(y_true: np.ndarray, scores: np.ndarray) -> float:
    """Direct rank-based pair statistic, the independent check for auc()."""
    yt = _as_binary(y_true, "labels")
    s = np.asarray(scores, dtype=np.float64)
    pos = int(yt.sum())
    neg = yt.size - pos
    if pos == 0 or neg == 0:
        raise DatasetError("pair statistic needs both classes present")
    order = np.argsort(s, kind="stable")
    ranks = np.empty(s.size, dtype=np.float64)
    sorted_scores = s[order]
    i = 0
    while i < s.size:
        j = i
        while j + 1 < s.size and sorted_scores[j + 1] == sorted_scores[i]:
            j += 1
        ranks[order[i : j + 1]] = 0.5 * (i + j) + 1.0  # average rank, 1-based
        i = j + 1
    rank_sum_pos = float(ranks[yt == 1].sum())
    return (rank_sum_pos - pos * (pos + 1) / 2.0) / (pos * neg)


# ---------------------------------------------------------------------------
# report bundles


@dataclass(frozen=True)
class ModelEvaluation:
    """Everything the report writer needs about one scored model."""

    name: str
    cm: ConfusionMatrix
    point_metrics: Metrics
    auc_value: float
    roc_points: np.ndarray
    importance: dict[str, float] = field(default_factory=dict)
    threshold: float = 0.5


def evaluate_scores(
    name: str,
    y_true: np.ndarray,
    scores: np.ndarray,
    threshold: float = 0.5,
    importance: dict[str, float] | None = None,
) -> ModelEvaluation:
    """Score a model's probability outputs: positive iff score >= threshold."""
    yt = _as_binary(y_true, "labels")
    s = np.asarray(scores, dtype=np.float64)
    preds = (s >= threshold).astype(np.int64)
    cm = confusion(yt, preds)
    return ModelEvaluation(
        name=name,
        cm=cm,
        point_metrics=metrics(cm),
        auc_value=auc(yt, s),
        roc_points=roc(yt, s),
        importance=dict(importance or {}),
        threshold=threshold,
    )


def _slug(name: str) -> str:
    return re.sub(r"[^a-z0-9]+", "_", name.lower()).strip("_")


def _fmt(x: float) -> str:
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return repr(float(x))


METRIC_ROWS = ("Accuracy", "Kappa", "Sensitivity", "Specificity", "AUC")


def write_report(out_dir: str, evaluations: list[ModelEvaluation]) -> list[str]:
    """Write the evaluation bundle; returns the relative file names written.

    Layout: ``metrics.csv`` (metric rows x model columns), plus per model
    ``roc_<name>.csv`` (threshold,fpr,tpr), ``confusion_<name>.csv``, and
    ``importance_<name>.csv`` (feature,weight, descending) when importances
    are present. Names derive from the model name only, so reruns are
    byte-identical.
    """
    import os

    if not evaluations:
        raise DatasetError("nothing to report")
    names = [_slug(ev.name) for ev in evaluations]
    if len(set(names)) != len(names):
        raise DatasetError("model names collide after slugging")
    os.makedirs(out_dir, exist_ok=True)
    written: list[str] = []

    rows = {
        "Accuracy": [ev.point_metrics.accuracy for ev in evaluations],
        "Kappa": [ev.point_metrics.kappa for ev in evaluations],
        "Sensitivity": [ev.point_metrics.sensitivity for ev in evaluations],
        "Specificity": [ev.point_metrics.specificity for ev in evaluations],
        "AUC": [ev.auc_value for ev in evaluations],
    }
    path = os.path.join(out_dir, "metrics.csv")
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("metric," + ",".join(names) + "\n")
        for metric in METRIC_ROWS:
            fh.write(metric + "," + ",".join(_fmt(v) for v in rows[metric]) + "\n")
    written.append("metrics.csv")

    for ev, slug in zip(evaluations, names):
        roc_name = f"roc_{slug}.csv"
        with open(os.path.join(out_dir, roc_name), "w", encoding="utf-8", newline="") as fh:
            fh.write("threshold,fpr,tpr\n")
            for t, fpr, tpr in ev.roc_points:
                fh.write(f"{_fmt(t)},{_fmt(fpr)},{_fmt(tpr)}\n")
        written.append(roc_name)

        cm_name = f"confusion_{slug}.csv"
        with open(os.path.join(out_dir, cm_name), "w", encoding="utf-8", newline="") as fh:
            fh.write(",predicted_1,predicted_0\n")
            fh.write(f"actual_1,{ev.cm.tp},{ev.cm.fn}\n")
            fh.write(f"actual_0,{ev.cm.fp},{ev.cm.tn}\n")
        written.append(cm_name)

        if ev.importance:
            imp_name = f"importance_{slug}.csv"
            ordered = sorted(ev.importance.items(), key=lambda kv: (-kv[1], kv[0]))
            with open(os.path.join(out_dir, imp_name), "w", encoding="utf-8", newline="") as fh:
                fh.write("feature,weight\n")
                for feat, weight in ordered:
                    fh.write(f"{feat},{_fmt(weight)}\n")
            written.append(imp_name)
    return written
