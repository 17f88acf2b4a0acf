"""Validation metrics: average log-likelihood, PR curves, cold-start bins."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from .dataset import DEFAULT_EDGES, Dataset, bin_by_frequency, binarize, train_frequency
from .models import Predictor
from .training import reindex

POSITIVE_CLASSES = ("bad", "accepted")


@dataclass(frozen=True)
class PRCurve:
    """Points ordered from the strictest threshold to the loosest."""

    thresholds: np.ndarray
    true_positives: np.ndarray
    n_positive: int
    recall: np.ndarray
    precision: np.ndarray
    auprc: float

    def to_tsv(self) -> str:
        lines = ["recall\tprecision"]
        lines += [f"{r:.10g}\t{p:.10g}" for r, p in zip(self.recall, self.precision)]
        return "\n".join(lines) + "\n"


def pr_curve(scores, labels) -> PRCurve:
    """Sweep every distinct score (descending) as a ``score >= t`` threshold.

    ``labels`` is truthy for the positive class.  Tied scores enter together.
    """
    scores = np.asarray(scores, dtype=float)
    labels = np.asarray(labels, dtype=bool)
    n_pos = int(labels.sum())
    if n_pos == 0:
        raise ValueError("precision-recall curve needs at least one positive label")
    order = np.argsort(-scores, kind="stable")
    s, y = scores[order], labels[order]
    tp = np.cumsum(y)
    # last row of each tie group
    ends = np.flatnonzero(np.r_[s[1:] != s[:-1], True])
    tp = tp[ends]
    predicted = ends + 1
    recall = tp / n_pos
    precision = tp / predicted
    return PRCurve(s[ends], tp, n_pos, recall, precision, _average_precision(tp, precision, n_pos))


def _average_precision(tp: np.ndarray, precision: np.ndarray, n_pos: int) -> float:
    # recall steps as integer TP increments; fsum makes the result order-free
    steps = np.diff(np.r_[0, tp])
    return math.fsum((steps * precision).tolist()) / n_pos


def auprc(curve: PRCurve) -> float:
    """Average precision: ``sum (recall_j - recall_{j-1}) * precision_j``."""
    return _average_precision(curve.true_positives, curve.precision, curve.n_positive)


def _log_terms(pred: Predictor, data: Dataset) -> np.ndarray:
    local = reindex(pred, data)
    log_p, log_not_p = pred.log_proba(local.u, local.i)
    return data.q * log_p + (1 - data.q) * log_not_p


def average_log_likelihood(pred: Predictor, validation: Dataset) -> float:
    if len(validation) == 0:
        raise ValueError("average log-likelihood of an empty set")
    return float(np.mean(_log_terms(pred, validation)))


def class_scores(pred: Predictor, data: Dataset, positive_class: str = "bad"):
    """``(scores, labels)`` for the chosen positive class.

    ``bad``: score ``1 - p`` and label ``q < 0.5``; ``accepted``: score ``p``
    and label ``q >= 0.5``.
    """
    if positive_class not in POSITIVE_CLASSES:
        raise ValueError(f"positive class must be one of {POSITIVE_CLASSES}")
    local = reindex(pred, data)
    p = pred.proba(local.u, local.i)
    good = binarize(data.q)
    if positive_class == "bad":
        return 1.0 - p, ~good
    return p, good


def cold_start_report(pred: Predictor, train: Dataset, validation: Dataset,
                      edges: Sequence[float] = DEFAULT_EDGES) -> dict:
    """Average log-likelihood per (user bin, item bin) and per marginal bin.

    Bins come from each entity's occurrence count in ``train``; empty bins
    are left out.
    """
    terms = _log_terms(pred, validation)
    user_bins = np.array(bin_by_frequency(train_frequency(train, validation.raw_users(), "user"), edges))
    item_bins = np.array(bin_by_frequency(train_frequency(train, validation.raw_items(), "item"), edges))

    def summarize(mask):
        return {"n": int(mask.sum()), "avg_log_likelihood": float(terms[mask].mean())}

    cells = []
    for ub in dict.fromkeys(user_bins):
        for ib in dict.fromkeys(item_bins):
            mask = (user_bins == ub) & (item_bins == ib)
            if mask.any():
                cells.append({"user_bin": str(ub), "item_bin": str(ib), **summarize(mask)})
    cells.sort(key=lambda c: (_bin_start(c["user_bin"]), _bin_start(c["item_bin"])))
    by_user = {str(b): summarize(user_bins == b) for b in sorted(set(user_bins), key=_bin_start)}
    by_item = {str(b): summarize(item_bins == b) for b in sorted(set(item_bins), key=_bin_start)}
    return {"cells": cells, "users": by_user, "items": by_item}


def _bin_start(label: str) -> float:
    return float(label[1:].split(",")[0])


@dataclass
class EvalReport:
    variant: str
    positive_class: str
    n_validation: int
    positive_rate: float
    avg_log_likelihood: float
    auprc: float
    cold_start: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)


def evaluate(pred: Predictor, train: Dataset, validation: Dataset,
             positive_class: str = "bad",
             edges: Sequence[float] = DEFAULT_EDGES) -> tuple[EvalReport, PRCurve]:
    scores, labels = class_scores(pred, validation, positive_class)
    curve = pr_curve(scores, labels)
    report = EvalReport(
        variant=pred.variant,
        positive_class=positive_class,
        n_validation=len(validation),
        positive_rate=float(np.mean(labels)),
        avg_log_likelihood=average_log_likelihood(pred, validation),
        auprc=curve.auprc,
        cold_start=cold_start_report(pred, train, validation, edges),
    )
    return report, curve
