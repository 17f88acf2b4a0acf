"""Interpretation of fitted parameters."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dataset import Dataset, binarize
from .models import BasicParams, FullParams, GladParams, Predictor


class AnalysisError(ValueError):
    pass


def difficulties(pred: Predictor) -> np.ndarray:
    p = pred.params
    if isinstance(p, (BasicParams, FullParams, GladParams)):
        return np.asarray(p.d, dtype=float)
    raise AnalysisError(f"variant {pred.variant!r} has no item difficulties")


def percentiles(values: np.ndarray) -> np.ndarray:
    """Mid-rank percentile: ``100 * (#below + #equal / 2) / n``."""
    values = np.asarray(values, dtype=float)
    srt = np.sort(values)
    below = np.searchsorted(srt, values, side="left")
    equal = np.searchsorted(srt, values, side="right") - below
    return 100.0 * (below + 0.5 * equal) / len(values)


def difficulty_percentile(pred: Predictor, item: str) -> float:
    k = pred.item_index(item)
    if k < 0:
        raise AnalysisError(f"item {item!r} was not seen in training")
    return float(percentiles(difficulties(pred))[k])


def percentile_table(pred: Predictor) -> list[dict]:
    d = difficulties(pred)
    pct = percentiles(d)
    rows = [{"item": item, "difficulty": float(d[k]), "percentile": float(pct[k])}
            for k, item in enumerate(pred.items)]
    rows.sort(key=lambda r: -r["difficulty"])
    return rows


def item_statistics(data: Dataset) -> dict[str, dict]:
    """Per raw item: edit count, distinct users and acceptance rate."""
    counts = data.item_counts()
    accepted = np.bincount(data.i, weights=binarize(data.q).astype(float), minlength=data.n_items)
    pairs = np.unique(np.stack([data.i, data.u]), axis=1)
    users = np.bincount(pairs[0], minlength=data.n_items)
    stats = {}
    for k, item in enumerate(data.items):
        if counts[k]:
            stats[item] = {"n_edits": int(counts[k]), "n_users": int(users[k]),
                           "acceptance_rate": float(accepted[k] / counts[k])}
    return stats


def top_bottom_difficulty(pred: Predictor, train: Dataset, k: int) -> tuple[list[dict], list[dict]]:
    """The ``k`` most and ``k`` least difficult items with training statistics."""
    d = difficulties(pred)
    if not 0 <= k <= len(d):
        raise AnalysisError(f"k must lie in [0, {len(d)}]")
    stats = item_statistics(train)
    empty = {"n_edits": 0, "n_users": 0, "acceptance_rate": float("nan")}

    def row(j):
        item = pred.items[j]
        return {"item": item, "difficulty": float(d[j]), **stats.get(item, empty)}

    idx = np.arange(len(d))
    descending = np.lexsort((idx, -d))
    ascending = np.lexsort((idx, d))
    return [row(j) for j in descending[:k]], [row(j) for j in ascending[:k]]


@dataclass(frozen=True)
class PcaResult:
    components: np.ndarray   # n_components x D, orthonormal rows
    projections: np.ndarray  # M x n_components
    explained_variance_ratio: np.ndarray
    mean: np.ndarray


def pca_items(Y: np.ndarray, n_components: int) -> PcaResult:
    """Mean-centred PCA of the item embedding rows.

    Each component is signed so that its largest-magnitude coordinate is
    positive.
    """
    Y = np.asarray(Y, dtype=float)
    M, D = Y.shape
    if M < 2:
        raise AnalysisError("PCA needs at least two items")
    if not 1 <= n_components <= min(M, D):
        raise AnalysisError(f"n_components must lie in [1, {min(M, D)}]")
    mean = Y.mean(axis=0)
    centred = Y - mean
    cov = centred.T @ centred / (M - 1)
    evals, evecs = np.linalg.eigh(cov)
    evals = np.clip(evals[::-1], 0.0, None)
    evecs = evecs[:, ::-1]
    total = evals.sum()
    if total <= 0:
        raise AnalysisError("embedding matrix has zero variance")
    comps = evecs[:, :n_components].T.copy()
    for row in comps:
        if row[np.argmax(np.abs(row))] < 0:
            row *= -1
    return PcaResult(comps, centred @ comps.T, evals[:n_components] / total, mean)


def extreme_items_along_axis(pca: PcaResult, axis: int, k: int,
                             items=None) -> tuple[list, list]:
    """Items with the ``k`` lowest and ``k`` highest coordinates on ``axis``.

    Ties are broken by item position.  Returns positions, or the matching
    entries of ``items`` when given.
    """
    if not 0 <= axis < pca.projections.shape[1]:
        raise AnalysisError(f"axis {axis} out of range")
    coord = pca.projections[:, axis]
    idx = np.arange(len(coord))
    lowest = np.lexsort((idx, coord))[:k]
    highest = np.lexsort((idx, -coord))[:k]
    if items is not None:
        return [items[j] for j in lowest], [items[j] for j in highest]
    return lowest.tolist(), highest.tolist()


@dataclass(frozen=True)
class CorrelationResult:
    users: list[str]
    items: list[str]
    matrix: np.ndarray

    def to_tsv(self) -> str:
        lines = ["user\t" + "\t".join(self.users)]
        for name, row in zip(self.users, self.matrix):
            lines.append(name + "\t" + "\t".join(f"{x:.6g}" for x in row))
        return "\n".join(lines) + "\n"


def cooccurrence_correlation(data: Dataset) -> CorrelationResult:
    """Pearson correlation between users' accepted-edit indicator vectors.

    Items are ordered by decreasing number of edits; users by the rank of the
    item they edit most, then by their edit count there (descending).  Users
    whose indicator vector is constant are dropped.
    """
    if data.n_items < 2:
        raise AnalysisError("correlation needs at least two items")
    counts = np.zeros((data.n_users, data.n_items))
    np.add.at(counts, (data.u, data.i), 1.0)
    indicator = np.zeros((data.n_users, data.n_items))
    good = binarize(data.q)
    indicator[data.u[good], data.i[good]] = 1.0

    item_order = np.lexsort((np.arange(data.n_items), -counts.sum(axis=0)))
    counts = counts[:, item_order]
    indicator = indicator[:, item_order]
    active = counts.sum(axis=1) > 0
    top = np.argmax(counts, axis=1)
    top_count = counts[np.arange(data.n_users), top]
    users = np.lexsort((np.arange(data.n_users), -top_count, top))
    users = users[active[users]]
    variance = indicator[users].var(axis=1)
    users = users[variance > 0]
    R = np.corrcoef(indicator[users]) if len(users) else np.empty((0, 0))
    R = np.atleast_2d(R)
    return CorrelationResult([data.users[j] for j in users],
                             [data.items[j] for j in item_order], R)


def churn_quartile_report(data: Dataset, pred: Predictor) -> tuple[float, float]:
    """Mean churn of the least and the most difficult quarter of items.

    Churn of an item is its edit count times its acceptance rate.  Items are
    ranked by increasing difficulty; each quarter holds ``floor(M / 4)``.
    """
    d = difficulties(pred)
    M = len(d)
    if M < 4:
        raise AnalysisError(f"quartile report needs at least 4 items, got {M}")
    stats = item_statistics(data)
    churn = np.array([
        stats[it]["n_edits"] * stats[it]["acceptance_rate"] if it in stats else 0.0
        for it in pred.items
    ])
    order = np.lexsort((np.arange(M), d))
    quarter = M // 4
    return float(churn[order[:quarter]].mean()), float(churn[order[-quarter:]].mean())
