"""Regularized maximum-likelihood fitting with minibatch SGD."""

from __future__ import annotations

import logging
import time
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass, fields, replace
from typing import TextIO

import numpy as np

from .dataset import Dataset
from .models import (
    VARIANTS,
    AverageParams,
    BasicParams,
    FullParams,
    GladParams,
    Params,
    Predictor,
    UserOnlyParams,
    array_fields,
    log_sigmoid,
    scores,
    sigmoid,
)

log = logging.getLogger(__name__)

# rows per gradient chunk; fixed so the reduction order never depends on threads
CHUNK_ROWS = 512


class TrainingError(RuntimeError):
    pass


@dataclass(frozen=True)
class TrainConfig:
    variant: str = "basic"
    dim: int = 20
    learning_rate: float = 2.0
    batch_size: int = 1024
    epochs: int = 40
    l2: float = 1e-4
    seed: int = 0
    deterministic: bool = True
    init_scale: float = 0.01
    threads: int = 1
    early_stop: bool = False
    tol: float = 1e-6

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}; choose from {VARIANTS}")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.epochs < 0:
            raise ValueError("epochs must be >= 0")
        if self.l2 < 0:
            raise ValueError("l2 must be non-negative")
        if self.dim < 1:
            raise ValueError("dim must be >= 1")
        if self.threads < 1:
            raise ValueError("threads must be >= 1")


# --------------------------------------------------------------------------- #
# objective and gradient


def _regularizer(params: Params) -> float:
    return sum(float(np.sum(getattr(params, name) ** 2)) for name in array_fields(params))


def nll_terms(params: Params, u, i, q) -> np.ndarray:
    """Per-observation ``-q log p - (1 - q) log(1 - p)``."""
    if isinstance(params, AverageParams):
        p = np.clip(params.p, 1e-12, 1 - 1e-12)
        return -q * np.log(p) - (1 - q) * np.log1p(-p)
    z = scores(params, u, i)
    return -q * log_sigmoid(z) - (1 - q) * log_sigmoid(-z)


def negative_log_likelihood(pred: Predictor | Params, data: Dataset, l2: float = 0.0) -> float:
    """Summed NLL over ``data`` plus ``(l2 / 2) * ||theta||^2`` (offset excluded).

    ``data`` indices must already be in the predictor's index space.
    """
    params = pred.params if isinstance(pred, Predictor) else pred
    total = float(np.sum(nll_terms(params, data.u, data.i, data.q)))
    if isinstance(params, AverageParams):
        return total
    return total + 0.5 * l2 * _regularizer(params)


def _data_gradient(params: Params, u, i, q) -> dict[str, np.ndarray | float]:
    """Gradient of the unregularized NLL over one chunk of rows."""
    z = scores(params, u, i)
    r = sigmoid(z) - q
    n_users = len(params.s)
    grad: dict[str, np.ndarray | float] = {"b": float(np.sum(r))}
    if isinstance(params, UserOnlyParams):
        grad["s"] = np.bincount(u, weights=r, minlength=n_users)
        return grad
    if isinstance(params, GladParams):
        inv_d = np.exp(-params.beta[i])
        grad["s"] = np.bincount(u, weights=r * inv_d, minlength=n_users)
        grad["beta"] = np.bincount(
            i, weights=-r * params.s[u] * inv_d, minlength=len(params.beta)
        )
        return grad
    grad["s"] = np.bincount(u, weights=r, minlength=n_users)
    grad["d"] = -np.bincount(i, weights=r, minlength=len(params.d))
    if isinstance(params, FullParams):
        gx = np.zeros_like(params.X)
        gy = np.zeros_like(params.Y)
        np.add.at(gx, u, r[:, None] * params.Y[i])
        np.add.at(gy, i, r[:, None] * params.X[u])
        grad["X"] = gx
        grad["Y"] = gy
    return grad


def _sum_grads(parts):
    total = dict(parts[0])
    for part in parts[1:]:
        for key, value in part.items():
            total[key] = total[key] + value
    return total


def gradient(pred: Predictor | Params, batch: Dataset, l2: float = 0.0,
             threads: int = 1, deterministic: bool = True) -> Params:
    """Gradient of ``negative_log_likelihood(pred, batch, l2)``.

    Returned as a parameter set of the same variant and shape.  Rows are
    reduced in fixed-size chunks; with ``deterministic`` the chunk partials
    are summed in row order whatever the thread count.
    """
    params = pred.params if isinstance(pred, Predictor) else pred
    if len(batch) == 0:
        raise ValueError("gradient of an empty batch")
    if isinstance(params, AverageParams):
        return AverageParams(0.0)
    u, i, q = batch.u, batch.i, batch.q
    starts = range(0, len(q), CHUNK_ROWS)

    def chunk(k):
        sl = slice(k, k + CHUNK_ROWS)
        return _data_gradient(params, u[sl], i[sl], q[sl])

    if threads > 1 and len(starts) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            if deterministic:
                parts = list(pool.map(chunk, starts))
            else:
                parts = [f.result() for f in as_completed([pool.submit(chunk, k) for k in starts])]
    else:
        parts = [chunk(k) for k in starts]
    grad = _sum_grads(parts)
    for name in array_fields(params):
        grad[name] = grad[name] + l2 * getattr(params, name)
    return type(params)(**grad)


# --------------------------------------------------------------------------- #
# fitting


def _compact(idx: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Re-index ``idx`` densely in first-appearance order.

    Returns ``(new_idx, old_ids)`` with ``old_ids[new_idx] == idx``.
    """
    uniq, first, inverse = np.unique(idx, return_index=True, return_inverse=True)
    order = np.argsort(first, kind="stable")
    rank = np.empty_like(order)
    rank[order] = np.arange(len(order))
    return rank[inverse], uniq[order]


def fit_average(data: Dataset) -> Predictor:
    """Constant predictor returning the training-set mean outcome."""
    if len(data) == 0:
        raise ValueError("cannot fit the average predictor on empty data")
    p = float(np.mean(data.q))
    _, user_ids = _compact(data.u)
    _, item_ids = _compact(data.i)
    return Predictor(
        AverageParams(p),
        [data.users[k] for k in user_ids],
        [data.items[k] for k in item_ids],
        p,
    )


def init_params(variant: str, n_users: int, n_items: int, config: TrainConfig) -> Params:
    rng = np.random.default_rng(config.seed)
    s = np.zeros(n_users)
    if variant == "user-only":
        return UserOnlyParams(0.0, s)
    if variant == "glad":
        return GladParams(0.0, s, np.zeros(n_items))
    d = np.zeros(n_items)
    if variant == "basic":
        return BasicParams(0.0, s, d)
    if variant == "full":
        X = rng.normal(0.0, config.init_scale, size=(n_users, config.dim))
        Y = rng.normal(0.0, config.init_scale, size=(n_items, config.dim))
        return FullParams(0.0, s, d, X, Y)
    raise ValueError(f"variant {variant!r} is not trained by SGD")


def _step(params: Params, grad: Params, scale: float) -> Params:
    changes = {}
    with np.errstate(over="ignore", invalid="ignore"):
        for f in fields(params):
            changes[f.name] = getattr(params, f.name) - scale * getattr(grad, f.name)
    return replace(params, **changes)


def _finite(params: Params) -> bool:
    return all(np.all(np.isfinite(getattr(params, f.name))) for f in fields(params))


def sgd_fit(data: Dataset, config: TrainConfig = TrainConfig(),
            log_file: TextIO | None = None) -> Predictor:
    """Fit ``config.variant`` on ``data`` by minibatch SGD.

    Each epoch shuffles with ``seed + epoch`` and applies
    ``theta -= lr / |B| * grad`` per batch.  The per-batch regularizer is
    scaled by ``|B| / K`` so that one epoch of steps follows the gradient of
    the full objective ``NLL + (l2 / 2) ||theta||^2``.  A TSV line
    ``epoch, train_nll, wall_seconds`` is written per epoch to ``log_file``.
    """
    if len(data) == 0:
        raise ValueError("cannot fit on empty data")
    if config.variant == "average":
        return fit_average(data)

    u, user_ids = _compact(data.u)
    i, item_ids = _compact(data.i)
    train = Dataset(
        tuple(data.users[k] for k in user_ids),
        tuple(data.items[k] for k in item_ids),
        u, i, data.q, data.ts,
    )
    K = len(train)
    params = init_params(config.variant, train.n_users, train.n_items, config)
    batch = min(config.batch_size, K)
    start = time.perf_counter()
    if log_file is not None:
        log_file.write("epoch\ttrain_nll\twall_seconds\n")

    prev = negative_log_likelihood(params, train, config.l2)
    for epoch in range(1, config.epochs + 1):
        order = np.random.default_rng(config.seed + epoch).permutation(K)
        for b_idx, lo in enumerate(range(0, K, batch)):
            rows = order[lo:lo + batch]
            grad = gradient(params, train.subset(rows), config.l2 * len(rows) / K,
                            threads=config.threads, deterministic=config.deterministic)
            params = _step(params, grad, config.learning_rate / len(rows))
            if not _finite(params):
                raise TrainingError(
                    f"non-finite parameters at epoch {epoch}, batch {b_idx}; "
                    f"lower the learning rate (now {config.learning_rate})"
                )
        loss = negative_log_likelihood(params, train, config.l2)
        if not np.isfinite(loss):
            raise TrainingError(f"non-finite loss at epoch {epoch}, batch {b_idx}")
        if log_file is not None:
            log_file.write(f"{epoch}\t{loss:.10g}\t{time.perf_counter() - start:.3f}\n")
        log.debug("epoch %d nll %.6f", epoch, loss)
        if config.early_stop and abs(prev - loss) < config.tol * abs(prev):
            break
        prev = loss

    return Predictor(params, train.users, train.items, float(np.mean(train.q)))


def reindex(pred: Predictor, data: Dataset) -> Dataset:
    """``data`` with indices mapped into ``pred``'s vocabularies (``-1`` = unseen)."""
    u_map = np.array([pred.user_index(x) for x in data.users], dtype=np.int64)
    i_map = np.array([pred.item_index(x) for x in data.items], dtype=np.int64)
    return Dataset(pred.users, pred.items,
                   u_map[data.u] if len(data.u) else data.u,
                   i_map[data.i] if len(data.i) else data.i,
                   data.q, data.ts)
