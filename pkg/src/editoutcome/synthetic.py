"""Seeded generators of observations from known models."""

from __future__ import annotations

import numpy as np

from .dataset import Dataset
from .models import BasicParams, FullParams, Params, sigmoid, scores


def offset_for_rate(z_without_offset: np.ndarray, rate: float) -> float:
    """Offset ``b`` such that ``mean(sigmoid(z + b)) == rate`` (bisection)."""
    lo, hi = -50.0, 50.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if np.mean(sigmoid(z_without_offset + mid)) < rate:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def sample_pairs(rng: np.random.Generator, n_users: int, n_items: int, n_obs: int):
    return rng.integers(0, n_users, n_obs), rng.integers(0, n_items, n_obs)


def observations(params: Params, u: np.ndarray, i: np.ndarray,
                 rng: np.random.Generator) -> Dataset:
    """Bernoulli outcomes at the model's probabilities, timestamps = row order."""
    p = sigmoid(scores(params, u, i))
    q = (rng.random(len(u)) < p).astype(float)
    n_users = len(params.s)
    n_items = len(getattr(params, "d", getattr(params, "beta", [])))
    return Dataset(
        tuple(f"u{k}" for k in range(n_users)),
        tuple(f"i{k}" for k in range(n_items)),
        np.asarray(u, dtype=np.int64), np.asarray(i, dtype=np.int64),
        q, np.arange(len(u), dtype=np.int64),
    )


def basic_model(n_users=50, n_items=30, n_obs=20000, rate=0.72, seed=0):
    """Basic-variant ground truth with N(0, 1) skills and difficulties."""
    rng = np.random.default_rng(seed)
    s = rng.normal(size=n_users)
    d = rng.normal(size=n_items)
    u, i = sample_pairs(rng, n_users, n_items, n_obs)
    b = offset_for_rate(s[u] - d[i], rate)
    params = BasicParams(b, s, d)
    return params, observations(params, u, i, rng)


def bilinear_model(n_users=200, n_items=60, n_obs=40000, rank=2, strength=3.0,
                   rate=0.7, seed=0):
    """Flat skills and difficulties plus a strong rank-``rank`` interaction."""
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n_users, rank)) * np.sqrt(strength)
    Y = rng.normal(size=(n_items, rank)) * np.sqrt(strength)
    s = np.zeros(n_users)
    d = np.zeros(n_items)
    u, i = sample_pairs(rng, n_users, n_items, n_obs)
    b = offset_for_rate(np.einsum("kd,kd->k", X[u], Y[i]), rate)
    params = FullParams(b, s, d, X, Y)
    return params, observations(params, u, i, rng)
