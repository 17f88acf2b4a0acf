"""Shared test oracles and fixtures builders."""

import numpy as np

from editoutcome.dataset import Dataset
from editoutcome.models import BasicParams, FullParams, GladParams, UserOnlyParams
from editoutcome.training import negative_log_likelihood


def random_instance(variant, rng, n_users=5, n_items=5, n_obs=40, dim=3):
    s = rng.normal(size=n_users)
    if variant == "user-only":
        params = UserOnlyParams(rng.normal(), s)
    elif variant == "basic":
        params = BasicParams(rng.normal(), s, rng.normal(size=n_items))
    elif variant == "full":
        params = FullParams(rng.normal(), s, rng.normal(size=n_items),
                            rng.normal(size=(n_users, dim)), rng.normal(size=(n_items, dim)))
    elif variant == "glad":
        params = GladParams(rng.normal(), s, rng.normal(scale=0.5, size=n_items))
    else:
        raise ValueError(variant)
    data = Dataset(
        tuple(f"u{k}" for k in range(n_users)), tuple(f"i{k}" for k in range(n_items)),
        rng.integers(0, n_users, n_obs), rng.integers(0, n_items, n_obs),
        rng.random(n_obs), np.arange(n_obs),
    )
    return params, data


def finite_difference(params, data, l2, h=1e-5):
    """Central differences of the regularized NLL, one coordinate at a time."""
    from dataclasses import fields, replace

    out = {}
    for f in fields(params):
        value = getattr(params, f.name)
        if np.ndim(value) == 0:
            plus = negative_log_likelihood(replace(params, **{f.name: value + h}), data, l2)
            minus = negative_log_likelihood(replace(params, **{f.name: value - h}), data, l2)
            out[f.name] = (plus - minus) / (2 * h)
            continue
        grad = np.zeros_like(value)
        for idx in np.ndindex(value.shape):
            bumped = value.copy()
            bumped[idx] += h
            plus = negative_log_likelihood(replace(params, **{f.name: bumped}), data, l2)
            bumped[idx] -= 2 * h
            minus = negative_log_likelihood(replace(params, **{f.name: bumped}), data, l2)
            grad[idx] = (plus - minus) / (2 * h)
        out[f.name] = grad
    return out


def max_relative_error(analytic, numeric, floor=1e-3):
    """``max |a - n| / max(|a|, |n|, floor)`` over every coordinate."""
    from dataclasses import fields

    worst = 0.0
    for f in fields(analytic):
        a = np.atleast_1d(np.asarray(getattr(analytic, f.name), float))
        n = np.atleast_1d(np.asarray(numeric[f.name], float))
        denom = np.maximum(np.maximum(np.abs(a), np.abs(n)), floor)
        worst = max(worst, float(np.max(np.abs(a - n) / denom)))
    return worst
