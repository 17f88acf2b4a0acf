"""Edit-outcome predictors.

Every variant maps a (user, item) pair to the probability that an edit
survives.  All variants except ``average`` are logistic in a score::

    basic      z = s_u - d_i + b
    full       z = s_u - d_i + x_u . y_i + b
    glad       z = s_u / exp(beta_i) + b
    user-only  z = s_u + b

Dense index ``-1`` stands for an entity that was never seen in training;
its parameters are replaced by the neutral element of the score term.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, fields, replace
from typing import Sequence

import numpy as np

VARIANTS = ("average", "user-only", "basic", "full", "glad")
FORMAT_VERSION = 1

UNSEEN = -1

# open-interval clamp for probabilities that round to 0 or 1
_P_MIN = np.nextafter(0.0, 1.0)
_P_MAX = np.nextafter(1.0, 0.0)


# --------------------------------------------------------------------------- #
# link function


def sigmoid(z):
    """Numerically stable logistic function (scalar or array)."""
    z = np.asarray(z, dtype=float)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    np.clip(out, _P_MIN, _P_MAX, out=out)
    return out if out.ndim else float(out)


def log_sigmoid(z):
    """``log(sigmoid(z))`` without overflow for large ``|z|``."""
    z = np.asarray(z, dtype=float)
    out = np.minimum(z, 0.0) - np.log1p(np.exp(-np.abs(z)))
    return out if out.ndim else float(out)


def logit(p: float) -> float:
    p = min(max(p, 1e-12), 1.0 - 1e-12)
    return float(np.log(p) - np.log1p(-p))


# --------------------------------------------------------------------------- #
# parameter sets


@dataclass(frozen=True)
class AverageParams:
    p: float

    def __post_init__(self):
        if not 0.0 <= self.p <= 1.0:
            raise ValueError(f"average probability must lie in [0, 1], got {self.p}")


@dataclass(frozen=True)
class UserOnlyParams:
    b: float
    s: np.ndarray


@dataclass(frozen=True)
class BasicParams:
    b: float
    s: np.ndarray
    d: np.ndarray


@dataclass(frozen=True)
class FullParams:
    b: float
    s: np.ndarray
    d: np.ndarray
    X: np.ndarray
    Y: np.ndarray

    def __post_init__(self):
        if self.X.ndim != 2 or self.Y.ndim != 2 or self.X.shape[1] != self.Y.shape[1]:
            raise ValueError("embeddings must be N x D and M x D with a shared D")
        if self.X.shape[1] < 1:
            raise ValueError("latent dimension must be >= 1")
        if len(self.X) != len(self.s) or len(self.Y) != len(self.d):
            raise ValueError("embedding row counts must match skills and difficulties")

    @property
    def dim(self) -> int:
        return self.X.shape[1]

    @property
    def base(self) -> BasicParams:
        return BasicParams(self.b, self.s, self.d)


@dataclass(frozen=True)
class GladParams:
    b: float
    s: np.ndarray
    beta: np.ndarray

    @property
    def d(self) -> np.ndarray:
        """Item difficulties, positive by construction."""
        return np.exp(self.beta)


Params = AverageParams | UserOnlyParams | BasicParams | FullParams | GladParams

_PARAM_TYPES = {
    "average": AverageParams,
    "user-only": UserOnlyParams,
    "basic": BasicParams,
    "full": FullParams,
    "glad": GladParams,
}


def variant_of(params: Params) -> str:
    for name, cls in _PARAM_TYPES.items():
        if isinstance(params, cls):
            return name
    raise TypeError(f"unknown parameter set {type(params).__name__}")


def array_fields(params: Params) -> list[str]:
    """Names of the array-valued (regularized) parameters."""
    return [f.name for f in fields(params) if f.name not in ("b", "p")]


def _check_index(idx, size: int, what: str):
    idx = np.asarray(idx)
    if np.any((idx < 0) | (idx >= size)):
        raise IndexError(f"{what} index out of range [0, {size})")
    return idx


def _gather(values: np.ndarray, idx: np.ndarray) -> np.ndarray:
    """Rows of ``values`` at ``idx``; rows for ``UNSEEN`` are zero."""
    seen = idx >= 0
    out = np.zeros((len(idx),) + values.shape[1:])
    out[seen] = values[idx[seen]]
    return out


def scores(params: Params, u, i) -> np.ndarray:
    """Logistic score ``z`` for index arrays ``u`` and ``i`` (``-1`` = unseen)."""
    u = np.atleast_1d(np.asarray(u, dtype=np.int64))
    i = np.atleast_1d(np.asarray(i, dtype=np.int64))
    if isinstance(params, AverageParams):
        return np.full(np.broadcast(u, i).shape, logit(params.p))
    s = _gather(params.s, u)
    if isinstance(params, UserOnlyParams):
        return s + params.b
    if isinstance(params, GladParams):
        # unseen item: beta = 0, i.e. unit difficulty
        return s * np.exp(-_gather(params.beta, i)) + params.b
    z = s - _gather(params.d, i) + params.b
    if isinstance(params, FullParams):
        z = z + np.einsum("kd,kd->k", _gather(params.X, u), _gather(params.Y, i))
    return z


# --------------------------------------------------------------------------- #
# scalar prediction ops


def predict_basic(params: BasicParams, u: int, i: int) -> float:
    _check_index(u, len(params.s), "user")
    _check_index(i, len(params.d), "item")
    return sigmoid(params.s[u] - params.d[i] + params.b)


def predict_full(params: FullParams, u: int, i: int) -> float:
    _check_index(u, len(params.s), "user")
    _check_index(i, len(params.d), "item")
    return sigmoid(params.s[u] - params.d[i] + params.X[u] @ params.Y[i] + params.b)


def predict_glad(params: GladParams, u: int, i: int) -> float:
    _check_index(u, len(params.s), "user")
    _check_index(i, len(params.beta), "item")
    return sigmoid(params.s[u] * np.exp(-params.beta[i]) + params.b)


def predict_user_only(b: float, s: np.ndarray, u: int) -> float:
    _check_index(u, len(s), "user")
    return sigmoid(s[u] + b)


def predict_average(p: float) -> float:
    return float(p)


# --------------------------------------------------------------------------- #
# predictor


@dataclass(frozen=True)
class Predictor:
    """A fitted variant plus the vocabularies that map raw ids to indices.

    ``fallback`` is the training-set mean outcome, returned when neither the
    user nor the item was seen in training.
    """

    params: Params
    users: tuple[str, ...]
    items: tuple[str, ...]
    fallback: float
    _user_index: dict = field(init=False, repr=False, compare=False)
    _item_index: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "users", tuple(self.users))
        object.__setattr__(self, "items", tuple(self.items))
        object.__setattr__(self, "_user_index", {u: k for k, u in enumerate(self.users)})
        object.__setattr__(self, "_item_index", {i: k for k, i in enumerate(self.items)})
        p = self.params
        if not isinstance(p, AverageParams):
            if len(p.s) != len(self.users):
                raise ValueError("user vocabulary does not match skill vector")
            n_items = len(getattr(p, "d", getattr(p, "beta", np.empty(len(self.items)))))
            if not isinstance(p, UserOnlyParams) and n_items != len(self.items):
                raise ValueError("item vocabulary does not match difficulty vector")

    @property
    def variant(self) -> str:
        return variant_of(self.params)

    def user_index(self, raw: str) -> int:
        return self._user_index.get(raw, UNSEEN)

    def item_index(self, raw: str) -> int:
        return self._item_index.get(raw, UNSEEN)

    def encode(self, raw_users: Sequence[str], raw_items: Sequence[str]):
        u = np.fromiter((self.user_index(x) for x in raw_users), dtype=np.int64, count=len(raw_users))
        i = np.fromiter((self.item_index(x) for x in raw_items), dtype=np.int64, count=len(raw_items))
        return u, i

    def _fixed(self, u: np.ndarray, i: np.ndarray) -> np.ndarray:
        """Mask of pairs answered by a constant rather than the score."""
        if isinstance(self.params, AverageParams):
            return np.ones(np.broadcast(u, i).shape, dtype=bool)
        return (u < 0) & (i < 0)

    def _constant(self) -> float:
        if isinstance(self.params, AverageParams):
            return self.params.p
        return self.fallback

    def proba(self, u, i) -> np.ndarray:
        """Acceptance probabilities for dense index arrays."""
        u = np.atleast_1d(np.asarray(u, dtype=np.int64))
        i = np.atleast_1d(np.asarray(i, dtype=np.int64))
        p = sigmoid(scores(self.params, u, i))
        p[self._fixed(u, i)] = self._constant()
        return p

    def log_proba(self, u, i) -> tuple[np.ndarray, np.ndarray]:
        """``(log p, log(1 - p))`` computed in the score domain."""
        u = np.atleast_1d(np.asarray(u, dtype=np.int64))
        i = np.atleast_1d(np.asarray(i, dtype=np.int64))
        z = scores(self.params, u, i)
        fixed = self._fixed(u, i)
        z[fixed] = logit(self._constant())
        return log_sigmoid(z), log_sigmoid(-z)

    def predict(self, raw_user: str, raw_item: str) -> float:
        u, i = self.user_index(raw_user), self.item_index(raw_item)
        return float(self.proba([u], [i])[0])


def predict(pred: Predictor, raw_user: str, raw_item: str) -> float:
    return pred.predict(raw_user, raw_item)


# --------------------------------------------------------------------------- #
# checkpoints


def _dims(params: Params, pred: Predictor) -> dict:
    dims = {"N": len(pred.users), "M": len(pred.items), "D": 0}
    if isinstance(params, FullParams):
        dims["D"] = params.dim
    return dims


def to_dict(pred: Predictor) -> dict:
    params = pred.params
    arrays = {}
    for f in fields(params):
        value = getattr(params, f.name)
        if isinstance(value, np.ndarray):
            arrays[f.name] = [float(x) for x in value.ravel()]
        else:
            arrays[f.name] = float(value)
    return {
        "format_version": FORMAT_VERSION,
        "variant": pred.variant,
        "dims": _dims(params, pred),
        "fallback": float(pred.fallback),
        "users": list(pred.users),
        "items": list(pred.items),
        "params": arrays,
    }


def from_dict(doc: dict) -> Predictor:
    version = doc.get("format_version")
    if version != FORMAT_VERSION:
        raise ValueError(
            f"unsupported checkpoint format_version {version!r} (this build reads {FORMAT_VERSION})"
        )
    variant = doc["variant"]
    if variant not in _PARAM_TYPES:
        raise ValueError(f"unknown variant {variant!r}")
    dims = doc["dims"]
    shapes = {"s": (dims["N"],), "d": (dims["M"],), "beta": (dims["M"],),
              "X": (dims["N"], dims["D"]), "Y": (dims["M"], dims["D"])}
    kwargs = {}
    for name, value in doc["params"].items():
        if isinstance(value, list):
            kwargs[name] = np.asarray(value, dtype=float).reshape(shapes[name])
        else:
            kwargs[name] = float(value)
    params = _PARAM_TYPES[variant](**kwargs)
    return Predictor(params, doc["users"], doc["items"], doc["fallback"])


def save_checkpoint(pred: Predictor, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(to_dict(pred), fh, ensure_ascii=False, indent=1)
        fh.write("\n")


def load_checkpoint(path) -> Predictor:
    with open(path, encoding="utf-8") as fh:
        return from_dict(json.load(fh))


def with_params(pred: Predictor, **changes) -> Predictor:
    return Predictor(replace(pred.params, **changes), pred.users, pred.items, pred.fallback)
