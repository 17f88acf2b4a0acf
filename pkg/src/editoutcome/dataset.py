"""Observation files, chronological splits, labels and frequency bins."""

from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

HEADER = ("user", "item", "q", "ts")
DEFAULT_EDGES = (0, 1, 10, 100, 1000, math.inf)


class DataFormatError(ValueError):
    """Malformed observation or revision input."""


@dataclass(frozen=True)
class Dataset:
    """Time-ordered observations with dense user and item indices.

    Vocabularies list raw ids in first-appearance order; ``u`` and ``i``
    index into them.  Splits share the vocabularies of their parent.
    """

    users: tuple[str, ...]
    items: tuple[str, ...]
    u: np.ndarray
    i: np.ndarray
    q: np.ndarray
    ts: np.ndarray

    def __len__(self) -> int:
        return len(self.q)

    @property
    def n_users(self) -> int:
        return len(self.users)

    @property
    def n_items(self) -> int:
        return len(self.items)

    def raw_users(self) -> list[str]:
        return [self.users[k] for k in self.u]

    def raw_items(self) -> list[str]:
        return [self.items[k] for k in self.i]

    def user_counts(self) -> np.ndarray:
        return np.bincount(self.u, minlength=self.n_users)

    def item_counts(self) -> np.ndarray:
        return np.bincount(self.i, minlength=self.n_items)

    def subset(self, rows) -> "Dataset":
        return Dataset(self.users, self.items, self.u[rows], self.i[rows], self.q[rows], self.ts[rows])


def from_records(records: Iterable[tuple[str, str, float, int]]) -> Dataset:
    """Build a dataset from raw ``(user, item, q, ts)`` tuples.

    Rows are stably sorted on ``(ts, user, item)``; indices are assigned in
    first-appearance order of the sorted rows.
    """
    rows = sorted(records, key=lambda r: (r[3], r[0], r[1]))
    users: dict[str, int] = {}
    items: dict[str, int] = {}
    u = np.empty(len(rows), dtype=np.int64)
    i = np.empty(len(rows), dtype=np.int64)
    for k, (user, item, _, _) in enumerate(rows):
        u[k] = users.setdefault(user, len(users))
        i[k] = items.setdefault(item, len(items))
    q = np.array([r[2] for r in rows], dtype=float)
    ts = np.array([r[3] for r in rows], dtype=np.int64)
    if len(q) and (q.min() < 0 or q.max() > 1):
        raise DataFormatError("outcome q must lie in [0, 1]")
    return Dataset(tuple(users), tuple(items), u, i, q, ts)


def read_observations(lines: Iterable[str], source: str = "<input>") -> Dataset:
    records = []
    seen_header = False
    for lineno, line in enumerate(lines, start=1):
        line = line.rstrip("\n").rstrip("\r")
        if not line.strip():
            continue
        cols = line.split("\t")
        if tuple(cols) == HEADER:
            if seen_header:
                raise DataFormatError(f"{source}:{lineno}: duplicate header")
            seen_header = True
            continue
        if not seen_header:
            raise DataFormatError(f"{source}:{lineno}: missing header user/item/q/ts")
        if len(cols) != 4:
            raise DataFormatError(f"{source}:{lineno}: expected 4 columns, got {len(cols)}")
        user, item, q_text, ts_text = cols
        try:
            q = float(q_text)
            ts = int(ts_text)
        except ValueError:
            raise DataFormatError(f"{source}:{lineno}: cannot parse q={q_text!r} ts={ts_text!r}") from None
        if not 0.0 <= q <= 1.0:
            raise DataFormatError(f"{source}:{lineno}: q={q_text} outside [0, 1]")
        records.append((user, item, q, ts))
    return from_records(records)


def load_observations(path) -> Dataset:
    with open(path, encoding="utf-8") as fh:
        return read_observations(fh, source=str(path))


def format_q(q: float) -> str:
    return f"{q:.10g}"


def write_observations(path, records: Iterable[tuple[str, str, float, int]]) -> int:
    n = 0
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\t".join(HEADER) + "\n")
        for user, item, q, ts in records:
            fh.write(f"{user}\t{item}\t{format_q(q)}\t{ts}\n")
            n += 1
    return n


def chronological_split(ds: Dataset, train_fraction: float) -> tuple[Dataset, Dataset]:
    """First ``floor(K * fraction)`` observations train, the rest validate."""
    if not 0.0 < train_fraction < 1.0:
        raise ValueError(f"train fraction must lie in (0, 1), got {train_fraction}")
    cut = math.floor(len(ds) * train_fraction)
    if cut == 0 or cut == len(ds):
        raise ValueError(f"split of {len(ds)} observations at {train_fraction} leaves one side empty")
    return ds.subset(slice(0, cut)), ds.subset(slice(cut, None))


def split_manifest(train: Dataset, validation: Dataset, train_fraction: float) -> dict:
    return {
        "train_fraction": train_fraction,
        "train_rows": len(train),
        "val_rows": len(validation),
        "boundary_ts": int(validation.ts[0]),
    }


def apply_manifest(ds: Dataset, manifest: dict) -> tuple[Dataset, Dataset]:
    cut = manifest["train_rows"]
    if cut + manifest["val_rows"] != len(ds):
        raise ValueError(
            f"split manifest covers {cut + manifest['val_rows']} rows, data has {len(ds)}"
        )
    return ds.subset(slice(0, cut)), ds.subset(slice(cut, None))


def write_manifest(path, manifest: dict) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=1)
        fh.write("\n")


def binarize(q) -> np.ndarray | bool:
    """True for a *good* outcome (``q >= 0.5``), False for *bad*."""
    return np.asarray(q) >= 0.5 if np.ndim(q) else bool(q >= 0.5)


def bin_label(lo: float, hi: float) -> str:
    def fmt(x):
        return "inf" if math.isinf(x) else str(int(x))

    return f"[{fmt(lo)},{fmt(hi)})"


def bin_labels(edges: Sequence[float] = DEFAULT_EDGES) -> list[str]:
    return [bin_label(lo, hi) for lo, hi in zip(edges[:-1], edges[1:])]


def bin_by_frequency(counts, edges: Sequence[float] = DEFAULT_EDGES) -> list[str]:
    """Label each count with its left-closed bin ``[edge_k, edge_k+1)``."""
    edges = list(edges)
    if edges[0] != 0 or any(b <= a for a, b in zip(edges, edges[1:])):
        raise ValueError("bin edges must start at 0 and increase strictly")
    if not math.isinf(edges[-1]):
        edges.append(math.inf)
    labels = bin_labels(edges)
    idx = np.searchsorted(np.asarray(edges[1:]), np.asarray(counts), side="right")
    return [labels[k] for k in np.atleast_1d(idx)]


def train_frequency(train: Dataset, raw_ids: Sequence[str], kind: str) -> np.ndarray:
    """Occurrences of each raw user (``kind='user'``) or item id in ``train``."""
    raw = train.raw_users() if kind == "user" else train.raw_items()
    counts = Counter(raw)
    return np.array([counts.get(x, 0) for x in raw_ids], dtype=np.int64)
