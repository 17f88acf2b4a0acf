"""Implicit edit quality from article revision histories.

The quality of edit ``k`` seen from ``l`` revisions later is the share of
the edit's Levenshtein work that survives::

    q(k|l) = 1/2 + (dist(v[k-1], v[k+l]) - dist(v[k], v[k+l])) / (2 dist(v[k-1], v[k]))

and ``q(k)`` averages it over the next ``min(#later revisions, 10)``
revisions.  ``v[0]`` is the empty text, so an article's creation is edit 1.
"""

from __future__ import annotations

import json
import logging
from collections import defaultdict
from dataclasses import dataclass
from typing import Iterable, Iterator

from .dataset import DataFormatError

log = logging.getLogger(__name__)

HORIZON = 10


def levenshtein(a: str, b: str) -> int:
    """Character-level edit distance (insert, delete, substitute; unit costs).

    Bit-parallel formulation (Myers 1999, Hyyro 2001) with Python integers as
    arbitrary-width bit vectors, after stripping the common prefix and suffix.
    """
    if a == b:
        return 0
    start = 0
    n = min(len(a), len(b))
    while start < n and a[start] == b[start]:
        start += 1
    end_a, end_b = len(a), len(b)
    while end_a > start and end_b > start and a[end_a - 1] == b[end_b - 1]:
        end_a -= 1
        end_b -= 1
    a, b = a[start:end_a], b[start:end_b]
    if len(a) > len(b):
        a, b = b, a
    m = len(a)
    if m == 0:
        return len(b)

    peq: dict[str, int] = {}
    for pos, ch in enumerate(a):
        peq[ch] = peq.get(ch, 0) | (1 << pos)
    full = (1 << m) - 1
    top = 1 << (m - 1)
    pv, mv, dist = full, 0, m
    for ch in b:
        eq = peq.get(ch, 0)
        xv = eq | mv
        xh = ((((eq & pv) + pv) & full) ^ pv) | eq
        ph = mv | (~(xh | pv) & full)
        mh = pv & xh
        if ph & top:
            dist += 1
        elif mh & top:
            dist -= 1
        ph = ((ph << 1) | 1) & full
        mh = (mh << 1) & full
        pv = mh | (~(xv | ph) & full)
        mv = ph & xv
    return dist


@dataclass(frozen=True)
class Revision:
    rev_id: str
    user: str
    timestamp: int
    text: str


@dataclass(frozen=True)
class ArticleHistory:
    article_id: str
    revisions: tuple[Revision, ...]

    def __post_init__(self):
        object.__setattr__(self, "revisions", tuple(self.revisions))

    def __len__(self):
        return len(self.revisions)

    def text(self, k: int) -> str:
        """Text of revision ``k`` (1-based); ``k = 0`` is the empty article."""
        return "" if k == 0 else self.revisions[k - 1].text


class UndefinedQuality(ValueError):
    """The edit changed nothing, so its quality has no denominator."""


def _dist_cache(history: ArticleHistory):
    cache: dict[tuple[int, int], int] = {}

    def dist(j: int, k: int) -> int:
        key = (j, k) if j <= k else (k, j)
        if key not in cache:
            cache[key] = levenshtein(history.text(j), history.text(k))
        return cache[key]

    return dist


def edit_quality_at(history: ArticleHistory, k: int, l: int, _dist=None) -> float:
    """Quality of edit ``k`` judged against revision ``k + l``."""
    if k < 1 or l < 1 or k + l > len(history):
        raise IndexError(f"need 1 <= k, 1 <= l, k + l <= {len(history)}; got k={k}, l={l}")
    dist = _dist or _dist_cache(history)
    work = dist(k - 1, k)
    if work == 0:
        raise UndefinedQuality(f"edit {k} of {history.article_id!r} is a null edit")
    return 0.5 + (dist(k - 1, k + l) - dist(k, k + l)) / (2 * work)


def edit_quality(history: ArticleHistory, k: int, last: int | None = None,
                 _dist=None) -> float:
    """Mean of ``q(k|l)`` for ``l = 1 .. min(last - k, 10)``.

    ``last`` caps the revisions that may be looked at (default: all).
    """
    last = len(history) if last is None else last
    horizon = min(last - k, HORIZON)
    if horizon < 1:
        raise UndefinedQuality(f"edit {k} of {history.article_id!r} has no later revision")
    dist = _dist or _dist_cache(history)
    return sum(edit_quality_at(history, k, l, dist) for l in range(1, horizon + 1)) / horizon


def collapse_consecutive(history: ArticleHistory) -> ArticleHistory:
    """Keep only the last revision of each run by the same user."""
    revs = history.revisions
    kept = [r for r, nxt in zip(revs, revs[1:] + (None,)) if nxt is None or nxt.user != r.user]
    return ArticleHistory(history.article_id, kept)


@dataclass(frozen=True)
class Observation:
    user: str
    item: str
    q: float
    ts: int


def history_to_observations(history: ArticleHistory,
                            cutoff_ts: int | None = None) -> list[Observation]:
    """Score every edit of a collapsed history.

    With ``cutoff_ts``, edits at or before the cutoff only look at revisions
    at or before it.  Null edits and edits without a usable later revision
    are skipped.
    """
    n = len(history)
    if cutoff_ts is None:
        n_before = n
    else:
        n_before = sum(1 for r in history.revisions if r.timestamp <= cutoff_ts)
    dist = _dist_cache(history)
    out = []
    for k in range(1, n + 1):
        rev = history.revisions[k - 1]
        last = n_before if k <= n_before else n
        if last - k < 1 or dist(k - 1, k) == 0:
            continue
        q = edit_quality(history, k, last, dist)
        out.append(Observation(rev.user, history.article_id, q, rev.timestamp))
    return out


# --------------------------------------------------------------------------- #
# revision files


def read_revisions(lines: Iterable[str], source: str = "<input>") -> list[ArticleHistory]:
    """Parse JSON-lines revisions and group them into ordered histories.

    Articles keep their first-appearance order; revisions are sorted by
    ``(ts, rev_id)``.
    """
    grouped: dict[str, list[Revision]] = defaultdict(list)
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
            rev = Revision(str(obj["rev_id"]), str(obj["user"]), int(obj["ts"]), str(obj["text"]))
            article = str(obj["article"])
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise DataFormatError(f"{source}:{lineno}: bad revision record ({exc})") from None
        grouped[article].append(rev)
    histories = []
    for article, revs in grouped.items():
        revs.sort(key=lambda r: (r.timestamp, r.rev_id))
        histories.append(ArticleHistory(article, revs))
    return histories


def load_revisions(path) -> list[ArticleHistory]:
    with open(path, encoding="utf-8") as fh:
        return read_revisions(fh, source=str(path))


def iter_observations(histories: Iterable[ArticleHistory],
                      cutoff_ts: int | None = None) -> Iterator[tuple[str, list[Observation]]]:
    for history in histories:
        yield history.article_id, history_to_observations(collapse_consecutive(history), cutoff_ts)
