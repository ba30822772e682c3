"""Ratings ingestion and aggregation into the evidence matrix.

Convention: ``A[x, y]`` is the aggregated opinion of user ``x`` held by user
``y`` (row = ratee, column = rater). User ids on the wire are 1-based; every
array index in this package is 0-based.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, NamedTuple, Sequence

import numpy as np
from scipy.sparse.csgraph import connected_components

from .errors import ValidationError

NEUTRAL = 0.5
LOG_HEADER = ("rater", "ratee", "rating", "weight")


@dataclass(frozen=True)
class RatingEvent:
    rater: int
    ratee: int
    rating: int
    weight: float = 1.0
    timestamp: int | None = None

    def __post_init__(self):
        if self.rating not in (-1, 0, 1):
            raise ValidationError(f"rating must be -1, 0 or +1, got {self.rating!r}")
        if not self.weight > 0 or not np.isfinite(self.weight):
            raise ValidationError(f"weight must be a positive finite number, got {self.weight!r}")
        if self.rater == self.ratee:
            raise ValidationError(f"self-rating by user {self.rater} is not allowed")


@dataclass(frozen=True)
class TransactionLog:
    events: tuple[RatingEvent, ...]
    user_count: int

    def __post_init__(self):
        object.__setattr__(self, "events", tuple(self.events))
        for i, ev in enumerate(self.events):
            for uid in (ev.rater, ev.ratee):
                if not 1 <= uid <= self.user_count:
                    raise ValidationError(
                        f"event {i}: user id {uid} outside [1, {self.user_count}]"
                    )

    @classmethod
    def from_events(cls, events: Iterable[RatingEvent], user_count: int | None = None):
        events = tuple(events)
        if user_count is None:
            user_count = max((max(e.rater, e.ratee) for e in events), default=0)
        return cls(events, user_count)


@dataclass(frozen=True, eq=False)
class EvidenceMatrix:
    """Dense ``n x n`` aggregated-feedback matrix with a zero diagonal.

    Off-diagonal entries lie in ``[0, 1]``. The array is stored read-only;
    ``np.asarray(matrix)`` gives a view suitable for the solvers.
    """

    entries: np.ndarray
    n: int = field(init=False)

    def __post_init__(self):
        a = np.array(self.entries, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValidationError(f"evidence matrix must be square, got shape {a.shape}")
        n = a.shape[0]
        if n < 2:
            raise ValidationError("evidence matrix needs at least 2 users")
        if not np.all(np.isfinite(a)):
            raise ValidationError("evidence matrix has non-finite entries")
        if np.any(np.diag(a) != 0.0):
            raise ValidationError("evidence matrix diagonal must be zero")
        if a.min() < 0.0 or a.max() > 1.0:
            raise ValidationError("evidence matrix entries must lie in [0, 1]")
        a.setflags(write=False)
        object.__setattr__(self, "entries", a)
        object.__setattr__(self, "n", n)

    def __array__(self, dtype=None, copy=None):
        return self.entries if dtype is None else self.entries.astype(dtype)

    def __eq__(self, other):
        if not isinstance(other, EvidenceMatrix):
            return NotImplemented
        return np.array_equal(self.entries, other.entries)

    __hash__ = None

    def copy_entries(self) -> np.ndarray:
        return np.array(self.entries)

    # -- serialization -------------------------------------------------
    def to_csv(self) -> str:
        return "".join(",".join(repr(float(v)) for v in row) + "\n" for row in self.entries)

    def to_json(self) -> str:
        return json.dumps({"n": self.n, "entries": self.entries.tolist()})

    @classmethod
    def from_csv(cls, text: str) -> "EvidenceMatrix":
        rows = []
        for lineno, line in enumerate(text.splitlines(), 1):
            if not line.strip():
                continue
            try:
                rows.append([float(v) for v in line.split(",")])
            except ValueError as exc:
                raise ValidationError(f"line {lineno}: {exc}") from None
        if len({len(r) for r in rows}) > 1:
            raise ValidationError("ragged matrix CSV")
        return cls(np.array(rows))

    @classmethod
    def from_json(cls, text: str) -> "EvidenceMatrix":
        obj = json.loads(text)
        m = cls(np.array(obj["entries"], dtype=float))
        if "n" in obj and obj["n"] != m.n:
            raise ValidationError(f"declared n={obj['n']} but entries are {m.n}x{m.n}")
        return m

    def save(self, path) -> None:
        path = Path(path)
        path.write_text(self.to_json() if path.suffix == ".json" else self.to_csv())

    @classmethod
    def load(cls, path) -> "EvidenceMatrix":
        path = Path(path)
        text = path.read_text()
        return cls.from_json(text) if path.suffix == ".json" else cls.from_csv(text)


def aggregate(log: TransactionLog) -> EvidenceMatrix:
    """Criticality-weighted mean rating per (ratee, rater) pair, mapped to [0, 1].

    ``A[x, y] = 1/2 + 1/2 * sum(q w) / sum(w)`` over the events in which y rated
    x. Pairs that never interacted get the neutral value 1/2.
    """
    n = log.user_count
    if n < 2:
        raise ValidationError(f"need at least 2 users to aggregate, got n={n}")
    num = np.zeros((n, n))
    den = np.zeros((n, n))
    if log.events:
        ratee = np.array([e.ratee for e in log.events]) - 1
        rater = np.array([e.rater for e in log.events]) - 1
        w = np.array([e.weight for e in log.events], dtype=float)
        q = np.array([e.rating for e in log.events], dtype=float)
        np.add.at(num, (ratee, rater), q * w)
        np.add.at(den, (ratee, rater), w)
    a = np.full((n, n), NEUTRAL)
    seen = den > 0
    a[seen] = 0.5 + 0.5 * num[seen] / den[seen]
    np.fill_diagonal(a, 0.0)
    return EvidenceMatrix(a)


class IrreducibilityReport(NamedTuple):
    irreducible: bool
    components: list[list[int]]

    def __bool__(self):
        return self.irreducible


def check_irreducible(a) -> IrreducibilityReport:
    """Strong connectivity of the digraph with an edge x -> y wherever A[x, y] > 0.

    ``components`` lists the strongly connected components (0-based) when the
    matrix is reducible, and is empty otherwise.
    """
    a = np.asarray(a)
    ncomp, labels = connected_components(a > 0, directed=True, connection="strong")
    if ncomp == 1:
        return IrreducibilityReport(True, [])
    comps = [np.flatnonzero(labels == k).tolist() for k in range(ncomp)]
    comps.sort(key=len)
    return IrreducibilityReport(False, comps)


# -- ratings log wire format ----------------------------------------------

def parse_ratings_csv(text: str, user_count: int | None = None) -> TransactionLog:
    """Parse ``rater,ratee,rating,weight[,timestamp]`` records (header required)."""
    reader = csv.reader(io.StringIO(text))
    header = None
    events = []
    for lineno, row in enumerate(reader, 1):
        if not row or all(not c.strip() for c in row):
            continue
        cells = [c.strip() for c in row]
        if header is None:
            if tuple(c.lower() for c in cells[:4]) != LOG_HEADER:
                raise ValidationError(
                    f"line {lineno}: expected header 'rater,ratee,rating,weight[,timestamp]'"
                )
            header = cells
            continue
        if len(cells) not in (4, 5):
            raise ValidationError(f"line {lineno}: expected 4 or 5 fields, got {len(cells)}")
        try:
            rater, ratee, rating = int(cells[0]), int(cells[1]), int(cells[2])
            weight = float(cells[3])
            ts = int(cells[4]) if len(cells) == 5 and cells[4] else None
        except ValueError as exc:
            raise ValidationError(f"line {lineno}: {exc}") from None
        try:
            events.append(RatingEvent(rater, ratee, rating, weight, ts))
        except ValidationError as exc:
            raise ValidationError(f"line {lineno}: {exc}") from None
    if header is None:
        raise ValidationError("ratings log is empty (header line required)")
    try:
        return TransactionLog.from_events(events, user_count)
    except ValidationError as exc:
        raise ValidationError(f"ratings log: {exc}") from None


def read_ratings_csv(path, user_count: int | None = None) -> TransactionLog:
    return parse_ratings_csv(Path(path).read_text(), user_count)


def format_ratings_csv(events: Sequence[RatingEvent]) -> str:
    out = ["rater,ratee,rating,weight,timestamp"]
    for e in events:
        ts = "" if e.timestamp is None else str(e.timestamp)
        out.append(f"{e.rater},{e.ratee},{e.rating},{e.weight!r},{ts}")
    return "\n".join(out) + "\n"
