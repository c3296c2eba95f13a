"""Rating/trust file parsing and the typed user-item network built from them."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, TextIO

import numpy as np

from .errors import ParseError, ShapeError, ValidationError
from .sparse import SparseMatrix

DELIMITERS = {"tab": "\t", "comma": ",", "space": None}

RATING_MIN, RATING_MAX = 1.0, 5.0


def resolve_delimiter(name: str | None) -> str | None:
    """Map a delimiter name (or literal character) to a ``str.split`` argument."""
    if name is None:
        return "\t"
    if name in DELIMITERS:
        return DELIMITERS[name]
    if name in ("\t", ","):
        return name
    if name == " ":
        return None
    raise ValidationError(f"unsupported delimiter {name!r}; use tab, comma or space")


def iter_records(source: Iterable[str], sep, min_fields, name):
    for lineno, raw in enumerate(source, 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = [p.strip() for p in line.split(sep)] if sep is not None else line.split()
        if len(parts) < min_fields or any(p == "" for p in parts[:min_fields]):
            raise ParseError(
                f"expected at least {min_fields} fields, got {len(parts)}", line=lineno, source=name
            )
        yield lineno, parts


@dataclass(eq=False)
class RatingDataset:
    """Rating triples over dense id spaces, held as parallel arrays."""

    users: np.ndarray
    items: np.ndarray
    ratings: np.ndarray
    n_users: int
    n_items: int

    def __post_init__(self):
        self.users = np.asarray(self.users, dtype=np.int64)
        self.items = np.asarray(self.items, dtype=np.int64)
        self.ratings = np.asarray(self.ratings, dtype=np.float64)
        if not (self.users.shape == self.items.shape == self.ratings.shape):
            raise ShapeError("users/items/ratings arrays differ in length")

    def __len__(self):
        return int(self.ratings.size)

    def __iter__(self):
        return zip(self.users.tolist(), self.items.tolist(), self.ratings.tolist())

    @property
    def triples(self):
        return list(self)

    def subset(self, idx) -> "RatingDataset":
        idx = np.asarray(idx, dtype=np.int64)
        return RatingDataset(
            self.users[idx], self.items[idx], self.ratings[idx], self.n_users, self.n_items
        )

    def existence_matrix(self) -> SparseMatrix:
        """Binary user x item matrix of rated pairs."""
        return binarize(SparseMatrix.from_coo(
            self.users, self.items, np.ones(len(self)), (self.n_users, self.n_items)
        ))


@dataclass(eq=False)
class LabeledRatings:
    dataset: RatingDataset
    user_labels: list[str]
    item_labels: list[str]

    @property
    def user_index(self):
        return {lab: i for i, lab in enumerate(self.user_labels)}


def parse_ratings(source: Iterable[str] | TextIO, delimiter: str | None = "tab",
                  name: str | None = None) -> LabeledRatings:
    """Parse ``user<sep>item<sep>rating`` records.

    Ids are assigned in order of first appearance. A repeated (user, item)
    pair keeps the slot of its first occurrence and the rating of its last.
    Fields past the third are ignored.
    """
    sep = resolve_delimiter(delimiter)
    user_ids: dict[str, int] = {}
    item_ids: dict[str, int] = {}
    slot: dict[tuple[int, int], int] = {}
    users, items, ratings = [], [], []
    for lineno, parts in iter_records(source, sep, 3, name):
        try:
            r = float(parts[2])
        except ValueError:
            raise ParseError(f"rating {parts[2]!r} is not numeric", line=lineno, source=name) from None
        if not (RATING_MIN <= r <= RATING_MAX):
            raise ValidationError(
                f"{name + ':' if name else ''}{lineno}: rating {r} outside "
                f"[{RATING_MIN:g}, {RATING_MAX:g}]"
            )
        u = user_ids.setdefault(parts[0], len(user_ids))
        i = item_ids.setdefault(parts[1], len(item_ids))
        k = slot.get((u, i))
        if k is None:
            slot[(u, i)] = len(ratings)
            users.append(u)
            items.append(i)
            ratings.append(r)
        else:
            ratings[k] = r
    ds = RatingDataset(users, items, ratings, len(user_ids), len(item_ids))
    return LabeledRatings(ds, list(user_ids), list(item_ids))


@dataclass(eq=False)
class TrustEdges:
    matrix: SparseMatrix
    n_unknown: int = 0
    n_self_loops: int = 0

    @property
    def n_dropped(self):
        return self.n_unknown + self.n_self_loops


def parse_trust(source: Iterable[str] | TextIO, user_index: dict[str, int],
                delimiter: str | None = "tab", name: str | None = None) -> TrustEdges:
    """Parse ``truster<sep>trustee`` records into a binary directed matrix.

    Edges touching users outside ``user_index`` and self-loops are dropped
    and counted. Any third column (a trust weight) is ignored.
    """
    sep = resolve_delimiter(delimiter)
    n = len(user_index)
    rows, cols = [], []
    unknown = loops = 0
    for _, parts in iter_records(source, sep, 2, name):
        a, b = user_index.get(parts[0]), user_index.get(parts[1])
        if a is None or b is None:
            unknown += 1
            continue
        if a == b:
            loops += 1
            continue
        rows.append(a)
        cols.append(b)
    m = SparseMatrix.from_coo(rows, cols, np.ones(len(rows)), (n, n))
    return TrustEdges(binarize(m), unknown, loops)


def binarize(m: SparseMatrix) -> SparseMatrix:
    return SparseMatrix(m.n_rows, m.n_cols, m.row_offsets, m.col_indices, np.ones(m.nnz))


@dataclass(eq=False)
class HinGraph:
    """Users and items with trust (user->user) and rating-existence (user->item) relations."""

    w_uu: SparseMatrix
    w_ub: SparseMatrix
    ratings: RatingDataset
    user_labels: list[str] = field(default_factory=list)
    item_labels: list[str] = field(default_factory=list)
    # memo for derived user-user matrices (motif adjacency); trust never changes
    _cache: dict = field(default_factory=dict, repr=False)

    @property
    def n_users(self):
        return self.ratings.n_users

    @property
    def n_items(self):
        return self.ratings.n_items

    @property
    def user_index(self):
        return {lab: i for i, lab in enumerate(self.user_labels)}

    @property
    def item_index(self):
        return {lab: i for i, lab in enumerate(self.item_labels)}

    def with_ratings(self, ratings: RatingDataset) -> "HinGraph":
        """Same trust graph, rating relation rebuilt from ``ratings`` only."""
        g = build_hin(ratings, self.w_uu, self.user_labels, self.item_labels)
        g._cache = self._cache
        return g


def build_hin(ratings: RatingDataset, trust: SparseMatrix,
              user_labels=None, item_labels=None) -> HinGraph:
    n = ratings.n_users
    if trust.shape != (n, n):
        raise ShapeError(f"trust matrix {trust.shape} does not match {n} users")
    if trust.diagonal_nnz():
        raise ValidationError("trust matrix has self-loops")
    return HinGraph(
        binarize(trust),
        ratings.existence_matrix(),
        ratings,
        list(user_labels) if user_labels is not None else [str(i) for i in range(n)],
        list(item_labels) if item_labels is not None else [str(i) for i in range(ratings.n_items)],
    )


def load_hin(ratings_lines, trust_lines, delimiter="tab", names=(None, None)):
    """Parse both files and assemble the graph. Returns ``(graph, trust_edges)``."""
    lr = parse_ratings(ratings_lines, delimiter, name=names[0])
    te = parse_trust(trust_lines, lr.user_index, delimiter, name=names[1])
    return build_hin(lr.dataset, te.matrix, lr.user_labels, lr.item_labels), te
