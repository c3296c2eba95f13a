"""Meta-path commuting matrices, optionally with motif-blended same-type steps."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .ingest import HinGraph
from .motif import MotifId, motif_adjacency
from .sparse import SparseMatrix, add_scaled, spmm, transpose

USER, ITEM = "User", "Item"

_TYPE_ALIASES = {
    "u": USER, "user": USER,
    "b": ITEM, "i": ITEM, "item": ITEM, "business": ITEM,
}


def _type_name(s: str) -> str:
    try:
        return _TYPE_ALIASES[s.strip().lower()]
    except KeyError:
        raise ValidationError(f"unknown node type {s!r}") from None


@dataclass(frozen=True)
class MetaPath:
    node_types: tuple[str, ...]

    def __post_init__(self):
        types = tuple(_type_name(t) for t in self.node_types)
        object.__setattr__(self, "node_types", types)
        if len(types) < 2:
            raise ValidationError("a meta-path needs at least two node types")
        if types[0] != USER or types[-1] != ITEM:
            raise ValidationError(f"meta-path must run from User to Item, got {self}")

    @classmethod
    def parse(cls, s: str) -> "MetaPath":
        return cls(tuple(t for t in s.replace("-", ",").split(",") if t.strip()))

    @property
    def steps(self):
        return list(zip(self.node_types[:-1], self.node_types[1:]))

    def same_type_steps(self):
        return [k for k, (a, b) in enumerate(self.steps) if a == b]

    def __str__(self):
        return ",".join("U" if t == USER else "B" for t in self.node_types)


P1 = MetaPath((USER, ITEM))
P2 = MetaPath((USER, USER, ITEM))


@dataclass(frozen=True)
class MempConfig:
    meta_path: MetaPath
    motif: MotifId | None = None
    alpha: float = 0.0

    def __post_init__(self):
        if self.motif is not None:
            object.__setattr__(self, "motif", MotifId.parse(self.motif))
            if not self.meta_path.same_type_steps():
                raise ValidationError(
                    f"motif {self.motif} configured on meta-path {self.meta_path} "
                    "which has no same-type step"
                )
        if not (0.0 <= self.alpha <= 1.0):
            raise ValidationError(f"alpha {self.alpha} outside [0, 1]")

    @property
    def uses_alpha(self):
        return self.motif is not None

    def with_alpha(self, alpha) -> "MempConfig":
        return MempConfig(self.meta_path, self.motif, float(alpha) if self.uses_alpha else 0.0)

    def with_motif(self, motif) -> "MempConfig":
        if not self.meta_path.same_type_steps():
            return self
        return MempConfig(self.meta_path, motif, self.alpha)

    def label(self):
        if self.motif is None:
            return str(self.meta_path)
        return f"{self.meta_path}|{self.motif}|{self.alpha:g}"


@dataclass(eq=False)
class SimilarityMatrix:
    matrix: SparseMatrix
    config: MempConfig


def blend(w_edge: SparseMatrix, w_motif: SparseMatrix, alpha: float) -> SparseMatrix:
    """``(1 - alpha) * w_edge + alpha * w_motif``."""
    if not (0.0 <= alpha <= 1.0):
        raise ValidationError(f"alpha {alpha} outside [0, 1]")
    if w_edge.n_rows != w_edge.n_cols:
        raise ValidationError("blend expects square matrices")
    return add_scaled(w_edge, 1.0 - alpha, w_motif, alpha)


def cached_motif_adjacency(graph: HinGraph, motif: MotifId) -> SparseMatrix:
    key = ("motif", motif)
    if key not in graph._cache:
        graph._cache[key] = motif_adjacency(graph.w_uu, motif)
    return graph._cache[key]


def step_matrix(graph: HinGraph, src: str, dst: str) -> SparseMatrix:
    if (src, dst) == (USER, USER):
        return graph.w_uu
    if (src, dst) == (USER, ITEM):
        return graph.w_ub
    if (src, dst) == (ITEM, USER):
        return transpose(graph.w_ub)
    raise ValidationError(f"no relation between {src} and {dst} in this schema")


def truncate_rows(m: SparseMatrix, k: int) -> SparseMatrix:
    """Keep the ``k`` largest entries of each row (ties go to the lower column)."""
    if k is None or k <= 0:
        return m
    rows, cols, vals = [], [], []
    for i in range(m.n_rows):
        c, v = m.row(i)
        if c.size > k:
            keep = np.sort(np.lexsort((c, -v))[:k])
            c, v = c[keep], v[keep]
        rows.append(np.full(c.size, i))
        cols.append(c)
        vals.append(v)
    if not rows:
        return m
    return SparseMatrix.from_coo(np.concatenate(rows), np.concatenate(cols),
                                 np.concatenate(vals), m.shape)


def commuting_matrix(graph: HinGraph, config: MempConfig,
                     max_nnz_per_row: int | None = None) -> SimilarityMatrix:
    """Left-to-right product of the step matrices along ``config.meta_path``.

    When a motif is configured every User-User step is replaced by the blend
    of the trust matrix with its motif adjacency.
    """
    result = None
    for src, dst in config.meta_path.steps:
        w = step_matrix(graph, src, dst)
        if config.motif is not None and src == dst:
            w = blend(w, cached_motif_adjacency(graph, config.motif), config.alpha)
        result = w if result is None else spmm(result, w)
    if max_nnz_per_row:
        result = truncate_rows(result, max_nnz_per_row)
    return SimilarityMatrix(result, config)


def path_count_bruteforce(graph: HinGraph, meta_path: MetaPath, u: int, b: int) -> int:
    """Count concrete node sequences following ``meta_path`` from user ``u`` to item ``b``."""
    succ = {}

    def neighbours(src, dst, node):
        key = (src, dst)
        if key not in succ:
            m = step_matrix(graph, src, dst)
            succ[key] = [m.row(i)[0].tolist() for i in range(m.n_rows)]
        return succ[key][node]

    steps = meta_path.steps

    def walk(node, depth):
        if depth == len(steps):
            return 1 if node == b else 0
        src, dst = steps[depth]
        return sum(walk(nxt, depth + 1) for nxt in neighbours(src, dst, node))

    return walk(u, 0)
