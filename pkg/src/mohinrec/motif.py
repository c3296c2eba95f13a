"""Motif-based adjacency for the seven connected directed 3-node triangle motifs.

Shapes, written over positions 0, 1, 2 (``a<->b`` is a reciprocated pair):

    M1  0->1, 1->2, 2->0            directed cycle
    M2  0<->1, 1->2, 2->0           cycle with one reciprocated edge
    M3  0<->1, 1<->2, 0->2          two reciprocated edges
    M4  0<->1, 1<->2, 0<->2         fully reciprocated
    M5  0->1, 0->2, 1->2            feed-forward loop
    M6  0->1, 0->2, 1<->2           one node pointing at a reciprocated pair
    M7  1->0, 2->0, 1<->2           reciprocated pair pointing at one node

Every induced subgraph on three nodes in which all three pairs are linked is
isomorphic to exactly one of these.
"""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass

from .errors import ShapeError, ValidationError
from .sparse import SparseMatrix, add_scaled, hadamard, spmm, transpose


class MotifId(enum.Enum):
    M1 = 1
    M2 = 2
    M3 = 3
    M4 = 4
    M5 = 5
    M6 = 6
    M7 = 7

    @classmethod
    def parse(cls, s) -> "MotifId":
        if isinstance(s, cls):
            return s
        key = str(s).strip().upper()
        if not key.startswith("M"):
            key = "M" + key
        try:
            return cls[key]
        except KeyError:
            raise ValidationError(f"unknown motif {s!r}; expected one of M1..M7") from None

    def __str__(self):
        return self.name


MOTIF_EDGES: dict[MotifId, frozenset[tuple[int, int]]] = {
    MotifId.M1: frozenset({(0, 1), (1, 2), (2, 0)}),
    MotifId.M2: frozenset({(0, 1), (1, 0), (1, 2), (2, 0)}),
    MotifId.M3: frozenset({(0, 1), (1, 0), (1, 2), (2, 1), (0, 2)}),
    MotifId.M4: frozenset({(0, 1), (1, 0), (1, 2), (2, 1), (0, 2), (2, 0)}),
    MotifId.M5: frozenset({(0, 1), (0, 2), (1, 2)}),
    MotifId.M6: frozenset({(0, 1), (0, 2), (1, 2), (2, 1)}),
    MotifId.M7: frozenset({(1, 0), (2, 0), (1, 2), (2, 1)}),
}


@dataclass(frozen=True, eq=False)
class EdgeSplit:
    bidir: SparseMatrix
    unidir: SparseMatrix


def _check_simple_digraph(a: SparseMatrix):
    if a.n_rows != a.n_cols:
        raise ShapeError(f"adjacency must be square, got {a.shape}")
    if a.diagonal_nnz():
        raise ValidationError("adjacency has self-loops")
    if not a.is_binary():
        raise ValidationError("adjacency must be binary")


def split_edges(a: SparseMatrix) -> EdgeSplit:
    _check_simple_digraph(a)
    b = hadamard(a, transpose(a))
    return EdgeSplit(b, add_scaled(a, 1.0, b, -1.0))


def _sum(*ms):
    out = ms[0]
    for m in ms[1:]:
        out = add_scaled(out, 1.0, m, 1.0)
    return out


def motif_adjacency(a: SparseMatrix, m: MotifId) -> SparseMatrix:
    """Symmetric matrix whose (i, j) entry counts instances of ``m`` containing i and j."""
    m = MotifId.parse(m)
    s = split_edges(a)
    B, U = s.bidir, s.unidir
    Ut = transpose(U)
    mul, had = spmm, hadamard
    if m is MotifId.M1:
        c = had(mul(U, U), Ut)
    elif m is MotifId.M2:
        c = _sum(had(mul(B, U), Ut), had(mul(U, B), Ut), had(mul(U, U), B))
    elif m is MotifId.M3:
        c = _sum(had(mul(B, B), U), had(mul(B, U), B), had(mul(U, B), B))
    elif m is MotifId.M4:
        return had(mul(B, B), B)
    elif m is MotifId.M5:
        c = _sum(had(mul(U, U), U), had(mul(U, Ut), U), had(mul(Ut, U), U))
    elif m is MotifId.M6:
        # (U^T U) o B is already symmetric; only the first term is mirrored
        c = had(mul(U, B), U)
        return _sum(c, transpose(c), had(mul(Ut, U), B))
    else:
        c = had(mul(Ut, B), Ut)
        return _sum(c, transpose(c), had(mul(U, Ut), B))
    return add_scaled(c, 1.0, transpose(c), 1.0)


_PAIRS = list(itertools.permutations(range(3), 2))


def _triad_code(out_sets, nodes):
    code = 0
    for bit, (p, q) in enumerate(_PAIRS):
        if nodes[q] in out_sets[nodes[p]]:
            code |= 1 << bit
    return code


def _build_triad_table():
    table = [None] * 64
    for code in range(64):
        edges = {_PAIRS[b] for b in range(6) if code >> b & 1}
        for motif, pattern in MOTIF_EDGES.items():
            for perm in itertools.permutations(range(3)):
                if {(perm[p], perm[q]) for p, q in pattern} == edges:
                    table[code] = motif
                    break
            if table[code] is not None:
                break
    return table


# induced-subgraph edge code on an ordered triple -> motif (or None)
TRIAD_TABLE = _build_triad_table()


def triad_motif_counts(a: SparseMatrix) -> dict[MotifId, SparseMatrix]:
    """Brute-force motif adjacency for all seven motifs in one pass over node triples."""
    _check_simple_digraph(a)
    n = a.n_rows
    out_sets = [set(a.row(i)[0].tolist()) for i in range(n)]
    acc = {m: {} for m in MotifId}
    for triple in itertools.combinations(range(n), 3):
        motif = TRIAD_TABLE[_triad_code(out_sets, triple)]
        if motif is None:
            continue
        i, j, k = triple
        d = acc[motif]
        for p, q in ((i, j), (i, k), (j, k)):
            d[(p, q)] = d.get((p, q), 0) + 1
            d[(q, p)] = d.get((q, p), 0) + 1
    result = {}
    for m, d in acc.items():
        keys = list(d)
        result[m] = SparseMatrix.from_coo(
            [p for p, _ in keys], [q for _, q in keys], [d[key] for key in keys], (n, n)
        )
    return result


def motif_adjacency_bruteforce(a: SparseMatrix, m: MotifId) -> SparseMatrix:
    """Direct enumeration of every node triple; for checking ``motif_adjacency``."""
    return triad_motif_counts(a)[MotifId.parse(m)]
