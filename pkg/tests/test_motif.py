import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mohinrec.errors import ShapeError, ValidationError
from mohinrec.motif import (
    MOTIF_EDGES,
    TRIAD_TABLE,
    MotifId,
    motif_adjacency,
    motif_adjacency_bruteforce,
    split_edges,
)
from mohinrec.sparse import SparseMatrix, add_scaled, entry, hadamard, transpose

from conftest import digraph, random_digraph

S = SparseMatrix.from_dense


def test_seven_motifs_in_order():
    assert [m.name for m in MotifId] == [f"M{k}" for k in range(1, 8)]
    assert MotifId.parse("m3") is MotifId.M3
    assert MotifId.parse(5) is MotifId.M5
    with pytest.raises(ValidationError):
        MotifId.parse("M8")


def test_triad_table_covers_every_linked_triple_once():
    # 3 states per linked pair (->, <-, <->) gives 27 labelled triangles
    assert sum(t is not None for t in TRIAD_TABLE) == 27
    counts = {m: TRIAD_TABLE.count(m) for m in MotifId}
    # labelled copies per shape = 6 / |automorphisms|
    assert counts == {MotifId.M1: 2, MotifId.M2: 6, MotifId.M3: 6, MotifId.M4: 1,
                      MotifId.M5: 6, MotifId.M6: 3, MotifId.M7: 3}


class TestSplitEdges:
    def test_empty(self):
        s = split_edges(SparseMatrix.zeros(3, 3))
        assert s.bidir.nnz == 0 and s.unidir.nnz == 0

    def test_reciprocated(self):
        a = S([[0, 1], [1, 0]])
        s = split_edges(a)
        assert s.bidir == a and s.unidir.nnz == 0

    def test_one_way(self):
        a = S([[0, 1], [0, 0]])
        s = split_edges(a)
        assert s.bidir.nnz == 0 and s.unidir == a

    def test_rejects_self_loop(self):
        with pytest.raises(ValidationError):
            split_edges(S([[1, 0], [0, 0]]))

    def test_rejects_non_square(self):
        with pytest.raises(ShapeError):
            split_edges(S([[0, 1, 0]]))

    @given(st.integers(0, 10_000))
    @settings(max_examples=30)
    def test_invariants(self, seed):
        rng = np.random.default_rng(seed)
        a = random_digraph(rng, 12, 0.3)
        s = split_edges(a)
        assert s.bidir == hadamard(a, transpose(a))
        assert s.unidir == add_scaled(a, 1, s.bidir, -1)
        assert hadamard(s.bidir, s.unidir).nnz == 0
        assert transpose(s.bidir) == s.bidir


class TestWorkedExample:
    # Expected M6 counts for the five-node example, by hand: the triangles
    # (v1, v2, v3) and (v1, v3, v5) are the only "one node -> reciprocated
    # pair" triangles, so v1-v3 scores 2 and the four spoke pairs score 1.
    EXPECTED_M6 = np.array([
        [0, 1, 2, 0, 1],
        [1, 0, 1, 0, 0],
        [2, 1, 0, 0, 1],
        [0, 0, 0, 0, 0],
        [1, 0, 1, 0, 0],
    ], dtype=float)

    def test_pair_v1_v3(self, motif_example):
        w = motif_adjacency(motif_example, MotifId.M6)
        assert entry(w, 0, 2) == entry(w, 2, 0) == 2.0

    def test_full_matrix(self, motif_example):
        assert motif_adjacency(motif_example, MotifId.M6) == S(self.EXPECTED_M6)

    @pytest.mark.parametrize("m", list(MotifId))
    def test_formula_equals_enumeration(self, motif_example, m):
        assert motif_adjacency(motif_example, m) == motif_adjacency_bruteforce(motif_example, m)

    def test_other_triangles(self, motif_example):
        # v2->v3, v3->v4, v2->v4 is a feed-forward loop; v3->v4->v5->v3 a cycle
        ffl = motif_adjacency(motif_example, MotifId.M5)
        assert entry(ffl, 1, 3) == entry(ffl, 2, 3) == entry(ffl, 1, 2) == 1.0
        cyc = motif_adjacency(motif_example, MotifId.M1)
        assert entry(cyc, 2, 3) == entry(cyc, 3, 4) == entry(cyc, 2, 4) == 1.0


class TestSmallGraphs:
    @pytest.mark.parametrize("m", list(MotifId))
    def test_empty_graph(self, m):
        assert motif_adjacency(SparseMatrix.zeros(6, 6), m).nnz == 0

    def test_directed_cycle_is_m1(self):
        a = digraph([(0, 1), (1, 2), (2, 0)], 3)
        expected = np.ones((3, 3)) - np.eye(3)
        assert motif_adjacency_bruteforce(a, MotifId.M1) == S(expected)
        assert motif_adjacency(a, MotifId.M1) == S(expected)
        for m in set(MotifId) - {MotifId.M1}:
            assert motif_adjacency(a, m).nnz == 0

    def test_reciprocated_triangle_is_m4(self):
        a = S(np.ones((3, 3)) - np.eye(3))
        expected = np.ones((3, 3)) - np.eye(3)
        assert motif_adjacency_bruteforce(a, MotifId.M4) == S(expected)
        assert motif_adjacency(a, MotifId.M4) == S(expected)

    @pytest.mark.parametrize("m", list(MotifId))
    def test_single_edge(self, m):
        a = digraph([(0, 1)], 3)
        assert motif_adjacency_bruteforce(a, m).nnz == 0
        assert motif_adjacency(a, m).nnz == 0

    def test_open_wedge_needs_closing_edge(self):
        star = digraph([(0, 1), (0, 2)], 3)
        assert motif_adjacency(star, MotifId.M5).nnz == 0
        closed = digraph([(0, 1), (0, 2), (1, 2)], 3)
        assert motif_adjacency(closed, MotifId.M5) == S(np.ones((3, 3)) - np.eye(3))

    def test_extra_edge_changes_motif(self):
        # induced semantics: reciprocating one FFL edge turns it into another shape
        ffl = digraph([(0, 1), (0, 2), (1, 2)], 3)
        more = digraph([(0, 1), (0, 2), (1, 2), (2, 1)], 3)
        assert motif_adjacency(ffl, MotifId.M5).nnz == 6
        assert motif_adjacency(more, MotifId.M5).nnz == 0
        assert motif_adjacency(more, MotifId.M6).nnz == 6

    @pytest.mark.parametrize("m", list(MotifId))
    def test_each_shape_alone(self, m):
        a = digraph(sorted(MOTIF_EDGES[m]), 3)
        full = S(np.ones((3, 3)) - np.eye(3))
        for other in MotifId:
            got = motif_adjacency(a, other)
            assert got == (full if other is m else SparseMatrix.zeros(3, 3))

    def test_rejects_weighted_input(self):
        with pytest.raises(ValidationError):
            motif_adjacency(S([[0, 2], [0, 0]]), MotifId.M1)


@given(seed=st.integers(0, 2**32 - 1), n=st.integers(3, 25),
       p=st.sampled_from([0.05, 0.1, 0.2, 0.4]))
@settings(max_examples=60, deadline=None)
def test_formula_equals_enumeration_random(seed, n, p):
    a = random_digraph(np.random.default_rng(seed), n, p)
    for m in MotifId:
        assert motif_adjacency(a, m) == motif_adjacency_bruteforce(a, m)


@given(seed=st.integers(0, 2**32 - 1), n=st.integers(3, 20))
@settings(max_examples=30, deadline=None)
def test_symmetric_zero_diagonal(seed, n):
    a = random_digraph(np.random.default_rng(seed), n, 0.3)
    for m in MotifId:
        w = motif_adjacency(a, m)
        assert transpose(w) == w
        assert w.diagonal_nnz() == 0


@given(seed=st.integers(0, 2**32 - 1), n=st.integers(3, 15))
@settings(max_examples=30, deadline=None)
def test_permutation_equivariance(seed, n):
    rng = np.random.default_rng(seed)
    a = random_digraph(rng, n, 0.3)
    perm = rng.permutation(n)
    P = np.eye(n)[perm]
    pa = S(P @ a.to_dense() @ P.T)
    for m in MotifId:
        w = motif_adjacency(a, m).to_dense()
        assert motif_adjacency(pa, m) == S(P @ w @ P.T)


def test_bruteforce_counts_each_instance_once():
    # in a reciprocated 4-clique every triple is an M4 instance; each pair is
    # in two of them
    a = S(np.ones((4, 4)) - np.eye(4))
    w = motif_adjacency_bruteforce(a, MotifId.M4)
    for i, j in itertools.permutations(range(4), 2):
        assert entry(w, i, j) == 2.0
