import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rgi.data import erdos_renyi
from rgi.errors import InvalidEdge, ParseError, ShapeError
from rgi.graph import (PropagationConfig, ShiftKind, build_csr, propagate, read_edge_list,
                       shift_operator, spmm, write_edge_list)
from rgi.random import Rng

from conftest import brute_force_shift, dense_adjacency

KINDS = list(ShiftKind)


def rows(g):
    return {i: g.neighbors(i).tolist() for i in range(g.num_nodes)}


def test_build_single_edge():
    assert rows(build_csr([(0, 1)], 2)) == {0: [1], 1: [0]}


def test_build_drops_self_loops_and_duplicates():
    assert rows(build_csr([(0, 0), (0, 1), (1, 0)], 2)) == {0: [1], 1: [0]}


def test_build_out_of_range_names_pair():
    with pytest.raises(InvalidEdge, match=r"\(0, 3\)"):
        build_csr([(0, 3)], 3)


def test_build_negative_index():
    with pytest.raises(InvalidEdge):
        build_csr([(-1, 0)], 3)


def test_build_sorts_rows():
    g = build_csr([(2, 0), (1, 0), (3, 0)], 4)
    assert g.neighbors(0).tolist() == [1, 2, 3]
    assert g.num_edges == 3
    g.check()


edge_lists = st.integers(1, 10).flatmap(
    lambda n: st.tuples(st.just(n), st.lists(st.tuples(st.integers(0, n - 1), st.integers(0, n - 1)),
                                             max_size=40)))


@given(edge_lists)
def test_csr_invariants(case):
    n, edges = case
    g = build_csr(edges, n)
    g.check()
    np.testing.assert_array_equal(g.to_dense(), dense_adjacency(edges, n))


def test_graph_is_immutable(path3):
    with pytest.raises(ValueError):
        path3.col_indices[0] = 2


def test_sym_norm_path(path3):
    s = shift_operator(path3, ShiftKind.SYM_NORM_ADJACENCY).to_dense()
    r = 1 / np.sqrt(2)
    np.testing.assert_allclose(s, [[0, r, 0], [r, 0, r], [0, r, 0]], atol=1e-15)


def test_sym_norm_single_edge(edge01):
    np.testing.assert_array_equal(shift_operator(edge01, "sym_norm_adj").to_dense(), [[0, 1], [1, 0]])


def test_laplacian_single_edge(edge01):
    np.testing.assert_array_equal(shift_operator(edge01, "sym_norm_lap").to_dense(), [[1, -1], [-1, 1]])


def test_mean_adjacency_rows_sum_to_one():
    g = build_csr([(0, 1), (1, 2), (1, 3)], 5)  # node 4 isolated
    s = shift_operator(g, ShiftKind.MEAN_ADJACENCY).to_dense()
    np.testing.assert_allclose(s.sum(axis=1), [1, 1, 1, 1, 0])


def test_isolated_nodes():
    g = build_csr([(0, 1)], 3)
    assert np.all(shift_operator(g, "sym_norm_adj").to_dense()[2] == 0)
    np.testing.assert_array_equal(shift_operator(g, "sym_norm_lap").to_dense()[2], [0, 0, 1])


@pytest.mark.parametrize("kind", KINDS)
def test_shift_matches_brute_force(kind):
    for seed in range(10):
        g = erdos_renyi(8, 0.4, seed)
        ref = brute_force_shift(g.to_dense(), kind.value)
        np.testing.assert_allclose(shift_operator(g, kind).to_dense(), ref, atol=1e-15)


def test_laplacian_is_identity_minus_adjacency(random_graph):
    lap = shift_operator(random_graph, "sym_norm_lap").to_dense()
    adj = shift_operator(random_graph, "sym_norm_adj").to_dense()
    np.testing.assert_allclose(lap, np.eye(15) - adj, atol=0)


def test_mean_adjacency_transpose(random_graph):
    s = shift_operator(random_graph, ShiftKind.MEAN_ADJACENCY)
    np.testing.assert_allclose(s.T.to_dense(), s.to_dense().T, atol=0)
    np.testing.assert_allclose(s.T.T.to_dense(), s.to_dense(), atol=0)


def test_spmm_identity_for_edgeless_laplacian():
    g = build_csr([], 4)
    m = Rng(1).normal((4, 3))
    np.testing.assert_array_equal(spmm(shift_operator(g, "sym_norm_lap"), m), m)


def test_spmm_row_swap(edge01):
    np.testing.assert_array_equal(spmm(shift_operator(edge01, "sym_norm_adj"), np.eye(2)), [[0, 1], [1, 0]])


def test_spmm_neighbor_means(path3):
    out = spmm(shift_operator(path3, "mean_adj"), np.array([[1.0], [2.0], [3.0]]))
    np.testing.assert_array_equal(out, [[2.0], [2.0], [2.0]])


def test_spmm_shape_error(path3):
    with pytest.raises(ShapeError):
        spmm(shift_operator(path3), np.ones((4, 2)))


def test_propagate_k1_is_spmm(random_graph):
    s = shift_operator(random_graph)
    u = Rng(2).normal((15, 4))
    np.testing.assert_array_equal(propagate(u, PropagationConfig(steps=1), s), spmm(s, u))


def test_propagate_k2_single_edge(edge01):
    out = propagate(np.eye(2), PropagationConfig("sym_norm_adj", 2), shift_operator(edge01))
    np.testing.assert_array_equal(out, np.eye(2))


@pytest.mark.parametrize("kind", KINDS)
def test_propagate_k5_matches_matrix_power(kind):
    for seed in range(10):
        n = 3 + seed % 8
        g = erdos_renyi(n, 0.4, seed)
        u = Rng(seed).normal((n, 3))
        ref = np.linalg.matrix_power(brute_force_shift(g.to_dense(), kind.value), 5) @ u
        np.testing.assert_allclose(propagate(u, PropagationConfig(kind, 5), shift_operator(g, kind)),
                                   ref, atol=1e-12)


@pytest.mark.parametrize("kind", KINDS)
def test_propagate_composes(kind, random_graph):
    s = shift_operator(random_graph, kind)
    u = Rng(3).normal((15, 2))
    once = PropagationConfig(kind, 1)
    step = u
    for _ in range(3):
        step = propagate(step, once, s)
    np.testing.assert_array_equal(propagate(u, PropagationConfig(kind, 3), s), step)


@settings(max_examples=30)
@given(st.integers(0, 10_000), st.floats(-5, 5), st.floats(-5, 5), st.sampled_from(KINDS))
def test_propagate_linear(seed, a, b, kind):
    g = erdos_renyi(10, 0.3, seed)
    s = shift_operator(g, kind)
    rng = Rng(seed)
    u, w = rng.normal((10, 3)), rng.normal((10, 3))
    cfg = PropagationConfig(kind, 2)
    np.testing.assert_allclose(propagate(a * u + b * w, cfg, s),
                               a * propagate(u, cfg, s) + b * propagate(w, cfg, s), atol=1e-12)


@settings(max_examples=30)
@given(st.integers(0, 10_000))
def test_sym_norm_spectral_radius(seed):
    g = erdos_renyi(12, 0.3, seed)
    x = Rng(seed).normal((12, 1))
    x /= np.linalg.norm(x)
    assert np.linalg.norm(spmm(shift_operator(g, "sym_norm_adj"), x)) <= 1 + 1e-12


def test_propagation_config_rejects_zero_steps():
    with pytest.raises(ValueError):
        PropagationConfig(steps=0)


def test_shift_kind_aliases():
    assert ShiftKind.parse("MeanAdjacency") is ShiftKind.MEAN_ADJACENCY
    assert ShiftKind.parse("SymNormLaplacian") is ShiftKind.SYM_NORM_LAPLACIAN
    with pytest.raises(ValueError):
        ShiftKind.parse("random_walk")


def test_edge_file_round_trip(tmp_path, random_graph):
    path = tmp_path / "edges.txt"
    write_edge_list(path, random_graph)
    g = build_csr(read_edge_list(path), 15)
    np.testing.assert_array_equal(g.col_indices, random_graph.col_indices)
    np.testing.assert_array_equal(g.row_offsets, random_graph.row_offsets)


def test_edge_file_comments_and_errors(tmp_path):
    path = tmp_path / "e.txt"
    path.write_text("# header\n0 1\n\n1\t2\n")
    assert read_edge_list(path).tolist() == [[0, 1], [1, 2]]
    path.write_text("0 1\n1 x\n")
    with pytest.raises(ParseError, match=":2:"):
        read_edge_list(path)


def test_permute_relabels(random_graph):
    perm = Rng(5).permutation(15)
    a = random_graph.to_dense()
    np.testing.assert_array_equal(random_graph.permute(perm).to_dense(), a[np.ix_(perm, perm)])
