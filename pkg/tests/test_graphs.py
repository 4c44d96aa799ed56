import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cdspp.errors import DimensionMismatchError
from cdspp.graphs import (
    build_cross_similarity,
    build_graphs,
    build_laplacians,
    build_within_similarity,
)

label_lists = st.lists(st.integers(0, 3), min_size=1, max_size=10)


def test_within_small():
    np.testing.assert_array_equal(
        build_within_similarity([0, 0, 1]), [[1, 1, 0], [1, 1, 0], [0, 0, 1]]
    )


def test_within_all_equal_and_all_distinct():
    np.testing.assert_array_equal(build_within_similarity([2, 2, 2]), np.ones((3, 3)))
    np.testing.assert_array_equal(build_within_similarity([0, 1, 2, 3]), np.eye(4))


def test_within_range_check():
    with pytest.raises(ValueError):
        build_within_similarity([0, 3], n_classes=3)
    with pytest.raises(ValueError):
        build_within_similarity([])


@pytest.mark.parametrize(
    "src, tgt, expected",
    [
        ([0, 1], [0], [[1], [0]]),
        ([0, 0], [1, 2], [[0, 0], [0, 0]]),
        ([0, 1, 0], [0, 1], [[1, 0], [0, 1], [1, 0]]),
    ],
)
def test_cross(src, tgt, expected):
    np.testing.assert_array_equal(build_cross_similarity(src, tgt), expected)


def test_laplacian_source_hand_example():
    Ls, _ = build_laplacians(np.ones((2, 2)), np.ones((1, 1)), np.array([[1.0], [0.0]]))
    # Ds = diag(2, 2), Dcs = diag(1, 0): Ls = Ds - Ws + Dcs/2
    np.testing.assert_array_equal(Ls, [[1.5, -1.0], [-1.0, 1.0]])


def test_laplacian_target_hand_example():
    _, Lt = build_laplacians(np.ones((2, 2)), np.ones((1, 1)), np.array([[1.0], [0.0]]))
    np.testing.assert_array_equal(Lt, [[0.5]])


def test_laplacian_without_cross_edges_is_graph_laplacian():
    Ws = build_within_similarity([0, 1, 0, 1, 1])
    Wt = build_within_similarity([0, 1])
    Ls, Lt = build_laplacians(Ws, Wt, np.zeros((5, 2)))
    np.testing.assert_array_equal(Ls, np.diag(Ws.sum(1)) - Ws)
    np.testing.assert_array_equal(Lt, np.diag(Wt.sum(1)) - Wt)


def test_laplacian_dimension_mismatch():
    with pytest.raises(DimensionMismatchError):
        build_laplacians(np.ones((2, 2)), np.ones((3, 3)), np.ones((3, 2)))


@settings(max_examples=60, deadline=None)
@given(label_lists, label_lists)
def test_laplacian_properties(src, tgt):
    g = build_graphs(src, tgt)
    for W in (g.Ws, g.Wt):
        np.testing.assert_array_equal(W, W.T)
        np.testing.assert_array_equal(np.diag(W), 1.0)
    assert set(np.unique(g.Wc)) <= {0.0, 1.0}
    # row sums of Ls are half the cross-domain degree
    np.testing.assert_allclose(g.Ls.sum(axis=1), 0.5 * g.Wc.sum(axis=1), atol=1e-12)
    np.testing.assert_allclose(g.Lt.sum(axis=1), 0.5 * g.Wc.sum(axis=0), atol=1e-12)
    for L in (g.Ls, g.Lt):
        np.testing.assert_array_equal(L, L.T)
        assert np.linalg.eigvalsh(L).min() >= -1e-10


@settings(max_examples=40, deadline=None)
@given(label_lists, st.permutations(range(4)))
def test_within_relabel_invariance(labels, perm):
    relabelled = [perm[y] for y in labels]
    np.testing.assert_array_equal(
        build_within_similarity(labels), build_within_similarity(relabelled)
    )


@settings(max_examples=40, deadline=None)
@given(label_lists, label_lists, st.randoms(use_true_random=False))
def test_sample_permutation_conjugates(src, tgt, rnd):
    ps = list(range(len(src)))
    pt = list(range(len(tgt)))
    rnd.shuffle(ps)
    rnd.shuffle(pt)
    g = build_graphs(src, tgt)
    h = build_graphs([src[i] for i in ps], [tgt[j] for j in pt])
    np.testing.assert_array_equal(h.Ws, g.Ws[np.ix_(ps, ps)])
    np.testing.assert_array_equal(h.Wt, g.Wt[np.ix_(pt, pt)])
    np.testing.assert_array_equal(h.Wc, g.Wc[np.ix_(ps, pt)])
    np.testing.assert_array_equal(h.Ls, g.Ls[np.ix_(ps, ps)])
    np.testing.assert_array_equal(h.Lt, g.Lt[np.ix_(pt, pt)])
