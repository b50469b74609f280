import itertools

import numpy as np
import pytest

from comdf.consensus import channel_matrix
from comdf.graph import DEFAULT_EDGES, DiGraph, check_idd, default_topology, is_strongly_connected, laplacian


def test_laplacian_examples():
    np.testing.assert_array_equal(laplacian(DiGraph(np.zeros((1, 1), dtype=int))), [[0]])
    pair = DiGraph.from_edges(2, [(1, 2), (2, 1)])
    np.testing.assert_array_equal(laplacian(pair), [[1, -1], [-1, 1]])
    cycle = DiGraph.from_edges(3, [(1, 2), (2, 3), (3, 1)])
    np.testing.assert_array_equal(laplacian(cycle), [[1, 0, -1], [-1, 1, 0], [0, -1, 1]])


def test_laplacian_rows_sum_to_zero(rng):
    for _ in range(50):
        S = (rng.random((6, 6)) < 0.4).astype(int)
        np.fill_diagonal(S, 0)
        L = laplacian(DiGraph(S))
        assert np.all(L.sum(axis=1) == 0)
        assert np.all(L[~np.eye(6, dtype=bool)] <= 0)


def test_digraph_validation():
    with pytest.raises(ValueError):
        DiGraph(np.array([[1, 0], [0, 0]]))
    with pytest.raises(ValueError):
        DiGraph.from_edges(2, [(1, 3)])
    with pytest.raises(ValueError):
        DiGraph.from_edges(2, [(1, 1)])
    g = DiGraph.from_edges(3, [(1, 2), (2, 3)])
    assert g.edges() == [(1, 2), (2, 3)]
    assert g == DiGraph.from_edges(3, [(2, 3), (1, 2)])


def test_strong_connectivity_examples():
    assert is_strongly_connected(DiGraph.from_edges(3, [(1, 2), (2, 3), (3, 1)]))
    assert not is_strongly_connected(DiGraph.from_edges(2, [(1, 2)]))
    assert is_strongly_connected(DiGraph(np.zeros((1, 1), dtype=int)))


def _warshall_oracle(S):
    n = S.shape[0]
    reach = (S.T > 0) | np.eye(n, dtype=bool)  # reach[i, j]: path i -> j
    for k in range(n):
        for i in range(n):
            for j in range(n):
                reach[i, j] = reach[i, j] or (reach[i, k] and reach[k, j])
    return bool(reach.all())


def test_default_topology():
    g = default_topology()
    assert g.n_nodes == 5 and sorted(g.edges()) == sorted(DEFAULT_EDGES)
    assert not g.is_undirected()
    assert g.undirected().is_undirected()
    assert is_strongly_connected(g)
    assert _warshall_oracle(g.adjacency)


def _path_oracle(S):
    # Brute force: BFS over explicit path extension from every source.
    n = S.shape[0]
    for src in range(n):
        seen = {src}
        frontier = [src]
        while frontier:
            u = frontier.pop()
            for v in range(n):
                if S[v, u] and v not in seen:
                    seen.add(v)
                    frontier.append(v)
        if len(seen) != n:
            return False
    return True


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_strong_connectivity_exhaustive(n):
    off = [(i, j) for i in range(n) for j in range(n) if i != j]
    for bits in itertools.product((0, 1), repeat=len(off)):
        S = np.zeros((n, n), dtype=int)
        for (i, j), b in zip(off, bits):
            S[i, j] = b
        assert is_strongly_connected(DiGraph(S)) == _path_oracle(S)


def test_check_idd_examples():
    assert not check_idd(np.eye(2))
    assert check_idd([[2, -1], [-1, 2]])
    assert not check_idd([[1, -1], [-1, 1]])  # no strict row
    with pytest.raises(ValueError):
        check_idd(np.ones((2, 3)))


def test_channel_matrix_decouples_per_channel():
    # L (x) I_r + B couples entries only within one channel, so for r >= 2 it
    # is reducible; each per-channel block is irreducibly dominant.
    g = DiGraph.from_edges(2, [(1, 2), (2, 1)])
    M = channel_matrix(g, [1, 1])
    expected = np.array([[1, 0, -1, 0], [0, 2, 0, -1], [-1, 0, 2, 0], [0, -1, 0, 1]], dtype=float)
    np.testing.assert_array_equal(M, expected)
    assert not check_idd(M)
    for c in range(2):
        assert check_idd(M[c::2, c::2])


def test_channel_blocks_idd_on_random_strong_graphs(rng):
    checked = 0
    while checked < 100:
        n = int(rng.integers(2, 7))
        S = (rng.random((n, n)) < 0.45).astype(int)
        np.fill_diagonal(S, 0)
        g = DiGraph(S)
        if not is_strongly_connected(g):
            continue
        r_list = rng.integers(1, 3, n)
        M = channel_matrix(g, r_list)
        r = int(r_list.sum())
        for c in range(r):
            assert check_idd(M[c::r, c::r])
        checked += 1
