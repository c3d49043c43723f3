import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gtenn.errors import FormatError, ValidationError
from gtenn.graph import (
    DynamicNetwork,
    adjacency_array,
    build_adjacency,
    degree_vector,
    normalize_adjacency,
    read_network,
    read_partitions,
    write_network,
    write_partitions,
)

from conftest import random_graph


def power_iteration_radius(m, iters=2000, seed=0):
    """Largest |eigenvalue| of a symmetric matrix via power iteration on m @ m."""
    v = np.random.default_rng(seed).normal(size=len(m))
    sq = m @ m
    lam = 0.0
    for _ in range(iters):
        w = sq @ v
        norm = np.linalg.norm(w)
        if norm == 0:
            return 0.0
        lam, v = norm / np.linalg.norm(v), w / norm
    return float(np.sqrt(lam))


def test_adjacency_examples():
    net = DynamicNetwork.from_edges(3, [[], [(0, 1)], [(0, 1), (1, 2), (0, 2)]])
    np.testing.assert_array_equal(build_adjacency(net, 1).value, np.zeros((3, 3)))
    a = build_adjacency(net, 2).value
    expected = np.zeros((3, 3))
    expected[0, 1] = expected[1, 0] = 1
    np.testing.assert_array_equal(a, expected)
    np.testing.assert_array_equal(build_adjacency(net, 3).value, 1 - np.eye(3))


def test_adjacency_t_out_of_range():
    net = DynamicNetwork.from_edges(3, [[(0, 1)]])
    for t in (0, 2):
        with pytest.raises(ValidationError):
            build_adjacency(net, t)


def test_normalize_examples():
    np.testing.assert_array_equal(normalize_adjacency(np.zeros((1, 1))).value, [[1.0]])
    np.testing.assert_allclose(normalize_adjacency(np.array([[0, 1], [1, 0]])).value, 0.5)
    path = np.array([[0, 1, 0], [1, 0, 1], [0, 1, 0]])
    a_hat = normalize_adjacency(path).value
    assert a_hat[0, 1] == pytest.approx(1 / np.sqrt(6), abs=1e-15)
    assert a_hat[1, 1] == pytest.approx(1 / 3, abs=1e-15)


def test_isolated_node_keeps_unit_self_loop():
    a = np.zeros((3, 3))
    a[0, 1] = a[1, 0] = 1
    assert normalize_adjacency(a).value[2, 2] == 1.0


def test_degree_examples():
    np.testing.assert_array_equal(degree_vector(np.zeros((3, 3))), [0, 0, 0])
    star = np.zeros((4, 4))
    star[0, 1:] = star[1:, 0] = 1
    np.testing.assert_array_equal(degree_vector(star), [3, 1, 1, 1])
    np.testing.assert_array_equal(degree_vector(1 - np.eye(3)), [2, 2, 2])


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 50), st.floats(0.0, 1.0), st.integers(0, 2**32 - 1))
def test_normalized_adjacency_symmetric_and_bounded(n, p, seed):
    a = random_graph(np.random.default_rng(seed), n, p)
    a_hat = normalize_adjacency(a).value
    assert np.max(np.abs(a_hat - a_hat.T)) <= 1e-12
    assert power_iteration_radius(a_hat) <= 1 + 1e-9


def test_network_rejects_bad_edges():
    with pytest.raises(ValidationError):
        DynamicNetwork.from_edges(3, [[(0, 0)]])
    with pytest.raises(ValidationError):
        DynamicNetwork.from_edges(3, [[(0, 3)]])
    with pytest.raises(ValidationError):
        DynamicNetwork.from_edges(3, [[(0, 1)]], ground_truth=[np.array([0, 1])])


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 15), st.integers(1, 4), st.integers(0, 2**32 - 1))
def test_round_trip(tmp_path_factory, n, T, seed):
    rng = np.random.default_rng(seed)
    snaps = []
    for _ in range(T):
        a = random_graph(rng, n, 0.3)
        snaps.append([(int(i), int(j)) for i, j in zip(*np.nonzero(np.triu(a)))])
    truth = [rng.integers(0, 3, size=n) for _ in range(T)]
    net = DynamicNetwork.from_edges(n, snaps)
    d = tmp_path_factory.mktemp("rt")
    write_network(d / "net.txt", net)
    write_partitions(d / "truth.txt", truth)
    back = read_network(d / "net.txt")
    assert back.n == n and back.T == T
    for t in range(1, T + 1):
        np.testing.assert_array_equal(build_adjacency(back, t).value, adjacency_array(net, t))
    for a, b in zip(read_partitions(d / "truth.txt", n), truth):
        np.testing.assert_array_equal(a, b)


@pytest.mark.parametrize(
    "body, message",
    [
        ("n 3 t 1\nsnapshot 1\n0 1 0.5\n", "weighted"),
        ("n 3 t 1\nsnapshot 1\n0 0\n", "self-loop"),
        ("n 3 t 1\nsnapshot 1\n0 1\n1 0\n", "directed"),
        ("n 3 t 1\nsnapshot 1\n0 1\n0 1\n", "duplicate"),
        ("n 3 t 1\nsnapshot 1\n0 3\n", "range"),
        ("n 3 t 2\nsnapshot 1\n0 1\n", "declares 2 snapshots"),
        ("n 3 t 1\nsnapshot 2\n0 1\n", "snapshot"),
        ("n 3\nsnapshot 1\n", "header"),
        ("n 3 t 1\n0 1\n", "before the first"),
        ("n 3 t 1\nsnapshot 1\n0 x\n", "node id"),
    ],
)
def test_loader_rejections(tmp_path, body, message):
    f = tmp_path / "bad.txt"
    f.write_text(body)
    with pytest.raises(FormatError, match=message):
        read_network(f)


def test_loader_reports_line_number(tmp_path):
    f = tmp_path / "bad.txt"
    f.write_text("n 3 t 1\nsnapshot 1\n0 1\n2 2\n")
    with pytest.raises(FormatError, match=r"bad\.txt:4:"):
        read_network(f)


def test_loader_keeps_isolated_nodes_and_comments(tmp_path):
    f = tmp_path / "net.txt"
    f.write_text("# demo\nn 5 t 2\nsnapshot 1\n0 1\nsnapshot 2\n")
    net = read_network(f)
    assert net.n == 5 and net.T == 2 and len(net.edges(2)) == 0


@pytest.mark.parametrize(
    "body",
    [
        "snapshot 1\n0 0\n1 0\n1 1\n",
        "snapshot 1\n0 0\n2 1\n",
        "snapshot 1\n0 0\n1 1\nsnapshot 2\n0 0\n",
        "snapshot 1\n0 0\n0 1\n",
        "0 0\n",
    ],
)
def test_partition_loader_rejections(tmp_path, body):
    f = tmp_path / "p.txt"
    f.write_text(body)
    with pytest.raises(FormatError):
        read_partitions(f)


def test_permuted_network_relabels_edges_and_truth():
    net = DynamicNetwork.from_edges(3, [[(0, 1)]], [np.array([5, 6, 7])])
    perm = [2, 0, 1]
    p = net.permuted(perm)
    a, b = adjacency_array(net, 1), adjacency_array(p, 1)
    np.testing.assert_array_equal(b[np.ix_(perm, perm)], a)
    np.testing.assert_array_equal(p.truth(1)[perm], net.truth(1))
