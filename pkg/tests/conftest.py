import numpy as np
import pytest

from gtenn.graph import DynamicNetwork


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def two_cliques():
    """Cliques {0,1} and {2,3} with no cross edges, repeated over two snapshots."""
    edges = [(0, 1), (2, 3)]
    truth = [np.array([0, 0, 1, 1])] * 2
    return DynamicNetwork.from_edges(4, [edges, edges], truth)


def random_graph(rng, n, p):
    upper = np.triu(rng.random((n, n)) < p, k=1)
    return (upper | upper.T).astype(np.float64)
