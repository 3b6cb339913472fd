import numpy as np
import pytest

from bvheat.geometry import DiscreteManifold


@pytest.fixture
def two_vertex():
    return DiscreteManifold.graph([1.0, 1.0], [[0, 1]], [1.0], [1.0])


def random_graph(n, p=0.5, seed=0):
    """Connected random graph: a spanning path plus random chords, random weights."""
    rng = np.random.default_rng(seed)
    edges = [(i, i + 1) for i in range(n - 1)]
    edges += [(i, j) for i in range(n) for j in range(i + 2, n) if rng.random() < p]
    E = len(edges)
    return DiscreteManifold.graph(rng.uniform(0.5, 2, n), edges, rng.uniform(0.5, 2, E),
                                  rng.uniform(0.5, 2, E))


@pytest.fixture
def rand_graph():
    return random_graph(10, seed=3)
