import math

import numpy as np
import pytest

from bvheat.builtins import flat_torus, parametric_torus
from bvheat.geometry import exterior_derivative
from bvheat.heat import build_heat_operator
from bvheat.oracles import (dense_graph_generator, dense_mesh_generator, dual_bruteforce,
                            dual_linprog, edge_differences, graph_catalog, p1_gradients,
                            set_partitions, two_vertex_curve)


def test_bell_numbers():
    assert [sum(1 for _ in set_partitions(range(n))) for n in range(7)] == [1, 1, 2, 5, 15, 52, 203]


def test_catalog_is_connected_and_small():
    cat = graph_catalog()
    assert len(cat) == 13
    for name, M in cat:
        assert M.n_vertices <= 5
        adj = {i: set() for i in range(M.n_vertices)}
        for a, b in M.edges:
            adj[a].add(b)
            adj[b].add(a)
        seen, stack = {0}, [0]
        while stack:
            for y in adj[stack.pop()] - seen:
                seen.add(y)
                stack.append(y)
        assert len(seen) == M.n_vertices, name


@pytest.mark.parametrize("name,M", graph_catalog())
def test_two_dual_oracles_agree(name, M):
    f = np.random.default_rng(len(name)).standard_normal(M.n_vertices)
    assert dual_bruteforce(M, f) == pytest.approx(dual_linprog(M, f), rel=1e-9)


def test_two_vertex_curve_values():
    assert two_vertex_curve(0.0) == 1.0
    assert two_vertex_curve(math.log(2)) == pytest.approx(0.5)


def test_graph_generator_matches_library(rand_graph):
    np.testing.assert_allclose(dense_graph_generator(rand_graph),
                               build_heat_operator(rand_graph).generator().toarray(), atol=1e-12)
    f = np.arange(rand_graph.n_vertices, dtype=float)
    np.testing.assert_allclose(edge_differences(rand_graph, f), exterior_derivative(rand_graph, f))


@pytest.mark.parametrize("M", [flat_torus(5), parametric_torus(8)])
def test_cotan_matches_library(M):
    np.testing.assert_allclose(dense_mesh_generator(M),
                               build_heat_operator(M).generator().toarray(), atol=1e-10)


def test_p1_gradient_of_linear_field():
    M = flat_torus(4)
    # a linear function in local coordinates of one triangle has that gradient there
    g = p1_gradients(M, np.zeros(M.n_vertices))
    assert np.all(g == 0)
    tri, X = M.triangles[0], M.tri_coords[0]
    f = np.zeros(M.n_vertices)
    f[tri] = X @ np.array([2.0, -1.0])
    np.testing.assert_allclose(p1_gradients(M, f)[0], [2.0, -1.0], atol=1e-12)
