import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bvheat.builtins import cycle, flat_torus, path, step
from bvheat.geometry import (DiscreteManifold, GeometryError, codifferential, exterior_derivative,
                             rescale_metric, site_inner, site_norm, vertex_inner)
from bvheat.oracles import p1_gradients
from bvheat.variation import variation_gradient_l1

from conftest import random_graph


def test_d_of_constant_vanishes():
    for M in (cycle(8), flat_torus(4)):
        assert np.all(exterior_derivative(M, np.full(M.n_vertices, 2.5 - 1j)) == 0)


def test_two_vertex_difference(two_vertex):
    assert exterior_derivative(two_vertex, np.array([1.0, 0.0]))[0] == -1.0


def test_unit_square_linear_gradient():
    pos = np.array([[0, 0], [1, 0], [1, 1], [0, 1]], dtype=float)
    M = DiscreteManifold.mesh([[0, 1, 2], [0, 2, 3]], positions=pos)
    df = exterior_derivative(M, pos[:, 0])
    assert np.allclose(df, [[1, 0], [1, 0]], atol=1e-15)
    np.testing.assert_allclose(df, p1_gradients(M, pos[:, 0]), atol=1e-15)


def test_mesh_gradient_matches_p1_oracle():
    M = flat_torus(6)
    f = np.random.default_rng(0).standard_normal(M.n_vertices)
    np.testing.assert_allclose(exterior_derivative(M, f), p1_gradients(M, f), atol=1e-12)


def test_codifferential_two_vertex(two_vertex):
    # edge stored 0 -> 1; the sign is fixed by that orientation
    np.testing.assert_allclose(codifferential(two_vertex, np.array([1.0])), [-1.0, 1.0])
    assert np.all(codifferential(two_vertex, np.zeros(1)) == 0)


def test_adjointness(rand_graph):
    rng = np.random.default_rng(1)
    M = rand_graph
    f = rng.standard_normal(M.n_vertices) + 1j * rng.standard_normal(M.n_vertices)
    a = rng.standard_normal(M.n_edges) + 1j * rng.standard_normal(M.n_edges)
    lhs = site_inner(M, exterior_derivative(M, f), a)
    rhs = vertex_inner(M, f, codifferential(M, a))
    assert abs(lhs - rhs) <= 1e-12


def test_adjointness_mesh():
    rng = np.random.default_rng(2)
    M = flat_torus(5)
    f = rng.standard_normal(M.n_vertices)
    a = rng.standard_normal(M.site_shape)
    assert abs(site_inner(M, exterior_derivative(M, f), a) - vertex_inner(M, f, codifferential(M, a))) < 1e-12


def test_site_norm_step_on_cycle():
    M = cycle(32)
    nrm = site_norm(M, exterior_derivative(M, step(M)))
    assert np.count_nonzero(nrm) == 2
    np.testing.assert_allclose(nrm[nrm > 0], 32.0)


@given(st.complex_numbers(max_magnitude=1e3, allow_nan=False, allow_infinity=False))
@settings(max_examples=30, deadline=None)
def test_site_norm_homogeneous(c):
    M = flat_torus(3)
    a = np.random.default_rng(0).standard_normal(M.site_shape)
    np.testing.assert_allclose(site_norm(M, c * a), abs(c) * site_norm(M, a), rtol=1e-12, atol=1e-12)


def test_rescale_identity():
    M = flat_torus(4)
    M2 = rescale_metric(M, 0.0)
    np.testing.assert_array_equal(M2.vertex_volumes, M.vertex_volumes)
    np.testing.assert_array_equal(M2.tri_coords, M.tri_coords)


@pytest.mark.parametrize("c", [0.5, 2.0, 3.7])
def test_rescale_scaling_law(c):
    rng = np.random.default_rng(5)
    for M in (cycle(20), path(9), flat_torus(5)):
        f = rng.standard_normal(M.n_vertices)
        base = variation_gradient_l1(M, f).value
        v = variation_gradient_l1(rescale_metric(M, np.log(c)), f).value
        assert v == pytest.approx(c ** (M.dimension - 1) * base, rel=1e-12)


def test_rescale_bounded_psi_ratio():
    # e^{2 psi} in [C1, C2] with m = 2: each site scales by e^{mean psi} in [sqrt C1, sqrt C2]
    M = flat_torus(6)
    rng = np.random.default_rng(6)
    psi = rng.uniform(-0.5, 0.4, M.n_vertices)
    f = rng.standard_normal(M.n_vertices)
    r = variation_gradient_l1(rescale_metric(M, psi), f).value / variation_gradient_l1(M, f).value
    assert np.exp(psi.min()) - 1e-12 <= r <= np.exp(psi.max()) + 1e-12


def test_builtin_sizes():
    C = cycle(4)
    assert (C.n_vertices, C.n_edges) == (4, 4)
    np.testing.assert_allclose(C.edge_lengths, 0.25)
    np.testing.assert_allclose(C.vertex_volumes, 0.25)
    T = flat_torus(16, 16)
    assert len(T.triangles) == 512
    assert T.total_volume == pytest.approx(1.0, abs=1e-12)
    np.testing.assert_allclose(T.site_volumes, 1 / 512)


def test_validation_errors():
    with pytest.raises(GeometryError):
        DiscreteManifold.graph([1, 1, 1], [[0, 1]], [1.0])  # disconnected
    with pytest.raises(GeometryError):
        DiscreteManifold.graph([1, 1], [[0, 1], [1, 0]], [1.0, 1.0])  # duplicate
    with pytest.raises(GeometryError):
        DiscreteManifold.graph([1, -1], [[0, 1]], [1.0])
    with pytest.raises(GeometryError):
        DiscreteManifold.mesh([[0, 1, 2]], positions=np.array([[0, 0], [1, 1], [2, 2.0]]))
    with pytest.raises(GeometryError):
        cycle(8).check_field(np.zeros(7))


def test_manifold_arrays_are_frozen():
    M = random_graph(5)
    with pytest.raises(ValueError):
        M.vertex_volumes[0] = 3.0
