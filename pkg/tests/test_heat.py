import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bvheat.builtins import cycle, flat_torus, random_field
from bvheat.geometry import DiscreteManifold
from bvheat.heat import (HeatError, apply_semigroup, build_heat_operator, heat_kernel,
                         heat_kernel_bound_check, heat_kernel_diagonal)
from bvheat.oracles import dense_graph_generator, dense_mesh_generator

from conftest import random_graph


def test_two_vertex_spectrum(two_vertex):
    Hop = build_heat_operator(two_vertex)
    np.testing.assert_allclose(Hop.eigenvalues, [0.0, 1.0], atol=1e-15)


def test_two_vertex_closed_form(two_vertex):
    Hop = build_heat_operator(two_vertex)
    for t in (0.01, 0.3, 2.0):
        e = np.exp(-t)
        np.testing.assert_allclose(apply_semigroup(Hop, np.array([1.0, 0.0]), t),
                                   [(1 + e) / 2, (1 - e) / 2], atol=1e-15)
        assert heat_kernel(Hop, t, 0)[0] == pytest.approx((1 + e) / 2, abs=1e-15)


def test_generator_matches_edge_loop_oracle():
    for M in (random_graph(9, seed=1), cycle(12)):
        np.testing.assert_allclose(build_heat_operator(M).generator().toarray(),
                                   dense_graph_generator(M), atol=1e-13)
    M = flat_torus(5)
    np.testing.assert_allclose(build_heat_operator(M).generator().toarray(),
                               dense_mesh_generator(M), atol=1e-10)


@pytest.mark.parametrize("strategy", ["spectral", "implicit_stepper"])
def test_identity_at_zero_and_constants(strategy):
    M = flat_torus(6)
    Hop = build_heat_operator(M, strategy)
    f = random_field(M, 0)
    assert np.array_equal(Hop.apply(f, 0.0), f)
    np.testing.assert_allclose(Hop.apply(np.full(M.n_vertices, 3.0), 0.7), 3.0, atol=1e-12)


@pytest.mark.parametrize("strategy", ["spectral", "implicit_stepper"])
def test_mass_conservation(strategy):
    M = random_graph(12, seed=4)
    Hop = build_heat_operator(M, strategy)
    f = np.random.default_rng(0).standard_normal(M.n_vertices)
    u = Hop.apply(f, 0.4)
    assert np.dot(u, M.vertex_volumes) == pytest.approx(np.dot(f, M.vertex_volumes), abs=1e-12)


def test_strategies_agree_on_cycle():
    M = cycle(64)
    f = random_field(M, 2)
    a = build_heat_operator(M, "spectral").apply(f, 0.1)
    b = build_heat_operator(M, "implicit_stepper", steps=4096).apply(f, 0.1)
    assert np.abs(a - b).max() <= 1e-6


def test_euler_scheme_first_order():
    M = cycle(32)
    f = random_field(M, 3, real=True)
    exact = build_heat_operator(M).apply(f, 0.05)
    errs = [np.abs(build_heat_operator(M, "implicit_stepper", steps=n, scheme="euler").apply(f, 0.05)
                   - exact).max() for n in (64, 128)]
    assert 1.7 < errs[0] / errs[1] < 2.3


def test_kernel_symmetry_and_chapman_kolmogorov():
    M = random_graph(10, seed=7)
    Hop = build_heat_operator(M)
    P = np.array([heat_kernel(Hop, 0.3, x) for x in range(M.n_vertices)])
    np.testing.assert_allclose(P, P.T, atol=1e-12)
    Ps = np.array([heat_kernel(Hop, 0.2, x) for x in range(M.n_vertices)])
    Pst = np.array([heat_kernel(Hop, 0.5, x) for x in range(M.n_vertices)])
    np.testing.assert_allclose((Ps * M.vertex_volumes) @ P, Pst, atol=1e-10)


def test_stepper_kernel_row_matches_spectral():
    M = cycle(20)
    a = heat_kernel(build_heat_operator(M), 0.05, 3)
    b = heat_kernel(build_heat_operator(M, "implicit_stepper", steps=2048), 0.05, 3)
    assert np.abs(a - b).max() / a.max() < 1e-5


def test_single_vertex_kernel():
    M = DiscreteManifold.graph([0.25], np.zeros((0, 2)), [])
    Hop = build_heat_operator(M)
    for t in (0.1, 1.0, 10.0):
        assert heat_kernel_diagonal(Hop, t)[0] == pytest.approx(4.0)


def test_kernel_bound_report():
    M = flat_torus(16)
    Hop = build_heat_operator(M)
    h = M.mesh_size
    ts = np.geomspace(h ** 2 / 8, 0.5, 20)
    rep = heat_kernel_bound_check(Hop, ts, C=1.0)
    assert rep.within_bound
    assert np.any(rep.sub_mesh) and not np.all(rep.sub_mesh)
    # continuum value for H = -Laplace/2 in m = 2: p(t,x,x) t = 1/(2 pi)
    mid = np.argmin(np.abs(np.log(ts / 0.01)))
    assert rep.scaled_sup[mid] == pytest.approx(1 / (2 * np.pi), rel=0.15)
    # sub-mesh times approach 1/vol_x
    d = heat_kernel_diagonal(Hop, 1e-9)
    np.testing.assert_allclose(d, 1 / M.vertex_volumes, rtol=1e-5)


@given(st.floats(0.01, 2.0), st.floats(0.01, 2.0))
@settings(max_examples=20, deadline=None)
def test_semigroup_law(s, t):
    M = cycle(16)
    Hop = build_heat_operator(M)
    f = random_field(M, 1)
    np.testing.assert_allclose(Hop.apply(Hop.apply(f, s), t), Hop.apply(f, s + t), atol=1e-12)


def test_errors():
    M = cycle(8)
    Hop = build_heat_operator(M)
    with pytest.raises(HeatError):
        Hop.apply(np.zeros(8), -1.0)
    with pytest.raises(HeatError):
        heat_kernel(Hop, 0.0, 0)
    with pytest.raises(HeatError):
        build_heat_operator(M, "spectral", max_spectral=4)
    assert build_heat_operator(M, max_spectral=4).strategy == "implicit_stepper"
