import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bvheat.builtins import cycle, flat_torus, path, random_field, sinusoid, step
from bvheat.geometry import DiscreteManifold, codifferential, l1_norm, site_norm, vertex_inner
from bvheat.heat import build_heat_operator
from bvheat.oracles import dual_bruteforce, dual_linprog, graph_catalog
from bvheat.variation import (bv_norm, coupled_schedule, default_schedule, density_profile,
                              measure_pair_apply, mollified_approximants, pointwise_variation_1d,
                              polar_decompose, richardson, schedule_down_to, variation_dual,
                              variation_gradient_l1, variation_heatflow)


def test_constant_has_zero_variation():
    for M in (cycle(10), flat_torus(4)):
        f = np.full(M.n_vertices, 1 + 2j)
        assert variation_gradient_l1(M, f).value == 0
        assert variation_dual(M, f).value == 0
        c = variation_heatflow(M, build_heat_operator(M), f)
        assert np.all(np.abs(c.values) < 1e-12)


def test_two_vertex_variation(two_vertex):
    f = np.array([1.0, 0.0])
    assert variation_gradient_l1(two_vertex, f).value == 1.0
    assert variation_dual(two_vertex, f).value == pytest.approx(1.0, abs=1e-12)


def test_arc_indicator_on_cycle():
    M = cycle(128)
    assert variation_gradient_l1(M, step(M)).value == pytest.approx(2.0, abs=1e-14)


def test_dual_matches_lp_on_path5():
    M = path(5)
    f = np.random.default_rng(0).standard_normal(5)
    v = variation_dual(M, f).value
    assert v == pytest.approx(dual_linprog(M, f), abs=1e-6)
    assert v == pytest.approx(dual_bruteforce(M, f), abs=1e-6)


def test_dual_matches_oracles_on_catalog():
    rng = np.random.default_rng(3)
    for name, M in graph_catalog():
        f = rng.standard_normal(M.n_vertices)
        assert variation_dual(M, f).value == pytest.approx(dual_bruteforce(M, f), abs=1e-6), name


def test_dual_maximizer_is_feasible_and_attains():
    M = flat_torus(8)
    f = random_field(M, 4)
    r = variation_dual(M, f)
    a = r.diagnostics["maximizer"]
    assert site_norm(M, a).max() <= 1 + 1e-12
    assert abs(vertex_inner(M, f, codifferential(M, a))) == pytest.approx(r.value, rel=1e-12)
    assert r.diagnostics["converged"]


@given(st.floats(0, 2 * np.pi))
@settings(max_examples=25, deadline=None)
def test_phase_invariance(theta):
    M = cycle(16)
    f = random_field(M, 5)
    a = variation_gradient_l1(M, f).value
    assert variation_gradient_l1(M, np.exp(1j * theta) * f).value == pytest.approx(a, rel=1e-12)
    assert variation_dual(M, np.exp(1j * theta) * f).value == pytest.approx(a, rel=1e-8)


def test_imaginary_unit_times_real():
    M = path(12)
    g = random_field(M, 6, real=True)
    assert variation_dual(M, 1j * g).value == pytest.approx(variation_dual(M, g).value, rel=1e-12)


def test_two_vertex_heatflow(two_vertex):
    Hop = build_heat_operator(two_vertex)
    ts = np.array([1.0, 0.5, 0.1, 0.01])
    c = variation_heatflow(two_vertex, Hop, np.array([1.0, 0.0]), ts)
    np.testing.assert_allclose(c.values, np.exp(-ts), atol=1e-12)
    lim = variation_heatflow(two_vertex, Hop, np.array([1.0, 0.0])).limit
    assert lim == pytest.approx(1.0, abs=1e-6)


def test_stepper_chain_matches_spectral():
    M = cycle(48)
    f = step(M)
    ts = default_schedule(M, 6)
    a = variation_heatflow(M, build_heat_operator(M), f, ts).values
    b = variation_heatflow(M, build_heat_operator(M, "implicit_stepper", steps=512), f, ts).values
    np.testing.assert_allclose(a, b, rtol=1e-4)


def test_parallel_curve_is_identical():
    M = cycle(40)
    Hop = build_heat_operator(M)
    f = random_field(M, 1)
    a = variation_heatflow(M, Hop, f, workers=1).values
    b = variation_heatflow(M, Hop, f, workers=3).values
    assert np.array_equal(a, b)


def test_schedules():
    M = cycle(8)
    ts = default_schedule(M)
    assert len(ts) == 12 and ts[0] == pytest.approx(M.diameter ** 2 / 16)
    down = schedule_down_to(1 / 64, 1 / 512 ** 2)
    assert down[-1] >= 1 / 512 ** 2 * (1 - 1e-12) and down[-1] / 2 < 1 / 512 ** 2
    np.testing.assert_allclose(coupled_schedule(0.1, 2.0, 3), [0.2, 0.1, 0.05])
    assert richardson([2.0, 1.0], [3.0, 2.0]) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        variation_heatflow(M, build_heat_operator(M), step(M), [0.1, 0.2])


def test_heatflow_below_variation_on_cycle():
    # heat flow on a cycle never increases the variation
    M = cycle(64)
    for f in (step(M), sinusoid(M), random_field(M, 2)):
        c = variation_heatflow(M, build_heat_operator(M), f)
        assert np.all(c.values <= variation_gradient_l1(M, f).value + 1e-12)


def test_mollified_approximants_converge():
    M = flat_torus(8)
    Hop = build_heat_operator(M)
    f = random_field(M, 7)
    rows = mollified_approximants(Hop, f, [1e-2, 1e-4, 1e-6, 1e-8])
    var = variation_gradient_l1(M, f).value
    dists = [r[1] for r in rows]
    gaps = [abs(r[2] - var) for r in rows]
    assert dists == sorted(dists, reverse=True) and dists[-1] < 1e-5
    assert gaps == sorted(gaps, reverse=True) and gaps[-1] < 1e-4


def test_lower_semicontinuity_oscillating_sequence():
    # f_n = f + sin(2 pi n x)/n on a cycle: f_n -> f in L1, Var(f) <= liminf Var(f_n)
    M = cycle(256)
    x = M.positions[:, 0]
    f = step(M)
    var = variation_gradient_l1(M, f).value
    vals = [variation_gradient_l1(M, f + np.sin(2 * np.pi * n * x) / n).value for n in (4, 8, 16, 32)]
    assert var <= min(vals) + 1e-9


def test_polar_decomposition():
    M = flat_torus(8)
    f = random_field(M, 8)
    nu = polar_decompose(M, f)
    assert nu.total_mass == pytest.approx(variation_gradient_l1(M, f).value, rel=1e-14)
    np.testing.assert_allclose(site_norm(M, nu.sigma)[nu.support], 1.0, atol=1e-12)
    rng = np.random.default_rng(0)
    for _ in range(20):
        a = rng.standard_normal(M.site_shape) + 1j * rng.standard_normal(M.site_shape)
        assert abs(vertex_inner(M, f, codifferential(M, a)) - measure_pair_apply(nu, a)) < 1e-11
        assert abs(measure_pair_apply(nu, a)) <= nu.total_mass * site_norm(M, a).max() + 1e-12
    assert measure_pair_apply(nu, nu.sigma) == pytest.approx(nu.total_mass, rel=1e-12)
    assert measure_pair_apply(nu, np.zeros(M.site_shape)) == 0


def test_polar_two_vertex_and_constant(two_vertex):
    nu = polar_decompose(two_vertex, np.array([1.0, 0.0]))
    assert nu.mass.tolist() == [1.0]
    assert nu.sigma[0] == -1.0  # unit covector along 0 -> 1 is +1 since l = 1
    assert len(polar_decompose(cycle(5), np.ones(5)).support) == 0


def test_polar_to_finite_measure():
    M = cycle(16)
    f = random_field(M, 9)
    from bvheat.vecmeasure import total_variation
    assert total_variation(polar_decompose(M, f).to_finite_measure()) == pytest.approx(
        variation_gradient_l1(M, f).value, rel=1e-12)


def test_pointwise_variation_1d():
    assert pointwise_variation_1d([0, 1, 0]) == 2
    assert pointwise_variation_1d([0.5, 1, 2, 7]) == 6.5
    s = np.random.default_rng(1).standard_normal(20) + 0j
    M = DiscreteManifold.graph(np.ones(20), [(i, i + 1) for i in range(19)], np.ones(19))
    assert pointwise_variation_1d(s) == pytest.approx(variation_gradient_l1(M, s).value, abs=1e-12)
    with pytest.raises(ValueError):
        pointwise_variation_1d([1.0])


def test_bv_norm():
    M = cycle(10)
    assert bv_norm(M, np.full(10, -3.0)) == pytest.approx(3.0)
    f = random_field(M, 1)
    assert bv_norm(M, f) == pytest.approx(l1_norm(M, f) + variation_gradient_l1(M, f).value)


def test_density_profile():
    smooth, jump = [], []
    for n in (32, 64, 128, 256):
        M = cycle(n)
        smooth.append((M, sinusoid(M)))
        jump.append((M, step(M)))
    s = [r["max_density"] for r in density_profile(smooth)]
    j = [r["max_density"] for r in density_profile(jump)]
    assert max(s) <= 2 * np.pi + 1e-9 and s[-1] > 2 * np.pi - 0.01
    np.testing.assert_allclose(np.array(j[1:]) / np.array(j[:-1]), 2.0)
    with pytest.raises(ValueError):
        density_profile([])
