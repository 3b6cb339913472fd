import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bvheat.oracles import total_variation_partitions
from bvheat.vecmeasure import (FiniteVectorMeasure, complex_to_real, pairing,
                               polar_decomposition_measure, real_to_complex, total_variation)

comp = st.floats(-5, 5, allow_nan=False)


@st.composite
def measures(draw, max_atoms=5, dim=2):
    n = draw(st.integers(1, max_atoms))
    atoms = {}
    for k in range(n):
        z = [complex(draw(comp), draw(comp)) for _ in range(dim)]
        atoms[k] = np.array(z)
    return FiniteVectorMeasure(atoms, dim)


def test_single_complex_atom():
    assert total_variation(FiniteVectorMeasure({0: [3 + 4j]}, 1)) == pytest.approx(5.0)


@given(measures())
@settings(max_examples=50, deadline=None)
def test_matches_partition_supremum(nu):
    assert total_variation(nu) == pytest.approx(total_variation_partitions(nu.atoms), rel=1e-12, abs=1e-12)


@given(measures())
@settings(max_examples=100, deadline=None)
def test_real_identification_is_isometric(nu):
    r = complex_to_real(nu)
    assert r.dim == 2 * nu.dim and not r.is_complex
    assert total_variation(r) == pytest.approx(total_variation(nu), rel=1e-14, abs=1e-14)
    back = real_to_complex(r)
    for k in nu.atoms:
        assert np.array_equal(back.atoms[k], nu.atoms[k])


@given(measures(), measures(), comp)
@settings(max_examples=100, deadline=None)
def test_norm_properties(a, b, c):
    assert total_variation(a + b) <= total_variation(a) + total_variation(b) + 1e-12
    assert total_variation(a.scale(c)) == pytest.approx(abs(c) * total_variation(a), abs=1e-12)
    assert total_variation(a.scale(0)) == 0


def test_polar_decomposition():
    nu = FiniteVectorMeasure({0: [3.0, 4.0], 1: [0.0, 0.0], 2: [0.0, -2.0]}, 2)
    mass, sigma = polar_decomposition_measure(nu)
    assert mass == {0: 5.0, 2: 2.0}
    for k in mass:
        np.testing.assert_allclose(mass[k] * sigma[k], nu.atoms[k])
        assert np.linalg.norm(sigma[k]) == pytest.approx(1.0)


@given(measures())
@settings(max_examples=50, deadline=None)
def test_json_round_trip(nu):
    back = FiniteVectorMeasure.from_json(nu.to_json())
    assert back.dim == nu.dim and back.atoms.keys() == nu.atoms.keys()
    for k in nu.atoms:
        assert np.array_equal(back.atoms[k], nu.atoms[k])


def test_real_json_round_trip():
    nu = FiniteVectorMeasure({4: [1.5, -2.0]}, 2)
    d = nu.to_dict()
    assert d["complex"] is False and d["atoms"] == {"4": [1.5, -2.0]}
    assert np.array_equal(FiniteVectorMeasure.from_dict(d).atoms[4], nu.atoms[4])


@given(measures())
@settings(max_examples=50, deadline=None)
def test_pairing_bound(nu):
    rng = np.random.default_rng(0)
    f = {k: rng.standard_normal(nu.dim) + 1j * rng.standard_normal(nu.dim) for k in nu.atoms}
    sup = max(np.linalg.norm(v) for v in f.values())
    assert abs(pairing(f, nu)) <= sup * total_variation(nu) + 1e-12
    _, sigma = polar_decomposition_measure(nu)
    assert pairing(sigma, nu).real == pytest.approx(total_variation(nu), abs=1e-10)


def test_validation():
    with pytest.raises(ValueError):
        FiniteVectorMeasure({0: [1.0, 2.0]}, 3)
    with pytest.raises(ValueError):
        FiniteVectorMeasure({}, 0)
    with pytest.raises(ValueError):
        FiniteVectorMeasure({0: [1.0]}, 1) + FiniteVectorMeasure({0: [1.0, 2.0]}, 2)
    with pytest.raises(ValueError):
        real_to_complex(FiniteVectorMeasure({0: [1.0]}, 1))
