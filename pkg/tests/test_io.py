import json

import numpy as np
import pytest

from bvheat.builtins import cycle, flat_torus
from bvheat.io import (IngestError, load_manifold, manifold_from_dict, manifold_to_dict,
                       read_endomorphism_csv, read_field_csv, read_off, save_manifold,
                       write_endomorphism_csv, write_field_csv)

from conftest import random_graph


@pytest.mark.parametrize("M", [random_graph(7, seed=1), cycle(5), flat_torus(4)])
def test_manifold_round_trip(tmp_path, M):
    p = tmp_path / "m.json"
    save_manifold(M, p)
    N = load_manifold(p)
    assert N.mode == M.mode and N.n_vertices == M.n_vertices
    np.testing.assert_array_equal(N.vertex_volumes, M.vertex_volumes)
    np.testing.assert_array_equal(N.edge_lengths, M.edge_lengths)
    assert manifold_to_dict(N) == manifold_to_dict(M)


def test_off_mesh(tmp_path):
    p = tmp_path / "sq.off"
    p.write_text("OFF\n# unit square\n4 2 0\n0 0 0\n1 0 0\n1 1 0\n0 1 0\n3 0 1 2\n3 0 2 3\n")
    M = read_off(p)
    assert M.mode == "mesh" and M.n_vertices == 4
    assert M.vertex_volumes.sum() == pytest.approx(1.0)
    assert load_manifold(p).n_edges == 5


@pytest.mark.parametrize("text,field", [
    ("OFF\n4 1 0\n0 0 0\n1 0 0\n1 1 0\n0 1 0\n4 0 1 2 3\n", "faces"),
    ("PLY\n", "header"),
    ("OFF\n3 1 0\n0 0 0\n1 0 0\n", "faces"),
])
def test_bad_off(tmp_path, text, field):
    p = tmp_path / "bad.off"
    p.write_text(text)
    with pytest.raises(IngestError) as e:
        read_off(p)
    assert e.value.field == field


def test_bad_manifold_names_field():
    d = manifold_to_dict(cycle(4))
    d["edge_lengths"][1] = -1.0
    with pytest.raises(IngestError) as e:
        manifold_from_dict(d)
    assert e.value.field == "edge_lengths"
    d = manifold_to_dict(cycle(4))
    del d["edges"]
    with pytest.raises(IngestError) as e:
        manifold_from_dict(d)
    assert e.value.field == "edges"
    with pytest.raises(IngestError) as e:
        manifold_from_dict({**manifold_to_dict(cycle(4)), "schema_version": 99})
    assert e.value.field == "schema_version"


def test_load_errors(tmp_path):
    with pytest.raises(IngestError):
        load_manifold(tmp_path / "missing.json")
    p = tmp_path / "x.json"
    p.write_text("{not json")
    with pytest.raises(IngestError):
        load_manifold(p)
    p.write_text(json.dumps([1, 2]))
    with pytest.raises(IngestError):
        load_manifold(p)


def test_field_csv_round_trip(tmp_path):
    f = np.random.default_rng(0).standard_normal(6) + 1j * np.random.default_rng(1).standard_normal(6)
    p = tmp_path / "f.csv"
    write_field_csv(f, p)
    assert np.array_equal(read_field_csv(p), f)
    assert p.read_text().splitlines()[0] == "vertex_id,re,im"


def test_field_csv_errors(tmp_path):
    p = tmp_path / "f.csv"
    p.write_text("vertex_id,re,im\n0,1,0\n2,1,0\n")
    with pytest.raises(IngestError) as e:
        read_field_csv(p)
    assert e.value.field == "vertex_id"
    p.write_text("vertex_id,re\n0,abc\n")
    with pytest.raises(IngestError):
        read_field_csv(p)
    p.write_text("a,b\n1,2\n")
    with pytest.raises(IngestError):
        read_field_csv(p)
    p.write_text("vertex_id,re\n0,1.5\n1,2\n")
    np.testing.assert_array_equal(read_field_csv(p, 2), [1.5, 2.0])


def test_endomorphism_csv(tmp_path):
    rng = np.random.default_rng(2)
    p = tmp_path / "r.csv"
    R = rng.standard_normal((4, 2, 2))
    write_endomorphism_csv(R, p)
    assert np.array_equal(read_endomorphism_csv(p), R)
    C = R + 1j * rng.standard_normal((4, 2, 2))
    write_endomorphism_csv(C, p)
    assert np.array_equal(read_endomorphism_csv(p), C)
    p.write_text("0,1,2,3\n")
    with pytest.raises(IngestError):
        read_endomorphism_csv(p)
    p.write_text("")
    with pytest.raises(IngestError):
        read_endomorphism_csv(p)
