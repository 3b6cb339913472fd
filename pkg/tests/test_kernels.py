import numpy as np
import pytest

from bvheat import _kernels
from bvheat.builtins import cycle, path
from bvheat.heat import build_heat_operator
from bvheat.stochastic import build_walk

needs_numba = pytest.mark.skipif(not _kernels.HAVE_NUMBA, reason="numba unavailable")


def arrays(M, killing=None):
    return build_walk(M, build_heat_operator(M), killing).kernel_arrays()


def test_uniforms_in_open_interval():
    keys = _kernels.stream_keys_np(0, 0, np.arange(1000))
    u = _kernels.uniforms_np(keys, np.zeros(1000, dtype=np.int64))
    assert u.min() > 0 and u.max() < 1
    assert abs(u.mean() - 0.5) < 0.05


def test_streams_differ_by_key():
    k = _kernels.stream_keys_np(1, 2, np.arange(50))
    assert len(np.unique(k)) == 50
    assert not np.array_equal(k, _kernels.stream_keys_np(1, 3, np.arange(50)))


@needs_numba
@pytest.mark.parametrize("M,killing", [(cycle(12), None), (path(6), {"cemetery": [0, 5]})])
def test_numba_matches_numpy(M, killing):
    v = np.linspace(0, 2, M.n_vertices)
    times = np.array([0.1, 0.5, 1.5])
    a = _kernels.simulate(3, 1, 2000, times, *arrays(M, killing), v, use_numba=True)
    b = _kernels.simulate(3, 1, 2000, times, *arrays(M, killing), v, use_numba=False)
    assert np.array_equal(a[1], b[1])
    np.testing.assert_allclose(a[0], b[0], rtol=1e-12, atol=1e-12)


def test_numpy_path_deterministic_and_prefix_stable():
    M = cycle(8)
    v = np.ones(8)
    times = np.array([0.5])
    a = _kernels.simulate(0, 0, 100, times, *arrays(M), v, use_numba=False)
    b = _kernels.simulate(0, 0, 300, times, *arrays(M), v, use_numba=False)
    # sample i depends only on (seed, start, i)
    assert np.array_equal(a[1], b[1][:100])
    np.testing.assert_allclose(a[0], 0.5)
