"""Hot loops: continuous-time Markov chain paths with exact path integrals.

Each path draws its randomness from a counter-based stream keyed by
(seed, start vertex, sample index), so results do not depend on how samples
are scheduled. Set ``BVHEAT_DISABLE_NUMBA=1`` to force the vectorised numpy
path; both paths compute the same functionals from the same uniforms.
"""

from __future__ import annotations

import os

import numpy as np

_DISABLED = os.environ.get("BVHEAT_DISABLE_NUMBA", "").lower() in ("1", "true", "yes")

try:  # pragma: no cover - import guard
    if _DISABLED:
        raise ImportError
    # skip probing the (possibly outdated) TBB layer
    os.environ.setdefault("NUMBA_THREADING_LAYER", "omp")
    import numba as nb

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    nb = None
    HAVE_NUMBA = False

GOLDEN = np.uint64(0x9E3779B97F4A7C15)
M1 = np.uint64(0xBF58476D1CE4E5B9)
M2 = np.uint64(0x94D049BB133111EB)
S30 = np.uint64(30)
S27 = np.uint64(27)
S31 = np.uint64(31)
S11 = np.uint64(11)
S32 = np.uint64(32)
ONE = np.uint64(1)
INV53 = 1.0 / 9007199254740992.0  # 2**-53


def _mix_np(z):
    """splitmix64 finaliser on uint64 arrays (wrapping arithmetic)."""
    z = (z ^ (z >> S30)) * M1
    z = (z ^ (z >> S27)) * M2
    return z ^ (z >> S31)


def stream_keys_np(seed: int, start: int, samples: np.ndarray) -> np.ndarray:
    with np.errstate(over="ignore"):
        base = _mix_np(np.array([seed], dtype=np.uint64) + GOLDEN)
        stream = (np.uint64(start) << S32) + samples.astype(np.uint64)
        return _mix_np(base ^ _mix_np(stream + GOLDEN))


def uniforms_np(keys: np.ndarray, counters: np.ndarray) -> np.ndarray:
    """Uniforms in (0, 1) for (key, counter) pairs."""
    with np.errstate(over="ignore"):
        z = _mix_np(keys + (counters.astype(np.uint64) + ONE) * GOLDEN)
    return ((z >> S11).astype(np.float64) + 0.5) * INV53


# -- numpy path ------------------------------------------------------------------


def simulate_np(seed, start, n, times, gcum, indptr, indices, out_rate, total_rate,
                absorbing, potential):
    """Vectorised over samples. Returns (logw, state) of shape (n, K).

    ``state`` is -1 once the path is dead; ``logw`` then stays frozen at the
    integral accumulated up to the lifetime.
    """
    K = len(times)
    keys = stream_keys_np(seed, start, np.arange(n))
    logw_out = np.zeros((n, K))
    state_out = np.full((n, K), -1, dtype=np.int64)
    x = np.full(n, start, dtype=np.int64)
    t = np.zeros(n)
    logw = np.zeros(n)
    ctr = np.zeros(n, dtype=np.uint64)
    k = np.zeros(n, dtype=np.int64)
    alive = np.full(n, not absorbing[start])
    active = np.ones(n, dtype=bool)
    base = np.concatenate([[0.0], gcum])[indptr[:-1]]
    while np.any(active):
        idx = np.flatnonzero(active)
        xi = x[idx]
        lam = total_rate[xi]
        hold = np.full(len(idx), np.inf)
        moving = alive[idx] & (lam > 0)
        if np.any(moving):
            u = uniforms_np(keys[idx[moving]], ctr[idx[moving]])
            hold[moving] = -np.log(u) / lam[moving]
        ctr[idx] += np.uint64(2)
        t_next = t[idx] + hold
        while True:
            kk = k[idx]
            hit = kk < K
            hit[hit] &= times[kk[hit]] <= t_next[hit]
            if not np.any(hit):
                break
            j = idx[hit]
            dead = ~alive[j]
            with np.errstate(invalid="ignore"):
                running = logw[j] + potential[x[j]] * (times[k[j]] - t[j])
            logw_out[j, k[j]] = np.where(dead, logw[j], running)
            state_out[j, k[j]] = np.where(dead, -1, x[j])
            k[j] += 1
        finished = k[idx] >= K
        active[idx[finished]] = False
        go = idx[~finished]
        if len(go) == 0:
            break
        hold_go = hold[~finished]
        xg = x[go]
        logw[go] += potential[xg] * hold_go
        t[go] = t_next[~finished]
        u2 = uniforms_np(keys[go], ctr[go] - ONE)
        r = u2 * total_rate[xg]
        die = r >= out_rate[xg]
        alive[go[die]] = False
        jump = go[~die]
        if len(jump):
            xj = x[jump]
            target = base[xj] + r[~die]
            pos = np.searchsorted(gcum, target, side="right")
            pos = np.minimum(pos, indptr[xj + 1] - 1)
            x[jump] = indices[pos]
        # dead paths have t = inf from here on: every remaining time is recorded frozen
        t[go[die]] = np.inf
    return logw_out, state_out


# -- numba path ------------------------------------------------------------------

if HAVE_NUMBA:

    @nb.njit(inline="always")
    def _mix_nb(z):
        z = (z ^ (z >> S30)) * M1
        z = (z ^ (z >> S27)) * M2
        return z ^ (z >> S31)

    @nb.njit(inline="always")
    def _uniform_nb(key, counter):
        z = _mix_nb(key + (counter + ONE) * GOLDEN)
        return (np.float64(z >> S11) + 0.5) * INV53

    @nb.njit(parallel=True, cache=True)
    def _simulate_nb(keys, start, times, gcum, indptr, indices, out_rate, total_rate,
                     absorbing, potential, logw_out, state_out):
        n = keys.shape[0]
        K = times.shape[0]
        for i in nb.prange(n):
            key = keys[i]
            x = start
            t = 0.0
            logw = 0.0
            ctr = np.uint64(0)
            k = 0
            alive = not absorbing[start]
            while k < K:
                if not alive:
                    while k < K:
                        logw_out[i, k] = logw
                        state_out[i, k] = -1
                        k += 1
                    break
                lam = total_rate[x]
                hold = np.inf
                if lam > 0:
                    hold = -np.log(_uniform_nb(key, ctr)) / lam
                ctr += np.uint64(2)
                t_next = t + hold
                while k < K and times[k] <= t_next:
                    logw_out[i, k] = logw + potential[x] * (times[k] - t)
                    state_out[i, k] = x
                    k += 1
                if k >= K:
                    break
                logw += potential[x] * hold
                t = t_next
                r = _uniform_nb(key, ctr - ONE) * total_rate[x]
                if r >= out_rate[x]:
                    alive = False
                    continue
                b = gcum[indptr[x] - 1] if indptr[x] > 0 else 0.0
                target = b + r
                j = indptr[x]
                last = indptr[x + 1] - 1
                while j < last and gcum[j] <= target:
                    j += 1
                x = indices[j]


def simulate(seed, start, n, times, gcum, indptr, indices, out_rate, total_rate, absorbing,
             potential, use_numba: bool | None = None):
    """Dispatch to the numba kernel when available, else the numpy twin."""
    if use_numba is None:
        use_numba = HAVE_NUMBA
    times = np.ascontiguousarray(times, dtype=np.float64)
    if not use_numba or not HAVE_NUMBA:
        return simulate_np(seed, start, n, times, gcum, indptr, indices, out_rate, total_rate,
                           absorbing, potential)
    keys = stream_keys_np(seed, start, np.arange(n))
    logw = np.zeros((n, len(times)))
    state = np.full((n, len(times)), -1, dtype=np.int64)
    _simulate_nb(keys, np.int64(start), times, gcum, indptr, indices, out_rate, total_rate,
                 absorbing, potential, logw, state)
    return logw, state
