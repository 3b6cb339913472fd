"""Exact continuous-time walks for the heat generator, Feynman-Kac functionals,
Kato moduli and Kas'minskii certificates."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as la
import scipy.sparse as sp
from scipy.stats import norm

from . import _kernels
from .geometry import DiscreteManifold
from .heat import HeatOperator

SUP_ALL_STARTS = 200


class StochasticError(RuntimeError):
    pass


@dataclass(frozen=True, eq=False)
class WalkModel:
    """Markov chain with jump rates q(x -> y), kill rates and cemetery vertices.

    Jumps into a cemetery vertex are counted as killing; a path started at a
    cemetery vertex is dead at time 0.
    """

    n: int
    indptr: np.ndarray
    indices: np.ndarray
    rates: np.ndarray
    kill_rate: np.ndarray
    absorbing: np.ndarray

    @classmethod
    def from_rates(cls, Q, kill_rate=None, cemetery=()):
        """``Q``: square matrix whose off-diagonal entries are jump rates."""
        Q = sp.csr_matrix(Q, dtype=float)
        n = Q.shape[0]
        Q = Q - sp.diags(Q.diagonal())
        Q.eliminate_zeros()
        if Q.nnz and Q.data.min() < 0:
            raise StochasticError("negative jump rate")
        kill = np.zeros(n) if kill_rate is None else np.array(kill_rate, dtype=float)
        if np.any(kill < 0):
            raise StochasticError("negative kill rate")
        absorbing = np.zeros(n, dtype=bool)
        cem = np.asarray(list(cemetery), dtype=np.int64)
        absorbing[cem] = True
        if len(cem):
            kill = kill + np.asarray(Q[:, cem].sum(axis=1)).ravel()
            keep = sp.diags((~absorbing).astype(float))
            Q = (Q @ keep).tocsr()
            Q.eliminate_zeros()
        Q.sort_indices()
        return cls(n, Q.indptr.astype(np.int64), Q.indices.astype(np.int64), Q.data.copy(),
                   kill, absorbing)

    @property
    def out_rate(self) -> np.ndarray:
        rows = np.repeat(np.arange(self.n), np.diff(self.indptr))
        return np.bincount(rows, weights=self.rates, minlength=self.n)

    @property
    def total_rate(self) -> np.ndarray:
        return self.out_rate + self.kill_rate

    def generator(self) -> np.ndarray:
        """Dense sub-Markov generator on the live vertices (rows sum to -kill)."""
        Q = sp.csr_matrix((self.rates, self.indices, self.indptr), shape=(self.n, self.n)).toarray()
        Q -= np.diag(self.total_rate)
        return Q

    def kernel_arrays(self):
        gcum = np.cumsum(self.rates)
        return (gcum, self.indptr, self.indices, self.out_rate, self.total_rate,
                self.absorbing)


def build_walk(M: DiscreteManifold, Hop: HeatOperator, killing=None) -> WalkModel:
    """Chain with generator -H (plus killing).

    ``killing`` is ``None``, a per-vertex array of kill rates, or a dict with
    keys ``cemetery`` (vertex ids) and/or ``rates``.
    """
    H = Hop.generator().tocoo()
    off = H.row != H.col
    vals = -H.data[off]
    scale = np.abs(H.diagonal()).max() if H.shape[0] else 1.0
    if np.any(vals < -1e-12 * scale):
        raise StochasticError(
            "generator has negative jump rates (non-Delaunay mesh); use graph mode or an "
            "intrinsic Delaunay triangulation")
    vals = np.maximum(vals, 0.0)
    Q = sp.csr_matrix((vals, (H.row[off], H.col[off])), shape=H.shape)
    cemetery, rates = (), None
    if isinstance(killing, dict):
        cemetery = killing.get("cemetery", ())
        rates = killing.get("rates")
    elif killing is not None:
        rates = killing
    return WalkModel.from_rates(Q, rates, cemetery)


@dataclass
class PathSample:
    start: int
    jump_times: np.ndarray
    vertices: np.ndarray  # vertices[0] = start, vertices[k] after the k-th jump
    lifetime: float  # inf when the path survives past the horizon


def _uniform(seed, start, index, counter):
    key = _kernels.stream_keys_np(seed, start, np.array([index]))
    return float(_kernels.uniforms_np(key, np.array([counter]))[0])


def sample_path(W: WalkModel, start: int, horizon: float, seed: int = 0, index: int = 0) -> PathSample:
    """One path up to ``horizon`` drawn from the same stream the kernels use."""
    out, tot = W.out_rate, W.total_rate
    gcum = np.cumsum(W.rates)
    x, t, ctr = start, 0.0, 0
    times, verts = [], [start]
    if W.absorbing[start]:
        return PathSample(start, np.array([]), np.array(verts), 0.0)
    while True:
        lam = tot[x]
        if lam <= 0:
            return PathSample(start, np.array(times), np.array(verts), np.inf)
        t += -np.log(_uniform(seed, start, index, ctr)) / lam
        ctr += 2
        if t > horizon:
            return PathSample(start, np.array(times), np.array(verts), np.inf)
        r = _uniform(seed, start, index, ctr - 1) * lam
        if r >= out[x]:
            return PathSample(start, np.array(times), np.array(verts), t)
        b = gcum[W.indptr[x] - 1] if W.indptr[x] > 0 else 0.0
        j = min(int(np.searchsorted(gcum, b + r, side="right")), W.indptr[x + 1] - 1)
        x = int(W.indices[j])
        times.append(t)
        verts.append(x)


# -- Monte Carlo estimation --------------------------------------------------------


@dataclass
class FKEstimate:
    """Per (start, time) Monte Carlo means with confidence bounds."""

    starts: np.ndarray
    times: np.ndarray
    mean: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    n_samples: int
    level: float
    ci_method: np.ndarray  # "normal" or "bootstrap" per cell
    infinite: bool = False

    def sup(self):
        """(sup_x mean, sup_x upper) per time."""
        return self.mean.max(axis=0), self.upper.max(axis=0)

    def to_dict(self):
        return {"starts": self.starts.tolist(), "times": self.times.tolist(),
                "mean": self.mean.tolist(), "lower": self.lower.tolist(),
                "upper": self.upper.tolist(), "n_samples": self.n_samples, "level": self.level,
                "ci_method": self.ci_method.tolist(), "infinite": self.infinite}


def _log_mean_ci(L, z, rng, n_boot=200, ess_floor=0.05):
    """Mean of exp(L) with a normal CI computed on max-shifted weights.

    Falls back to bootstrap percentiles when the effective sample size of
    the weights is below ``ess_floor`` n (extreme skew).
    """
    n = len(L)
    finite = np.isfinite(L)
    if not np.any(finite):
        return 0.0, 0.0, 0.0, "normal"
    Lmax = L[finite].max()
    w = np.where(finite, np.exp(L - Lmax), 0.0)
    if Lmax > 700:
        return np.inf, np.inf, np.inf, "normal"
    scale = np.exp(Lmax)
    m = w.mean()
    if n > 1 and (w.sum() ** 2 / max((w ** 2).sum(), 1e-300)) < ess_floor * n:
        boots = rng.choice(w, size=(n_boot, n), replace=True).mean(axis=1)
        q = norm.cdf(z)
        lo, hi = np.quantile(boots, [1 - q, q])
        return scale * m, scale * lo, scale * hi, "bootstrap"
    se = w.std(ddof=1) / np.sqrt(n) if n > 1 else 0.0
    return scale * m, scale * max(m - z * se, 0.0), scale * (m + z * se), "normal"


def feynman_kac(W: WalkModel, v, t, n_samples: int, seed: int = 0, starts=None, terminal=None,
                killed_indicator: bool = True, level: float = 0.99, n_tests: int = 1,
                use_numba: bool | None = None) -> FKEstimate:
    """Estimate E_x[exp(int_0^t |v(B_s)| ds) g(B_t) 1{t < zeta}].

    Path integrals are exact (v is constant between jumps). With
    ``killed_indicator=False`` dead paths keep their weight exp(int_0^zeta |v|),
    which is the functional of the process extended by a cemetery point where
    v vanishes. ``n_tests`` widens the two-sided interval by a Bonferroni
    factor when several cells are compared at once.
    """
    if n_samples < 1:
        raise StochasticError("Monte Carlo sample budget must be positive")
    v = np.abs(np.asarray(v, dtype=float))
    if v.shape != (W.n,) or not np.all(np.isfinite(v)):
        raise StochasticError("potential must be a finite vertex field")
    times = np.atleast_1d(np.asarray(t, dtype=float))
    if np.any(times < 0) or np.any(np.diff(times) < 0):
        raise StochasticError("times must be nonnegative and sorted")
    starts = np.arange(W.n) if starts is None else np.atleast_1d(np.asarray(starts, dtype=np.int64))
    g = np.ones(W.n) if terminal is None else np.abs(np.asarray(terminal, dtype=float))
    z = norm.ppf(1 - (1 - level) / (2 * n_tests))
    arrays = W.kernel_arrays()
    S, K = len(starts), len(times)
    mean, lo, hi = np.zeros((S, K)), np.zeros((S, K)), np.zeros((S, K))
    meth = np.empty((S, K), dtype=object)
    rng = np.random.default_rng(seed)
    for a, x0 in enumerate(starts):
        logw, state = _kernels.simulate(seed, int(x0), n_samples, times, *arrays, v,
                                        use_numba=use_numba)
        for b in range(K):
            st = state[:, b]
            gv = np.where(st >= 0, g[np.maximum(st, 0)], 0.0 if killed_indicator else 1.0)
            with np.errstate(divide="ignore"):
                L = logw[:, b] + np.log(gv)
            mean[a, b], lo[a, b], hi[a, b], meth[a, b] = _log_mean_ci(L, z, rng)
    return FKEstimate(starts, times, mean, lo, hi, n_samples, level, meth,
                      bool(np.any(~np.isfinite(mean))))


def feynman_kac_exact(W: WalkModel, v, t, terminal=None, killed_indicator: bool = True) -> np.ndarray:
    """Dense matrix-exponential value of the functional estimated by :func:`feynman_kac`."""
    v = np.abs(np.asarray(v, dtype=float))
    g = np.ones(W.n) if terminal is None else np.abs(np.asarray(terminal, dtype=float))
    Q = W.generator()
    live = ~W.absorbing
    if killed_indicator:
        A = Q + np.diag(v)
        A[W.absorbing, :] = 0.0
        out = la.expm(t * A) @ np.where(live, g, 0.0)
        return np.where(live, out, 0.0)
    # one extra cemetery state collects the killed mass; v = 0 and g = 1 there
    n = W.n
    A = np.zeros((n + 1, n + 1))
    A[:n, :n] = Q + np.diag(v)
    A[:n, n] = W.kill_rate
    A[np.flatnonzero(W.absorbing), :] = 0.0
    gg = np.append(np.where(live, g, 1.0), 1.0)
    return (la.expm(t * A) @ gg)[:n]


# -- Kato modulus -----------------------------------------------------------------


@dataclass
class KatoReport:
    times: np.ndarray
    modulus: np.ndarray  # D(w, t) = sup_x int_0^t sum_y p(s,x,y)|w(y)| vol_y ds
    argmax: np.ndarray
    decay_exponent: float  # gamma in D ~ t^gamma over the resolved regime
    fit_range: tuple = field(default=(np.nan, np.nan))

    def to_dict(self):
        return {"times": self.times.tolist(), "modulus": self.modulus.tolist(),
                "argmax": self.argmax.tolist(), "decay_exponent": self.decay_exponent,
                "fit_range": list(self.fit_range)}


def _integrated_decay(lam, t):
    """int_0^t exp(-lam s) ds, exact for lam = 0."""
    lam = np.asarray(lam, dtype=float)
    safe = np.where(lam > 0, lam, 1.0)
    return np.where(lam > 0, -np.expm1(-lam * t) / safe, t)


def kato_profile(Hop: HeatOperator, w, t: float) -> np.ndarray:
    """x -> int_0^t sum_y p(s,x,y) |w(y)| vol_y ds."""
    if Hop.strategy != "spectral":
        raise StochasticError("Kato modulus needs the spectral heat operator")
    phi = Hop.eigenfields
    wv = Hop.manifold.vertex_volumes * np.abs(np.asarray(w, dtype=float))
    return phi @ (_integrated_decay(Hop.eigenvalues, t) * (phi.T @ wv))


def kato_modulus(M: DiscreteManifold, Hop: HeatOperator, w, t_grid) -> KatoReport:
    times = np.asarray(t_grid, dtype=float)
    if Hop.strategy != "spectral":
        raise StochasticError("Kato modulus needs the spectral heat operator")
    D = np.zeros(len(times))
    arg = np.zeros(len(times), dtype=np.int64)
    for i, t in enumerate(times):
        if t <= 0:
            continue
        prof = kato_profile(Hop, w, t)
        arg[i] = int(np.argmax(prof))
        D[i] = max(float(prof[arg[i]]), 0.0)
    h2 = M.mesh_size ** 2
    sel = (times >= h2) & (D > 0) & (times > 0)
    gamma, rng = np.nan, (np.nan, np.nan)
    if sel.sum() >= 2:
        gamma = float(np.polyfit(np.log(times[sel]), np.log(D[sel]), 1)[0])
        rng = (float(times[sel].min()), float(times[sel].max()))
    return KatoReport(times, D, arg, gamma, rng)


# -- Kas'minskii ------------------------------------------------------------------


@dataclass
class KasminskiiCertificate:
    delta: float
    s: float
    modulus_at_s: float
    C: float
    test_times: np.ndarray
    bound: np.ndarray  # delta exp(t C)
    mc: FKEstimate
    sup_mean: np.ndarray
    sup_upper: np.ndarray
    khasminskii_bound: float  # 1 / (1 - D(v, s))
    khasminskii_mc: FKEstimate
    exact_sup: np.ndarray | None
    valid: bool
    khasminskii_ok: bool

    def to_dict(self):
        return {
            "delta": self.delta, "s": self.s, "D(v,s)": self.modulus_at_s, "C": self.C,
            "test_times": self.test_times.tolist(), "bound": self.bound.tolist(),
            "sup_mean": self.sup_mean.tolist(), "sup_upper": self.sup_upper.tolist(),
            "khasminskii_bound": self.khasminskii_bound,
            "khasminskii_sup_upper": float(self.khasminskii_mc.upper.max()),
            "exact_sup": None if self.exact_sup is None else self.exact_sup.tolist(),
            "valid": self.valid, "khasminskii_ok": self.khasminskii_ok,
            "n_samples": self.mc.n_samples, "level": self.mc.level,
        }


class CertificateRefused(StochasticError):
    def __init__(self, threshold, smallest):
        super().__init__(f"no s on the grid has D(v,s) < {threshold:.6g} (smallest D = {smallest:.6g})")
        self.threshold = threshold
        self.smallest = smallest


def mc_starts(M: DiscreteManifold, Hop: HeatOperator, v, s: float, extra=()) -> np.ndarray:
    """All vertices up to SUP_ALL_STARTS, else ``extra`` plus the max-modulus vertex."""
    if M.n_vertices <= SUP_ALL_STARTS:
        return np.arange(M.n_vertices)
    top = int(np.argmax(kato_profile(Hop, v, s)))
    return np.unique(np.append(np.asarray(extra, dtype=np.int64), top))


def kasminskii_certify(W: WalkModel, Hop: HeatOperator, v, delta: float, t_tests,
                       n_samples: int = 100_000, seed: int = 0, s_grid=None, starts=None,
                       level: float = 0.99, exact_limit: int = 400) -> KasminskiiCertificate:
    """Kas'minskii certificate sup_x E[exp(int_0^t |v|) 1{t<zeta}] <= delta exp(t C).

    The modulus D(v, s) is computed without killing, which bounds the killed
    one from above, so the resulting constant stays valid for ``W``.
    """
    if delta <= 1:
        raise StochasticError("delta must exceed 1")
    v = np.abs(np.asarray(v, dtype=float))
    M = Hop.manifold
    if s_grid is None:
        s_grid = np.geomspace(1e-6, 10.0, 211)
    s_grid = np.sort(np.asarray(s_grid, dtype=float))
    threshold = 1.0 - 1.0 / delta
    rep = kato_modulus(M, Hop, v, s_grid)
    ok = np.flatnonzero(rep.modulus < threshold)
    if len(ok) == 0:
        raise CertificateRefused(threshold, float(rep.modulus.min()))
    i = ok.max()
    s, D = float(s_grid[i]), float(rep.modulus[i])
    C = float(np.log(1.0 / (1.0 - D)) / s)
    t_tests = np.sort(np.atleast_1d(np.asarray(t_tests, dtype=float)))
    if starts is None:
        starts = mc_starts(M, Hop, v, s)
    mc = feynman_kac(W, v, t_tests, n_samples, seed=seed, starts=starts, level=level)
    sup_mean, sup_upper = mc.sup()
    bound = delta * np.exp(t_tests * C)
    kh = feynman_kac(W, v, [s], n_samples, seed=seed + 1, starts=starts, killed_indicator=False,
                     level=level)
    kh_bound = 1.0 / (1.0 - D)
    exact = None
    if W.n <= exact_limit:
        exact = np.array([feynman_kac_exact(W, v, t).max() for t in t_tests])
    return KasminskiiCertificate(
        float(delta), s, D, C, t_tests, bound, mc, sup_mean, sup_upper, kh_bound, kh, exact,
        bool(np.all(sup_upper <= bound)), bool(kh.upper.max() <= kh_bound))

