"""Ricci-type endomorphism fields, the 1-form heat semigroup and semigroup domination.

The 1-form generator is ``H1 = (1/2)(d0 d0^dagger + d1^dagger d1) + V``.
On graphs (paths and cycles only, where d1 = 0) 1-forms are edge values with
the diagonal edge metric. On meshes 1-forms are edge cochains with the
Whitney mass matrix, for which ``d0^T M1 d0`` is exactly the P1 stiffness
matrix, so ``H1 d0 = d0 H`` holds for the scalar generator of module heat.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as la
import scipy.sparse as sp

from .geometry import DiscreteManifold
from .stochastic import WalkModel, feynman_kac

HERMITIAN_TOL = 1e-12


class CurvatureError(ValueError):
    pass


def check_hermitian(R, tol: float = HERMITIAN_TOL) -> np.ndarray:
    R = np.asarray(R)
    if R.ndim == 2:
        R = R[None]
    if R.ndim != 3 or R.shape[1] != R.shape[2]:
        raise CurvatureError("endomorphism field must have shape (n, m, m)")
    scale = max(1.0, float(np.abs(R).max())) if R.size else 1.0
    if np.abs(R - np.conj(np.swapaxes(R, 1, 2))).max(initial=0.0) > tol * scale:
        raise CurvatureError("endomorphism field is not Hermitian")
    return R


def spectral_parts(R):
    """Positive and negative parts R = R_plus - R_minus by pointwise spectral calculus."""
    R = check_hermitian(R)
    lam, U = np.linalg.eigh(R)
    Uh = np.conj(np.swapaxes(U, 1, 2))
    plus = (U * np.maximum(lam, 0.0)[:, None, :]) @ Uh
    minus = (U * np.maximum(-lam, 0.0)[:, None, :]) @ Uh
    return plus, minus


@dataclass
class RicciDecomposition:
    """R = R1 - R2 with R1, R2 >= 0 and the scalar potentials w1, w2."""

    R1: np.ndarray
    R2: np.ndarray

    def __post_init__(self):
        self.R1 = check_hermitian(self.R1)
        self.R2 = check_hermitian(self.R2)
        if self.R1.shape != self.R2.shape:
            raise CurvatureError("R1 and R2 have different shapes")
        for name, A in (("R1", self.R1), ("R2", self.R2)):
            if np.linalg.eigvalsh(A).min(initial=0.0) < -1e-12 * max(1.0, np.abs(A).max()):
                raise CurvatureError(f"{name} is not positive semidefinite")

    @classmethod
    def from_field(cls, R):
        return cls(*spectral_parts(R))

    @property
    def R(self):
        return self.R1 - self.R2

    @property
    def w1(self):
        return scalar_potentials(self)[0]

    @property
    def w2(self):
        return scalar_potentials(self)[1]


def scalar_potentials(dec: RicciDecomposition):
    """w1 = min spec(R1/2), w2 = max spec(R2/2), pointwise."""
    return (np.linalg.eigvalsh(dec.R1 / 2).min(axis=1), np.linalg.eigvalsh(dec.R2 / 2).max(axis=1))


def conformal_perturbation(m: int, g, dpsi, hess, lap: float) -> np.ndarray:
    """Ricci change T_psi under g -> exp(2 psi) g, as a symmetric bilinear form.

    T = (2 - m)(Hess psi - dpsi (x) dpsi) - (Laplace psi + (m - 2)|dpsi|^2) g.
    """
    g = np.asarray(g, dtype=float)
    dpsi = np.asarray(dpsi, dtype=float)
    hess = np.asarray(hess, dtype=float)
    if g.shape != (m, m) or hess.shape != (m, m) or dpsi.shape != (m,):
        raise CurvatureError("shapes of metric, Hessian and differential do not match m")
    if not np.allclose(g, g.T, rtol=0, atol=1e-14 * max(1.0, np.abs(g).max())):
        raise CurvatureError("metric is not symmetric")
    if not np.allclose(hess, hess.T, rtol=0, atol=1e-12 * max(1.0, np.abs(hess).max())):
        raise CurvatureError("Hessian is not symmetric")
    try:
        c = la.cho_factor(g)
    except la.LinAlgError as exc:
        raise CurvatureError("metric is not positive definite") from exc
    grad_sq = float(dpsi @ la.cho_solve(c, dpsi))
    T = (2 - m) * (hess - np.outer(dpsi, dpsi)) - (lap + (m - 2) * grad_sq) * g
    return 0.5 * (T + T.T) + 0.0  # + 0.0 clears negative zeros


# -- Whitney calculus on meshes --------------------------------------------------

_LOCAL = ((0, 1), (1, 2), (0, 2))


def whitney_mass(M: DiscreteManifold, metric=None) -> sp.csr_matrix:
    """sum_t int_t (W_k, G_t W_l) over Whitney 1-forms; G_t = identity by default.

    ``metric`` may be a per-triangle scalar (T,) or Hermitian matrix (T, 2, 2).
    """
    T = len(M.triangles)
    gl = M.barycentric_gradients  # (T, 3, 2)
    area = M.site_volumes
    if metric is None:
        G = np.broadcast_to(np.eye(2), (T, 2, 2))
    else:
        G = np.asarray(metric)
        if G.ndim == 1:
            G = G[:, None, None] * np.eye(2)
    gab = np.einsum("tai,tij,tbj->tab", gl, G, gl)  # (T, 3, 3)
    I = area[:, None, None] * (np.ones((3, 3)) + np.eye(3)) / 12.0
    tri = M.triangles
    sign = np.stack([np.where(tri[:, i] < tri[:, j], 1.0, -1.0) for i, j in _LOCAL], axis=1)
    loc = np.zeros((T, 3, 3), dtype=gab.dtype)
    for k, (i, j) in enumerate(_LOCAL):
        for l, (p, q) in enumerate(_LOCAL):
            loc[:, k, l] = (I[:, i, p] * gab[:, j, q] - I[:, i, q] * gab[:, j, p]
                            - I[:, j, p] * gab[:, i, q] + I[:, j, q] * gab[:, i, p])
    loc = loc * sign[:, :, None] * sign[:, None, :]
    eid = M.triangle_edges
    rows = np.repeat(eid, 3, axis=1).ravel()
    cols = np.tile(eid, (1, 3)).ravel()
    return sp.csr_matrix((loc.ravel(), (rows, cols)), shape=(M.n_edges, M.n_edges))


def edge_coboundary(M: DiscreteManifold) -> sp.csr_matrix:
    """d0 on edges: (d0 f)_e = f(hi) - f(lo)."""
    E = M.n_edges
    return sp.csr_matrix((np.tile([-1.0, 1.0], E), (np.repeat(np.arange(E), 2), M.edges.ravel())),
                         shape=(E, M.n_vertices))


def face_coboundary(M: DiscreteManifold) -> sp.csr_matrix:
    """d1: edge cochains to triangle cochains along the boundary a -> b -> c -> a."""
    tri = M.triangles
    T = len(tri)
    eid = M.triangle_edges
    # boundary runs (0,1), (1,2), (2,0); local edge 2 is stored as (0,2)
    sgn = np.stack([np.where(tri[:, 0] < tri[:, 1], 1.0, -1.0),
                    np.where(tri[:, 1] < tri[:, 2], 1.0, -1.0),
                    np.where(tri[:, 2] < tri[:, 0], 1.0, -1.0)], axis=1)
    return sp.csr_matrix((sgn.ravel(), (np.repeat(np.arange(T), 3), eid.ravel())),
                         shape=(T, M.n_edges))


# -- 1-form semigroup -------------------------------------------------------------


class OneFormHeatOperator:
    """exp(-t H1) on 1-forms by generalised Hermitian eigendecomposition of (M1 H1, M1)."""

    def __init__(self, M: DiscreteManifold, potential=None):
        self.manifold = M
        self.d0 = edge_coboundary(M)
        if M.mode == "graph":
            deg = np.bincount(M.edges.ravel(), minlength=M.n_vertices)
            if deg.max(initial=0) > 2:
                raise CurvatureError("graph-mode 1-form semigroup needs a path or cycle (d1 = 0)")
            self.mass = sp.diags(M.edge_volumes / M.edge_lengths ** 2).tocsr()
            A = 0.5 * (self.mass @ self.d0 @ sp.diags(1.0 / M.vertex_volumes) @ self.d0.T @ self.mass)
            self.d1 = None
            if potential is not None:
                pot = np.asarray(potential).reshape(M.n_edges, -1)[:, 0]
                A = A + sp.diags(self.mass.diagonal() * pot)
        else:
            self.mass = whitney_mass(M)
            self.d1 = face_coboundary(M)
            M2 = sp.diags(1.0 / M.site_volumes)
            A = 0.5 * (self.mass @ self.d0 @ sp.diags(1.0 / M.vertex_volumes) @ self.d0.T @ self.mass
                       + self.d1.T @ M2 @ self.d1)
            if potential is not None:
                A = A + whitney_mass(M, potential)
        self.potential = potential
        self.A = A
        Ad = A.toarray()
        Ad = 0.5 * (Ad + np.conj(Ad.T))
        self.eigenvalues, self.eigenforms = la.eigh(Ad, self.mass.toarray())

    @property
    def n_sites(self) -> int:
        return self.manifold.n_edges

    def generator(self) -> np.ndarray:
        """Dense H1 = M1^{-1} A."""
        return la.solve(self.mass.toarray(), self.A.toarray())

    def apply(self, alpha, t: float) -> np.ndarray:
        if t < 0:
            raise CurvatureError("time must be nonnegative")
        alpha = np.asarray(alpha)
        if alpha.shape[0] != self.n_sites:
            raise CurvatureError("1-form does not match the edge set")
        if t == 0:
            return alpha.copy()
        Phi = self.eigenforms
        coef = np.conj(Phi.T) @ (self.mass @ alpha)
        return alpha + Phi @ (np.expm1(-self.eigenvalues * t) * coef)

    def fiber_values(self, alpha) -> np.ndarray:
        """Pointwise covectors: alpha_e / length_e (graph) or the barycentre value per triangle (mesh)."""
        M = self.manifold
        alpha = np.asarray(alpha)
        if M.mode == "graph":
            return alpha / M.edge_lengths
        gl = M.barycentric_gradients
        tri = M.triangles
        out = np.zeros((len(tri), 2), dtype=np.result_type(alpha, float))
        for k, (i, j) in enumerate(_LOCAL):
            s = np.where(tri[:, i] < tri[:, j], 1.0, -1.0)
            out += (s * alpha[M.triangle_edges[:, k]])[:, None] * (gl[:, j] - gl[:, i]) / 3.0
        return out


def build_oneform_heat(M: DiscreteManifold, V=None) -> OneFormHeatOperator:
    return OneFormHeatOperator(M, V)


def apply_oneform_semigroup(op: OneFormHeatOperator, alpha, t: float) -> np.ndarray:
    return op.apply(alpha, t)


# -- domination --------------------------------------------------------------------


@dataclass
class DominationReport:
    times: np.ndarray
    lhs: np.ndarray  # |exp(-t H1) alpha| per site, shape (K, n_sites)
    majorant: np.ndarray
    upper: np.ndarray
    violations: list  # (time index, site) pairs with lhs > upper
    kinetic_excess: np.ndarray
    n_samples: int
    level: float

    @property
    def ok(self) -> bool:
        return not self.violations

    def to_dict(self):
        return {"times": self.times.tolist(), "lhs": self.lhs.tolist(),
                "majorant": self.majorant.tolist(), "upper": self.upper.tolist(),
                "violations": [list(v) for v in self.violations],
                "n_samples": self.n_samples, "level": self.level, "ok": self.ok}


def dominating_walk(op: OneFormHeatOperator):
    """Scalar walk on edges whose Feynman-Kac semigroup dominates exp(-t H1^0).

    Works in fiber-normalised coordinates beta = alpha / length. Returns the
    walk (jump rates |H_ij|, killing at the positive part of the kinetic
    excess) and the excess ``Re H_ii - sum_j |H_ij|`` itself.
    """
    M = op.manifold
    if M.mode != "graph":
        raise CurvatureError("domination check is implemented for graph mode (scalar fibers)")
    H0 = 0.5 * (op.d0 @ sp.diags(1.0 / M.vertex_volumes) @ op.d0.T @ op.mass).toarray()
    N = 1.0 / M.edge_lengths
    Hn = (N[:, None] * H0) / N[None, :]
    off = np.abs(Hn - np.diag(np.diag(Hn)))
    excess = np.real(np.diag(Hn)) - off.sum(axis=1)
    W = WalkModel.from_rates(off, np.maximum(excess, 0.0))
    return W, excess


def domination_check(op: OneFormHeatOperator, w2, alpha, t, n_samples: int = 100_000,
                     seed: int = 0, level: float = 0.99) -> DominationReport:
    """Compare |exp(-t H1) alpha|(e) with E_e[exp(int w2) |alpha|(B_t) 1{t < zeta}].

    ``w2`` is per edge (or per vertex, then averaged onto edges). The
    inequality is expected whenever the potential satisfies V >= -w2.
    Each comparison uses a two-sided interval at ``level``, Bonferroni
    corrected over all (time, site) pairs.
    """
    if n_samples < 1:
        raise CurvatureError("Monte Carlo sample budget must be positive")
    M = op.manifold
    w2 = np.asarray(w2, dtype=float)
    if w2.shape == ():
        w2 = np.full(M.n_edges, float(w2))
    elif w2.shape == (M.n_vertices,) and M.n_vertices != M.n_edges:
        w2 = w2[M.edges].mean(axis=1)
    if np.any(w2 < 0):
        raise CurvatureError("w2 must be nonnegative")
    W, excess = dominating_walk(op)
    growth = w2 + np.maximum(-excess, 0.0)
    times = np.sort(np.atleast_1d(np.asarray(t, dtype=float)))
    beta = np.abs(op.fiber_values(alpha))
    lhs = np.array([np.abs(op.fiber_values(op.apply(alpha, s))) for s in times])
    est = feynman_kac(W, growth, times, n_samples, seed=seed, terminal=beta, level=level,
                      n_tests=len(times) * M.n_edges)
    maj = est.mean.T
    up = est.upper.T
    viol = [(int(k), int(e)) for k, e in zip(*np.nonzero(lhs > up * (1 + 1e-12) + 1e-300))]
    return DominationReport(times, lhs, maj, up, viol, excess, n_samples, level)


def sup_norm_growth(op: OneFormHeatOperator, alpha, times) -> np.ndarray:
    """||exp(-t H1) alpha||_inf / ||alpha||_inf for each t (fiber norms)."""
    a0 = np.abs(op.fiber_values(alpha))
    a0 = np.sqrt((a0 ** 2).sum(axis=1)) if a0.ndim == 2 else a0
    out = []
    for t in np.atleast_1d(times):
        a = np.abs(op.fiber_values(op.apply(alpha, t)))
        a = np.sqrt((a ** 2).sum(axis=1)) if a.ndim == 2 else a
        out.append(a.max() / a0.max())
    return np.array(out)
