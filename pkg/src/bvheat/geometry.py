"""Discrete Riemannian structures and their first-order calculus.

Two backends share one interface:

* ``graph``: vertices carry volumes, edges carry a length and a volume. A
  one-form is one complex number per edge (stored for the canonical
  orientation lower id -> higher id) and its pointwise norm is
  ``|alpha_e| / length_e``.
* ``mesh``: a 2-dimensional triangulation. Functions are P1 (piecewise
  linear) and a one-form is a constant complex covector per triangle,
  expressed in an orthonormal frame of that triangle.

In both cases the site inner product is
``<a, b> = sum_s w_s (a_s, b_s)_s`` and the vertex inner product is
``<f, g> = sum_x vol_x conj(f_x) g_x``; the codifferential is the exact
adjoint of the exterior derivative for these two products.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components, dijkstra


class GeometryError(ValueError):
    """Raised for malformed manifolds or fields that do not fit a manifold."""


def _frozen(a, dtype=float):
    a = np.array(a, dtype=dtype, copy=True)
    a.setflags(write=False)
    return a


def _flatten_triangles(pts: np.ndarray) -> np.ndarray:
    """Isometric 2-D coordinates for triangles given by (T, 3, k) points."""
    if pts.shape[2] == 2:
        return pts.astype(float)
    if pts.shape[2] != 3:
        raise GeometryError("triangle coordinates must be 2-D or 3-D")
    e1 = pts[:, 1] - pts[:, 0]
    e2 = pts[:, 2] - pts[:, 0]
    l1 = np.linalg.norm(e1, axis=1)
    if np.any(l1 <= 0):
        raise GeometryError("degenerate triangle (repeated vertex)")
    u = e1 / l1[:, None]
    x2 = np.einsum("ij,ij->i", e2, u)
    y2 = np.linalg.norm(np.cross(e1, e2), axis=1) / l1
    out = np.zeros(pts.shape[:2] + (2,))
    out[:, 1, 0] = l1
    out[:, 2, 0] = x2
    out[:, 2, 1] = y2
    return out


@dataclass(frozen=True, eq=False)
class DiscreteManifold:
    """Weighted graph or triangulated surface with volume data.

    Use :meth:`graph` or :meth:`mesh` to build one; the constructors
    validate the input and freeze every array.
    """

    mode: str
    dimension: int
    vertex_volumes: np.ndarray
    edges: np.ndarray
    edge_lengths: np.ndarray
    edge_volumes: np.ndarray | None = None
    triangles: np.ndarray | None = None
    tri_coords: np.ndarray | None = None
    positions: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    # -- construction -----------------------------------------------------

    @classmethod
    def graph(cls, vertex_volumes, edges, edge_lengths, edge_volumes=None,
              dimension=1, positions=None, meta=None):
        """Weighted graph. ``edge_volumes`` defaults to the edge lengths."""
        vol = np.asarray(vertex_volumes, dtype=float)
        e = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
        ell = np.asarray(edge_lengths, dtype=float).reshape(-1)
        w = ell.copy() if edge_volumes is None else np.asarray(edge_volumes, dtype=float).reshape(-1)
        if len(ell) != len(e) or len(w) != len(e):
            raise GeometryError("edges, edge_lengths and edge_volumes differ in length")
        if len(e) and (e.min() < 0 or e.max() >= len(vol)):
            raise GeometryError("edge references a missing vertex")
        if np.any(e[:, 0] == e[:, 1]):
            raise GeometryError("self-loop edge")
        flip = e[:, 0] > e[:, 1]
        e = np.where(flip[:, None], e[:, ::-1], e)
        if len(np.unique(e, axis=0)) != len(e):
            raise GeometryError("duplicate edge")
        if np.any(ell <= 0) or np.any(w <= 0):
            raise GeometryError("edge lengths and volumes must be positive")
        M = cls(mode="graph", dimension=int(dimension), vertex_volumes=_frozen(vol),
                edges=_frozen(e, np.int64), edge_lengths=_frozen(ell), edge_volumes=_frozen(w),
                positions=None if positions is None else _frozen(positions),
                meta=dict(meta or {}))
        M._validate()
        return M

    @classmethod
    def mesh(cls, triangles, tri_coords=None, positions=None, vertex_volumes=None,
             n_vertices=None, meta=None):
        """Triangulated surface.

        ``tri_coords`` (T, 3, 2 or 3) gives each triangle's own vertex
        coordinates, which allows periodic domains; otherwise they are taken
        from ``positions``. Vertex volumes default to the lumped areas
        ``vol_x = sum over triangles containing x of area / 3``.
        """
        tri = np.asarray(triangles, dtype=np.int64).reshape(-1, 3)
        if n_vertices is None:
            n_vertices = len(positions) if positions is not None else int(tri.max()) + 1
        if tri.min() < 0 or tri.max() >= n_vertices:
            raise GeometryError("triangle references a missing vertex")
        if tri_coords is None:
            if positions is None:
                raise GeometryError("mesh needs tri_coords or positions")
            tri_coords = np.asarray(positions, dtype=float)[tri]
        coords = _flatten_triangles(np.asarray(tri_coords, dtype=float))
        area = 0.5 * np.abs(_cross2(coords[:, 1] - coords[:, 0], coords[:, 2] - coords[:, 0]))
        if np.any(area <= 1e-300) or not np.all(np.isfinite(area)):
            raise GeometryError("degenerate triangle (zero area)")
        if vertex_volumes is None:
            vol = np.zeros(n_vertices)
            np.add.at(vol, tri.ravel(), np.repeat(area / 3.0, 3))
        else:
            vol = np.asarray(vertex_volumes, dtype=float)
        pairs = np.concatenate([tri[:, [0, 1]], tri[:, [1, 2]], tri[:, [0, 2]]])
        pairs.sort(axis=1)
        edges = np.unique(pairs, axis=0)
        M = cls(mode="mesh", dimension=2, vertex_volumes=_frozen(vol),
                edges=_frozen(edges, np.int64), edge_lengths=_frozen(np.zeros(len(edges))),
                triangles=_frozen(tri, np.int64), tri_coords=_frozen(coords),
                positions=None if positions is None else _frozen(positions),
                meta=dict(meta or {}))
        # edge lengths are read off any triangle containing the edge
        local = np.array([[0, 1], [1, 2], [0, 2]])
        lengths = np.zeros(len(edges))
        eid = M.triangle_edges
        for k, (a, b) in enumerate(local):
            lengths[eid[:, k]] = np.linalg.norm(coords[:, b] - coords[:, a], axis=1)
        object.__setattr__(M, "edge_lengths", _frozen(lengths))
        M._validate()
        return M

    def _validate(self):
        vol = self.vertex_volumes
        if vol.ndim != 1 or len(vol) == 0:
            raise GeometryError("manifold needs at least one vertex")
        if not np.all(np.isfinite(vol)) or np.any(vol <= 0):
            raise GeometryError("vertex volumes must be finite and positive")
        if self.dimension < 1:
            raise GeometryError("dimension must be a positive integer")
        if self.n_vertices > 1:
            A = sp.coo_matrix((np.ones(len(self.edges)), (self.edges[:, 0], self.edges[:, 1])),
                              shape=(self.n_vertices,) * 2)
            n, _ = connected_components(A, directed=False)
            if n != 1:
                raise GeometryError("manifold is not connected")

    # -- sizes --------------------------------------------------------------

    @property
    def n_vertices(self) -> int:
        return len(self.vertex_volumes)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @property
    def n_sites(self) -> int:
        return self.n_edges if self.mode == "graph" else len(self.triangles)

    @property
    def site_shape(self) -> tuple:
        """Array shape of a one-form."""
        return (self.n_edges,) if self.mode == "graph" else (len(self.triangles), 2)

    @cached_property
    def site_volumes(self) -> np.ndarray:
        if self.mode == "graph":
            return self.edge_volumes
        c = self.tri_coords
        return _frozen(0.5 * np.abs(_cross2(c[:, 1] - c[:, 0], c[:, 2] - c[:, 0])))

    @property
    def total_volume(self) -> float:
        return float(self.vertex_volumes.sum())

    @property
    def mesh_size(self) -> float:
        return float(self.edge_lengths.max()) if self.n_edges else 0.0

    @cached_property
    def diameter(self) -> float:
        """Edge-path diameter; double-sweep estimate above 2000 vertices."""
        if self.n_vertices == 1:
            return 0.0
        G = sp.coo_matrix((self.edge_lengths, (self.edges[:, 0], self.edges[:, 1])),
                          shape=(self.n_vertices,) * 2).tocsr()
        if self.n_vertices <= 2000:
            return float(dijkstra(G, directed=False).max())
        d0 = dijkstra(G, directed=False, indices=0)
        d1 = dijkstra(G, directed=False, indices=int(np.argmax(d0)))
        return float(d1.max())

    # -- mesh geometry --------------------------------------------------------

    @cached_property
    def triangle_edges(self) -> np.ndarray:
        """(T, 3) edge ids of local edges (0,1), (1,2), (0,2)."""
        tri = self.triangles
        lookup = {tuple(e): i for i, e in enumerate(self.edges.tolist())}
        out = np.empty((len(tri), 3), dtype=np.int64)
        for k, (a, b) in enumerate([(0, 1), (1, 2), (0, 2)]):
            lo = np.minimum(tri[:, a], tri[:, b])
            hi = np.maximum(tri[:, a], tri[:, b])
            out[:, k] = [lookup[(i, j)] for i, j in zip(lo.tolist(), hi.tolist())]
        out.setflags(write=False)
        return out

    @cached_property
    def barycentric_gradients(self) -> np.ndarray:
        """(T, 3, 2) gradients of the three hat functions on each triangle."""
        c = self.tri_coords
        E = np.stack([c[:, 1] - c[:, 0], c[:, 2] - c[:, 0]], axis=1)  # rows are edge vectors
        Einv = np.linalg.inv(E)
        g = np.empty((len(c), 3, 2))
        g[:, 1] = Einv[:, :, 0]
        g[:, 2] = Einv[:, :, 1]
        g[:, 0] = -g[:, 1] - g[:, 2]
        g.setflags(write=False)
        return g

    # -- calculus matrices ------------------------------------------------------

    @cached_property
    def gradient_matrix(self) -> sp.csr_matrix:
        """Real sparse matrix of d acting on vertex values (flattened sites)."""
        if self.mode == "graph":
            E = self.n_edges
            rows = np.repeat(np.arange(E), 2)
            cols = self.edges.ravel()
            vals = np.tile([-1.0, 1.0], E)
            return sp.csr_matrix((vals, (rows, cols)), shape=(E, self.n_vertices))
        T = len(self.triangles)
        g = self.barycentric_gradients
        rows = (2 * np.arange(T)[:, None, None] + np.arange(2)[None, None, :]).repeat(3, axis=1)
        cols = np.broadcast_to(self.triangles[:, :, None], (T, 3, 2))
        return sp.csr_matrix((g.ravel(), (rows.ravel(), cols.ravel())), shape=(2 * T, self.n_vertices))

    @cached_property
    def site_metric(self) -> np.ndarray:
        """Per-site factor c_s with (a, b)_s = c_s conj(a) b."""
        if self.mode == "graph":
            return _frozen(1.0 / self.edge_lengths ** 2)
        return _frozen(np.ones(len(self.triangles)))

    @cached_property
    def stiffness_matrix(self) -> sp.csr_matrix:
        """S = D^T W D, so that <df, dg> = f^H S g; symmetric, S 1 = 0."""
        D = self.gradient_matrix
        wc = self.site_volumes * self.site_metric
        if self.mode == "mesh":
            wc = np.repeat(wc, 2)
        return (D.T @ sp.diags(wc) @ D).tocsr()

    # -- field checks -------------------------------------------------------------

    def check_field(self, f) -> np.ndarray:
        f = np.asarray(f)
        if f.shape != (self.n_vertices,):
            raise GeometryError(f"field has shape {f.shape}, manifold has {self.n_vertices} vertices")
        if not np.all(np.isfinite(f)):
            raise GeometryError("field has non-finite entries")
        return f

    def check_form(self, alpha) -> np.ndarray:
        alpha = np.asarray(alpha)
        if alpha.shape != self.site_shape:
            raise GeometryError(f"one-form has shape {alpha.shape}, expected {self.site_shape}")
        if not np.all(np.isfinite(alpha)):
            raise GeometryError("one-form has non-finite entries")
        return alpha


def _cross2(a, b):
    return a[..., 0] * b[..., 1] - a[..., 1] * b[..., 0]


def exterior_derivative(M: DiscreteManifold, f) -> np.ndarray:
    """df: edge differences f(v) - f(u) (graph) or P1 gradients per triangle (mesh)."""
    f = M.check_field(f)
    df = M.gradient_matrix @ f
    return df.reshape(M.site_shape)


def codifferential(M: DiscreteManifold, alpha) -> np.ndarray:
    """Adjoint of :func:`exterior_derivative` for the weighted inner products."""
    alpha = M.check_form(alpha)
    wc = M.site_volumes * M.site_metric
    a = (wc[:, None] * alpha if M.mode == "mesh" else wc * alpha).ravel()
    return (M.gradient_matrix.T @ a) / M.vertex_volumes


def site_norm(M: DiscreteManifold, alpha) -> np.ndarray:
    alpha = M.check_form(alpha)
    if M.mode == "graph":
        return np.abs(alpha) / M.edge_lengths
    return np.sqrt(np.sum(np.abs(alpha) ** 2, axis=1))


def site_pairing(M: DiscreteManifold, a, b) -> np.ndarray:
    """Fiber Hermitian product (a_s, b_s)_s, conjugate-linear in ``a``."""
    a = np.asarray(a)
    b = np.asarray(b)
    if M.mode == "graph":
        return M.site_metric * np.conj(a) * b
    return np.sum(np.conj(a) * b, axis=1)


def vertex_inner(M: DiscreteManifold, f, g) -> complex:
    return complex(np.sum(M.vertex_volumes * np.conj(f) * g))


def site_inner(M: DiscreteManifold, a, b) -> complex:
    return complex(np.sum(M.site_volumes * site_pairing(M, a, b)))


def l1_norm(M: DiscreteManifold, f) -> float:
    return float(np.sum(M.vertex_volumes * np.abs(f)))


def rescale_metric(M: DiscreteManifold, psi) -> DiscreteManifold:
    """Conformal change g -> exp(2 psi) g.

    Vertex volumes scale by exp(m psi(x)); every gradient site uses the mean
    exponent of its vertices, scaling lengths by exp(mean) and site volumes by
    exp(m mean).
    """
    psi = np.asarray(psi, dtype=float)
    if psi.shape == ():
        psi = np.full(M.n_vertices, float(psi))
    if psi.shape != (M.n_vertices,) or not np.all(np.isfinite(psi)):
        raise GeometryError("conformal exponent must be a finite vertex field")
    m = M.dimension
    vol = np.exp(m * psi) * M.vertex_volumes
    meta = dict(M.meta, rescaled=True)
    if M.mode == "graph":
        pbar = psi[M.edges].mean(axis=1)
        return DiscreteManifold.graph(vol, M.edges, np.exp(pbar) * M.edge_lengths,
                                      np.exp(m * pbar) * M.edge_volumes, dimension=m,
                                      positions=M.positions, meta=meta)
    pbar = psi[M.triangles].mean(axis=1)
    coords = np.exp(pbar)[:, None, None] * M.tri_coords
    return DiscreteManifold.mesh(M.triangles, tri_coords=coords, positions=M.positions,
                                 vertex_volumes=vol, n_vertices=M.n_vertices, meta=meta)
