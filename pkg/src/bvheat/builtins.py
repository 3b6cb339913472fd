"""Deterministic builtin manifolds and fields.

All builtins have unit total length (graphs) or unit total area (meshes)
unless a size is passed explicitly.
"""

from __future__ import annotations

import re

import numpy as np

from .geometry import DiscreteManifold, GeometryError


def cycle(n: int, length: float = 1.0) -> DiscreteManifold:
    """Circle of circumference ``length`` cut into ``n`` equal edges."""
    if n < 3:
        raise GeometryError("cycle needs at least 3 vertices")
    h = length / n
    idx = np.arange(n)
    edges = np.stack([idx, (idx + 1) % n], axis=1)
    return DiscreteManifold.graph(np.full(n, h), edges, np.full(n, h), np.full(n, h),
                                  positions=(idx * h)[:, None],
                                  meta={"builtin": f"cycle({n})", "period": length})


def path(n: int, length: float = 1.0) -> DiscreteManifold:
    """Interval of given length with ``n`` vertices; end vertices get half cells."""
    if n < 2:
        raise GeometryError("path needs at least 2 vertices")
    h = length / (n - 1)
    vol = np.full(n, h)
    vol[[0, -1]] = h / 2
    idx = np.arange(n)
    edges = np.stack([idx[:-1], idx[1:]], axis=1)
    return DiscreteManifold.graph(vol, edges, np.full(n - 1, h), np.full(n - 1, h),
                                  positions=(idx * h)[:, None], meta={"builtin": f"path({n})"})


def _grid_triangles(nx: int, ny: int):
    i, j = np.meshgrid(np.arange(nx), np.arange(ny), indexing="ij")
    i = i.ravel()
    j = j.ravel()

    def vid(a, b):
        return (a % nx) + nx * (b % ny)

    tri = np.concatenate([
        np.stack([vid(i, j), vid(i + 1, j), vid(i + 1, j + 1)], axis=1),
        np.stack([vid(i, j), vid(i + 1, j + 1), vid(i, j + 1)], axis=1),
    ])
    grid = np.concatenate([
        np.stack([np.stack([i, j], 1), np.stack([i + 1, j], 1), np.stack([i + 1, j + 1], 1)], axis=1),
        np.stack([np.stack([i, j], 1), np.stack([i + 1, j + 1], 1), np.stack([i, j + 1], 1)], axis=1),
    ]).astype(float)
    return tri, grid


def flat_torus(nx: int, ny: int | None = None) -> DiscreteManifold:
    """Unit square with periodic identifications, each cell split along its diagonal."""
    ny = nx if ny is None else ny
    if nx < 3 or ny < 3:
        raise GeometryError("flat_torus needs at least 3x3 cells")
    tri, grid = _grid_triangles(nx, ny)
    coords = grid / np.array([nx, ny])
    i, j = np.meshgrid(np.arange(nx), np.arange(ny), indexing="ij")
    pos = np.zeros((nx * ny, 2))
    pos[(i + nx * j).ravel()] = np.stack([i.ravel() / nx, j.ravel() / ny], axis=1)
    return DiscreteManifold.mesh(tri, tri_coords=coords, positions=pos,
                                 meta={"builtin": f"flat_torus({nx}x{ny})", "period": 1.0})


def parametric_torus(nu: int, nv: int | None = None, R: float = 1.0, r: float = 0.4,
                     metric: str = "embedded") -> DiscreteManifold:
    """Torus of revolution in R^3, scaled so the smooth surface has unit area.

    ``metric`` names the metric callback: ``embedded`` (induced metric) or
    ``flat`` (same combinatorics, flat unit square metric).
    """
    nv = nu if nv is None else nv
    if metric == "flat":
        return flat_torus(nu, nv)
    if metric != "embedded":
        raise GeometryError(f"unknown metric callback {metric!r}")
    s = 1.0 / np.sqrt(4 * np.pi ** 2 * R * r)
    tri, grid = _grid_triangles(nu, nv)
    u = 2 * np.pi * grid[..., 0] / nu
    v = 2 * np.pi * grid[..., 1] / nv
    pts = s * np.stack([(R + r * np.cos(v)) * np.cos(u), (R + r * np.cos(v)) * np.sin(u),
                        r * np.sin(v)], axis=-1)
    i, j = np.meshgrid(np.arange(nu), np.arange(nv), indexing="ij")
    pos = np.zeros((nu * nv, 2))
    pos[(i + nu * j).ravel()] = np.stack([i.ravel() / nu, j.ravel() / nv], axis=1)
    return DiscreteManifold.mesh(tri, tri_coords=pts, positions=pos,
                                 meta={"builtin": f"parametric_torus({nu}x{nv})",
                                       "R": R * s, "r": r * s, "period": 1.0})


def torus_gaussian_curvature(M: DiscreteManifold) -> np.ndarray:
    """Gaussian curvature of the embedded torus at the vertices of ``M``."""
    R, r = M.meta["R"], M.meta["r"]
    v = 2 * np.pi * M.positions[:, 1]
    return np.cos(v) / (r * (R + r * np.cos(v)))


# -- fields ---------------------------------------------------------------------


def _coord(M: DiscreteManifold, k: int = 0) -> np.ndarray:
    if M.positions is None:
        raise GeometryError("builtin field needs vertex positions")
    return M.positions[:, k]


def step(M: DiscreteManifold) -> np.ndarray:
    """Indicator of {x < 1/2}; on a cycle this is an arc with two unit jumps."""
    return (_coord(M) < 0.5 - 1e-12).astype(complex)


def sinusoid(M: DiscreteManifold) -> np.ndarray:
    return np.sin(2 * np.pi * _coord(M)).astype(complex)


def disk_indicator(M: DiscreteManifold, radius: float, center=(0.5, 0.5)) -> np.ndarray:
    """Indicator of the (periodic) disk of given radius around ``center``."""
    if M.positions is None or M.positions.shape[1] < 2:
        raise GeometryError("disk_indicator needs 2-D vertex positions")
    period = M.meta.get("period")
    d = M.positions[:, :2] - np.asarray(center)
    if period:
        d = d - period * np.round(d / period)
    return (np.hypot(d[:, 0], d[:, 1]) <= radius).astype(complex)


def random_field(M: DiscreteManifold, seed: int = 0, real: bool = False) -> np.ndarray:
    rng = np.random.default_rng(seed)
    f = rng.standard_normal(M.n_vertices)
    if real:
        return f.astype(complex)
    return f + 1j * rng.standard_normal(M.n_vertices)


_CALL = re.compile(r"^\s*([a-z_]+)\s*(?:\(\s*([^)]*)\s*\))?\s*$")


def _parse_call(spec: str):
    m = _CALL.match(spec)
    if not m:
        raise GeometryError(f"cannot parse builtin {spec!r}")
    name, args = m.group(1), m.group(2)
    parts = [a for a in re.split(r"[,x×]", args or "") if a.strip()]
    return name, parts


def generate_builtin(spec: str) -> DiscreteManifold:
    """Build a manifold from a spec string such as ``cycle(64)`` or ``flat_torus(16x16)``."""
    name, parts = _parse_call(spec)
    try:
        if name == "cycle":
            return cycle(int(parts[0]))
        if name == "path":
            return path(int(parts[0]))
        if name == "flat_torus":
            return flat_torus(*[int(p) for p in parts])
        if name == "parametric_torus":
            ints = [int(p) for p in parts if p.strip().isdigit()]
            ids = [p.strip() for p in parts if not p.strip().isdigit()]
            return parametric_torus(*ints, metric=ids[0] if ids else "embedded")
    except (IndexError, ValueError, TypeError) as exc:
        raise GeometryError(f"bad parameters for builtin {spec!r}: {exc}") from exc
    raise GeometryError(f"unknown builtin manifold {name!r}")


def generate_field(M: DiscreteManifold, spec: str, seed: int = 0) -> np.ndarray:
    """Builtin field from a spec string: ``step``, ``sinusoid``, ``disk_indicator(0.2)``, ``random(3)``."""
    name, parts = _parse_call(spec)
    if name == "step":
        return step(M)
    if name == "sinusoid":
        return sinusoid(M)
    if name == "disk_indicator":
        return disk_indicator(M, float(parts[0]) if parts else 0.2)
    if name == "random":
        return random_field(M, int(parts[0]) if parts else seed)
    raise GeometryError(f"unknown builtin field {name!r}")
