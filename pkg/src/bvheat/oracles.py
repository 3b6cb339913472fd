"""Independent reference computations used by tests and the acceptance battery.

Everything here is built from explicit loops over edges, triangles or atom
partitions and never calls the matrices assembled in :mod:`bvheat.geometry`.
"""

from __future__ import annotations

import itertools

import numpy as np
import scipy.linalg as la
from scipy.optimize import linprog

from .geometry import DiscreteManifold


def two_vertex_curve(t):
    """V(t) for f = (1, 0) on the two-vertex graph with unit weights: exp(-t)."""
    return np.exp(-np.asarray(t, dtype=float))


def edge_differences(M: DiscreteManifold, f) -> np.ndarray:
    f = np.asarray(f)
    return np.array([f[b] - f[a] for a, b in M.edges])


def dual_objective_coefficients(M: DiscreteManifold, f) -> np.ndarray:
    """c_e with <f, d^dagger alpha> = sum_e c_e alpha_e for real f and real alpha.

    The pairing sum_v vol_v f_v (d^dagger alpha)_v is expanded edge by edge.
    """
    f = np.real(np.asarray(f))
    c = np.zeros(M.n_edges)
    for e, (a, b) in enumerate(M.edges):
        wc = M.edge_volumes[e] / M.edge_lengths[e] ** 2
        # (d^dagger alpha)_a gets -wc alpha_e / vol_a, (d^dagger alpha)_b gets +wc alpha_e / vol_b
        c[e] = M.vertex_volumes[a] * f[a] * (-wc / M.vertex_volumes[a]) \
            + M.vertex_volumes[b] * f[b] * (wc / M.vertex_volumes[b])
    return c


def dual_bruteforce(M: DiscreteManifold, f) -> float:
    """max over the corners of [-1/l_e, 1/l_e]^E of the linear dual objective (real f).

    The fiber norm of an edge value is |alpha_e| / l_e, so the dual ball is a box.
    """
    if M.n_edges > 20:
        raise ValueError("corner enumeration is limited to 20 edges")
    c = dual_objective_coefficients(M, f) * M.edge_lengths
    best = 0.0
    for signs in itertools.product((-1.0, 1.0), repeat=M.n_edges):
        best = max(best, abs(float(np.dot(c, signs))))
    return best


def dual_linprog(M: DiscreteManifold, f) -> float:
    c = dual_objective_coefficients(M, f)
    bounds = [(-l, l) for l in M.edge_lengths]
    res = linprog(-c, bounds=bounds, method="highs")
    if not res.success:
        raise RuntimeError(res.message)
    return float(-res.fun)


def graph_catalog(seed: int = 7):
    """Connected graphs with at most 5 vertices and random positive weights."""
    rng = np.random.default_rng(seed)
    shapes = {
        "K2": [(0, 1)],
        "P3": [(0, 1), (1, 2)],
        "C3": [(0, 1), (1, 2), (0, 2)],
        "P4": [(0, 1), (1, 2), (2, 3)],
        "star4": [(0, 1), (0, 2), (0, 3)],
        "C4": [(0, 1), (1, 2), (2, 3), (0, 3)],
        "paw": [(0, 1), (1, 2), (0, 2), (2, 3)],
        "K4": list(itertools.combinations(range(4), 2)),
        "P5": [(0, 1), (1, 2), (2, 3), (3, 4)],
        "C5": [(0, 1), (1, 2), (2, 3), (3, 4), (0, 4)],
        "bull": [(0, 1), (1, 2), (0, 2), (1, 3), (2, 4)],
        "K23": [(0, 2), (0, 3), (0, 4), (1, 2), (1, 3), (1, 4)],
        "K5": list(itertools.combinations(range(5), 2)),
    }
    out = []
    for name, edges in shapes.items():
        n = 1 + max(max(e) for e in edges)
        E = len(edges)
        M = DiscreteManifold.graph(rng.uniform(0.5, 2.0, n), np.array(edges),
                                   rng.uniform(0.5, 2.0, E), rng.uniform(0.5, 2.0, E),
                                   meta={"catalog": name})
        out.append((name, M))
    return out


def dense_graph_generator(M: DiscreteManifold) -> np.ndarray:
    """H = (1/2) vol^{-1} sum_e (w_e / l_e^2)(1_b - 1_a)(1_b - 1_a)^T, by an edge loop."""
    n = M.n_vertices
    S = np.zeros((n, n))
    for e, (a, b) in enumerate(M.edges):
        k = M.edge_volumes[e] / M.edge_lengths[e] ** 2
        S[a, a] += k
        S[b, b] += k
        S[a, b] -= k
        S[b, a] -= k
    return 0.5 * S / M.vertex_volumes[:, None]


def dense_mesh_generator(M: DiscreteManifold) -> np.ndarray:
    """Cotangent stiffness from per-triangle angles, halved and divided by vertex volume."""
    n = M.n_vertices
    S = np.zeros((n, n))
    for tri, X in zip(M.triangles, M.tri_coords):
        for k in range(3):
            i, j = tri[(k + 1) % 3], tri[(k + 2) % 3]
            u = X[(k + 1) % 3] - X[k]
            v = X[(k + 2) % 3] - X[k]
            cot = float(np.dot(u, v) / abs(u[0] * v[1] - u[1] * v[0]))
            S[i, j] -= cot / 2
            S[j, i] -= cot / 2
            S[i, i] += cot / 2
            S[j, j] += cot / 2
    return 0.5 * S / M.vertex_volumes[:, None]


def schrodinger_expm(H: np.ndarray, v, t: float) -> np.ndarray:
    """exp(-t (H - diag v)) as a dense matrix."""
    return la.expm(-t * (H - np.diag(np.asarray(v, dtype=float))))


def p1_gradients(M: DiscreteManifold, f) -> np.ndarray:
    """Per-triangle gradient of the P1 interpolant by a 2x2 solve in local coordinates."""
    f = np.asarray(f)
    out = np.zeros((len(M.triangles), 2), dtype=np.result_type(f, float))
    for t, (tri, X) in enumerate(zip(M.triangles, M.tri_coords)):
        A = np.array([X[1] - X[0], X[2] - X[0]])
        out[t] = np.linalg.solve(A, np.array([f[tri[1]] - f[tri[0]], f[tri[2]] - f[tri[0]]]))
    return out


def set_partitions(items):
    """All partitions of a list (Bell-number many)."""
    items = list(items)
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for p in set_partitions(rest):
        for i in range(len(p)):
            yield p[:i] + [[first] + p[i]] + p[i + 1:]
        yield [[first]] + p


def total_variation_partitions(atoms: dict) -> float:
    """sup over partitions of the atom set of sum_B |nu(B)|."""
    best = 0.0
    for p in set_partitions(sorted(atoms)):
        best = max(best, sum(float(np.linalg.norm(sum(atoms[k] for k in B))) for B in p))
    return best
