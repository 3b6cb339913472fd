"""The acceptance battery: fifteen numbered checks with their tolerances.

Each check returns a :class:`CheckResult`. ``run_all`` runs a selection and
``format_line`` renders the one-line summary printed by the test suite and
the ``suite`` CLI task.
"""

from __future__ import annotations

import time
from dataclasses import asdict, dataclass, field

import numpy as np

from . import builtins as bi
from . import oracles
from .curvature import (build_oneform_heat, conformal_perturbation, domination_check)
from .geometry import (DiscreteManifold, codifferential, l1_norm, rescale_metric, site_norm,
                       vertex_inner)
from .heat import build_heat_operator
from .stochastic import (build_walk, feynman_kac, feynman_kac_exact, kasminskii_certify,
                         kato_modulus)
from .variation import (coupled_schedule, default_schedule, measure_pair_apply, polar_decompose,
                        richardson, schedule_down_to, variation_dual, variation_gradient_l1,
                        variation_heatflow)
from .vecmeasure import (FiniteVectorMeasure, complex_to_real, total_variation)


@dataclass
class CheckResult:
    number: int
    name: str
    passed: bool
    value: float
    tolerance: float
    method: str
    detail: dict = field(default_factory=dict)
    runtime: float = 0.0

    def to_dict(self, timings: bool = False) -> dict:
        d = asdict(self)
        if not timings:
            d.pop("runtime")
        return d


def format_line(r: CheckResult) -> str:
    status = "PASS" if r.passed else "FAIL"
    return f"[{status}] {r.number:2d} {r.name}: value={r.value:.6g} tol={r.tolerance:.3g} ({r.method})"


def suite_fields():
    """(label, manifold, field) triples shared by the checks on suite fields."""
    out = []
    C = bi.cycle(64)
    out += [("cycle64/step", C, bi.step(C)), ("cycle64/sinusoid", C, bi.sinusoid(C)),
            ("cycle64/random", C, bi.random_field(C, 1))]
    P = bi.path(65)
    out += [("path65/random", P, bi.random_field(P, 2)), ("path65/step", P, bi.step(P))]
    T = bi.flat_torus(16, 16)
    out += [("torus16/disk", T, bi.disk_indicator(T, 0.2)), ("torus16/random", T, bi.random_field(T, 3))]
    return out


def _rel(a, b):
    return abs(a - b) / (1.0 + abs(b))


# 1 ---------------------------------------------------------------------------


def check_duality(n_fields: int = 50, seed: int = 0) -> CheckResult:
    rng = np.random.default_rng(seed)
    mans = [bi.cycle(64), bi.path(65), bi.flat_torus(16, 16)]
    worst, unconverged = 0.0, 0
    for k in range(n_fields):
        M = mans[k % 3]
        f = rng.standard_normal(M.n_vertices) + 1j * rng.standard_normal(M.n_vertices)
        d = variation_dual(M, f)
        g = variation_gradient_l1(M, f).value
        worst = max(worst, _rel(d.value, g))
        unconverged += not d.diagnostics["converged"]
    return CheckResult(1, "duality dual = l1", worst <= 1e-8, worst, 1e-8, "relative gap",
                       {"fields": n_fields, "unconverged": unconverged})


# 2 ---------------------------------------------------------------------------


def check_exhaustive_dual(fields_per_graph: int = 3, seed: int = 1) -> CheckResult:
    rng = np.random.default_rng(seed)
    worst, rows = 0.0, []
    for name, M in oracles.graph_catalog():
        for _ in range(fields_per_graph):
            f = rng.standard_normal(M.n_vertices)
            d = variation_dual(M, f).value
            bf = oracles.dual_bruteforce(M, f)
            lp = oracles.dual_linprog(M, f)
            err = max(abs(d - bf), abs(d - lp))
            worst = max(worst, err)
        rows.append(name)
    return CheckResult(2, "dual vs brute force / LP", worst <= 1e-6, worst, 1e-6,
                       "corner enumeration and linprog", {"graphs": rows})


# 3 ---------------------------------------------------------------------------


def two_vertex_graph() -> DiscreteManifold:
    return DiscreteManifold.graph([1.0, 1.0], [[0, 1]], [1.0], [1.0])


def check_two_vertex() -> CheckResult:
    M = two_vertex_graph()
    Hop = build_heat_operator(M)
    f = np.array([1.0, 0.0])
    ts = np.array([1.0, 0.5, 0.1, 0.01])
    c = variation_heatflow(M, Hop, f, ts)
    err = float(np.abs(c.values - oracles.two_vertex_curve(ts)).max())
    lim = variation_heatflow(M, Hop, f, default_schedule(M)).limit
    ok = err <= 1e-10 and abs(lim - 1.0) <= 1e-6
    return CheckResult(3, "two-vertex V(t) = exp(-t)", ok, err, 1e-10, "spectral, closed form",
                       {"limit": lim, "limit_error": abs(lim - 1.0), "limit_tol": 1e-6})


# 4 ---------------------------------------------------------------------------


def check_cycle_jump(n: int = 512) -> CheckResult:
    M = bi.cycle(n)
    Hop = build_heat_operator(M)
    f = bi.step(M)
    ts = schedule_down_to(M.diameter ** 2 / 16.0, M.mesh_size ** 2)
    c = variation_heatflow(M, Hop, f, ts)
    err = abs(c.limit - 2.0) / 2.0
    return CheckResult(4, "cycle arc jump limit = 2", err <= 0.01, c.limit, 0.01,
                       "spectral, Richardson", {"relative_error": err, "n_times": len(ts),
                                                "last_value": c.limit_last})


# 5 ---------------------------------------------------------------------------


def check_perimeter(n: int = 256, radius: float = 0.2, c: float = 1.0, levels: int = 2,
                    steps: int = 64) -> CheckResult:
    M = bi.flat_torus(n, n)
    f = bi.disk_indicator(M, radius)
    Hop = build_heat_operator(M, "implicit_stepper", steps=steps)
    curve = variation_heatflow(M, Hop, f, coupled_schedule(M.mesh_size, c, levels))
    target = 2 * np.pi * radius
    err = abs(curve.limit - target) / target
    return CheckResult(5, "disk perimeter 2 pi r", err <= 0.03, curve.limit, 0.03,
                       "Crank-Nicolson, coupled t = c h, Richardson",
                       {"relative_error": err, "target": target, "times": curve.times.tolist(),
                        "values": curve.values.tolist()})


# 6 ---------------------------------------------------------------------------


def check_lower_bound_all_t() -> CheckResult:
    """Var(f) <= V(t) + 1e-9 at every schedule time, as literally stated.

    Heat flow lowers the variation, so this fails for t > 0 on any field with
    nonzero variation; the t -> 0 form is :func:`check_lower_bound_liminf`.
    """
    worst = -np.inf
    for label, M, f in suite_fields():
        Hop = build_heat_operator(M)
        var = variation_gradient_l1(M, f).value
        c = variation_heatflow(M, Hop, f)
        worst = max(worst, float(np.max(var - c.values)))
    return CheckResult(6, "Var(f) <= V(t) for every t", worst <= 1e-9, worst, 1e-9,
                       "max deficit over schedule", {})


def _liminf_sequence(M, Hop, f, t0: float = 1e-2, t_min: float = 1e-13):
    """Values along t_k = t0 2^-k and the t -> 0 limit read off the tail.

    The deficit Var(f) - V(t) is linear in t near 0 (it halves with t), so
    the tail limit is taken by Richardson extrapolation rather than by the
    last value.
    """
    ts = schedule_down_to(t0, t_min)
    vals = np.array([variation_gradient_l1(M, Hop.apply(f, t)).value for t in ts])
    dist = np.array([l1_norm(M, Hop.apply(f, t) - f) for t in ts])
    return ts, vals, dist, richardson(ts, vals)


def check_lower_bound_liminf() -> CheckResult:
    """Var(f) <= liminf_{t->0} V(t) + 1e-9, the liminf read off the tail of t_k -> 0."""
    worst = -np.inf
    for label, M, f in suite_fields():
        Hop = build_heat_operator(M)
        var = variation_gradient_l1(M, f).value
        ts, vals, _, lim = _liminf_sequence(M, Hop, f)
        worst = max(worst, var - lim)
    return CheckResult(6, "Var(f) <= liminf V(t) as t -> 0", worst <= 1e-9, worst, 1e-9,
                       "Richardson tail limit, t_k down to 1e-13", {})


# 7 ---------------------------------------------------------------------------


def check_polar(n_alpha: int = 100, seed: int = 4) -> CheckResult:
    rng = np.random.default_rng(seed)
    pair_err = mass_err = unit_err = 0.0
    for label, M, f in suite_fields():
        nu = polar_decompose(M, f)
        var = variation_gradient_l1(M, f).value
        mass_err = max(mass_err, abs(nu.total_mass - var))
        sup = nu.support
        if len(sup):
            unit_err = max(unit_err, float(np.abs(site_norm(M, nu.sigma)[sup] - 1.0).max()))
        for _ in range(n_alpha):
            a = rng.standard_normal(M.site_shape) + 1j * rng.standard_normal(M.site_shape)
            lhs = vertex_inner(M, f, codifferential(M, a))
            pair_err = max(pair_err, abs(lhs - measure_pair_apply(nu, a)))
    worst = max(pair_err, mass_err, unit_err)
    return CheckResult(7, "polar decomposition", worst <= 1e-12, worst, 1e-12, "direct",
                       {"pairing": pair_err, "mass": mass_err, "unit": unit_err})


# 8 ---------------------------------------------------------------------------


def check_kato_kasminskii(n_samples: int = 100_000, seed: int = 8, c: float = 0.7) -> CheckResult:
    M = bi.cycle(16)
    Hop = build_heat_operator(M)
    ts = np.array([1e-3, 0.01, 0.1, 0.5, 1.0, 2.0])
    rep = kato_modulus(M, Hop, np.full(16, c), ts)
    kato_err = float(np.abs(rep.modulus - c * ts).max())
    W = build_walk(M, Hop)
    # constant potential: the walk is vertex-transitive, one start suffices
    cert_c = kasminskii_certify(W, Hop, np.full(16, c), 2.0, [0.5, 1.0, 2.0], n_samples, seed,
                                starts=[0])
    s = cert_c.s
    analytic = bool(np.exp(c * s) <= 1.0 / (1.0 - c * s)) and abs(cert_c.modulus_at_s - c * s) <= 1e-10
    v = np.zeros(16)
    v[0] = 16.0
    cert_s = kasminskii_certify(W, Hop, v, 2.0, [0.5, 1.0, 2.0], n_samples, seed + 1)
    ok = kato_err <= 1e-10 and analytic and cert_c.valid and cert_c.khasminskii_ok \
        and cert_s.valid and cert_s.khasminskii_ok
    margin = float(np.max(cert_s.sup_upper / cert_s.bound))
    return CheckResult(8, "Kato modulus and Kas'minskii certificate", ok, kato_err, 1e-10,
                       "spectral modulus, MC 99% CI",
                       {"constant": cert_c.to_dict(), "spike": cert_s.to_dict(),
                        "analytic_ok": analytic, "spike_upper_over_bound": margin})


# 9 ---------------------------------------------------------------------------


def fk_instances():
    """Small instances for the Feynman-Kac oracle comparison."""
    out = []
    C = bi.cycle(8)
    v = np.zeros(8)
    v[2] = 8.0
    out.append(("cycle8/spike", build_walk(C, build_heat_operator(C)), v, None))
    P = bi.path(10)
    Wp = build_walk(P, build_heat_operator(P), {"cemetery": [0, 9]})
    out.append(("path10/cemetery", Wp, np.linspace(0.0, 3.0, 10), None))
    rng = np.random.default_rng(9)
    name, K = oracles.graph_catalog()[-1]
    Wk = build_walk(K, build_heat_operator(K), rng.uniform(0.0, 0.5, K.n_vertices))
    out.append((f"{name}/killed", Wk, rng.uniform(0.0, 1.0, K.n_vertices), rng.uniform(0.5, 2.0, K.n_vertices)))
    return out


def check_feynman_kac(n_samples: int = 100_000, seed: int = 9) -> CheckResult:
    ts = np.array([0.5, 1.0])
    inst = fk_instances()
    n_tests = sum(W.n for _, W, _, _ in inst) * len(ts)
    misses, worst, rows = 0, 0.0, []
    for label, W, v, g in inst:
        est = feynman_kac(W, v, ts, n_samples, seed=seed, terminal=g, n_tests=n_tests)
        exact = np.stack([feynman_kac_exact(W, v, t, g) for t in ts], axis=1)
        inside = (exact >= est.lower - 1e-12) & (exact <= est.upper + 1e-12)
        misses += int((~inside).sum())
        worst = max(worst, float(np.max(np.abs(est.mean - exact) / np.maximum(exact, 1e-300))))
        rows.append(label)
    return CheckResult(9, "Feynman-Kac MC vs matrix exponential", misses == 0, float(misses), 0.0,
                       "99% CI, Bonferroni", {"instances": rows, "max_rel_error": worst,
                                              "cells": n_tests})


# 10 ---------------------------------------------------------------------------


def check_commutation(seed: int = 10) -> CheckResult:
    M = bi.flat_torus(16, 16)
    op = build_oneform_heat(M)
    Hop = build_heat_operator(M)
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(3):
        h = rng.standard_normal(M.n_vertices) + 1j * rng.standard_normal(M.n_vertices)
        for t in (0.01, 0.1, 1.0):
            diff = op.apply(op.d0 @ h, t) - op.d0 @ Hop.apply(h, t)
            worst = max(worst, float(np.abs(diff).max()))
    return CheckResult(10, "exp(-tH1) d = d exp(-tH)", worst <= 1e-10, worst, 1e-10,
                       "Whitney forms, generalised eigh", {})


# 11 ---------------------------------------------------------------------------


def check_domination(n_samples: int = 100_000, seed: int = 11) -> CheckResult:
    M = bi.cycle(16)
    x = np.arange(16) / 16
    w2 = 0.5 + 0.5 * np.sin(2 * np.pi * x) ** 2
    op = build_oneform_heat(M, -w2)
    rng = np.random.default_rng(seed)
    alpha = (rng.standard_normal(16) + 1j * rng.standard_normal(16)) * M.edge_lengths
    rep = domination_check(op, w2, alpha, [0.1, 1.0], n_samples, seed=seed)
    ratio = float(np.max(rep.lhs / rep.upper))
    return CheckResult(11, "semigroup domination", rep.ok, float(len(rep.violations)), 0.0,
                       "MC majorant, 99% CI, Bonferroni", {"max_lhs_over_upper": ratio})


# 12 ---------------------------------------------------------------------------


def check_conformal(n: int = 1000, seed: int = 12) -> CheckResult:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n):
        A = rng.standard_normal((2, 2))
        g = A @ A.T + 0.1 * np.eye(2)
        Hs = rng.standard_normal((2, 2))
        Hs = Hs + Hs.T
        dpsi = rng.standard_normal(2)
        lap = float(rng.standard_normal())
        T = conformal_perturbation(2, g, dpsi, Hs, lap)
        worst = max(worst, float(np.abs(T + lap * g).max()))
    e1 = np.array([1.0, 0.0, 0.0])
    T3 = conformal_perturbation(3, np.eye(3), e1, np.zeros((3, 3)), 0.0)
    err3 = float(np.abs(T3 - (np.outer(e1, e1) - np.eye(3))).max())
    worst = max(worst, err3)
    return CheckResult(12, "conformal perturbation algebra", worst <= 1e-14, worst, 1e-14,
                       "pointwise formula", {"m3_error": err3})


# 13 ---------------------------------------------------------------------------


def check_scaling(seed: int = 13) -> CheckResult:
    worst = 0.0
    for label, M, f in suite_fields():
        base = variation_gradient_l1(M, f).value
        for c in (0.5, 2.0):
            Mc = rescale_metric(M, np.log(c))
            v = variation_gradient_l1(Mc, f).value
            worst = max(worst, _rel(v, c ** (M.dimension - 1) * base))
    return CheckResult(13, "Var scales by c^(m-1)", worst <= 1e-12, worst, 1e-12, "relative", {})


# 14 ---------------------------------------------------------------------------


def random_measure(rng, n_atoms: int, dim: int, complex_: bool = True) -> FiniteVectorMeasure:
    atoms = {}
    for k in rng.choice(1000, size=n_atoms, replace=False):
        v = rng.standard_normal(dim)
        if complex_:
            v = v + 1j * rng.standard_normal(dim)
        atoms[int(k)] = v
    return FiniteVectorMeasure(atoms, dim)


def check_isometry(n: int = 200, seed: int = 14) -> CheckResult:
    rng = np.random.default_rng(seed)
    iso = 0.0
    for _ in range(n):
        nu = random_measure(rng, int(rng.integers(1, 8)), int(rng.integers(1, 4)))
        iso = max(iso, abs(total_variation(nu) - total_variation(complex_to_real(nu))))
    part = 0.0
    for _ in range(30):
        nu = random_measure(rng, int(rng.integers(1, 5)), int(rng.integers(1, 3)))
        part = max(part, abs(total_variation(nu) - oracles.total_variation_partitions(nu.atoms)))
    worst = max(iso, part)
    return CheckResult(14, "C^m -> R^2m isometry", worst <= 1e-14, worst, 1e-14,
                       "direct and partition oracle", {"isometry": iso, "partition": part})


# 15 ---------------------------------------------------------------------------


def check_lsc() -> CheckResult:
    worst_lsc, worst_conv, worst_l1 = -np.inf, 0.0, 0.0
    monotone = True
    for label, M, f in suite_fields():
        Hop = build_heat_operator(M)
        var = variation_gradient_l1(M, f).value
        ts, vals, dist, lim = _liminf_sequence(M, Hop, f)
        worst_lsc = max(worst_lsc, var - lim)
        worst_conv = max(worst_conv, abs(lim - var) / (1 + var))
        worst_l1 = max(worst_l1, float(dist[-1]))
        gap = np.abs(vals - var)
        monotone &= bool(np.all(np.diff(gap) <= 1e-12 * (1 + var)))
    ok = worst_lsc <= 1e-9 and worst_conv <= 1e-9 and worst_l1 <= 1e-9 and monotone
    return CheckResult(15, "lower semicontinuity along exp(-t_n H) f", ok, worst_lsc, 1e-9,
                       "heat-mollified sequence to t = 1e-13, Richardson tail limit",
                       {"var_convergence": worst_conv, "l1_distance": worst_l1,
                        "gap_monotone": monotone})


CHECKS = {
    1: check_duality, 2: check_exhaustive_dual, 3: check_two_vertex, 4: check_cycle_jump,
    5: check_perimeter, 6: check_lower_bound_all_t, 7: check_polar, 8: check_kato_kasminskii,
    9: check_feynman_kac, 10: check_commutation, 11: check_domination, 12: check_conformal,
    13: check_scaling, 14: check_isometry, 15: check_lsc,
}


def run_check(k: int, **kwargs) -> CheckResult:
    t0 = time.perf_counter()
    r = CHECKS[k](**kwargs)
    r.runtime = time.perf_counter() - t0
    return r


def run_all(selection=None) -> list:
    out = []
    for k in sorted(CHECKS) if selection is None else selection:
        out.append(run_check(k))
        if k == 6:
            t0 = time.perf_counter()
            r = check_lower_bound_liminf()
            r.runtime = time.perf_counter() - t0
            out.append(r)
    return out


__all__ = ["CheckResult", "CHECKS", "run_all", "run_check", "format_line", "suite_fields",
           "check_lower_bound_liminf"]
