"""Fixture graphs, random instances and invariant checks shared by ``pamtree verify``
and the test suite.  Every generator is deterministic given its seed.
"""
from __future__ import annotations

import math

import numpy as np

from . import rng
from .excursions import excursion_decompose, reconstruct
from .graph import Graph, ball, homogeneous_tree
from .gw import OffspringLaw, sample_tree
from .potential import Island, IslandSet, binomial_upper_tail, chernoff_binomial, islands, sample_potential
from .spectral import principal_eigenpair, sandwich_bounds
from .solver import mass_bounds, solve_dirichlet, spectral_solution

FIXTURE_LAW = OffspringLaw("truncated-geometric", {"p": 0.5, "d_min": 2, "d_max": 4})


def fixture_graph(name, seed=4):
    """Small graphs used for the primal/dual comparison."""
    if name == "K2":
        return Graph.complete(2)
    if name == "P3":
        return Graph.path(3)
    if name == "star4":
        return Graph.star(4)
    if name == "T2-ball2":
        t = homogeneous_tree(2, 2)
        return t.induced(np.arange(t.n))
    if name == "GW-ball2":
        t = sample_tree(FIXTURE_LAW, 2, seed)
        return t.induced(np.arange(t.n))
    raise KeyError(name)


def random_instance(seed, max_size=60, depth=4):
    """A sampled tree, a ball ``Λ`` inside it (at most ``max_size`` vertices) and a potential ``q``."""
    gen = rng.stream(seed, "instance")
    tree = sample_tree(FIXTURE_LAW, depth, rng.derive_seed(seed, "tree"))
    center = int(gen.integers(tree.n))
    radius = int(gen.integers(0, 4))
    lam = ball(tree, center, radius)
    while len(lam) > max_size:
        radius -= 1
        lam = ball(tree, center, radius)
    q = sample_potential(tree.n, float(gen.uniform(0.5, 2.0)), rng.derive_seed(seed, "field")).xi
    return tree, lam, q


def sandwich_violations(n, seed, slack=1e-9):
    """Count of instances violating ``max_Γ q - deg(argmax) <= λ_Γ <= λ_Λ <= max_Λ q``."""
    bad = 0
    for k in range(n):
        tree, lam, q = random_instance(rng.derive_seed(seed, "sandwich", k))
        gen = rng.stream(seed, "gamma", k)
        keep = gen.random(len(lam)) < gen.uniform(0.2, 1.0)
        keep[gen.integers(len(lam))] = True
        gam = lam[keep]
        l_gam = principal_eigenpair(tree, gam, q).lam
        l_lam = principal_eigenpair(tree, lam, q).lam
        lo, _ = sandwich_bounds(tree, gam, q)
        _, hi = sandwich_bounds(tree, lam, q)
        if not (lo <= l_gam + slack and l_gam <= l_lam + slack and l_lam <= hi + slack):
            bad += 1
    return bad


def mass_sandwich_violations(n, seed, rel=1e-7):
    """Instances violating ``e^{tλ}φ(y)² <= u(y,t) <= U(t) <= e^{tλ}|Λ|^{1/2}`` (log form)."""
    bad = 0
    for k in range(n):
        s = rng.derive_seed(seed, "mass", k)
        tree, lam, q = random_instance(s)
        gen = rng.stream(s, "y-t")
        y = int(lam[gen.integers(len(lam))])
        t = float(gen.uniform(0.0, 3.0))
        sol = solve_dirichlet(tree, lam, q, y, t)
        log_uy = math.log(max(sol.at(y), 1e-300))
        log_U = math.log(sol.w.sum()) + sol.log_scale
        low, high = mass_bounds(tree, lam, q, y, t)
        tol = math.log1p(rel)
        if not (low <= log_uy + tol and log_uy <= log_U + tol and log_U <= high + tol):
            bad += 1
    return bad


def ode_spectral_relerr(n, seed):
    """Largest relative difference of ``u(·,t)`` between the ODE and spectral routes."""
    worst = 0.0
    for k in range(n):
        s = rng.derive_seed(seed, "cross", k)
        tree, lam, q = random_instance(s, max_size=100)
        gen = rng.stream(s, "y-t")
        y = int(lam[gen.integers(len(lam))])
        t = float(gen.uniform(0.1, 3.0))
        a = solve_dirichlet(tree, lam, q, y, t)
        b = spectral_solution(tree, lam, q, y, t)
        ua, ub = a.w * math.exp(a.log_scale - b.log_scale), b.w
        worst = max(worst, float(np.max(np.abs(ua - ub)) / np.max(np.abs(ub))))
    return worst


def chernoff_grid():
    """``(n, p, u, exact, bound)`` over ``n, u in 1..10`` and ``p in 0.05..0.95``."""
    rows = []
    for n in range(1, 11):
        for p in np.linspace(0.05, 0.95, 10):
            for u in range(1, 11):
                rows.append((n, float(p), u, binomial_upper_tail(n, float(p), u), chernoff_binomial(n, float(p), u)))
    return rows


def random_ball_path(tree, ball_vertices, length, gen, start=None):
    """Nearest-neighbour path of ``length`` steps staying in ``ball_vertices``."""
    inside = np.zeros(tree.n, dtype=bool)
    inside[ball_vertices] = True
    v = int(ball_vertices[gen.integers(len(ball_vertices))]) if start is None else int(start)
    path = [v]
    for _ in range(length):
        nb = tree.neighbors(v)
        nb = nb[inside[nb]]
        v = int(nb[gen.integers(len(nb))])
        path.append(v)
    return path


def decomposition_failures(n, seed, r=6, A=0.5, alpha=0.5):
    """Paths on sampled island sets whose pieces fail to rebuild the path or to re-decompose identically."""
    bad = 0
    for k in range(n):
        s = rng.derive_seed(seed, "decomp", k)
        gen = rng.stream(s, "path")
        tree = sample_tree(OffspringLaw.deterministic(2), r, s)
        fld = sample_potential(tree.n, 1.0, s)
        isl = islands(tree, fld, r, A, alpha)
        path = random_ball_path(tree, isl.ball, int(gen.integers(0, 40)), gen,
                                start=int(isl.Pi[0]) if len(isl.Pi) and gen.random() < 0.5 else None)
        dec = excursion_decompose(path, isl, fld)
        again = excursion_decompose(reconstruct(dec), isl, fld)
        if not np.array_equal(reconstruct(dec), np.asarray(path)) or again.pieces != dec.pieces:
            bad += 1
    return bad


def planted_island_fixture(xi_peak=9.5, rho=10.0, A=0.5):
    """15-vertex binary tree with one high peak at vertex 4 and zero potential elsewhere.

    ``Π = {4}`` and ``D`` is ``Π`` with its neighbours (``S_r = 1``).  The
    exceedance level uses ``L_r = 15`` and the given ``ρ``, so
    ``a_{L_r} = ρ log log 15 ≈ 9.96`` and ``ε a_{L_r} - A > 0`` at ``ε = 0.1``.
    """
    tree = homogeneous_tree(2, 3)
    xi = np.zeros(tree.n)
    xi[4] = xi_peak
    members = np.arange(tree.n)
    a = rho * math.log(math.log(tree.n))
    pi = members[xi > a - 2 * A]
    d = np.union1d(pi, tree.neighbors(4))
    isl = IslandSet(r=3, A=A, alpha=0.5, S_r=1.0, L_r=tree.n, a_Lr=a, ball=members, Pi=pi, D=d,
                    components=[Island(d, len(pi))])
    isl.compute_eigenvalues(tree, xi)
    return tree, xi, isl
