import json
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from pamtree.checks import mass_sandwich_violations, ode_spectral_relerr, random_instance
from pamtree.errors import InputError, ResourceError
from pamtree.graph import Graph, ball, homogeneous_tree
from pamtree.potential import PotentialField, sample_potential
from pamtree.solver import (fk_estimate, log_mean_stderr, log_total_mass, mass_bounds, solve_dirichlet,
                            spectral_solution, total_mass)
from pamtree.spectral import principal_eigenpair

METHODS = ["expm", "implicit", "dense"]


@pytest.mark.parametrize("method", METHODS)
def test_time_zero_is_indicator(method, binary_tree):
    f = sample_potential(binary_tree.n, 1.0, 0)
    sol = solve_dirichlet(binary_tree, np.arange(10), f, 3, 0.0, method=method)
    assert sol.u.tolist() == [0, 0, 0, 1, 0, 0, 0, 0, 0, 0]
    assert total_mass(sol) == 1.0
    assert spectral_solution(binary_tree, np.arange(10), f, 3, 0.0).u == pytest.approx(sol.u, abs=1e-12)


@pytest.mark.parametrize("method", METHODS)
def test_singleton_scalar_ode(method, binary_tree):
    xi = np.zeros(binary_tree.n)
    xi[5] = 1.7
    for t in (0.3, 2.0):
        want = math.exp((1.7 - 3) * t)
        assert solve_dirichlet(binary_tree, [5], xi, 5, t, method=method).at(5) == pytest.approx(want, rel=1e-8)
        assert spectral_solution(binary_tree, [5], xi, 5, t).at(5) == pytest.approx(want, rel=1e-12)


@pytest.mark.parametrize("method", METHODS)
def test_two_vertex_closed_form(method):
    g = Graph.complete(2)
    for t in (0.1, 1.0, 3.0):
        sol = solve_dirichlet(g, [0, 1], np.zeros(2), 0, t, method=method)
        assert sol.at(0) == pytest.approx((1 + math.exp(-2 * t)) / 2, rel=1e-8)
        assert total_mass(sol) == pytest.approx(1.0, abs=1e-9)


def test_mass_conservation_on_whole_graph():
    g = homogeneous_tree(2, 4)
    sol = solve_dirichlet(g, np.arange(g.n), np.zeros(g.n), 0, 2.5)
    assert total_mass(sol) == pytest.approx(1.0, abs=1e-9)


def test_ode_matches_spectral():
    assert ode_spectral_relerr(30, seed=2) <= 1e-7


@pytest.mark.parametrize("method", ["implicit", "dense"])
def test_integrators_agree(method):
    tree, lam, q = random_instance(9, max_size=50)
    a = solve_dirichlet(tree, lam, q, int(lam[0]), 1.3)
    b = solve_dirichlet(tree, lam, q, int(lam[0]), 1.3, method=method)
    assert np.allclose(a.u, b.u, rtol=1e-6, atol=1e-12 * a.u.max())


def test_log_scale_handles_large_masses():
    t = homogeneous_tree(2, 3)
    xi = np.full(t.n, 40.0)
    sol = solve_dirichlet(t, np.arange(t.n), xi, 0, 30.0)
    assert math.isfinite(log_total_mass(sol))
    assert log_total_mass(sol) > 700  # beyond double range without the log scale


def test_mass_sandwich():
    assert mass_sandwich_violations(40, seed=3) == 0


def test_mass_bounds_singleton_tight(binary_tree):
    xi = np.zeros(binary_tree.n)
    lo, hi = mass_bounds(binary_tree, [5], xi, 5, 2.0)
    assert lo == pytest.approx(-6.0) and hi == pytest.approx(-6.0)


def test_fk_zero_potential_free_walk():
    g = homogeneous_tree(2, 5)
    res = fk_estimate(g, None, np.zeros(g.n), 0, 1.5, 1000, seed=0, survival=False)
    assert res.mean == 1.0 and res.stderr == 0.0


def test_fk_singleton_survival(binary_tree):
    xi = np.zeros(binary_tree.n)
    xi[5] = 1.2
    t = 0.7
    res = fk_estimate(binary_tree, [5], xi, 5, t, 40_000, seed=1)
    want = math.exp((1.2 - 3) * t)
    assert abs(res.mean - want) <= 3 * res.stderr


def test_fk_matches_ode_on_twenty_vertex_ball():
    t = homogeneous_tree(2, 6)
    lam = ball(t, 0, 3)[:20]
    f = sample_potential(t.n, 1.0, 4)
    ode = total_mass(solve_dirichlet(t, lam, f, 0, 1.0))
    mc = fk_estimate(t, lam, f, 0, 1.0, 20_000, seed=5)
    assert abs(mc.mean - ode) <= 3 * mc.stderr


def test_fk_deterministic_and_worker_independent():
    t = homogeneous_tree(2, 5)
    f = sample_potential(t.n, 1.0, 4)
    a = fk_estimate(t, ball(t, 0, 3), f, 0, 1.0, 10_000, seed=7, workers=1)
    b = fk_estimate(t, ball(t, 0, 3), f, 0, 1.0, 10_000, seed=7, workers=2)
    assert a.to_json() == b.to_json()
    assert set(json.loads(a.to_json())) == {"mean", "stderr", "n", "seed"}


def test_solution_csv():
    sol = solve_dirichlet(Graph.complete(2), [0, 1], np.zeros(2), 1, 0.0)
    assert sol.to_csv() == "vertex,u\n0,0.0\n1,1.0\n"


def test_input_errors(binary_tree):
    f = PotentialField.constant(binary_tree.n)
    with pytest.raises(InputError):
        solve_dirichlet(binary_tree, [1, 2], f, 0, 1.0)
    with pytest.raises(InputError):
        solve_dirichlet(binary_tree, [0], f, 0, -1.0)
    with pytest.raises(InputError):
        solve_dirichlet(binary_tree, [0], f, 0, 1.0, method="euler")
    with pytest.raises(ResourceError):
        solve_dirichlet(homogeneous_tree(2, 8), np.arange(300), np.zeros(511), 0, 1.0, method="dense")


@given(st.integers(0, 10**6), st.floats(0.0, 3.0))
def test_solution_nonnegative_and_below_spectral_bound(seed, t):
    tree, lam, q = random_instance(seed)
    y = int(lam[0])
    sol = solve_dirichlet(tree, lam, q, y, t)
    assert np.all(sol.w >= 0)
    lam1 = principal_eigenpair(tree, lam, q).lam
    assert log_total_mass(sol) <= t * lam1 + 0.5 * math.log(len(lam)) + 1e-7


def test_log_mean_stderr_matches_direct():
    vals = np.random.default_rng(0).normal(size=500)
    lm, ls = log_mean_stderr(vals)
    w = np.exp(vals)
    assert lm == pytest.approx(math.log(w.mean()))
    assert ls == pytest.approx(math.log(w.std(ddof=1) / math.sqrt(len(w))))
