import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from pamtree.checks import random_instance, sandwich_violations
from pamtree.errors import ConvergenceError, DomainError, InputError, ResourceError
from pamtree.graph import Graph, ball, components, homogeneous_tree
from pamtree.gw import OffspringLaw, sample_tree
from pamtree.potential import PotentialField, sample_potential
from pamtree.solver import fk_exit_estimate
from pamtree.spectral import (exit_mass_bound, exit_mass_exact, full_spectrum, hamiltonian, power_iteration,
                              principal_eigenpair, sandwich_bounds)


def test_singleton_eigenpair(binary_tree):
    q = np.zeros(binary_tree.n)
    q[5] = 2.5
    pair = principal_eigenpair(binary_tree, [5], q)
    assert pair.lam == pytest.approx(2.5 - 3)
    assert pair.phi.tolist() == [1.0]


def test_two_vertex_complete_graph():
    g = Graph.complete(2)
    pair = principal_eigenpair(g, [0, 1], np.zeros(2))
    assert pair.lam == pytest.approx(0.0, abs=1e-14)
    assert np.allclose(pair.phi, [1 / math.sqrt(2)] * 2)
    spec = full_spectrum(g, [0, 1], np.zeros(2))
    assert np.allclose(spec.values, [0.0, -2.0])


def test_hamiltonian_uses_full_degree(binary_tree):
    h = hamiltonian(binary_tree, [1, 3, 4], np.zeros(binary_tree.n)).toarray()
    assert np.array_equal(np.diag(h), [-3, -3, -3])
    assert h[0, 1] == 1 and h[1, 2] == 0


@pytest.mark.parametrize("method", ["dense", "lanczos", "power"])
def test_methods_match_dense_spectrum(method):
    law = OffspringLaw("truncated-geometric", {"p": 0.5, "d_min": 2, "d_max": 3})
    for seed in range(5):
        t = sample_tree(law, 5, seed)
        lam = ball(t, 0, 3)[:50]
        lam = max(components(t, lam), key=len)
        q = np.random.default_rng(seed).normal(size=t.n)
        top = full_spectrum(t, lam, q).values[0]
        pair = principal_eigenpair(t, lam, q, method=method)
        assert pair.lam == pytest.approx(top, abs=1e-8)
        assert pair.residual <= 1e-4
        assert np.linalg.norm(pair.phi) == pytest.approx(1.0)
        assert pair.phi.min() >= 0


def test_principal_eigenpair_fifty_vertex_tree():
    t = homogeneous_tree(2, 5)
    lam = np.arange(50)
    q = np.random.default_rng(1).normal(size=t.n)
    dense = np.linalg.eigvalsh(hamiltonian(t, lam, q).toarray())[-1]
    assert principal_eigenpair(t, lam, q).lam == pytest.approx(dense, abs=1e-8)


def test_full_spectrum_orthonormal_and_parseval():
    tree, lam, q = random_instance(3, max_size=80)
    spec = full_spectrum(tree, lam, q)
    v = spec.vectors
    assert np.allclose(v.T @ v, np.eye(len(lam)), atol=1e-8)
    assert np.allclose(v @ v.T, np.eye(len(lam)), atol=1e-8)
    assert np.all(np.diff(spec.values) <= 0)
    assert len(list(spec)) == len(lam)


def test_full_spectrum_singleton_and_cap(binary_tree):
    q = np.zeros(binary_tree.n)
    spec = full_spectrum(binary_tree, [0], q)
    assert spec.values.tolist() == [-2.0]
    with pytest.raises(ResourceError):
        full_spectrum(binary_tree, np.arange(10), q, cap=5)


def test_full_spectrum_disk_cache(tmp_path, monkeypatch):
    monkeypatch.setenv("PAMTREE_CACHE_DIR", str(tmp_path))
    tree, lam, q = random_instance(5)
    a = full_spectrum(tree, lam, q)
    assert len(list(tmp_path.iterdir())) == 1
    b = full_spectrum(tree, lam, q)
    assert np.array_equal(a.values, b.values) and np.array_equal(a.vectors, b.vectors)


def test_input_errors(binary_tree):
    with pytest.raises(InputError):
        principal_eigenpair(binary_tree, [], np.zeros(binary_tree.n))
    with pytest.raises(InputError):
        principal_eigenpair(binary_tree, [0], np.zeros(3))
    with pytest.raises(InputError):
        principal_eigenpair(binary_tree, [0, 1], np.full(binary_tree.n, np.inf))


def test_power_iteration_nonconvergence_carries_residual():
    h = np.diag([1.0, 1.0 - 1e-9, 0.0]) + 0.0
    with pytest.raises(ConvergenceError) as err:
        power_iteration(h, tol=1e-300, max_iter=5, v0=np.array([0.1, 1.0, 1.0]))
    assert err.value.iterations == 5 and err.value.residual is not None


def test_sandwich_bounds_tie_break():
    g = Graph.star(3)
    q = np.array([1.0, 1.0, 0.0, 0.0])
    lo, hi = sandwich_bounds(g, [0, 1, 2, 3], q)
    assert (lo, hi) == (1.0 - 3, 1.0)  # argmax goes to vertex 0 with degree 3


def test_sandwich_on_random_instances():
    assert sandwich_violations(200, seed=1) == 0


@given(st.integers(0, 10**6), st.floats(-50, 50))
def test_shift_covariance(seed, c):
    tree, lam, q = random_instance(seed)
    a = principal_eigenpair(tree, lam, q).lam
    b = principal_eigenpair(tree, lam, q + c).lam
    assert b == pytest.approx(a + c, abs=1e-10 * max(1, abs(c)))


@given(st.integers(0, 10**6))
def test_monotone_in_potential(seed):
    tree, lam, q = random_instance(seed)
    bump = np.abs(np.random.default_rng(seed).normal(size=tree.n))
    assert principal_eigenpair(tree, lam, q).lam <= principal_eigenpair(tree, lam, q + bump).lam + 1e-9


@given(st.integers(0, 10**6))
def test_positive_eigenfunction_on_connected_sets(seed):
    tree, lam, q = random_instance(seed)
    comp = max(components(tree, lam), key=len)
    assert principal_eigenpair(tree, comp, q).phi.min() > 0


def test_exit_mass_bound_examples():
    assert exit_mass_bound(3, 10, 6.0, 1.0) == pytest.approx(7.0)
    assert exit_mass_bound(3, 10, math.inf, 1.0) == 1.0
    assert exit_mass_bound(3, 10, 1e12, 1.0) == pytest.approx(1.0, abs=1e-9)
    with pytest.raises(DomainError):
        exit_mass_bound(3, 10, 1.0, 1.0)


def test_exit_mass_monte_carlo_below_bound():
    t = homogeneous_tree(2, 4)
    lam = np.array([0, 1, 2, 3, 4])
    field = sample_potential(t.n, 1.0, seed=2)
    l1 = principal_eigenpair(t, lam, field).lam
    gamma = l1 + 1.0
    deg = int(t.degree[lam].max())
    bound = exit_mass_bound(deg, len(lam), gamma, l1)
    exact = exit_mass_exact(t, lam, field, gamma)
    assert np.all(exact <= bound)
    mc = fk_exit_estimate(t, lam, field, 0, gamma, 20_000, seed=0)
    assert abs(mc.mean - exact[0]) <= 4 * mc.stderr
    assert mc.mean <= bound


def test_exit_mass_exact_zero_potential_is_one():
    t = homogeneous_tree(2, 3)
    v = exit_mass_exact(t, [0, 1, 2], PotentialField.constant(t.n), 0.0 + 1e-12)
    # with ξ = γ ≈ 0 the integrand is ~0, so the mass is ~1
    assert np.allclose(v, 1.0, atol=1e-9)
