"""The characteristic constant ``χ_G(ϱ) = inf_p [I_E(p) + ϱ J_V(p)]``.

Two independent routes are provided:

* :func:`chi_primal` minimises the Dirichlet-form-plus-entropy objective over
  probability vectors written as ``p = φ²`` with ``||φ||_2 = 1``;
* :func:`chi_dual` maximises the principal eigenvalue ``λ_Λ(q)`` over profiles
  with ``Σ e^{q/ϱ} <= 1``.

On a finite graph both give the same number.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize
from scipy.special import logsumexp, xlogy

from . import rng
from .errors import ConvergenceError, InputError, ResourceError
from .graph import ball, homogeneous_tree
from .spectral import principal_eigenpair

Q_FLOOR = -700.0


def functionals(graph, p):
    """``(I_E(p), J_V(p))`` for a probability vector ``p`` on the vertices."""
    p = np.asarray(p, dtype=float)
    if p.shape != (graph.n,) or np.any(p < 0) or abs(p.sum() - 1) > 1e-12:
        raise InputError("p must be a probability vector over the graph vertices")
    s = np.sqrt(p)
    d = s[graph.edges[:, 0]] - s[graph.edges[:, 1]]
    return float(d @ d), float(-xlogy(p, p).sum())


def log_partition(q, rho):
    """``log ℒ(q) = log Σ_x e^{q(x)/ϱ}``."""
    return float(logsumexp(np.asarray(q, dtype=float) / rho))


def normalize_profile(q, rho):
    """Shift ``q`` by ``-ϱ log ℒ(q)`` so that ``ℒ = 1``; ``λ`` shifts by the same amount."""
    q = np.asarray(q, dtype=float)
    return q - rho * log_partition(q, rho)


@dataclass
class ChiResult:
    chi: float
    argument: np.ndarray  # p for the primal, q for the dual
    values: list  # best value per restart
    trace: list  # (restart, iteration, value)


def _primal_objective(graph, rho):
    lap_edges = graph.edges

    def f(y):
        norm = np.linalg.norm(y)
        phi = y / norm
        d = phi[lap_edges[:, 0]] - phi[lap_edges[:, 1]]
        p = phi * phi
        value = d @ d - rho * xlogy(p, p).sum()
        # gradient in φ, then through the normalisation y -> y/|y|
        g = np.zeros_like(phi)
        np.add.at(g, lap_edges[:, 0], 2 * d)
        np.add.at(g, lap_edges[:, 1], -2 * d)
        g -= rho * 2 * phi * (np.log(np.where(p > 0, p, 1.0)) + 1.0) * (p > 0)
        g = (g - (g @ phi) * phi) / norm
        return float(value), g

    return f


def _primal_starts(graph, restarts, seed):
    n = graph.n
    starts = [np.ones(n)]
    for v in np.flatnonzero(graph.degree == graph.degree.min())[: max(1, restarts // 3)]:
        p = np.full(n, 0.1 / max(n - 1, 1))
        p[v] = 0.9 if n > 1 else 1.0
        starts.append(np.sqrt(p))
    gen = rng.stream(seed, "chi-primal")
    while len(starts) < restarts:
        starts.append(np.sqrt(gen.dirichlet(np.ones(n))))
    return starts[:max(restarts, 1)]


def chi_primal(graph, rho, restarts=10, seed=0, tol=1e-12, trace=False):
    """Best value of ``I_E(p) + ϱ J_V(p)`` over a multi-start search on the sphere.

    Each start is a point ``y`` on which ``φ = y / ||y||`` is optimised by
    L-BFGS; ``p = φ²`` is returned for the best run.
    """
    if rho <= 0:
        raise InputError("rho must be positive")
    if graph.n == 1:
        return ChiResult(0.0, np.ones(1), [0.0], [])
    f = _primal_objective(graph, rho)
    best, values, tr = None, [], []
    for i, y0 in enumerate(_primal_starts(graph, restarts, seed)):
        hist = []
        cb = (lambda xk, i=i, hist=hist: hist.append(f(xk)[0])) if trace else None
        res = optimize.minimize(f, y0, jac=True, method="L-BFGS-B", callback=cb,
                                options={"ftol": tol, "gtol": 1e-10, "maxiter": 20000})
        # polish with the sign-free representative |φ|
        res = optimize.minimize(f, np.abs(res.x), jac=True, method="L-BFGS-B",
                                options={"ftol": tol, "gtol": 1e-10, "maxiter": 20000})
        if not np.isfinite(res.fun):
            raise ConvergenceError("primal objective became non-finite")
        values.append(float(res.fun))
        tr.extend((i, k, v) for k, v in enumerate(hist))
        if best is None or res.fun < best.fun:
            best = res
    phi = best.x / np.linalg.norm(best.x)
    return ChiResult(float(best.fun), phi * phi, values, tr)


def _dual_starts(graph, subset, rho, restarts, seed):
    n = len(subset)
    starts = [np.zeros(n)]
    deg = graph.degree[subset]
    for j in np.flatnonzero(deg == deg.min())[: max(1, restarts // 3)]:
        p = np.full(n, 0.1 / max(n - 1, 1))
        p[j] = 0.9 if n > 1 else 1.0
        starts.append(rho * np.log(p))
    gen = rng.stream(seed, "chi-dual")
    while len(starts) < restarts:
        starts.append(rho * np.log(gen.dirichlet(np.ones(n))))
    return starts[:max(restarts, 1)]


def dual_ascent(graph, subset, rho, q0, tol=1e-8, window=50, max_iter=20000, method="auto"):
    """Maximise ``λ_Λ(q) - ϱ log ℒ(q)`` starting from ``q0`` (on ``subset``).

    Each step replaces ``q`` by ``ϱ log φ²`` where ``φ`` is the current principal
    eigenfunction: for fixed ``φ`` this is the exact maximiser of
    ``Σ q φ² - ϱ log ℒ(q)``, and it already satisfies ``ℒ = 1``, so the
    objective never decreases.  Stops once the gain over ``window`` steps falls
    below ``tol``.  Returns ``(value, q, history)``.
    """
    subset = np.asarray(subset, dtype=np.int64)
    full = np.zeros(graph.n)
    q = normalize_profile(q0, rho)
    history = []
    phi = None
    for _ in range(max_iter):
        full[subset] = np.maximum(q, Q_FLOOR)
        pair = principal_eigenpair(graph, subset, full, method=method, v0=phi)
        phi = pair.phi
        history.append(pair.lam - rho * log_partition(q, rho))
        if len(history) > window and history[-1] - history[-1 - window] < tol:
            break
        with np.errstate(divide="ignore"):
            q = normalize_profile(rho * np.log(phi * phi), rho)
    else:
        raise ConvergenceError("dual ascent did not settle", residual=history[-1] - history[-1 - window])
    best = int(np.argmax(history))
    return history[best], q, history


def chi_dual(graph, subset, rho, restarts=3, seed=0, tol=1e-8, method="auto"):
    """``χ̂_Λ = -sup{λ_Λ(q) : ℒ(q) <= 1}`` by multi-start fixed-point ascent.

    Returns a :class:`ChiResult` whose ``argument`` is the maximising profile on
    ``subset`` (normalised to ``ℒ = 1``).
    """
    if rho <= 0:
        raise InputError("rho must be positive")
    subset = np.unique(np.asarray(subset, dtype=np.int64))
    best_val, best_q, values, tr = -np.inf, None, [], []
    for i, q0 in enumerate(_dual_starts(graph, subset, rho, restarts, seed)):
        val, q, hist = dual_ascent(graph, subset, rho, q0, tol=tol, method=method)
        values.append(-val)
        tr.extend((i, k, -v) for k, v in enumerate(hist))
        if val > best_val:
            best_val, best_q = val, q
    return ChiResult(-best_val, best_q, values, tr)


def chi_tilde_truncated(d_min, rho, radii, restarts=1, tol=1e-9, max_vertices=200_000):
    """``χ̂`` of the ball ``Q_R`` in the homogeneous tree with ``d_min`` children per vertex.

    Returns a list of ``(R, value)``.  The truncated tree has depth ``R + 1`` so
    that every vertex of ``Q_R`` carries its full degree.
    """
    radii = [int(r) for r in radii]
    if any(b <= a for a, b in zip(radii, radii[1:])):
        raise InputError("radii must be strictly increasing")
    out = []
    q_prev = None
    for R in radii:
        size = sum(d_min**k for k in range(R + 2))
        if size > max_vertices:
            raise ResourceError(f"Q_{R} of T_{d_min} needs {size} vertices (cap {max_vertices})")
        tree = homogeneous_tree(d_min, R + 1)
        q_ball = ball(tree, 0, R)
        n = len(q_ball)
        starts = [np.zeros(n)]
        if q_prev is not None:
            # warm start: previous optimiser, low values on the new shell
            q0 = np.full(n, q_prev.min() - rho * math.log(d_min))
            q0[: len(q_prev)] = q_prev
            starts.append(q0)
        best = None
        for q0 in starts[: max(restarts, len(starts))]:
            val, q, _ = dual_ascent(tree, q_ball, rho, q0, tol=tol)
            if best is None or val > best[0]:
                best = (val, q)
        q_prev = best[1]
        out.append((R, -best[0]))
    return out


def chi_tilde_regime(d_min, rho):
    """Whether ``ϱ >= 1/log(d_min + 1)``, where ``χ̃`` equals ``χ`` of ``T_{d_min}``."""
    return rho >= 1.0 / math.log(d_min + 1)
