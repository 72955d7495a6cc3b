"""The parabolic Anderson model ``∂u = (Δ + ξ)u`` on finite vertex sets.

Deterministic routes (matrix exponential, implicit integration, spectral
representation) and Feynman-Kac Monte Carlo for the same quantities.  Masses
grow like ``e^{t max ξ}``, so solutions carry a log scale: the stored vector
``w`` satisfies ``u = e^{log_scale} w``.
"""
from __future__ import annotations

import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.integrate import solve_ivp
from scipy.linalg import expm
from scipy.sparse.linalg import expm_multiply
from scipy.special import logsumexp

from . import rng
from .errors import DomainError, InputError, ResourceError
from .spectral import _potential, _subset, full_spectrum, hamiltonian

DENSE_EXPM_CAP = 200
FK_BLOCK = 4096
DEFAULT_RTOL = 1e-8


@dataclass
class SolutionField:
    """``u(·, t)`` on ``subset`` started from ``δ_source``, stored as ``e^{log_scale}·w``."""

    w: np.ndarray
    log_scale: float
    t: float
    source: int
    subset: np.ndarray

    @property
    def u(self):
        return self.w * math.exp(self.log_scale)

    def at(self, v):
        i = np.searchsorted(self.subset, v)
        if i >= len(self.subset) or self.subset[i] != v:
            return 0.0
        return float(self.w[i] * math.exp(self.log_scale))

    def to_csv(self):
        rows = ["vertex,u"]
        rows.extend(f"{v},{x!r}" for v, x in zip(self.subset.tolist(), self.u.tolist()))
        return "\n".join(rows) + "\n"


def total_mass(sol):
    """``U(t) = Σ_x u(x, t)``."""
    return float(sol.w.sum() * math.exp(sol.log_scale))


def log_total_mass(sol):
    s = float(sol.w.sum())
    return -math.inf if s <= 0 else math.log(s) + sol.log_scale


def _setup(graph, subset, field, source, t):
    subset = _subset(graph, subset)
    xi = _potential(graph, field)
    if t < 0:
        raise InputError("t must be non-negative")
    pos = np.searchsorted(subset, source)
    if pos >= len(subset) or subset[pos] != source:
        raise InputError(f"source {source} is not in the subset")
    return subset, xi, int(pos)


def solve_dirichlet(graph, subset, field, source, t, method="expm", rtol=DEFAULT_RTOL, max_steps=10**6):
    """Solve the PAM on ``subset`` with zero boundary values outside it.

    ``method`` is ``"expm"`` (Krylov/Taylor action of the sparse matrix
    exponential), ``"implicit"`` (Radau IIA with the sparse Jacobian) or
    ``"dense"`` (full matrix exponential, at most 200 vertices).  The operator
    is shifted by ``c = max ξ`` on the subset so that the stored vector stays
    bounded; ``log_scale = c t``.
    """
    subset, xi, pos = _setup(graph, subset, field, source, t)
    h = hamiltonian(graph, subset, xi)
    n = len(subset)
    c = float(xi[subset].max())
    hs = (h - c * sp.identity(n, format="csr")).tocsr()
    u0 = np.zeros(n)
    u0[pos] = 1.0
    if t == 0:
        return SolutionField(u0, 0.0, 0.0, int(source), subset)
    if method == "dense":
        if n > DENSE_EXPM_CAP:
            raise ResourceError(f"dense exponential limited to {DENSE_EXPM_CAP} vertices, got {n}")
        w = expm(hs.toarray() * t)[:, pos]
    elif method == "expm":
        w = expm_multiply(hs * t, u0)
    elif method == "implicit":
        sol = solve_ivp(lambda _, y: hs @ y, (0.0, t), u0, method="Radau", jac=hs,
                        rtol=rtol, atol=rtol * 1e-6)
        if not sol.success or sol.t.size > max_steps:
            raise ResourceError(f"implicit integration failed: {sol.message}")
        w = sol.y[:, -1]
    else:
        raise InputError(f"unknown integration method {method!r}")
    return SolutionField(np.maximum(np.asarray(w, dtype=float), 0.0), c * t, float(t), int(source), subset)


def spectral_solution(graph, subset, field, source, t, cap=2000):
    """``u(x, t) = Σ_k e^{tλ_k} φ_k(source) φ_k(x)`` from the full eigensystem."""
    subset, xi, pos = _setup(graph, subset, field, source, t)
    spec = full_spectrum(graph, subset, xi, cap=cap)
    lam1 = float(spec.values[0])
    coef = np.exp(t * (spec.values - lam1)) * spec.vectors[pos]
    w = spec.vectors @ coef
    return SolutionField(np.maximum(w, 0.0), lam1 * t, float(t), int(source), subset)


@dataclass
class FKResult:
    mean: float
    stderr: float
    n: int
    seed: int
    log_mean: float

    def to_json(self):
        return json.dumps({"mean": self.mean, "stderr": self.stderr, "n": self.n, "seed": self.seed},
                          sort_keys=True)


def _walk_block(indptr, indices, degree, xi, inside, x, t, gamma, survival, n, gen, stop_on_exit):
    """Log-weights ``∫(ξ - γ)`` of ``n`` independent walks from ``x``.

    Walks run until time ``t`` (or until leaving ``inside`` when
    ``stop_on_exit``).  With ``survival`` a walk that leaves ``inside`` before
    ``t`` gets weight 0 (log-weight ``-inf``).
    """
    pos = np.full(n, x, dtype=np.int64)
    clock = np.zeros(n)
    logw = np.zeros(n)
    active = np.arange(n)
    while active.size:
        p = pos[active]
        hold = gen.standard_exponential(active.size) / degree[p]
        pick = gen.random(active.size)
        if stop_on_exit:
            logw[active] += (xi[p] - gamma) * hold
        else:
            dt = np.minimum(hold, t - clock[active])
            logw[active] += (xi[p] - gamma) * dt
            clock[active] += hold
            moving = clock[active] < t
            active, p, pick = active[moving], p[moving], pick[moving]
        deg = degree[p].astype(np.int64)
        nxt = indices[indptr[p] + np.minimum((pick * deg).astype(np.int64), deg - 1)]
        pos[active] = nxt
        if inside is not None:
            out = ~inside[nxt]
            if survival:
                logw[active[out]] = -np.inf
            active = active[~out]
    return logw


def _fk_block(args):
    graph_arrays, xi, inside, x, t, gamma, survival, n, seed, label, b, stop_on_exit = args
    indptr, indices, degree = graph_arrays
    gen = rng.stream(seed, label, b)
    return _walk_block(indptr, indices, degree, xi, inside, x, t, gamma, survival, n, gen, stop_on_exit)


def _run_blocks(graph, xi, inside, x, t, gamma, survival, n_paths, seed, label, workers, stop_on_exit):
    arrays = (graph.indptr, graph.indices, graph.degree.astype(float))
    sizes = [min(FK_BLOCK, n_paths - s) for s in range(0, n_paths, FK_BLOCK)]
    jobs = [(arrays, xi, inside, x, t, gamma, survival, m, seed, label, b, stop_on_exit)
            for b, m in enumerate(sizes)]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_fk_block, jobs))
    else:
        parts = [_fk_block(j) for j in jobs]
    return np.concatenate(parts) if parts else np.empty(0)


def _summarise(logw, seed):
    n = len(logw)
    if n == 0:
        raise InputError("need at least one path")
    finite = np.isfinite(logw)
    if not finite.any():
        return FKResult(0.0, 0.0, n, seed, -math.inf)
    shift = float(logw[finite].max())
    w = np.exp(logw - shift)
    mean_s = float(w.mean())
    sd_s = float(w.std(ddof=1)) if n > 1 else 0.0
    log_mean = math.log(mean_s) + shift if mean_s > 0 else -math.inf
    scale = math.exp(shift) if shift < 700 else math.inf
    return FKResult(mean_s * scale, sd_s / math.sqrt(n) * scale, n, int(seed), log_mean)


def fk_estimate(graph, subset, field, x, t, n_paths, seed, survival=True, gamma=0.0, workers=1):
    """Feynman-Kac estimate of ``E_x[exp ∫_0^t (ξ(X_s) - γ) ds · 1{τ > t}]``.

    ``X`` jumps at total rate ``deg(v)`` to a uniform neighbour.  With a
    ``subset`` and ``survival=True`` the indicator of never leaving the subset
    is included, which matches :func:`solve_dirichlet` summed over the subset.
    Paths are simulated in blocks of 4096 with one random stream per block, so
    the result depends on ``(seed, n_paths)`` only, not on ``workers``.
    """
    xi = _potential(graph, field)
    x = graph.check_vertex(x)
    inside = None
    if subset is not None:
        subset = _subset(graph, subset)
        inside = np.zeros(graph.n, dtype=bool)
        inside[subset] = True
        if not inside[x]:
            raise InputError("start vertex must lie in the subset")
    if t < 0:
        raise InputError("t must be non-negative")
    if np.any(graph.degree == 0) and graph.n > 1:
        raise InputError("walk needs every vertex to have a neighbour")
    if graph.n == 1:
        return FKResult(math.exp((xi[0] - gamma) * t), 0.0, int(n_paths), int(seed), (xi[0] - gamma) * t)
    logw = _run_blocks(graph, xi, inside, x, float(t), float(gamma), survival, int(n_paths),
                       seed, "fk", workers, False)
    return _summarise(logw, seed)


def fk_exit_estimate(graph, subset, field, y, gamma, n_paths, seed, workers=1):
    """Monte Carlo of ``E_y[exp ∫_0^τ (ξ(X_s) - γ) ds]`` with ``τ`` the exit time of ``subset``."""
    xi = _potential(graph, field)
    subset = _subset(graph, subset)
    inside = np.zeros(graph.n, dtype=bool)
    inside[subset] = True
    if not inside[graph.check_vertex(y)]:
        raise InputError("start vertex must lie in the subset")
    if inside.all():
        raise DomainError("the subset has no exterior; the exit time is infinite")
    logw = _run_blocks(graph, xi, inside, int(y), math.inf, float(gamma), False, int(n_paths),
                       seed, "fk-exit", workers, True)
    return _summarise(logw, seed)


def mass_bounds(graph, subset, field, y, t):
    """``(e^{tλ}φ(y)², e^{tλ}|Λ|^{1/2})`` in log form: lower bound on ``u(y,t)``, upper on ``U(t)``."""
    from .spectral import principal_eigenpair

    subset = _subset(graph, subset)
    pair = principal_eigenpair(graph, subset, _potential(graph, field))
    phi_y = pair.phi[np.searchsorted(subset, y)]
    low = t * pair.lam + (2 * math.log(phi_y) if phi_y > 0 else -math.inf)
    return low, t * pair.lam + 0.5 * math.log(len(subset))


def log_mean_stderr(values):
    """Mean and standard error of ``values`` given as logs, returned as logs.

    Uses a single log-sum-exp reduction so the result does not depend on the
    order of the inputs beyond floating-point summation order.
    """
    values = np.asarray(values, dtype=float)
    n = len(values)
    log_mean = float(logsumexp(values) - math.log(n))
    if n < 2:
        return log_mean, -math.inf
    dev = np.exp(values - log_mean) - 1.0
    rel = float(np.sqrt((dev * dev).sum() / (n - 1) / n))
    return log_mean, (math.log(rel) + log_mean) if rel > 0 else -math.inf
