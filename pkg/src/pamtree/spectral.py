"""Dirichlet spectra of the Anderson Hamiltonian ``Δ + q`` on finite vertex sets.

The operator on ``Λ`` has diagonal ``q(x) - deg(x)`` with the degree taken in
the full host graph, and unit off-diagonal entries for edges inside ``Λ``.
Potential values of ``-∞`` are not represented; shrink ``Λ`` instead.
"""
from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import eigsh, spsolve

from .errors import ConvergenceError, DomainError, InputError, ResourceError

DENSE_CAP = 2000
TOL = 1e-10
MAX_ITER = 100_000


def _subset(graph, subset):
    subset = np.unique(np.asarray(subset, dtype=np.int64))
    if subset.size == 0:
        raise InputError("subset must be non-empty")
    if subset[0] < 0 or subset[-1] >= graph.n:
        raise InputError("subset contains invalid vertex ids")
    return subset


def _potential(graph, q):
    q = getattr(q, "xi", q)
    q = np.asarray(q, dtype=float)
    if q.shape != (graph.n,):
        raise InputError(f"q must have one value per graph vertex ({graph.n}), got shape {q.shape}")
    return q


def hamiltonian(graph, subset, q):
    """Sparse Dirichlet matrix of ``Δ + q`` on ``subset`` (rows in subset order)."""
    subset = _subset(graph, subset)
    q = _potential(graph, q)
    qs = q[subset]
    if not np.all(np.isfinite(qs)):
        raise InputError("q must be finite on the subset")
    adj = graph.adjacency()[subset][:, subset]
    return (adj + sp.diags(qs - graph.degree[subset])).tocsr()


@dataclass
class EigenPair:
    lam: float
    phi: np.ndarray
    vertices: np.ndarray
    residual: float

    def as_dict(self):
        return {"lambda": self.lam, "vertices": self.vertices.tolist(),
                "phi": self.phi.tolist(), "residual": self.residual}

    def to_json(self):
        return json.dumps(self.as_dict(), sort_keys=True)


def _finish(h, lam, v, vertices):
    v = np.abs(np.asarray(v, dtype=float).ravel())
    v /= np.linalg.norm(v)
    residual = float(np.linalg.norm(h @ v - lam * v))
    return EigenPair(float(lam), v, vertices, residual)


def power_iteration(h, tol=TOL, max_iter=MAX_ITER, v0=None):
    """Top eigenpair of a symmetric matrix by shifted power iteration.

    The shift ``c = 1 + max_x (Σ_{y≠x} |h_xy| - h_xx)`` comes from the
    Gershgorin discs and makes ``h + c`` positive definite, so its dominant
    eigenvalue is the top eigenvalue of ``h``.
    """
    h = sp.csr_matrix(h)
    n = h.shape[0]
    diag = h.diagonal()
    off = np.asarray(abs(h).sum(axis=1)).ravel() - np.abs(diag)
    shift = float(np.max(off - diag)) + 1.0
    v = np.ones(n) if v0 is None else np.abs(np.asarray(v0, dtype=float)) + 1e-12
    v /= np.linalg.norm(v)
    lam_old = np.inf
    for it in range(1, max_iter + 1):
        w = h @ v
        lam = float(v @ w)
        w += shift * v
        v = w / np.linalg.norm(w)
        if abs(lam - lam_old) < tol:
            return lam, v, it
        lam_old = lam
    res = float(np.linalg.norm(h @ v - (v @ (h @ v)) * v))
    raise ConvergenceError(f"power iteration did not converge in {max_iter} steps", residual=res, iterations=max_iter)


def principal_eigenpair(graph, subset, q, method="auto", tol=TOL, max_iter=MAX_ITER, v0=None):
    """Principal Dirichlet eigenpair ``(λ_Λ(q), φ)`` with ``φ >= 0``, ``||φ||_2 = 1``.

    ``method`` is ``"dense"``, ``"lanczos"``, ``"power"`` or ``"auto"`` (dense
    up to :data:`DENSE_CAP` vertices, Lanczos beyond).
    """
    subset = _subset(graph, subset)
    h = hamiltonian(graph, subset, q)
    n = len(subset)
    if method == "auto":
        method = "dense" if n <= DENSE_CAP else "lanczos"
    if n == 1:
        return _finish(h, h[0, 0], np.ones(1), subset)
    if method == "dense":
        w, v = np.linalg.eigh(h.toarray())
        return _finish(h, w[-1], v[:, -1], subset)
    if method == "lanczos":
        start = None if v0 is None else np.abs(np.asarray(v0, dtype=float)) + 1e-12
        try:
            w, v = eigsh(h, k=1, which="LA", tol=tol * 1e-2, v0=start, maxiter=max_iter)
        except Exception as exc:  # ArpackNoConvergence carries partial results
            raise ConvergenceError(f"Lanczos failed: {exc}") from exc
        return _finish(h, w[0], v[:, 0], subset)
    if method == "power":
        lam, v, _ = power_iteration(h, tol=tol, max_iter=max_iter, v0=v0)
        pair = _finish(h, lam, v, subset)
        pair.lam = float(pair.phi @ (h @ pair.phi))
        return pair
    raise InputError(f"unknown eigen method {method!r}")


@dataclass
class Spectrum:
    """All eigenpairs of the Dirichlet operator, eigenvalues descending."""

    values: np.ndarray
    vectors: np.ndarray  # column k is φ^(k)
    vertices: np.ndarray

    def __len__(self):
        return len(self.values)

    def __iter__(self):
        for k in range(len(self.values)):
            yield self.pair(k)

    def pair(self, k):
        v = self.vectors[:, k]
        if k == 0:
            v = np.abs(v)
        return EigenPair(float(self.values[k]), v, self.vertices, float("nan"))


def _cache_path(h):
    root = os.environ.get("PAMTREE_CACHE_DIR")
    if not root:
        return None
    dense = np.ascontiguousarray(h)
    key = hashlib.sha256(dense.tobytes() + str(dense.shape).encode()).hexdigest()
    return os.path.join(root, f"eigh-{key}.npz")


def full_spectrum(graph, subset, q, cap=DENSE_CAP):
    """Complete orthonormal eigensystem of the Dirichlet operator on ``subset``.

    Decompositions are memoised on disk when ``PAMTREE_CACHE_DIR`` is set.
    """
    subset = _subset(graph, subset)
    if len(subset) > cap:
        raise ResourceError(f"subset of size {len(subset)} exceeds the dense cap {cap}")
    h = hamiltonian(graph, subset, q).toarray()
    path = _cache_path(h)
    if path and os.path.exists(path):
        with np.load(path) as data:
            return Spectrum(data["values"], data["vectors"], subset)
    w, v = np.linalg.eigh(h)
    w, v = w[::-1].copy(), v[:, ::-1].copy()
    if path:
        os.makedirs(os.path.dirname(path), exist_ok=True)
        tmp = path + f".{os.getpid()}.tmp.npz"
        np.savez(tmp, values=w, vectors=v)
        os.replace(tmp, path)
    return Spectrum(w, v, subset)


def sandwich_bounds(graph, subset, q):
    """Lower and upper bounds ``max q - deg(argmax q)`` and ``max q`` on ``λ_Λ(q)``.

    Ties in the argmax go to the smallest vertex id.
    """
    subset = _subset(graph, subset)
    q = _potential(graph, q)
    qs = q[subset]
    z = subset[int(np.argmax(qs))]
    return float(q[z] - graph.degree[z]), float(qs.max())


def exit_mass_bound(deg_bound, set_size, gamma, lam):
    """``1 + deg_bound·|Λ| / (γ - λ_Λ)``: bound on the mass collected before leaving ``Λ``."""
    if not gamma > lam:
        raise DomainError("gamma must exceed the principal eigenvalue")
    if np.isinf(gamma):
        return 1.0
    return 1.0 + deg_bound * set_size / (gamma - lam)


def exit_mass_exact(graph, subset, xi, gamma):
    """``E_y[exp ∫_0^τ (ξ(X_s) - γ) ds]`` for every ``y`` in ``subset``, ``τ`` the exit time.

    Solves ``(Δ + ξ - γ) v = γ - ξ`` on ``subset`` with zero boundary values and
    returns ``1 + v``.
    """
    subset = _subset(graph, subset)
    xi = _potential(graph, xi)
    h = hamiltonian(graph, subset, xi)
    lam = principal_eigenpair(graph, subset, xi).lam
    if not gamma > lam:
        raise DomainError("gamma must exceed the principal eigenvalue")
    a = (h - gamma * sp.identity(len(subset))).tocsc()
    v = spsolve(a, gamma - xi[subset])
    return 1.0 + np.atleast_1d(v)
