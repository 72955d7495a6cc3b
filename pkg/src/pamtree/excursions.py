"""Path evaluation and the excursion decomposition of nearest-neighbour paths.

A path ``π = (π_0, ..., π_ℓ)`` that meets the high-exceedance set ``Π`` splits
uniquely into

    check_1, hat_1, check_2, hat_2, ..., check_m, hat_m, bar

where each check piece runs outside ``Π`` until it first hits ``Π``, each hat
piece runs inside the island set ``D`` until it first leaves ``D``, and the
terminal bar piece stays outside ``Π``.  Consecutive pieces share endpoints.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import rng
from .errors import DomainError, InputError


@dataclass
class PathTrace:
    """A nearest-neighbour path with optional jump times and decomposition."""

    vertices: np.ndarray
    times: np.ndarray | None = None
    m: int | None = None
    s: int | None = None
    k: int | None = None
    pieces: list = field(default_factory=list)  # (kind, start, stop), inclusive indices

    def __post_init__(self):
        self.vertices = np.asarray(self.vertices, dtype=np.int64)
        if self.vertices.ndim != 1 or self.vertices.size == 0:
            raise InputError("a path needs at least one vertex")
        if self.times is not None:
            self.times = np.asarray(self.times, dtype=float)
            if len(self.times) != len(self.vertices) or self.times[0] != 0 or np.any(np.diff(self.times) <= 0):
                raise InputError("jump times must start at 0, increase, and match the vertices")

    def __len__(self):
        """Number of steps ``|π|``."""
        return len(self.vertices) - 1

    def check_adjacent(self, graph):
        for a, b in zip(self.vertices[:-1].tolist(), self.vertices[1:].tolist()):
            if b not in set(graph.neighbors(a).tolist()):
                raise InputError(f"vertices {a} and {b} are not adjacent")
        return self

    def piece(self, i):
        kind, a, b = self.pieces[i]
        return kind, self.vertices[a:b + 1]


def path_product(path, field, degrees, gamma):
    """``Π_{i<ℓ} deg(π_i) / (γ - ξ(π_i) + deg(π_i))``.

    Equals ``E[exp ∫_0^{T_ℓ} (ξ(X_s) - γ) ds | jump chain = π]`` where ``T_ℓ``
    is the time of the ``ℓ``-th jump.
    """
    v = np.asarray(getattr(path, "vertices", path), dtype=np.int64)[:-1]
    xi = np.asarray(getattr(field, "xi", field), dtype=float)[v]
    deg = np.asarray(degrees, dtype=float)[v]
    if v.size == 0:
        return 1.0
    denom = gamma - xi + deg
    if np.any(denom <= 0):
        raise DomainError("gamma must exceed ξ - deg at every vertex left by the path")
    return float(np.exp(np.sum(np.log(deg) - np.log(denom))))


def conditional_path_mc(path, field, degrees, gamma, n, seed):
    """Monte Carlo of the path-evaluation expectation with Exp(deg) holding times.

    Returns ``(mean, stderr)``.
    """
    v = np.asarray(getattr(path, "vertices", path), dtype=np.int64)[:-1]
    if v.size == 0:
        return 1.0, 0.0
    xi = np.asarray(getattr(field, "xi", field), dtype=float)[v]
    deg = np.asarray(degrees, dtype=float)[v]
    gen = rng.stream(seed, "path-mc")
    hold = gen.standard_exponential((int(n), v.size)) / deg
    w = np.exp(hold @ (xi - gamma))
    return float(w.mean()), float(w.std(ddof=1) / math.sqrt(n))


def _low_count(vertices, xi, level):
    """``M^{r,ε}`` of a piece: indices ``i < |piece|`` with ``ξ(π_i) <= level``."""
    return int(np.count_nonzero(xi[vertices[:-1]] <= level))


def excursion_decompose(path, islands, field, eps=0.1):
    """Fill ``m``, ``s``, ``k`` and the piece list of ``path`` (returned as a new trace).

    ``islands`` supplies ``Π``, ``D`` and ``a_{L_r}``; ``k`` counts points with
    ``ξ <= (1 - ε) a_{L_r}`` on check pieces and the bar piece, excluding each
    piece's last vertex.
    """
    trace = path if isinstance(path, PathTrace) else PathTrace(path)
    v = trace.vertices
    xi = np.asarray(getattr(field, "xi", field), dtype=float)
    if not np.isin(v, islands.ball).all():
        raise InputError("the path must stay inside the ball of the island set")
    in_pi = np.isin(v, islands.Pi)
    in_d = np.isin(v, islands.D)
    level = (1 - eps) * islands.a_Lr
    ell = len(v) - 1
    out = PathTrace(v, trace.times)
    if not in_pi.any():
        out.m, out.s, out.k = 0, ell, _low_count(v, xi, level)
        out.pieces = [("bar", 0, ell)]
        return out
    pieces, i, m = [], 0, 0
    while True:
        j = i + int(np.argmax(in_pi[i:]))  # first hit of Π at or after i
        pieces.append(("check", i, j))
        m += 1
        rest = ~in_d[j + 1:]
        if not rest.any():
            pieces.append(("hat", j, ell))
            pieces.append(("bar", ell, ell))
            break
        h = j + 1 + int(np.argmax(rest))  # first exit from D
        pieces.append(("hat", j, h))
        if not in_pi[h:].any():
            pieces.append(("bar", h, ell))
            break
        i = h
    out.pieces = pieces
    out.m = m
    outer = [(a, b) for kind, a, b in pieces if kind != "hat"]
    out.s = sum(b - a for a, b in outer)
    out.k = sum(_low_count(v[a:b + 1], xi, level) for a, b in outer)
    return out


def reconstruct(trace):
    """Concatenate the pieces of a decomposed path (shared endpoints counted once)."""
    if not trace.pieces:
        return trace.vertices.copy()
    parts = [trace.vertices[trace.pieces[0][1]:trace.pieces[0][2] + 1]]
    last = parts[0][-1]
    for _, a, b in trace.pieces[1:]:
        seg = trace.vertices[a:b + 1]
        if seg[0] != last:
            raise InputError("pieces do not share endpoints")
        parts.append(seg[1:])
        last = seg[-1]
    return np.concatenate(parts)


def equivalence_key(trace):
    """Data that determines the equivalence class: ``m``, the check pieces and the bar piece."""
    v = trace.vertices
    outer = tuple((kind, tuple(v[a:b + 1].tolist())) for kind, a, b in trace.pieces if kind != "hat")
    return trace.m, outer


def _excursion_constants(r, A, eps, rho, L_r, delta_r):
    from .potential import exceedance_threshold

    a = exceedance_threshold(L_r, rho)
    a_eps = eps * a - A
    if a_eps <= 0:
        raise DomainError(f"ε a_Lr - A = {a_eps:.4g} must be positive")
    db = math.log(r) ** delta_r
    q = 1.0 / (1.0 + A / db)
    return a, a_eps, db, q


def excursion_mass_bound(ell, M, r, A, eps, rho, L_r, delta_r):
    """``q^ℓ exp(M log[(log r)^{δ_r} / (a_{L_r,A,ε} q)])`` with ``q = (1 + A/(log r)^{δ_r})^{-1}``."""
    _, a_eps, db, q = _excursion_constants(r, A, eps, rho, L_r, delta_r)
    return math.exp(ell * math.log(q) + M * math.log(db / (a_eps * q)))


def class_mass_bound(m, s, k, C_rA, gamma, lambda_rA, r, A, eps, rho, L_r, delta_r):
    """Bound on the Feynman-Kac mass of one equivalence class of paths.

    ``(C^{1/2})^{1{m>0}} (1 + (log r)^{δ_r} C/(γ - λ))^m (q/(log r)^{δ_r})^s
    exp(k log[(log r)^{δ_r} / (a_{L_r,A,ε} q)])``.  For ``m = 0`` the island
    eigenvalue ``λ`` is ``-∞`` and only ``γ > a_{L_r} - A`` is required.
    """
    a, a_eps, db, q = _excursion_constants(r, A, eps, rho, L_r, delta_r)
    if not gamma > a - A:
        raise DomainError("gamma must exceed a_Lr - A")
    if m > 0 and not gamma > lambda_rA:
        raise DomainError("gamma must exceed the island eigenvalue")
    log_b = s * math.log(q / db) + k * math.log(db / (a_eps * q))
    if m > 0:
        log_b += 0.5 * math.log(C_rA) + m * math.log1p(db * C_rA / (gamma - lambda_rA))
    return math.exp(log_b)


def path_eigenvalue(trace, islands):
    """``λ_{r,A}(π)``: largest island eigenvalue among islands whose ``Π`` points the path visits."""
    visited = set(np.intersect1d(trace.vertices, islands.Pi).tolist())
    vals = [c.eigenvalue for c in islands.components if visited & set(c.vertices.tolist())]
    if any(v is None for v in vals):
        raise InputError("island eigenvalues have not been computed")
    return max(vals, default=-math.inf)


def sample_paths(graph, x, t, n, seed):
    """Jump chains and jump times of ``n`` walks from ``x`` up to time ``t``."""
    gen = rng.stream(seed, "paths")
    out = []
    for _ in range(int(n)):
        verts, times, clock, v = [x], [0.0], 0.0, x
        while True:
            clock += gen.standard_exponential() / graph.degree[v]
            if clock >= t:
                break
            nb = graph.neighbors(v)
            v = int(nb[gen.integers(len(nb))])
            verts.append(v)
            times.append(clock)
        out.append(PathTrace(verts, times))
    return out


def class_mass_mc(graph, islands, field, trace, gamma, t, n, seed, eps=0.1, block=4096):
    """Event-filtered Feynman-Kac Monte Carlo of
    ``E_{π_0}[exp ∫_0^t (ξ - γ) du · 1{π(X_[0,t]) ~ π}]``.

    Returns ``(mean, stderr, hits)``.
    """
    xi = np.asarray(getattr(field, "xi", field), dtype=float)
    target = equivalence_key(excursion_decompose(trace, islands, xi, eps))
    x = int(trace.vertices[0])
    in_ball = np.zeros(graph.n, dtype=bool)
    in_ball[islands.ball] = True
    total, total_sq, hits, done = 0.0, 0.0, 0, 0
    b = 0
    while done < n:
        size = min(block, n - done)
        gen = rng.stream(seed, "class-mc", b)
        for _ in range(size):
            verts, clock, v, logw, ok = [x], 0.0, x, 0.0, True
            while True:
                hold = gen.standard_exponential() / graph.degree[v]
                if clock + hold >= t:
                    logw += (xi[v] - gamma) * (t - clock)
                    break
                logw += (xi[v] - gamma) * hold
                clock += hold
                nb = graph.neighbors(v)
                v = int(nb[gen.integers(len(nb))])
                verts.append(v)
                if not in_ball[v]:  # equivalent paths never leave the ball
                    ok = False
                    break
            if ok:
                dec = excursion_decompose(PathTrace(verts), islands, xi, eps)
                if equivalence_key(dec) == target:
                    w = math.exp(logw)
                    total += w
                    total_sq += w * w
                    hits += 1
        done += size
        b += 1
    mean = total / n
    var = max(total_sq / n - mean * mean, 0.0)
    return mean, math.sqrt(var / max(n - 1, 1)), hits
