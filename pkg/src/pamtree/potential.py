"""Double-exponential potentials, exceedance levels and intermittent islands."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy import stats

from . import rng
from .errors import DomainError, InputError
from .graph import ball, bfs_distances, components

BLOCK = 4096


@dataclass(frozen=True)
class PotentialField:
    """Potential values ``xi[v]`` for vertices ``0..n-1`` of a host graph."""

    xi: np.ndarray
    rho: float

    def __post_init__(self):
        xi = np.asarray(self.xi, dtype=float)
        if self.rho <= 0:
            raise DomainError("rho must be positive")
        if np.any(xi < 0) or not np.all(np.isfinite(xi)):
            raise InputError("potential values must be finite and non-negative")
        object.__setattr__(self, "xi", xi)

    def __len__(self):
        return len(self.xi)

    def __getitem__(self, v):
        return self.xi[v]

    @classmethod
    def constant(cls, n, value=0.0, rho=1.0):
        return cls(np.full(n, float(value)), rho)


def sample_potential(n, rho, seed):
    """i.i.d. draws ``ξ = max(0, ϱ log E)`` with ``E ~ Exp(1)`` for vertices ``0..n-1``.

    ``P(ξ > u) = exp(-e^{u/ϱ})`` holds exactly for every ``u >= 0``.  Values are
    drawn in fixed blocks of ids, so ``ξ(v)`` does not depend on ``n``: the
    potential on a ball around the root of a breadth-first tree is the same
    whatever the depth of the sampled tree.
    """
    if rho <= 0:
        raise DomainError("rho must be positive")
    n = int(n)
    blocks = []
    for b in range(-(-n // BLOCK)):
        e = rng.stream(seed, "potential", b).standard_exponential(BLOCK)
        blocks.append(e)
    e = np.concatenate(blocks)[:n] if blocks else np.empty(0)
    with np.errstate(divide="ignore"):
        xi = np.maximum(0.0, rho * np.log(e))
    return PotentialField(xi, float(rho))


def potential_tail(u, rho):
    """``P(ξ > u)`` for ``u >= 0``."""
    return math.exp(-math.exp(u / rho))


def exceedance_threshold(L, rho):
    """``a_L = ϱ log log L``, the level exceeded with probability ``1/L``."""
    if L <= math.e:
        raise DomainError(f"exceedance level needs log log L > 0, got L = {L}")
    if rho <= 0:
        raise DomainError("rho must be positive")
    return rho * math.log(math.log(L))


def island_size_cap(rho, A):
    """``M_A = ⌈1/c_A⌉`` with ``c_A = e^{-2A/ϱ}``."""
    if rho <= 0 or A <= 0:
        raise DomainError("rho and A must be positive")
    return int(math.ceil(math.exp(2 * A / rho)))


def chernoff_binomial(n, p, u):
    """Upper bound ``exp(-u [log(u/(np)) - 1])`` on ``P(Bin(n, p) >= u)``."""
    if u <= 0:
        raise DomainError("u must be positive")
    return math.exp(-u * (math.log(u / (n * p)) - 1))


def binomial_upper_tail(n, p, u):
    """Exact ``P(Bin(n, p) >= u)`` by summing the mass function."""
    k0 = max(0, math.ceil(u))
    return float(sum(math.comb(n, k) * p**k * (1 - p) ** (n - k) for k in range(k0, n + 1)))


def peak_count(vertices, field, level):
    """Number of distinct vertices in ``vertices`` with ``ξ > level``."""
    support = np.unique(np.asarray(vertices, dtype=np.int64))
    return int(np.count_nonzero(field.xi[support] > level))


class MaxDeviation(NamedTuple):
    max_xi: float
    a_Lr: float
    gap: float
    tolerance: float


def potential_max_deviation(tree, field, r, theta):
    """``max_{B_r} ξ``, ``a_{L_r}``, their distance, and ``2ϱ log r / (ϑ r)``."""
    if r < 2:
        raise DomainError("r must be at least 2")
    members = ball(tree, tree.root, r)
    a = exceedance_threshold(len(members), field.rho)
    m = float(field.xi[members].max())
    return MaxDeviation(m, a, abs(m - a), 2 * field.rho * math.log(r) / (theta * r))


def island_radius(r, alpha, L_r=None, base="r"):
    """``S_r = (log r)^α``; ``base="L_r"`` uses ``(log L_r)^α`` instead."""
    if base == "r":
        return math.log(r) ** alpha
    if base == "L_r":
        return math.log(L_r) ** alpha
    raise InputError(f"unknown S_r base {base!r}")


@dataclass
class Island:
    vertices: np.ndarray
    pi_hits: int
    eigenvalue: float | None = None

    @property
    def size(self):
        return len(self.vertices)


@dataclass
class IslandSet:
    """High-exceedance set ``Π``, its ``S_r``-neighbourhood ``D`` and the islands."""

    r: int
    A: float
    alpha: float
    S_r: float
    L_r: int
    a_Lr: float
    ball: np.ndarray
    Pi: np.ndarray
    D: np.ndarray
    components: list = field(default_factory=list)

    @property
    def level(self):
        return self.a_Lr - 2 * self.A

    @property
    def max_island_size(self):
        """``C_{r,A}``; zero when there are no islands."""
        return max((c.size for c in self.components), default=0)

    @property
    def max_pi_hits(self):
        return max((c.pi_hits for c in self.components), default=0)

    def island_of(self, v):
        for c in self.components:
            i = np.searchsorted(c.vertices, v)
            if i < len(c.vertices) and c.vertices[i] == v:
                return c
        return None

    def compute_eigenvalues(self, graph, field):
        from .spectral import principal_eigenpair

        for c in self.components:
            c.eigenvalue = principal_eigenpair(graph, c.vertices, getattr(field, "xi", field)).lam
        return self

    def to_json(self):
        return json.dumps({
            "r": self.r, "A": self.A, "alpha": self.alpha, "S_r": self.S_r,
            "a_Lr": self.a_Lr, "pi_size": int(len(self.Pi)),
            "components": [
                {"size": c.size, "pi_hits": c.pi_hits, "eigenvalue": c.eigenvalue}
                for c in self.components
            ],
        }, sort_keys=True)


def islands(tree, field, r, A, alpha, s_base="r"):
    """Extract ``Π_{r,A}``, ``D_{r,A}`` and the connected islands inside ``B_r(root)``.

    ``Π`` holds the vertices of the ball with ``ξ > a_{L_r} - 2A`` where
    ``L_r = |B_r(root)|``; ``D`` is the set of ball vertices within distance
    ``S_r`` of ``Π``.  Components are taken in the subgraph induced by ``D``.
    """
    if r < 2:
        raise DomainError("r must be at least 2 so that log r > 0")
    if not 0 < alpha < 1:
        raise DomainError("alpha must lie in (0, 1)")
    if A <= 0:
        raise DomainError("A must be positive")
    if tree.height < r:
        raise InputError(f"tree of height {tree.height} does not contain B_{r}(root)")
    members = ball(tree, tree.root, r)
    L_r = len(members)
    a = exceedance_threshold(L_r, field.rho)
    S_r = island_radius(r, alpha, L_r, s_base)
    inside = np.zeros(tree.n, dtype=bool)
    inside[members] = True
    pi = members[field.xi[members] > a - 2 * A]
    dist = bfs_distances(tree, pi, math.floor(S_r), allowed=inside)
    d_set = np.flatnonzero(dist >= 0)
    is_pi = np.zeros(tree.n, dtype=bool)
    is_pi[pi] = True
    comps = [Island(c, int(np.count_nonzero(is_pi[c]))) for c in components(tree, d_set)]
    return IslandSet(int(r), float(A), float(alpha), S_r, L_r, a, members, pi, d_set, comps)


def check_island_invariants(tree, isl):
    """List of violated structural invariants (empty when all hold).

    Recomputes distances with an independent per-vertex breadth-first search.
    """
    from collections import deque

    problems = []
    ball_set = set(isl.ball.tolist())
    pi, d = set(isl.Pi.tolist()), set(isl.D.tolist())
    if not pi <= d:
        problems.append("Pi not contained in D")
    if not d <= ball_set:
        problems.append("D not contained in the ball")
    for z in d:
        seen, queue, ok = {z: 0}, deque([z]), z in pi
        while queue and not ok:
            v = queue.popleft()
            if seen[v] >= isl.S_r:
                continue
            for w in tree.neighbors(v).tolist():
                if w in ball_set and w not in seen:
                    seen[w] = seen[v] + 1
                    if w in pi and seen[w] <= isl.S_r:
                        ok = True
                        break
                    queue.append(w)
        if not ok:
            problems.append(f"vertex {z} of D is farther than S_r from Pi")
            break
    union = [v for c in isl.components for v in c.vertices.tolist()]
    if sorted(union) != sorted(d) or len(union) != len(set(union)):
        problems.append("components do not partition D")
    for c in isl.components:
        if not set(c.vertices.tolist()) & pi:
            problems.append("component without a Pi vertex")
            break
    return problems


def ks_conditional_tail(field_values, rho, u0):
    """Kolmogorov-Smirnov test of ``ξ | ξ > u0`` against the exact conditional law."""
    tail0 = potential_tail(u0, rho)
    sample = np.asarray(field_values)[np.asarray(field_values) > u0]

    def cdf(u):
        return 1.0 - np.exp(-np.exp(np.asarray(u) / rho)) / tail0

    return stats.kstest(sample, cdf)
