"""Galton-Watson trees: offspring laws, sampling, the normalised generation sizes
``W_k = e^{-kϑ} Z_k``, the degree envelope ``δ_r`` and a finite-grid check of
the super-double-exponential tail condition.

``D`` is read as the offspring count, so a non-root vertex has degree ``D + 1``
and the root has degree ``D``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from . import rng
from .errors import DomainError, InputError, ResourceError, UnsupportedError
from .graph import RootedTree

DEFAULT_VERTEX_CAP = 2_000_000
KINDS = ("deterministic", "table", "truncated-geometric", "conditioned-poisson")


@dataclass(frozen=True)
class OffspringLaw:
    """Law of the offspring count ``D``.

    Parameters by kind:

    * ``deterministic``: ``d``
    * ``table``: ``probs`` mapping count -> probability
    * ``truncated-geometric``: ``p``, ``d_min``, ``d_max``;
      ``P(D = d_min + k) ∝ (1-p)^k p`` for ``0 <= k <= d_max - d_min``
    * ``conditioned-poisson``: ``lam``, ``d_min``; Poisson(lam) conditioned on ``D >= d_min``

    ``d_min >= 2`` is enforced.  A mean of exactly 2 (``D ≡ 2``) is accepted
    because the binary tree is the standard desk-scale fixture.
    """

    kind: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InputError(f"unknown offspring law kind {self.kind!r}; expected one of {KINDS}")
        support, probs = self._finite_pmf()
        if support is not None:
            if np.any(probs < 0) or abs(probs.sum() - 1.0) > 1e-12:
                raise InputError("offspring probabilities must be non-negative and sum to 1")
        if self.kind == "conditioned-poisson" and self.params["lam"] <= 0:
            raise InputError("Poisson rate must be positive")
        if self.d_min < 2:
            raise InputError(f"d_min = {self.d_min}; offspring laws need min supp(D) >= 2")
        if not self.mean >= 2:
            raise InputError("offspring mean must be at least 2")

    @classmethod
    def deterministic(cls, d):
        return cls("deterministic", {"d": int(d)})

    @classmethod
    def table(cls, probs):
        return cls("table", {"probs": {int(k): float(v) for k, v in probs.items()}})

    @classmethod
    def from_config(cls, block):
        """Build from a config block ``{kind, params, d_min}``."""
        kind = block["kind"]
        params = dict(block.get("params", {}))
        if "d_min" in block and kind in ("truncated-geometric", "conditioned-poisson"):
            params.setdefault("d_min", block["d_min"])
        if kind == "table":
            params["probs"] = {int(k): float(v) for k, v in params["probs"].items()}
        law = cls(kind, params)
        if "d_min" in block and int(block["d_min"]) != law.d_min:
            raise InputError(f"declared d_min={block['d_min']} but the law has d_min={law.d_min}")
        return law

    def to_config(self):
        params = dict(self.params)
        if self.kind == "table":
            params["probs"] = {str(k): v for k, v in params["probs"].items()}
        return {"kind": self.kind, "params": params, "d_min": self.d_min}

    def _finite_pmf(self):
        p = self.params
        if self.kind == "deterministic":
            return np.array([p["d"]]), np.array([1.0])
        if self.kind == "table":
            items = sorted(p["probs"].items())
            support = np.array([k for k, v in items if v > 0])
            return support, np.array([v for k, v in items if v > 0])
        if self.kind == "truncated-geometric":
            ks = np.arange(p["d_max"] - p["d_min"] + 1)
            w = (1 - p["p"]) ** ks * p["p"]
            return p["d_min"] + ks, w / w.sum()
        return None, None

    @property
    def d_min(self):
        if self.kind == "conditioned-poisson":
            return int(self.params["d_min"])
        return int(self._finite_pmf()[0].min())

    @property
    def d_max(self):
        support, _ = self._finite_pmf()
        return math.inf if support is None else int(support.max())

    @property
    def mean(self):
        support, probs = self._finite_pmf()
        if support is not None:
            return float(support @ probs)
        lam, d = self.params["lam"], self.params["d_min"]
        # E[N; N >= d] = lam P(N >= d-1)
        return float(lam * stats.poisson.sf(d - 2, lam) / stats.poisson.sf(d - 1, lam))

    def log_tail(self, m):
        """``log P(D > m)`` (``-inf`` beyond the support)."""
        support, probs = self._finite_pmf()
        if support is not None:
            tail = probs[support > m].sum()
            return math.log(tail) if tail > 0 else -math.inf
        lam, d = self.params["lam"], self.params["d_min"]
        k = max(math.floor(m), d - 1)
        return float(stats.poisson.logsf(k, lam) - stats.poisson.logsf(d - 1, lam))

    def sample(self, gen, size):
        support, probs = self._finite_pmf()
        if self.kind == "deterministic":
            return np.full(size, support[0], dtype=np.int64)
        if support is not None:
            return support[gen.choice(len(support), size=size, p=probs)].astype(np.int64)
        lam, d = self.params["lam"], self.params["d_min"]
        out = gen.poisson(lam, size=size)
        bad = np.flatnonzero(out < d)
        while bad.size:
            out[bad] = gen.poisson(lam, size=bad.size)
            bad = bad[out[bad] < d]
        return out.astype(np.int64)


def sample_tree(law, max_depth, seed, vertex_cap=DEFAULT_VERTEX_CAP):
    """Galton-Watson tree truncated at ``max_depth``.

    The offspring counts of generation ``k`` come from the stream
    ``(seed, "offspring", k)``, so a tree of depth ``h`` is exactly the
    depth-``h`` prefix of the tree of depth ``h + 1`` with the same seed.
    """
    if max_depth < 0:
        raise InputError("max_depth must be non-negative")
    parents = [np.array([-1], dtype=np.int64)]
    offspring = []
    start, size, total = 0, 1, 1
    for k in range(int(max_depth)):
        counts = law.sample(rng.stream(seed, "offspring", k), size)
        offspring.append(counts)
        nxt = int(counts.sum())
        if total + nxt > vertex_cap:
            raise ResourceError(
                f"vertex cap {vertex_cap} exceeded while drawing generation {k + 1}",
            )
        parents.append(np.repeat(np.arange(start, start + size, dtype=np.int64), counts))
        start, size, total = start + size, nxt, total + nxt
    offspring.append(np.full(size, -1, dtype=np.int64))
    return RootedTree(np.concatenate(parents), np.concatenate(offspring))


def max_feasible_depth(law, max_depth, seed, vertex_cap):
    """Largest depth ``<= max_depth`` whose sample fits within ``vertex_cap``."""
    total, size = 1, 1
    for k in range(int(max_depth)):
        size = int(law.sample(rng.stream(seed, "offspring", k), size).sum())
        if total + size > vertex_cap:
            return k
        total += size
    return int(max_depth)


def growth_rate(law):
    """``ϑ = log E[D]``."""
    if not math.isfinite(law.mean):
        raise DomainError("growth rate needs a finite offspring mean")
    return math.log(law.mean)


def martingale_path(tree, theta):
    """``W_k = e^{-kϑ} Z_k`` for ``k = 0..height``."""
    z = tree.generation_sizes().astype(float)
    return z * np.exp(-theta * np.arange(len(z)))


def default_delta(r):
    """Default degree envelope ``δ_r = log log log r / log log r`` clipped to ``[0.05, 1]``.

    It tends to 0 and so does ``r dδ_r/dr``.
    """
    r = float(r)
    if r <= math.exp(math.e):
        return 0.05
    ll = math.log(math.log(r))
    return min(1.0, max(0.05, math.log(ll) / ll))


def degree_envelope(r, delta=default_delta):
    """``(log r)^{δ_r}``, the degree bound on ``B_{2r}`` for large ``r``."""
    return math.log(r) ** delta(r)


@dataclass(frozen=True)
class TailCheckSpec:
    f: object
    s_grid: tuple
    theta: float
    tail_fraction: float = 0.25

    def __post_init__(self):
        if len(self.s_grid) == 0:
            raise InputError("s grid must be non-empty")


@dataclass
class TailReport:
    s: np.ndarray
    threshold: np.ndarray
    log_tail: np.ndarray
    scaled: np.ndarray
    limit: float
    verdict: str

    def rows(self):
        for i in range(len(self.s)):
            yield (float(self.s[i]), float(self.threshold[i]), float(self.log_tail[i]),
                   float(self.scaled[i]), self.verdict)

    def to_csv(self):
        lines = ["s,threshold,log_tail,scaled,verdict"]
        lines.extend(",".join(repr(v) if isinstance(v, float) else v for v in row) for row in self.rows())
        return "\n".join(lines) + "\n"


def check_super_de_tail(law, spec):
    """Evaluate ``e^{-s} log P(D > s^{f(s)})`` along a grid of ``s``.

    The verdict is PASS when every value on the last ``tail_fraction`` of the
    grid stays below ``-2ϑ - 0.05·2ϑ``; a limsup cannot be decided on a finite
    grid, so this is only a surrogate.
    """
    if not hasattr(law, "log_tail"):
        raise UnsupportedError("law does not expose an upper tail")
    s = np.asarray(spec.s_grid, dtype=float)
    threshold = np.array([si ** spec.f(si) for si in s])
    log_tail = np.array([law.log_tail(m) for m in threshold], dtype=float)
    scaled = np.where(np.isneginf(log_tail), -np.inf, -np.exp(np.log(np.abs(log_tail) + 1e-300) - s))
    scaled[log_tail == 0] = 0.0
    limit = -2 * spec.theta - 0.05 * (2 * spec.theta)
    n_tail = max(1, int(math.ceil(spec.tail_fraction * len(s))))
    verdict = "PASS" if np.all(scaled[-n_tail:] < limit) else "FAIL"
    return TailReport(s, threshold, log_tail, scaled, limit, verdict)
