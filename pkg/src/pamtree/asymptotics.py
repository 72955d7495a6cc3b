"""Growth-rate quantities for the PAM on a Galton-Watson tree and the finite-time
experiment comparing ``(1/t) log U(t)`` with its predicted leading order.

The predicted rate is ``ϱ log(ϑ 𝔯_t) - ϱ - χ̃`` with ``𝔯_t = ϱ t / log log t``.
"""
from __future__ import annotations

import json
import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import optimize, stats

from . import rng
from .errors import DomainError, InputError
from .graph import ball, max_degree_in_ball
from .gw import default_delta, max_feasible_depth, sample_tree
from .potential import PotentialField, islands, sample_potential
from .solver import log_total_mass, solve_dirichlet

DEFAULT_EPS = 0.1
DEFAULT_GAMMA = 0.7
DEFAULT_VERTEX_BUDGET = 1 << 20


@dataclass
class AsymptoticParams:
    rho: float
    theta: float
    chi_tilde: float
    eps: float = DEFAULT_EPS
    delta: object = field(default=default_delta, repr=False)
    chi_source: str = ""

    def __post_init__(self):
        if self.rho <= 0 or self.theta <= 0 or self.eps <= 0:
            raise DomainError("rho, theta and eps must be positive")
        if self.chi_tilde < 0:
            raise DomainError("chi_tilde must be non-negative")

    def describe(self):
        d = {k: v for k, v in asdict(self).items() if k != "delta"}
        d["delta"] = getattr(self.delta, "__name__", repr(self.delta))
        return d


def target_radius(t, rho):
    """``𝔯_t = ϱ t / log log t``, defined for ``t > e``."""
    if t <= math.e:
        raise DomainError(f"log log t must be positive, got t = {t}")
    if rho <= 0:
        raise DomainError("rho must be positive")
    return rho * t / math.log(math.log(t))


def u_star_rate(t, params):
    """``(1/t) log U*(t) = ϱ log(ϑ 𝔯_t) - ϱ - χ̃``."""
    r = target_radius(t, params.rho)
    return params.rho * math.log(params.theta * r) - params.rho - params.chi_tilde


@dataclass(frozen=True)
class LayerSchedule:
    K: int
    step: int
    radii: tuple
    ell: int


def layer_schedule(t, gamma=DEFAULT_GAMMA, alpha=None):
    """``K_t = ⌈t^{1-γ} log t⌉`` layers at radii ``k⌈t^γ⌉``; ``ℓ_t = K_t ⌈t^γ⌉``."""
    if not 0 < gamma < 1 or (alpha is not None and gamma <= alpha):
        raise DomainError("gamma must lie in (alpha, 1)")
    if t <= 1:
        raise DomainError("t must exceed 1")
    step = math.ceil(t**gamma)
    K = math.ceil(t ** (1 - gamma) * math.log(t))
    return LayerSchedule(K, step, tuple(k * step for k in range(1, K + 1)), K * step)


def F_t(r, t, params):
    """``ϱ log(ϑ r) - (r/t)[log(ε ϱ log(ϑ r)) - δ_r log log r]``."""
    r = np.asarray(r, dtype=float)
    delta = np.vectorize(params.delta)(r)
    with np.errstate(invalid="ignore", divide="ignore"):
        inner = np.log(params.eps * params.rho * np.log(params.theta * r)) - delta * np.log(np.log(r))
        return params.rho * np.log(params.theta * r) - (r / t) * inner


@dataclass
class FOptimum:
    r_star: float
    F_star: float
    ratio: float  # r* / 𝔯_t
    unimodal: bool
    boundary: bool


def optimize_F(t, params, grid=None, n_grid=401):
    """Maximise ``F_t`` on a grid over ``[𝔯_t/10, 10 𝔯_t]`` and refine by golden section.

    When the grid values are not unimodal or the argmax sits on the grid
    boundary, the grid argmax is returned with the corresponding flag set.
    """
    rt = target_radius(t, params.rho)
    if grid is None:
        grid = np.geomspace(rt / 10, rt * 10, n_grid)
    grid = np.asarray(grid, dtype=float)
    if grid.min() > rt / 10 * (1 + 1e-12) or grid.max() < rt * 10 * (1 - 1e-12):
        raise InputError("grid must span [r_t/10, 10 r_t]")
    vals = F_t(grid, t, params)
    if not np.all(np.isfinite(vals)):
        raise DomainError("F_t is undefined on part of the grid")
    i = int(np.argmax(vals))
    d = np.sign(np.diff(vals))
    d = d[d != 0]
    unimodal = bool(np.all(np.diff(d) <= 0))
    boundary = i in (0, len(grid) - 1)
    if boundary or not unimodal:
        warnings.warn("F_t grid maximum is on the boundary or the grid is not unimodal", RuntimeWarning)
        return FOptimum(float(grid[i]), float(vals[i]), float(grid[i] / rt), unimodal, boundary)
    res = optimize.minimize_scalar(lambda r: -float(F_t(r, t, params)), bracket=(grid[i - 1], grid[i], grid[i + 1]),
                                   method="golden", tol=1e-10)
    r_star, f_star = float(res.x), float(-res.fun)
    if f_star < vals[i]:
        r_star, f_star = float(grid[i]), float(vals[i])
    return FOptimum(r_star, f_star, r_star / rt, unimodal, boundary)


# ---------------------------------------------------------------------------
# finite-time experiment

@dataclass
class ReplicaResult:
    t: float
    replica: int
    log_mass_rate: float
    u_star_rate: float
    gap: float
    radius: int
    truncated: bool
    leakage_bound: float


def truncation_radius(t, max_degree):
    """``⌈t·maxdeg⌉ + 10``: beyond this a walk from the root leaves with negligible probability."""
    return math.ceil(t * max_degree) + 10


def _replica(job):
    law, params, t, replica, seed, vertex_budget, zero_potential = job
    rep_seed = rng.derive_seed(seed, "replica", replica)
    depth_cap = max_feasible_depth(law, 64, rep_seed, vertex_budget)
    tree = sample_tree(law, depth_cap, rep_seed, vertex_cap=vertex_budget)
    md = max_degree_in_ball(tree, max(depth_cap - 1, 0)).value
    want = truncation_radius(t, md)
    radius = min(want, depth_cap - 1)
    members = ball(tree, 0, radius)
    if zero_potential:
        field_ = PotentialField.constant(tree.n, 0.0, params.rho)
    else:
        field_ = sample_potential(tree.n, params.rho, rep_seed)
    sol = solve_dirichlet(tree, members, field_, 0, t)
    rate = log_total_mass(sol) / t
    try:
        ustar = u_star_rate(t, params)
    except DomainError:
        ustar = math.nan
    # the walk needs more than `radius` jumps to leave B_radius; jumps occur at rate <= md
    leak = float(stats.poisson.sf(radius, md * t))
    return ReplicaResult(float(t), int(replica), rate, ustar, rate - ustar, int(radius),
                         radius < want, leak)


@dataclass
class LyapunovTable:
    rows: list
    summary: dict

    def to_csv(self):
        lines = ["t,replica,log_mass_rate,u_star_rate,gap"]
        for r in self.rows:
            lines.append(f"{r.t!r},{r.replica},{r.log_mass_rate!r},{r.u_star_rate!r},{r.gap!r}")
        return "\n".join(lines) + "\n"

    def summary_json(self):
        return json.dumps(self.summary, sort_keys=True, indent=2, allow_nan=True)

    def column(self, name, t=None):
        return np.array([getattr(r, name) for r in self.rows if t is None or r.t == t])


def _summarise(rows, ts, params, vertex_budget):
    per_t = []
    for t in ts:
        rs = [r for r in rows if r.t == t]
        rate = np.array([r.log_mass_rate for r in rs])
        gap = np.array([r.gap for r in rs])
        n = len(rs)
        se = float(np.std(rate, ddof=1) / math.sqrt(n)) if n > 1 else math.nan
        per_t.append({
            "t": t, "replicas": n,
            "mean_log_mass_rate": float(np.mean(rate)), "median_log_mass_rate": float(np.median(rate)),
            "u_star_rate": rs[0].u_star_rate if rs else math.nan,
            "mean_gap": float(np.mean(gap)), "median_gap": float(np.median(gap)),
            "stderr": se,
            "radius": int(max(r.radius for r in rs)), "truncated": any(r.truncated for r in rs),
            "max_leakage_bound": float(max(r.leakage_bound for r in rs)),
        })
    return {"params": params.describe(), "vertex_budget": vertex_budget, "per_t": per_t}


def lyapunov_gap_experiment(law, params, ts, replicas, seed, workers=1,
                            vertex_budget=DEFAULT_VERTEX_BUDGET, zero_potential=False):
    """Sample ``replicas`` (tree, potential) pairs and compute ``(1/t) log U(t)`` for each ``t``.

    Each replica uses one tree and one potential for all ``t`` (the quenched
    setting).  ``U(t)`` is computed on the ball of radius ``⌈t·maxdeg⌉ + 10``
    with zero boundary values; when that ball does not fit in
    ``vertex_budget`` the largest fitting radius is used and the row is
    flagged as truncated, together with a Poisson bound on the probability of
    reaching the boundary.  Results do not depend on ``workers``.
    """
    ts = [float(t) for t in ts]
    if replicas < 1:
        raise InputError("need at least one replica")
    jobs = [(law, params, t, k, seed, vertex_budget, zero_potential) for t in ts for k in range(replicas)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_replica, jobs))
    else:
        rows = [_replica(j) for j in jobs]
    return LyapunovTable(rows, _summarise(rows, ts, params, vertex_budget))


def island_eigenvalue_fraction(law, rho, A, alpha, r, chi_tilde, replicas, seed, margin=0.5):
    """Per replica, the fraction of islands with ``λ_C > a_{L_r} - χ̃ + margin``.

    Returns ``(pooled fraction, per-replica fractions)``; replicas without
    islands contribute nothing to the pooled count.
    """
    hits, total, fracs = 0, 0, []
    for k in range(replicas):
        s = rng.derive_seed(seed, "islands", k)
        tree = sample_tree(law, r, s)
        fld = sample_potential(tree.n, rho, s)
        isl = islands(tree, fld, r, A, alpha).compute_eigenvalues(tree, fld)
        lam = np.array([c.eigenvalue for c in isl.components])
        above = int(np.count_nonzero(lam > isl.a_Lr - chi_tilde + margin))
        hits += above
        total += len(lam)
        fracs.append(above / len(lam) if len(lam) else 0.0)
    return (hits / total if total else 0.0), fracs
