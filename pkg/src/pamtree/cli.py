"""Command-line experiment runner.

    pamtree <command> [--config file.toml] [--seed N] [--out DIR] [--workers N] [--trace] [inputs...]

Commands: sample-tree, chi, islands, simulate, verify, lyapunov, report.  Each
command writes its artifacts atomically under ``--out`` and prints a one-line
JSON summary.  Exit codes: 0 success, 2 configuration or input error, 3
resource cap exceeded, 1 numerical failure.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys

import numpy as np

from . import config as cfgmod
from . import io
from .errors import ConvergenceError, DomainError, InputError, PamtreeError, ResourceError

COMMANDS = ("sample-tree", "chi", "islands", "simulate", "verify", "lyapunov", "report")


def _law(cfg):
    from .gw import OffspringLaw

    return OffspringLaw.from_config(cfg["model"]["law"])


def _out(cfg, name):
    return os.path.join(cfg["run"]["out"], name)


def cmd_sample_tree(cfg, meta, args):
    from .graph import dumps_tree
    from .gw import sample_tree

    tree = sample_tree(_law(cfg), cfg["sample-tree"]["depth"], cfg["run"]["seed"],
                       vertex_cap=cfg["caps"]["vertex_cap"])
    head, rest = dumps_tree(tree).split("\n", 1)
    text = head + "\n# " + json.dumps(meta, sort_keys=True, separators=(",", ":")) + "\n" + rest
    path = io.atomic_write(_out(cfg, "tree.txt"), text)
    return [path], {"vertices": tree.n, "height": tree.height}


def cmd_chi(cfg, meta, args):
    from .checks import fixture_graph
    from .variational import chi_dual, chi_primal, chi_tilde_regime, chi_tilde_truncated

    rho, seed, c = cfg["model"]["rho"], cfg["run"]["seed"], cfg["chi"]
    rows, trace = ["fixture,n,chi_primal,chi_dual,difference"], ["fixture,route,restart,iteration,value"]
    for name in c["fixtures"]:
        g = fixture_graph(name)
        p = chi_primal(g, rho, restarts=c["restarts"], seed=seed, trace=cfg["run"]["trace"])
        d = chi_dual(g, np.arange(g.n), rho, restarts=max(1, c["restarts"] // 3), seed=seed)
        rows.append(f"{name},{g.n},{p.chi!r},{d.chi!r},{abs(p.chi - d.chi)!r}")
        trace.extend(f"{name},primal,{i},{k},{v!r}" for i, k, v in p.trace)
        trace.extend(f"{name},dual,{i},{k},{v!r}" for i, k, v in d.trace)
    law = _law(cfg)
    tilde = chi_tilde_truncated(law.d_min, rho, c["tilde_radii"])
    paths = [io.write_csv(_out(cfg, "chi.csv"), "\n".join(rows) + "\n", meta)]
    paths.append(io.write_json(_out(cfg, "chi_tilde.json"), {
        "d_min": law.d_min, "rho": rho,
        "values": [{"R": R, "chi_hat": v} for R, v in tilde],
        "label": ("estimate of chi_tilde" if chi_tilde_regime(law.d_min, rho)
                  else "upper bound of the infimum defining chi_tilde"),
    }, meta))
    if cfg["run"]["trace"]:
        paths.append(io.write_csv(_out(cfg, "chi_trace.csv"), "\n".join(trace) + "\n", meta))
    return paths, {"chi_tilde_last": tilde[-1][1] if tilde else None}


def cmd_islands(cfg, meta, args):
    from . import rng
    from .gw import sample_tree
    from .potential import check_island_invariants, islands, sample_potential

    c, rho, seed = cfg["islands"], cfg["model"]["rho"], cfg["run"]["seed"]
    reports, problems = [], 0
    for k in range(c["replicas"]):
        s = rng.derive_seed(seed, "islands", k)
        tree = sample_tree(_law(cfg), c["r"], s, vertex_cap=cfg["caps"]["vertex_cap"])
        fld = sample_potential(tree.n, rho, s)
        isl = islands(tree, fld, c["r"], c["A"], c["alpha"], s_base=c["s_base"])
        isl.compute_eigenvalues(tree, fld)
        problems += len(check_island_invariants(tree, isl))
        reports.append(json.loads(isl.to_json()))
    path = io.write_json(_out(cfg, "islands.json"), {"replicas": reports}, meta)
    return [path], {"replicas": len(reports), "invariant_violations": problems}


def cmd_simulate(cfg, meta, args):
    from .graph import ball
    from .gw import sample_tree
    from .potential import sample_potential
    from .solver import fk_estimate, log_total_mass, solve_dirichlet, spectral_solution

    c, rho, seed = cfg["simulate"], cfg["model"]["rho"], cfg["run"]["seed"]
    tree = sample_tree(_law(cfg), c["radius"] + 1, seed, vertex_cap=cfg["caps"]["vertex_cap"])
    members = ball(tree, 0, c["radius"])
    fld = sample_potential(tree.n, rho, seed)
    src = tree.check_vertex(c["source"])
    if c["method"] == "spectral":
        sol = spectral_solution(tree, members, fld, src, c["t"], cap=cfg["caps"]["dense_cap"])
    else:
        sol = solve_dirichlet(tree, members, fld, src, c["t"], method=c["method"])
    paths = [io.write_csv(_out(cfg, "solution.csv"), sol.to_csv(), meta)]
    summary = {"log_total_mass": log_total_mass(sol)}
    if c["fk_paths"] > 0:
        fk = fk_estimate(tree, members, fld, src, c["t"], c["fk_paths"], seed, workers=cfg["run"]["workers"])
        paths.append(io.write_json(_out(cfg, "fk.json"), json.loads(fk.to_json()), meta))
        summary["fk_mean"] = fk.mean
    return paths, summary


def verify_suites(seed):
    """Fast invariant suites; returns ``{suite: "pass" | "fail"}``."""
    from . import checks
    from .excursions import path_product
    from .graph import Graph, dumps_tree, loads_tree
    from .gw import sample_tree
    from .potential import check_island_invariants, islands, sample_potential
    from .spectral import principal_eigenpair
    from .variational import chi_dual, chi_primal, log_partition, normalize_profile

    res = {}
    res["spectral_sandwich"] = checks.sandwich_violations(200, seed) == 0
    tree, lam, q = checks.random_instance(seed)
    base = principal_eigenpair(tree, lam, q).lam
    res["shift_covariance"] = abs(principal_eigenpair(tree, lam, q + 1.7).lam - base - 1.7) <= 1e-10
    res["chernoff_domination"] = all(e <= b for *_, e, b in checks.chernoff_grid())
    res["primal_dual_small"] = all(
        abs(chi_primal(g, 1.0, seed=seed).chi - chi_dual(g, np.arange(g.n), 1.0, seed=seed).chi) <= 1e-3
        for g in (Graph.complete(2), Graph.path(3), Graph.star(4)))
    qq = np.random.default_rng(seed).normal(size=20) * 3
    res["normalization_identity"] = abs(math.exp(log_partition(normalize_profile(qq, 0.7), 0.7)) - 1) <= 1e-12
    res["ode_vs_spectral"] = checks.ode_spectral_relerr(20, seed) <= 1e-7
    res["mass_sandwich"] = checks.mass_sandwich_violations(20, seed) == 0
    ok = True
    for k in range(5):
        t = sample_tree(checks.FIXTURE_LAW, 6, seed + k)
        f = sample_potential(t.n, 1.0, seed + k)
        ok &= not check_island_invariants(t, islands(t, f, 6, 0.5, 0.5))
    res["island_invariants"] = ok
    res["decomposition_identity"] = checks.decomposition_failures(100, seed) == 0
    path, deg = [0, 1, 4, 1], tree.degree
    p1 = path_product(path, q, deg, 9.0)
    p2 = path_product(path, q + 2.5, deg, 11.5)
    res["path_product_shift"] = abs(p1 - p2) <= 1e-15 * max(1.0, p1) if tree.n > 4 else True
    res["tree_roundtrip"] = dumps_tree(loads_tree(dumps_tree(tree))) == dumps_tree(tree)
    return {k: ("pass" if v else "fail") for k, v in sorted(res.items())}


def cmd_verify(cfg, meta, args):
    suites = verify_suites(cfg["run"]["seed"])
    payload = {"suites": suites, "all_pass": all(v == "pass" for v in suites.values())}
    golden = cfg["verify"]["golden"]
    if golden:
        with open(golden) as fh:
            payload["golden_match"] = json.load(fh)["suites"] == suites
    path = io.write_json(_out(cfg, "verify.json"), payload, meta)
    summary = {"all_pass": payload["all_pass"]}
    if golden:
        summary["golden_match"] = payload["golden_match"]
    return [path], summary


def cmd_lyapunov(cfg, meta, args):
    from .asymptotics import AsymptoticParams, lyapunov_gap_experiment
    from .gw import growth_rate
    from .variational import chi_tilde_regime, chi_tilde_truncated

    c, rho = cfg["lyapunov"], cfg["model"]["rho"]
    law = _law(cfg)
    if c["chi_tilde"] is None:
        R = c["tilde_radius"]
        chi = chi_tilde_truncated(law.d_min, rho, list(range(R + 1)))[-1][1]
        kind = "estimate" if chi_tilde_regime(law.d_min, rho) else "upper bound"
        source = f"chi_hat of the radius-{R} ball of T_{law.d_min} ({kind})"
    else:
        chi, source = c["chi_tilde"], "config"
    params = AsymptoticParams(rho, growth_rate(law), chi, chi_source=source)
    table = lyapunov_gap_experiment(law, params, c["t_grid"], c["replicas"], cfg["run"]["seed"],
                                    workers=cfg["run"]["workers"], vertex_budget=c["vertex_budget"],
                                    zero_potential=c["zero_potential"])
    paths = [io.write_csv(_out(cfg, "lyapunov.csv"), table.to_csv(), meta),
             io.write_json(_out(cfg, "lyapunov_summary.json"), table.summary, meta)]
    return paths, {"rows": len(table.rows), "chi_tilde": chi}


def cmd_report(cfg, meta, args):
    inputs = list(cfg["report"]["inputs"]) + list(args.inputs)
    if not inputs:
        raise cfgmod.ConfigError("report.inputs", "no artifacts given")
    header, rows, sources = None, [], []
    for path in inputs:
        if not os.path.exists(path):
            raise cfgmod.ConfigError("report.inputs", f"artifact {path} does not exist")
        m, kind, content = io.read_artifact(path)
        if not m or m.get("schema_version") != io.SCHEMA_VERSION:
            raise cfgmod.ConfigError("report.inputs", f"schema version mismatch in {path}")
        if kind == "json":
            h, body = "key,value\n", [f"{k},{json.dumps(v, sort_keys=True)}\n"
                                      for k, v in sorted(content.items()) if k != "meta"]
        else:
            h, body = content
        if header is None:
            header = h
        elif h != header:
            raise cfgmod.ConfigError("report.inputs", f"columns of {path} differ from {inputs[0]}")
        rows.extend(body)
        sources.append({"path": os.path.basename(path), "rows": len(body), "config_hash": m.get("config_hash")})
    paths = [io.write_csv(_out(cfg, "report.csv"), header + "".join(rows), meta),
             io.write_json(_out(cfg, "report.json"), {"inputs": sources, "rows": len(rows)}, meta)]
    return paths, {"rows": len(rows)}


HANDLERS = {
    "sample-tree": cmd_sample_tree, "chi": cmd_chi, "islands": cmd_islands, "simulate": cmd_simulate,
    "verify": cmd_verify, "lyapunov": cmd_lyapunov, "report": cmd_report,
}


def build_parser():
    ap = argparse.ArgumentParser(prog="pamtree", description="PAM on Galton-Watson trees: experiment runner")
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("inputs", nargs="*", help="artifact paths (report only)")
    ap.add_argument("--config", help="TOML configuration file")
    ap.add_argument("--seed", type=int, help="override run.seed")
    ap.add_argument("--out", help="override run.out")
    ap.add_argument("--workers", type=int, help="override run.workers")
    ap.add_argument("--trace", action="store_true", help="write optimiser traces")
    return ap


def run(argv=None):
    """Run one command; returns the process exit code."""
    args = build_parser().parse_args(argv)
    try:
        cfg = cfgmod.load(args.config) if args.config else cfgmod.validate({})
        overrides = {"seed": args.seed, "out": args.out, "workers": args.workers}
        for key, value in overrides.items():
            if value is not None:
                cfg["run"][key] = cfgmod.SCHEMA["run"][key][0](f"run.{key}", value)
        if args.trace:
            cfg["run"]["trace"] = True
        if args.seed is not None and not 0 <= args.seed < 2**64:
            raise cfgmod.ConfigError("run.seed", "must fit in an unsigned 64-bit integer")
        # the output directory and worker count do not change results
        hashed = {k: v for k, v in cfg.items() if k != "run"}
        hashed["run"] = {"seed": cfg["run"]["seed"], "trace": cfg["run"]["trace"]}
        meta = io.metadata({"command": args.command, **hashed}, cfg["run"]["seed"])
        paths, summary = HANDLERS[args.command](cfg, meta, args)
    except (InputError, DomainError) as exc:
        print(json.dumps({"command": args.command, "status": "config-error", "error": str(exc)}))
        return 2
    except ResourceError as exc:
        print(json.dumps({"command": args.command, "status": "resource-cap", "error": str(exc)}))
        return 3
    except (ConvergenceError, PamtreeError, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(json.dumps({"command": args.command, "status": "numeric-error", "error": str(exc)}))
        return 1
    print(json.dumps({"command": args.command, "status": "ok", "artifacts": paths, **summary},
                     sort_keys=True, default=str))
    return 0


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
