"""TOML experiment configuration with defaults and strict key checking."""
from __future__ import annotations

import copy
import math
import sys

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib

from .errors import InputError


class ConfigError(InputError):
    """Invalid configuration; ``key`` is the dotted path of the offending entry."""

    def __init__(self, key, message):
        super().__init__(f"{key}: {message}")
        self.key = key


def _int(lo=None):
    def check(key, v):
        if isinstance(v, bool) or not isinstance(v, int):
            raise ConfigError(key, f"expected an integer, got {v!r}")
        if lo is not None and v < lo:
            raise ConfigError(key, f"must be >= {lo}, got {v}")
        return v
    return check


def _real(positive=False, nonneg=False, optional=False):
    def check(key, v):
        if v is None and optional:
            return None
        if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
            raise ConfigError(key, f"expected a finite number, got {v!r}")
        if positive and v <= 0:
            raise ConfigError(key, f"must be positive, got {v}")
        if nonneg and v < 0:
            raise ConfigError(key, f"must be non-negative, got {v}")
        return float(v)
    return check


def _choice(*options):
    def check(key, v):
        if v not in options:
            raise ConfigError(key, f"must be one of {options}, got {v!r}")
        return v
    return check


def _bool(key, v):
    if not isinstance(v, bool):
        raise ConfigError(key, f"expected true or false, got {v!r}")
    return v


def _str(key, v):
    if not isinstance(v, str):
        raise ConfigError(key, f"expected a string, got {v!r}")
    return v


def _list(item):
    def check(key, v):
        if not isinstance(v, list):
            raise ConfigError(key, f"expected a list, got {v!r}")
        return [item(f"{key}[{i}]", x) for i, x in enumerate(v)]
    return check


def _law(key, v):
    from .gw import OffspringLaw

    if not isinstance(v, dict):
        raise ConfigError(key, "expected a table with kind and params")
    unknown = set(v) - {"kind", "params", "d_min"}
    if unknown:
        raise ConfigError(f"{key}.{sorted(unknown)[0]}", "unknown key")
    try:
        law = OffspringLaw.from_config(v)
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(key, str(exc)) from exc
    return law.to_config()


FIXTURES = ("K2", "P3", "star4", "T2-ball2", "GW-ball2")

SCHEMA = {
    "run": {"seed": (_int(0), 0), "workers": (_int(1), 1), "out": (_str, "out"), "trace": (_bool, False)},
    "model": {"rho": (_real(positive=True), 1.0),
              "law": (_law, {"kind": "deterministic", "params": {"d": 2}})},
    "caps": {"vertex_cap": (_int(1), 2_000_000), "dense_cap": (_int(1), 2000)},
    "sample-tree": {"depth": (_int(0), 10)},
    "chi": {"fixtures": (_list(_choice(*FIXTURES)), list(FIXTURES)), "restarts": (_int(1), 10),
            "tilde_radii": (_list(_int(0)), [0, 1, 2, 3, 4, 5, 6])},
    "islands": {"r": (_int(2), 10), "A": (_real(positive=True), 1.0), "alpha": (_real(positive=True), 0.5),
                "replicas": (_int(1), 1), "s_base": (_choice("r", "L_r"), "r")},
    "simulate": {"radius": (_int(0), 4), "t": (_real(nonneg=True), 1.0), "source": (_int(0), 0),
                 "method": (_choice("expm", "implicit", "dense", "spectral"), "expm"),
                 "fk_paths": (_int(0), 0)},
    "lyapunov": {"t_grid": (_list(_real(positive=True)), [2.0, 3.0, 4.0, 5.0, 6.0]),
                 "replicas": (_int(1), 20), "chi_tilde": (_real(nonneg=True, optional=True), None),
                 "tilde_radius": (_int(0), 6), "vertex_budget": (_int(1), 1 << 20),
                 "zero_potential": (_bool, False)},
    "verify": {"golden": (_str, "")},
    "report": {"inputs": (_list(_str), [])},
}


def defaults():
    return {sec: {k: copy.deepcopy(d) for k, (_, d) in keys.items()} for sec, keys in SCHEMA.items()}


def validate(raw):
    """Merge ``raw`` over the defaults, rejecting unknown sections and keys."""
    if not isinstance(raw, dict):
        raise ConfigError("<root>", "expected a table")
    out = defaults()
    for sec, block in raw.items():
        if sec not in SCHEMA:
            raise ConfigError(sec, "unknown section")
        if not isinstance(block, dict):
            raise ConfigError(sec, "expected a table")
        for key, value in block.items():
            if key not in SCHEMA[sec]:
                raise ConfigError(f"{sec}.{key}", "unknown key")
            check, _ = SCHEMA[sec][key]
            out[sec][key] = check(f"{sec}.{key}", value)
    if not 0 < out["islands"]["alpha"] < 1:
        raise ConfigError("islands.alpha", "must lie in (0, 1)")
    if "law" not in raw.get("model", {}):
        out["model"]["law"] = _law("model.law", out["model"]["law"])
    return out


def load(path):
    try:
        with open(path, "rb") as fh:
            raw = tomllib.load(fh)
    except FileNotFoundError as exc:
        raise ConfigError("<file>", f"config file {path} not found") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError("<file>", f"invalid TOML: {exc}") from exc
    return validate(raw)
