"""JSON run-configuration loading and strict validation.

The schema is versioned ("scatrel-config/1") and closed: unknown keys
anywhere in the document are rejected, so a typo in a physics
parameter fails loudly instead of silently running defaults.  Error
messages carry the JSON path and, best effort, the line of the
offending key in the original text.
"""

import json
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .potentials import Bump, PotentialField, ScatteringConfig

SCHEMA = "scatrel-config/1"

_SCATTERING_KEYS = {
    "lam": float,
    "r0": float,
    "n": int,
    "tol_integrate": float,
    "tol_newton": float,
    "margin": float,
    "tol_degenerate": float,
    "t_max_factor": float,
}
_BUMP_KEYS = {"center": list, "radius": float, "amplitude": float}
_GRID_KEYS = {"from": float, "to": float, "count": int}
_COMMAND_KEYS = {
    "trace": {"theta": list, "z": list, "max_step": float},
    "relation": {"theta": list, "z_grid": dict, "points": list},
    "solve": {"theta": list, "omega": list, "seed_spacing": float, "seed_extent": float},
    "amplitude": {
        "theta": list,
        "omega": list,
        "omega_angles": dict,
        "h": float,
        "h_grid": dict,
    },
    "check": {"suites": list, "samples": int, "seed": int, "hess_skew": float},
}


def _line_of(raw, path):
    """Best-effort line number of the deepest named key on the path."""
    pos = 0
    line = None
    for part in path:
        if isinstance(part, int):
            continue
        hit = raw.find(f'"{part}"', pos)
        if hit < 0:
            break
        pos = hit + 1
        line = raw.count("\n", 0, hit) + 1
    return line


def _fail(raw, path, message):
    dotted = ".".join(str(p) for p in path) if path else "<root>"
    raise ConfigError(message, json_path=dotted, line=_line_of(raw, path))


def _want(raw, obj, path, allowed):
    """Reject unknown keys and coerce known scalars, recursively flat."""
    if not isinstance(obj, dict):
        _fail(raw, path, "expected an object")
    for key in obj:
        if key not in allowed:
            _fail(raw, path + [key], f"unknown key {key!r}")
    out = {}
    for key, typ in allowed.items():
        if key not in obj:
            continue
        val = obj[key]
        if typ is float:
            if isinstance(val, bool) or not isinstance(val, (int, float)):
                _fail(raw, path + [key], f"{key!r} must be a number")
            val = float(val)
        elif typ is int:
            if isinstance(val, bool) or not isinstance(val, int):
                _fail(raw, path + [key], f"{key!r} must be an integer")
        elif typ is list and not isinstance(val, list):
            _fail(raw, path + [key], f"{key!r} must be an array")
        elif typ is dict and not isinstance(val, dict):
            _fail(raw, path + [key], f"{key!r} must be an object")
        out[key] = val
    return out


def _vector(raw, obj, path, n=None):
    if not isinstance(obj, list) or not all(
        isinstance(v, (int, float)) and not isinstance(v, bool) for v in obj
    ):
        _fail(raw, path, "expected an array of numbers")
    vec = np.array([float(v) for v in obj])
    if n is not None and vec.size != n:
        _fail(raw, path, f"expected {n} components, got {vec.size}")
    return vec


def _grid(raw, obj, path):
    g = _want(raw, obj, path, _GRID_KEYS)
    for key in _GRID_KEYS:
        if key not in g:
            _fail(raw, path, f"grid needs {key!r}")
    if g["count"] < 2:
        _fail(raw, path + ["count"], "grid count must be at least 2")
    return np.linspace(g["from"], g["to"], g["count"])


@dataclass(frozen=True)
class RunConfig:
    """Validated run configuration: problem plus one command block."""

    scattering: ScatteringConfig
    potential: PotentialField
    command: str
    params: dict
    raw: str


def parse_config(raw, command):
    """Validate raw JSON text for the given command; build a RunConfig."""
    try:
        doc = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON: {exc.msg}", line=exc.lineno) from exc
    if not isinstance(doc, dict):
        raise ConfigError("top level must be an object")

    top_allowed = {"schema": str, "scattering": dict, "potential": dict}
    top_allowed.update({cmd: dict for cmd in _COMMAND_KEYS})
    for key in doc:
        if key not in top_allowed:
            _fail(raw, [key], f"unknown key {key!r}")

    schema = doc.get("schema")
    if schema != SCHEMA:
        _fail(raw, ["schema"], f"schema must be {SCHEMA!r}, got {schema!r}")
    if "scattering" not in doc:
        raise ConfigError("missing 'scattering' block")
    sc = _want(raw, doc["scattering"], ["scattering"], _SCATTERING_KEYS)
    for key in ("lam", "r0"):
        if key not in sc:
            _fail(raw, ["scattering"], f"scattering needs {key!r}")
    try:
        scattering = ScatteringConfig(**sc)
    except ValueError as exc:
        _fail(raw, ["scattering"], str(exc))

    bumps = []
    pot = doc.get("potential", {"bumps": []})
    pot = _want(raw, pot, ["potential"], {"bumps": list})
    for i, spec in enumerate(pot.get("bumps", [])):
        path = ["potential", "bumps", i]
        b = _want(raw, spec, path, _BUMP_KEYS)
        for key in _BUMP_KEYS:
            if key not in b:
                _fail(raw, path, f"bump needs {key!r}")
        center = _vector(raw, b["center"], path + ["center"], scattering.n)
        try:
            bumps.append(
                Bump(center=tuple(center), radius=b["radius"], amplitude=b["amplitude"])
            )
        except ValueError as exc:
            _fail(raw, path, str(exc))
    potential = PotentialField(tuple(bumps))
    if potential.support_radius > scattering.r0 + 1e-12:
        _fail(
            raw,
            ["potential"],
            f"support radius {potential.support_radius:g} exceeds r0 {scattering.r0:g}",
        )

    if command not in _COMMAND_KEYS:
        raise ConfigError(f"unknown command {command!r}")
    if command not in doc:
        raise ConfigError(f"missing {command!r} block for this command")
    params = _parse_command(raw, doc[command], command, scattering)
    return RunConfig(
        scattering=scattering,
        potential=potential,
        command=command,
        params=params,
        raw=raw,
    )


def _parse_command(raw, block, command, scattering):
    n = scattering.n
    p = _want(raw, block, [command], _COMMAND_KEYS[command])
    out = {}
    if command == "trace":
        for key in ("theta", "z"):
            if key not in p:
                _fail(raw, [command], f"trace needs {key!r}")
        out["theta"] = _unit_dir(raw, p["theta"], [command, "theta"], n)
        out["z"] = _vector(raw, p["z"], [command, "z"], n - 1)
        out["max_step"] = p.get("max_step")
    elif command == "relation":
        if "theta" not in p:
            _fail(raw, [command], "relation needs 'theta'")
        out["theta"] = _unit_dir(raw, p["theta"], [command, "theta"], n)
        if ("z_grid" in p) == ("points" in p):
            _fail(raw, [command], "relation needs exactly one of 'z_grid' or 'points'")
        if "z_grid" in p:
            axis = _grid(raw, p["z_grid"], [command, "z_grid"])
            if n == 2:
                out["points"] = [np.array([v]) for v in axis]
            else:
                out["points"] = [
                    np.array([a, b]) for a in axis for b in axis
                ]
        else:
            pts = []
            for i, row in enumerate(p["points"]):
                pts.append(_vector(raw, row, [command, "points", i], n - 1))
            out["points"] = pts
    elif command == "solve":
        for key in ("theta", "omega"):
            if key not in p:
                _fail(raw, [command], f"solve needs {key!r}")
        out["theta"] = _unit_dir(raw, p["theta"], [command, "theta"], n)
        out["omega"] = _unit_dir(raw, p["omega"], [command, "omega"], n)
        out["seed_spacing"] = p.get("seed_spacing")
        out["seed_extent"] = p.get("seed_extent")
    elif command == "amplitude":
        if "theta" not in p:
            _fail(raw, [command], "amplitude needs 'theta'")
        out["theta"] = _unit_dir(raw, p["theta"], [command, "theta"], n)
        if ("omega" in p) == ("omega_angles" in p):
            _fail(
                raw,
                [command],
                "amplitude needs exactly one of 'omega' or 'omega_angles'",
            )
        if "omega" in p:
            out["omega"] = _unit_dir(raw, p["omega"], [command, "omega"], n)
        else:
            if n != 2:
                _fail(raw, [command, "omega_angles"], "omega_angles needs n = 2")
            out["omega_angles"] = _grid(raw, p["omega_angles"], [command, "omega_angles"])
        if ("h" in p) == ("h_grid" in p):
            _fail(raw, [command], "amplitude needs exactly one of 'h' or 'h_grid'")
        if "h" in p:
            if p["h"] <= 0:
                _fail(raw, [command, "h"], "h must be > 0")
            out["h"] = p["h"]
        else:
            hs = _grid(raw, p["h_grid"], [command, "h_grid"])
            if np.any(hs <= 0):
                _fail(raw, [command, "h_grid"], "h values must be > 0")
            out["h_grid"] = hs
        if "omega_angles" in out and "h_grid" in out:
            _fail(raw, [command], "cannot sweep omega_angles and h_grid together")
    elif command == "check":
        suites = p.get("suites", ["all"])
        if not suites or not all(isinstance(s, str) for s in suites):
            _fail(raw, [command, "suites"], "suites must be a list of names")
        out["suites"] = suites
        out["samples"] = p.get("samples", 100)
        if out["samples"] < 1:
            _fail(raw, [command, "samples"], "samples must be >= 1")
        out["seed"] = p.get("seed", 0)
        out["hess_skew"] = p.get("hess_skew", 0.0)
    return out


def _unit_dir(raw, obj, path, n):
    vec = _vector(raw, obj, path, n)
    norm = float(np.linalg.norm(vec))
    if norm == 0.0 or not np.isfinite(norm):
        _fail(raw, path, "direction must be a nonzero vector")
    return vec / norm


def load_config(path, command):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config file: {exc}") from exc
    return parse_config(raw, command)
