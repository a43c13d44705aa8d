"""Command-line surface: trace, relation, solve, amplitude, check.

Every command reads one JSON config (validated against the closed
schema in config.py) and writes CSV for grid outputs or JSON for
structured reports, to --out or stdout.  Exit codes: 0 success,
1 invariant failure, 2 config error, 3 dynamics error.  Identical
configs produce byte-identical output.
"""

import argparse
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .asymptotics import extract_asymptotics, signed_density_from_trajectory, trace
from .branches import find_branches
from .checks import run_suites
from .config import load_config
from .errors import (
    ConfigError,
    DegenerateBranchPresent,
    ScatrelError,
    StepFailure,
    TimeBudgetExhausted,
)
from .output import RESULT_SCHEMA, render_csv, render_json
from .semiclassics import assemble_from_branches


def _thread_count():
    env = os.environ.get("SCATREL_THREADS")
    if env:
        return max(1, int(env))
    return min(8, os.cpu_count() or 1)


def _pmap(fn, items):
    workers = min(_thread_count(), max(1, len(items)))
    if workers == 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def cmd_trace(run):
    cfg, V, p = run.scattering, run.potential, run.params
    traj = trace(p["theta"], p["z"], cfg, V, max_step=p["max_step"])
    energies = traj.energy_profile(V)
    defects = traj.symplectic_defect()
    n = cfg.n
    header = (
        ["t"]
        + [f"x{i}" for i in range(n)]
        + [f"xi{i}" for i in range(n)]
        + ["energy_residual", "symplectic_residual"]
    )
    rows = []
    for k in range(traj.times.size):
        rows.append(
            list(traj.times[k : k + 1])
            + list(traj.states[k, :n])
            + list(traj.states[k, n:])
            + [abs(energies[k] - cfg.lam), defects[k]]
        )
    return render_csv(header, rows), 0


def cmd_relation(run):
    cfg, V, p = run.scattering, run.potential, run.params
    theta = p["theta"]
    n = cfg.n

    def one(z):
        try:
            traj = trace(theta, z, cfg, V)
            data = extract_asymptotics(traj, cfg)
            sig = abs(signed_density_from_trajectory(traj, theta, cfg))
            return list(z) + list(data.xi_inf) + [sig, sig <= cfg.tol_degenerate, ""]
        except ScatrelError as exc:
            return (
                list(z)
                + [float("nan")] * n
                + [float("nan"), True, f"{type(exc).__name__}: {exc}"]
            )

    rows = _pmap(one, p["points"])
    header = (
        [f"z{i}" for i in range(n - 1)]
        + [f"xi_inf{i}" for i in range(n)]
        + ["sigma_hat", "degenerate", "error"]
    )
    return render_csv(header, rows), 0


def _branch_record(br):
    return {
        "index": br.index,
        "z": list(br.z),
        "w": list(br.w),
        "sigma_hat": br.sigma_hat,
        "action": br.action,
        "maslov": br.maslov,
    }


def cmd_solve(run):
    cfg, V, p = run.scattering, run.potential, run.params
    bset = find_branches(
        p["theta"],
        p["omega"],
        cfg,
        V,
        seed_spacing=p["seed_spacing"],
        seed_extent=p["seed_extent"],
    )
    doc = {
        "schema": RESULT_SCHEMA,
        "command": "solve",
        "theta": list(bset.theta),
        "omega": list(bset.omega),
        "branches": [_branch_record(br) for br in bset.branches],
        "degenerate_family": bset.degenerate_family,
        "degenerate_roots": [list(z) for z in bset.degenerate_roots],
        "fold_pairs": [list(pair) for pair in bset.fold_pairs],
        "failed_seeds": bset.failed_seeds,
    }
    return render_json(doc), 0


def _amplitude_doc(bset, h, cfg):
    try:
        res = assemble_from_branches(bset, h, cfg)
    except DegenerateBranchPresent as exc:
        return {
            "error": {
                "type": "DegenerateBranchPresent",
                "message": str(exc),
                "branch_indices": list(exc.branch_indices),
            }
        }
    return {
        "contributions": [
            {
                "index": c.index,
                "sigma_hat": c.sigma_hat,
                "action": c.action,
                "maslov": c.maslov,
                "weight_real": c.weight.real,
                "weight_imag": c.weight.imag,
            }
            for c in res.contributions
        ],
        "f_real": res.f.real,
        "f_imag": res.f.imag,
        "abs2": res.cross_section,
    }


def cmd_amplitude(run):
    cfg, V, p = run.scattering, run.potential, run.params
    theta = p["theta"]

    if "omega_angles" in p:
        h = p["h"]

        def one(angle):
            c, s = np.cos(angle), np.sin(angle)
            omega = np.array(
                [c * theta[0] - s * theta[1], s * theta[0] + c * theta[1]]
            )
            bset = find_branches(theta, omega, cfg, V)
            doc = _amplitude_doc(bset, h, cfg)
            if "error" in doc:
                return [angle, omega[0], omega[1], len(bset.branches)] + [
                    float("nan")
                ] * 3 + [doc["error"]["message"]]
            return [
                angle,
                omega[0],
                omega[1],
                len(bset.branches),
                doc["f_real"],
                doc["f_imag"],
                doc["abs2"],
                "",
            ]

        rows = _pmap(one, list(p["omega_angles"]))
        header = [
            "angle",
            "omega0",
            "omega1",
            "n_branches",
            "f_real",
            "f_imag",
            "abs2",
            "error",
        ]
        return render_csv(header, rows), 0

    omega = p["omega"]
    bset = find_branches(theta, omega, cfg, V)
    if "h_grid" in p:
        rows = []
        for h in p["h_grid"]:
            doc = _amplitude_doc(bset, h, cfg)
            if "error" in doc:
                rows.append([h] + [float("nan")] * 3 + [doc["error"]["message"]])
            else:
                rows.append([h, doc["f_real"], doc["f_imag"], doc["abs2"], ""])
        header = ["h", "f_real", "f_imag", "abs2", "error"]
        return render_csv(header, rows), 0

    doc = {
        "schema": RESULT_SCHEMA,
        "command": "amplitude",
        "theta": list(theta),
        "omega": list(omega),
        "h": p["h"],
        "branches": [_branch_record(br) for br in bset.branches],
    }
    doc.update(_amplitude_doc(bset, p["h"], cfg))
    return render_json(doc), 0


def cmd_check(run):
    cfg, V, p = run.scattering, run.potential, run.params
    records, all_ok = run_suites(
        cfg,
        V,
        p["suites"],
        samples=p["samples"],
        seed=p["seed"],
        hess_skew=p["hess_skew"],
    )
    doc = {
        "schema": RESULT_SCHEMA,
        "command": "check",
        "suites": records,
        "all_passed": all_ok,
    }
    return render_json(doc), 0 if all_ok else 1


_DISPATCH = {
    "trace": cmd_trace,
    "relation": cmd_relation,
    "solve": cmd_solve,
    "amplitude": cmd_amplitude,
    "check": cmd_check,
}


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="scatrel",
        description="Classical scattering relation and semiclassical amplitude toolkit",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    descriptions = {
        "trace": "integrate one trajectory and write its samples",
        "relation": "tabulate the scattering relation over an impact grid",
        "solve": "find all branches connecting theta to omega",
        "amplitude": "assemble the leading-order amplitude",
        "check": "run invariant suites against the configured potential",
    }
    for name, desc in descriptions.items():
        sp = sub.add_parser(name, help=desc)
        sp.add_argument("--config", required=True, help="path to a JSON run config")
        sp.add_argument("--out", help="output file (default stdout)")
    args = parser.parse_args(argv)

    try:
        run = load_config(args.config, args.command)
        text, code = _DISPATCH[args.command](run)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (TimeBudgetExhausted, StepFailure) as exc:
        print(f"dynamics error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3
    except ScatrelError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1

    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        try:
            sys.stdout.write(text)
        except BrokenPipeError:
            return code
    return code


if __name__ == "__main__":
    sys.exit(main())
