"""Named invariant suites behind the check command.

Each suite produces one record with a worst residual and a fixed
tolerance; suites that only make sense for a single centered bump are
reported as skipped on other potentials rather than failed.  The
hess_skew knob feeds an asymmetric perturbation into the Hessian used
by the variational equations: trajectories and energies are untouched
but transported monodromies stop being symplectic, which is exactly
what the symplecticity suite must detect.
"""

import numpy as np

from .asymptotics import extract_asymptotics, signed_density, trace
from .dynamics import integrate_until_exit
from .errors import ConfigError, ScatrelError
from .geometry import orientation, plane_angle
from .potentials import PhasePoint

_TOL_ENERGY_FACTOR = 1e-9
_TOL_SYMPLECTIC = 1e-6
_TOL_RECIPROCITY = 1e-7
_TOL_DEFLECTION = 1e-6
_TOL_DENSITY_REL = 1e-5
_TOL_ACTION = 1e-8
_TOL_GRADIENT_REL = 1e-5
_DENSITY_FLOOR = 1e-3


def _record(name, status, residual=None, tolerance=None, detail=""):
    return {
        "name": name,
        "status": status,
        "residual": residual,
        "tolerance": tolerance,
        "detail": detail,
    }


def _random_directions(rng, n, count):
    vecs = rng.normal(size=(count, n))
    return vecs / np.linalg.norm(vecs, axis=1, keepdims=True)


def _random_launches(cfg, V, rng, count):
    extent = max(V.support_radius, 0.25 * cfg.r0) + 0.5
    thetas = _random_directions(rng, cfg.n, count)
    zs = rng.uniform(-extent, extent, size=(count, cfg.n - 1))
    return thetas, zs


def _suite_energy(cfg, V, samples, seed, hess_skew):
    rng = np.random.default_rng(seed)
    thetas, zs = _random_launches(cfg, V, rng, samples)
    worst = 0.0
    for theta, z in zip(thetas, zs):
        traj = trace(theta, z, cfg, V, hess_skew=hess_skew)
        drift = float(np.max(np.abs(traj.energy_profile(V) - cfg.lam)))
        worst = max(worst, drift)
    tol = _TOL_ENERGY_FACTOR * cfg.lam
    status = "passed" if worst <= tol else "failed"
    return _record("energy", status, worst, tol, f"{samples} random trajectories")


def _suite_symplectic(cfg, V, samples, seed, hess_skew):
    rng = np.random.default_rng(seed)
    thetas, zs = _random_launches(cfg, V, rng, samples)
    worst = 0.0
    for theta, z in zip(thetas, zs):
        traj = trace(theta, z, cfg, V, hess_skew=hess_skew)
        worst = max(worst, float(np.max(traj.symplectic_defect())))
    status = "passed" if worst <= _TOL_SYMPLECTIC else "failed"
    return _record(
        "symplectic", status, worst, _TOL_SYMPLECTIC, f"{samples} random trajectories"
    )


def _suite_reciprocity(cfg, V, samples, seed, hess_skew):
    rng = np.random.default_rng(seed)
    thetas, zs = _random_launches(cfg, V, rng, samples)
    worst = 0.0
    for theta, z in zip(thetas, zs):
        traj = trace(theta, z, cfg, V)
        data = extract_asymptotics(traj, cfg)
        back = PhasePoint(data.x_exit, -cfg.speed * data.xi_inf)
        data_b = extract_asymptotics(integrate_until_exit(back, V, cfg), cfg)
        worst = max(worst, float(np.linalg.norm(data_b.xi_inf + theta)))
    status = "passed" if worst <= _TOL_RECIPROCITY else "failed"
    return _record(
        "reciprocity", status, worst, _TOL_RECIPROCITY, f"{samples} round trips"
    )


def _central_guard(name, V):
    if not V.is_central():
        return _record(
            name, "skipped", detail="needs a single centered bump potential"
        )
    return None


def _base_direction(n):
    theta = np.zeros(n)
    theta[0] = 1.0
    return theta


def _suite_deflection_oracle(cfg, V, samples, seed, hess_skew):
    from .oracles import signed_deflection

    skip = _central_guard("deflection_oracle", V)
    if skip:
        return skip
    theta = _base_direction(cfg.n)
    orient = orientation(theta) if cfg.n == 2 else 1.0
    a = V.support_radius
    worst = 0.0
    for b in np.linspace(-0.95 * a, 0.95 * a, 20):
        z = np.zeros(cfg.n - 1)
        z[0] = b
        traj = trace(theta, z, cfg, V)
        data = extract_asymptotics(traj, cfg)
        ode = plane_angle(theta, data.xi_inf)
        ref = signed_deflection(V, cfg.lam, orient * b)
        if cfg.n == 3:
            ode, ref = abs(ode), abs(ref)
        worst = max(worst, abs(ode - ref))
    status = "passed" if worst <= _TOL_DEFLECTION else "failed"
    return _record("deflection_oracle", status, worst, _TOL_DEFLECTION, "20-point b grid")


def _suite_density_oracle(cfg, V, samples, seed, hess_skew):
    from .oracles import deflection_derivative

    skip = _central_guard("density_oracle", V)
    if skip:
        return skip
    if cfg.n != 2:
        return _record("density_oracle", "skipped", detail="defined in the plane")
    theta = _base_direction(2)
    orient = orientation(theta)
    a = V.support_radius
    worst = 0.0
    used = 0
    for b in np.linspace(-0.9 * a, 0.9 * a, 19):
        ref = deflection_derivative(V, cfg.lam, b)
        if abs(ref) < _DENSITY_FLOOR:
            continue
        z = np.array([orient * b])
        sig = abs(signed_density(theta, z, cfg, V))
        worst = max(worst, abs(sig - abs(ref)) / abs(ref))
        used += 1
    status = "passed" if worst <= _TOL_DENSITY_REL else "failed"
    return _record(
        "density_oracle", status, worst, _TOL_DENSITY_REL, f"{used} regular points"
    )


def _regular_pair(cfg, V, z_value):
    theta = _base_direction(cfg.n)
    z = np.zeros(cfg.n - 1)
    z[0] = z_value
    traj = trace(theta, z, cfg, V)
    data = extract_asymptotics(traj, cfg)
    return theta, data.xi_inf, z


def _suite_action_invariance(cfg, V, samples, seed, hess_skew):
    from .semiclassics import modified_action

    extent = max(V.support_radius, 0.25 * cfg.r0)
    worst = 0.0
    for z_val in (0.17 * extent, 0.52 * extent):
        theta, omega, z = _regular_pair(cfg, V, z_val)
        traj = trace(theta, z, cfg, V)
        base = modified_action(traj, theta, omega, cfg)
        for extra in (0.7, 3.1):
            worst = max(
                worst,
                abs(modified_action(traj, theta, omega, cfg, extra_time=extra) - base),
            )
        for margin in (cfg.margin + 0.6, cfg.margin + 1.9):
            other = cfg.replace(margin=margin)
            traj_m = trace(theta, z, other, V)
            worst = max(worst, abs(modified_action(traj_m, theta, omega, other) - base))
    status = "passed" if worst <= _TOL_ACTION else "failed"
    return _record(
        "action_invariance", status, worst, _TOL_ACTION, "readout and launch offsets"
    )


def _suite_gradient_identity(cfg, V, samples, seed, hess_skew):
    from .semiclassics import action_gradients

    extent = max(V.support_radius, 0.25 * cfg.r0)
    worst = 0.0
    for z_val in (0.2 * extent, 0.45 * extent):
        theta, omega, z = _regular_pair(cfg, V, z_val)
        sig = abs(signed_density(theta, z, cfg, V))
        if sig <= 10.0 * cfg.tol_degenerate:
            continue
        g = action_gradients(theta, omega, z, cfg, V)
        scale = max(float(np.max(np.abs(g.d_theta))), 1e-6)
        worst = max(worst, float(np.max(np.abs(g.d_theta - g.d_theta_fd))) / scale)
        scale = max(float(np.max(np.abs(g.d_omega))), 1e-6)
        worst = max(worst, float(np.max(np.abs(g.d_omega - g.d_omega_fd))) / scale)
    status = "passed" if worst <= _TOL_GRADIENT_REL else "failed"
    return _record(
        "gradient_identity", status, worst, _TOL_GRADIENT_REL, "closed form vs continuation"
    )


def _suite_maslov_oracle(cfg, V, samples, seed, hess_skew):
    from .oracles import radial_jacobi_conjugate_points
    from .semiclassics import maslov_index

    skip = _central_guard("maslov_oracle", V)
    if skip:
        return skip
    if cfg.n != 2:
        return _record("maslov_oracle", "skipped", detail="oracle is planar")
    theta = _base_direction(2)
    a = V.support_radius
    mismatches = 0
    checked = 0
    for b in (0.15 * a, 0.4 * a, 0.62 * a):
        mu = maslov_index(theta, np.array([b]), cfg, V)
        ref = radial_jacobi_conjugate_points(V, cfg.lam, b)
        checked += 1
        if mu != ref:
            mismatches += 1
    status = "passed" if mismatches == 0 else "failed"
    return _record(
        "maslov_oracle",
        status,
        float(mismatches),
        0.0,
        f"{checked} impact parameters vs the Jacobi oracle",
    )


_SUITES = {
    "energy": _suite_energy,
    "symplectic": _suite_symplectic,
    "reciprocity": _suite_reciprocity,
    "deflection_oracle": _suite_deflection_oracle,
    "density_oracle": _suite_density_oracle,
    "action_invariance": _suite_action_invariance,
    "gradient_identity": _suite_gradient_identity,
    "maslov_oracle": _suite_maslov_oracle,
}


def suite_names():
    return list(_SUITES)


def run_suites(cfg, V, names, samples=100, seed=0, hess_skew=0.0):
    """Run the named suites ('all' expands); returns (records, all_ok)."""
    if names == ["all"] or names == ("all",):
        selected = list(_SUITES)
    else:
        selected = []
        for name in names:
            if name not in _SUITES:
                raise ConfigError(
                    f"unknown suite {name!r}; available: {', '.join(_SUITES)} or 'all'"
                )
            selected.append(name)
    records = []
    for name in selected:
        try:
            records.append(_SUITES[name](cfg, V, samples, seed, hess_skew))
        except ScatrelError as exc:
            records.append(_record(name, "failed", detail=f"{type(exc).__name__}: {exc}"))
    all_ok = all(r["status"] != "failed" for r in records)
    return records, all_ok
