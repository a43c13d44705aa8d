"""Two-point solving: all impact parameters connecting theta to omega.

The unknown is z in R^(n-1); the residual is the chart image
F(z) = E(omega)^T xi_inf(theta, z), which vanishes exactly when the
outgoing direction equals omega (the chart is valid on the hemisphere
<xi_inf, omega> > 0, and iterates leaving it are rejected).  A damped
Newton iteration with Armijo backtracking runs from every node of a
seed grid sized by the smallest bump; converged roots are deduplicated,
validated, and classified by angular density.

A free continuum shows up as many distinct converged roots with zero
density (every miss solves xi_inf = theta); that situation is reported
as degenerate_family on the BranchSet rather than as a root list.
Isolated regular roots found alongside it (for example the head-on
trajectory through a central bump) are still reported as branches.
"""

from dataclasses import dataclass

import numpy as np

from .asymptotics import (
    jacobian_from_trajectory,
    signed_density_from_trajectory,
    trace,
)
from .errors import BranchContinuationFailed, TimeBudgetExhausted
from .geometry import frame, unit

_MAX_NEWTON = 60
_MAX_BACKTRACK = 30


@dataclass(frozen=True)
class Branch:
    """One (theta, omega)-trajectory record."""

    index: int
    z: np.ndarray
    w: np.ndarray
    sigma_hat: float
    action: float
    maslov: int
    trajectory: object


@dataclass(frozen=True)
class BranchSet:
    """Result of a branch search for one direction pair.

    branches holds the regular roots sorted by |z| then lexicographic z.
    degenerate_roots are converged roots at or below the density
    threshold (excluded from branches).  degenerate_family is set when
    three or more distinct degenerate roots are present, the signature
    of a free continuum.  fold_pairs lists branch index pairs whose
    roots are closer than the solver's fold resolution, meaning an
    unresolved double root.  failed_seeds counts seeds whose trajectory
    never exited within the time budget.
    """

    theta: np.ndarray
    omega: np.ndarray
    branches: tuple
    degenerate_roots: tuple = ()
    degenerate_family: bool = False
    fold_pairs: tuple = ()
    failed_seeds: int = 0

    def __iter__(self):
        return iter(self.branches)

    def __len__(self):
        return len(self.branches)

    def __getitem__(self, i):
        return self.branches[i]


def fold_radius(cfg):
    """Roots closer than this are indistinguishable from a double root:
    Newton stops at distance ~sqrt(tol_newton / curvature) from a fold."""
    return 10.0 * np.sqrt(cfg.tol_newton)


def newton_solve(theta, omega, z0, cfg, V):
    """Damped Newton from one seed.

    Returns (z, trajectory, n_iter) on convergence, None on failure.
    """
    th = unit(theta)
    om = unit(omega)
    E_om = frame(om)
    step_cap = V.support_radius + cfg.r0

    z = np.atleast_1d(np.asarray(z0, dtype=float)).copy()
    traj = trace(th, z, cfg, V)
    xi = traj.final_state.xi
    xi_inf = xi / np.linalg.norm(xi)
    if float(np.dot(xi_inf, om)) <= 0.0:
        return None
    F = E_om.T @ xi_inf
    for it in range(_MAX_NEWTON):
        resid = float(np.linalg.norm(F))
        if resid <= cfg.tol_newton:
            return z, traj, it
        J = E_om.T @ jacobian_from_trajectory(traj, th, cfg)
        try:
            delta = np.linalg.solve(J, -F)
        except np.linalg.LinAlgError:
            return None
        dn = float(np.linalg.norm(delta))
        if not np.isfinite(dn):
            return None
        if dn > step_cap:
            delta *= step_cap / dn
        alpha = 1.0
        accepted = False
        for _ in range(_MAX_BACKTRACK):
            z_try = z + alpha * delta
            try:
                traj_try = trace(th, z_try, cfg, V)
            except TimeBudgetExhausted:
                alpha *= 0.5
                continue
            xi = traj_try.final_state.xi
            xi_inf = xi / np.linalg.norm(xi)
            if float(np.dot(xi_inf, om)) > 0.0:
                F_try = E_om.T @ xi_inf
                if np.dot(F_try, F_try) <= (1.0 - 1e-4 * alpha) * np.dot(F, F):
                    z, traj, F = z_try, traj_try, F_try
                    accepted = True
                    break
            alpha *= 0.5
        if not accepted:
            return None
    if float(np.linalg.norm(F)) <= cfg.tol_newton:
        return z, traj, _MAX_NEWTON
    return None


def continue_branch(theta, omega, z0, cfg, V):
    """Re-solve a known branch at a perturbed direction pair.

    Raises BranchContinuationFailed when Newton does not reconverge,
    which happens when the pair drifts into a degenerate configuration.
    """
    res = newton_solve(theta, omega, z0, cfg, V)
    if res is None:
        raise BranchContinuationFailed(
            f"Newton continuation from z = {np.asarray(z0)} diverged"
        )
    return res[0], res[1]


def seed_points(cfg, V, spacing=None, extent=None):
    """Deterministic seed grid covering the impact-parameter disc."""
    if V.bumps:
        rho_min = min(b.radius for b in V.bumps)
        rho_max = max(b.radius for b in V.bumps)
        default_extent = V.support_radius + rho_max
    else:
        rho_min = cfg.r0 / 2.0
        default_extent = cfg.r0 / 2.0
    sp = spacing if spacing else rho_min / 4.0
    ext = extent if extent else max(default_extent, cfg.r0 / 2.0)
    k = int(np.floor(ext / sp))
    axis = sp * np.arange(-k, k + 1)
    if cfg.n == 2:
        return [np.array([a]) for a in axis]
    seeds = []
    for a0 in axis:
        for a1 in axis:
            if a0 * a0 + a1 * a1 <= ext * ext + 1e-12:
                seeds.append(np.array([a0, a1]))
    return seeds


def find_branches(theta, omega, cfg, V, seed_spacing=None, seed_extent=None):
    """All branches connecting theta to omega, as a BranchSet."""
    from .semiclassics import maslov_index_from_trajectory, modified_action

    th = unit(theta)
    om = unit(omega)
    E_om = frame(om)
    dedup = 10.0 * cfg.tol_newton

    roots = []
    failed = 0
    for z0 in seed_points(cfg, V, spacing=seed_spacing, extent=seed_extent):
        try:
            res = newton_solve(th, om, z0, cfg, V)
        except TimeBudgetExhausted:
            failed += 1
            continue
        if res is None:
            continue
        z, traj, _ = res
        if any(np.linalg.norm(z - zk) <= dedup for zk, _ in roots):
            continue
        roots.append((z, traj))

    regular = []
    degenerate = []
    for z, traj in roots:
        sig = abs(signed_density_from_trajectory(traj, th, cfg))
        if sig <= cfg.tol_degenerate:
            degenerate.append(z)
        else:
            regular.append((z, traj, sig))

    regular.sort(key=lambda r: (float(np.linalg.norm(r[0])), tuple(r[0])))
    branches = []
    for idx, (z, traj, sig) in enumerate(regular):
        w = E_om.T @ traj.final_state.x
        action = modified_action(traj, th, om, cfg)
        mu = maslov_index_from_trajectory(traj, cfg, V)
        branches.append(
            Branch(
                index=idx,
                z=z,
                w=w,
                sigma_hat=sig,
                action=action,
                maslov=mu,
                trajectory=traj,
            )
        )

    fr = fold_radius(cfg)
    folds = []
    for i in range(len(branches)):
        for j in range(i + 1, len(branches)):
            if float(np.linalg.norm(branches[i].z - branches[j].z)) < fr:
                folds.append((i, j))

    return BranchSet(
        theta=th,
        omega=om,
        branches=tuple(branches),
        degenerate_roots=tuple(degenerate),
        degenerate_family=len(degenerate) >= 3,
        fold_pairs=tuple(folds),
        failed_seeds=failed,
    )


def check_regular(branch, cfg):
    """True iff the branch's angular density clears the degeneracy cut."""
    return branch.sigma_hat > cfg.tol_degenerate
