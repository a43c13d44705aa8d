"""Asymptotic trajectory data and the impact-parameter map.

Incoming trajectories are launched from the plane theta-perp shifted by
-(r0 + margin) theta, parameterized by chart coordinates z in R^(n-1).
After the last crossing of |x| = r0 the motion is free, so the final
direction xi_inf, the exit point, and the affine asymptote offset r_inf
are read off exactly.  The Jacobian d xi_inf / dz comes either from the
propagated monodromy (chained with the launch embedding and the unit
normalization) or from centered finite differences; their agreement is
one of the toolkit's standing cross-checks.

The angular density is

    sigma_hat(z) = |det(xi_inf, d xi_inf/dz_1, ..., d xi_inf/dz_{n-1})|

and vanishes exactly at degenerate (caustic / free-transition)
configurations; locate_degenerate refines such points by bisection.
"""

from dataclasses import dataclass

import numpy as np

from .dynamics import integrate_until_exit
from .errors import NoSignChange, NotOutgoing
from .geometry import frame, unit
from .potentials import PhasePoint


@dataclass(frozen=True)
class AsymptoticData:
    """Outgoing asymptote of a scattered trajectory.

    xi_inf is the unit final direction, x_exit the readout point on the
    exit sphere, r_inf the asymptote anchor chosen orthogonal to xi_inf
    (which makes the affine-offset representative unique), and t_exit
    the exit time.
    """

    xi_inf: np.ndarray
    x_exit: np.ndarray
    r_inf: np.ndarray
    t_exit: float


@dataclass(frozen=True)
class SRSample:
    """One scattering-relation sample in generating-function coordinates."""

    theta: np.ndarray
    omega: np.ndarray
    z: np.ndarray
    w: np.ndarray
    d_theta_S: np.ndarray
    d_omega_S: np.ndarray


def launch_incoming(theta, z, cfg, V=None, variant=0):
    """Phase point on the incoming plane: (E(theta) z - (r0+margin) theta,
    sqrt(2 lam) theta)."""
    th = unit(theta)
    z = np.atleast_1d(np.asarray(z, dtype=float))
    if z.size != cfg.n - 1:
        raise ValueError("z must have n-1 components")
    x = frame(th, variant) @ z - (cfg.r0 + cfg.margin) * th
    return PhasePoint(x, cfg.speed * th)


def extract_asymptotics(traj, cfg):
    """Asymptotic data of an outgoing trajectory."""
    if traj.exit_time is None:
        raise NotOutgoing("trajectory has no exit event (fixed-time run)")
    st = traj.final_state
    xi = st.xi
    speed = float(np.linalg.norm(xi))
    if speed == 0.0:
        raise NotOutgoing("final momentum vanishes")
    xi_inf = xi / speed
    if float(np.dot(st.x, xi)) < 0.0:
        raise NotOutgoing("final state is not outgoing")
    r_inf = st.x - float(np.dot(st.x, xi_inf)) * xi_inf
    return AsymptoticData(
        xi_inf=xi_inf, x_exit=st.x.copy(), r_inf=r_inf, t_exit=float(traj.exit_time)
    )


def trace(theta, z, cfg, V, variant=0, max_step=None, hess_skew=0.0):
    """Launch, integrate until exit, return the Trajectory."""
    start = launch_incoming(theta, z, cfg, V, variant=variant)
    return integrate_until_exit(start, V, cfg, max_step=max_step, hess_skew=hess_skew)


def impact_map(theta, z, cfg, V, variant=0):
    """Final unit direction xi_inf(theta, z)."""
    traj = trace(theta, z, cfg, V, variant=variant)
    return extract_asymptotics(traj, cfg).xi_inf


def jacobian_from_trajectory(traj, theta, cfg, variant=0):
    """d xi_inf / dz from the propagated monodromy of one trajectory.

    The launch map has derivative (E(theta), 0) into phase space, the
    xi-rows of the tangent map are constant under the free tail, and the
    unit normalization contributes the projector (I - xi xi^T)/|xi|.
    """
    n = cfg.n
    M = traj.monodromy
    xi = traj.final_state.xi
    speed = float(np.linalg.norm(xi))
    xi_hat = xi / speed
    E = frame(theta, variant)
    dxi_dz = M[n:, :n] @ E
    return (np.eye(n) - np.outer(xi_hat, xi_hat)) @ dxi_dz / speed


def jacobian_dxi_dz(theta, z, cfg, V, method="monodromy", variant=0, fd_step=None):
    """n x (n-1) Jacobian of the impact map at z.

    method "monodromy" reuses the variational flow of a single
    trajectory; "finite_difference" runs centered differences with step
    1e-5 * max(1, |z|) per chart coordinate.
    """
    z = np.atleast_1d(np.asarray(z, dtype=float))
    if method == "monodromy":
        traj = trace(theta, z, cfg, V, variant=variant)
        return jacobian_from_trajectory(traj, theta, cfg, variant=variant)
    if method == "finite_difference":
        step = fd_step if fd_step else 1e-5 * max(1.0, float(np.linalg.norm(z)))
        cols = []
        for i in range(cfg.n - 1):
            dz = np.zeros(cfg.n - 1)
            dz[i] = step
            plus = impact_map(theta, z + dz, cfg, V, variant=variant)
            minus = impact_map(theta, z - dz, cfg, V, variant=variant)
            cols.append((plus - minus) / (2.0 * step))
        return np.column_stack(cols)
    raise ValueError(f"unknown jacobian method: {method}")


def signed_density_from_trajectory(traj, theta, cfg, variant=0):
    """det(xi_inf, d xi_inf/dz_*) without the absolute value."""
    data_xi = traj.final_state.xi
    xi_inf = data_xi / float(np.linalg.norm(data_xi))
    Jz = jacobian_from_trajectory(traj, theta, cfg, variant=variant)
    return float(np.linalg.det(np.column_stack([xi_inf, Jz])))


def signed_density(theta, z, cfg, V, variant=0):
    traj = trace(theta, z, cfg, V, variant=variant)
    return signed_density_from_trajectory(traj, theta, cfg, variant=variant)


def angular_density(theta, z, cfg, V, variant=0):
    """sigma_hat(z) = |det(xi_inf, d xi_inf/dz_1, ...)|, computed from the
    monodromy route."""
    return abs(signed_density(theta, z, cfg, V, variant=variant))


def locate_degenerate(theta, z_from, z_to, cfg, V):
    """Bisect a degeneracy of the angular density along a z-segment.

    Two crossing types are handled: a sign change of the signed density
    between the endpoints (a fold, e.g. a rainbow), and a crossing of
    |density| through tol_degenerate (e.g. entering the exactly-free
    region past the support boundary).  Refines the crossing parameter
    until the remaining segment is shorter than 1e-8 and returns the
    located z*.
    """
    z_from = np.atleast_1d(np.asarray(z_from, dtype=float))
    z_to = np.atleast_1d(np.asarray(z_to, dtype=float))
    seg = z_to - z_from
    seg_len = float(np.linalg.norm(seg))
    if seg_len == 0.0:
        raise NoSignChange("empty segment")

    def det_at(s):
        return signed_density(theta, z_from + s * seg, cfg, V)

    d0 = det_at(0.0)
    d1 = det_at(1.0)
    tol = cfg.tol_degenerate

    if abs(d0) > tol and abs(d1) > tol and np.sign(d0) != np.sign(d1):
        f = det_at
        f0 = d0
    elif (abs(d0) - tol) * (abs(d1) - tol) < 0.0:
        f = lambda s: abs(det_at(s)) - tol
        f0 = abs(d0) - tol
    else:
        raise NoSignChange(
            f"no density crossing on segment: |det| endpoints {abs(d0)}, {abs(d1)}"
        )

    lo, hi = 0.0, 1.0
    while (hi - lo) * seg_len > 1e-8:
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if fm == 0.0:
            lo = hi = mid
            break
        if np.sign(fm) == np.sign(f0):
            lo = mid
        else:
            hi = mid
    s_star = 0.5 * (lo + hi)
    return z_from + s_star * seg
