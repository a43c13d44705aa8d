"""Modified action, its direction gradients, Maslov index, amplitude.

The modified action of a branch is

    S = <y0, v theta> + int_0^te L dt + lam te - <x(te), v omega>

with L = |xi|^2 / 2 - V the Lagrangian and v = sqrt(2 lam).  The
combination is independent of the readout time te (extending the
trajectory by free flight adds L dt + lam dt = 2 lam dt to the middle
terms and exactly <xi_e, v omega> dt = 2 lam dt to the subtracted one)
and of the launch offset along -theta, which the invariance tests
exercise.  Its chart gradients have closed forms

    d_theta S = v E(theta)^T y0        d_omega S = -v E(omega)^T x(te)

used both directly and as the cross-check target for finite
differences of S under branch continuation.

The Maslov index counts conjugate points: interior zero crossings of
D(t) = det(dx(t)/dx(0)) along a densely sampled re-run, plus crossings
on the outgoing free tail where D continues as the degree-(n-1)
polynomial det(M_xx + dt M_xix).
"""

import os
from dataclasses import dataclass

import numpy as np

from .dynamics import integrate_until_exit
from .errors import DegenerateBranchPresent, TangentZero
from .geometry import chart_point, frame, unit

_FD_STEP = 1e-5
_HESS_STEP = 1e-3
_MASLOV_SAMPLES = 512


def modified_action(traj, theta, omega, cfg, extra_time=0.0):
    """Action of a traced trajectory, read out extra_time past exit."""
    if traj.exit_time is None:
        raise ValueError("modified_action needs an exit trajectory")
    th = unit(theta)
    om = unit(omega)
    v = cfg.speed
    x_e = traj.final_state.x
    xi_e = traj.final_state.xi
    # Outside the support L = |xi|^2 / 2, constant along the free tail.
    raw = traj.final_action + extra_time * 0.5 * float(np.dot(xi_e, xi_e))
    t_read = traj.exit_time + extra_time
    x_read = x_e + extra_time * xi_e
    boundary_in = float(np.dot(traj.launch.x, v * th))
    boundary_out = float(np.dot(x_read, v * om))
    return boundary_in + raw + cfg.lam * t_read - boundary_out


@dataclass(frozen=True)
class ActionGradients:
    """Chart gradients of S, closed form and finite difference."""

    d_theta: np.ndarray
    d_omega: np.ndarray
    d_theta_fd: np.ndarray
    d_omega_fd: np.ndarray


def _closed_gradients(traj, theta, omega, cfg):
    v = cfg.speed
    d_th = v * (frame(unit(theta)).T @ traj.launch.x)
    d_om = -v * (frame(unit(omega)).T @ traj.final_state.x)
    return d_th, d_om


def action_gradients(theta, omega, z, cfg, V, step=_FD_STEP):
    """Both gradient routes at the branch through z.

    The finite-difference route re-solves the branch at perturbed
    directions via Newton continuation, so it is a genuinely
    independent check of the closed form.
    """
    from .branches import continue_branch

    th = unit(theta)
    om = unit(omega)
    z0, traj0 = continue_branch(th, om, z, cfg, V)
    d_th, d_om = _closed_gradients(traj0, th, om, cfg)

    n1 = cfg.n - 1
    d_th_fd = np.empty(n1)
    d_om_fd = np.empty(n1)
    for i in range(n1):
        u = np.zeros(n1)
        u[i] = step
        th_p = chart_point(th, u)
        th_m = chart_point(th, -u)
        zp, tp = continue_branch(th_p, om, z0, cfg, V)
        zm, tm = continue_branch(th_m, om, z0, cfg, V)
        sp = modified_action(tp, th_p, om, cfg)
        sm = modified_action(tm, th_m, om, cfg)
        d_th_fd[i] = (sp - sm) / (2.0 * step)

        om_p = chart_point(om, u)
        om_m = chart_point(om, -u)
        zp, tp = continue_branch(th, om_p, z0, cfg, V)
        zm, tm = continue_branch(th, om_m, z0, cfg, V)
        sp = modified_action(tp, th, om_p, cfg)
        sm = modified_action(tm, th, om_m, cfg)
        d_om_fd[i] = (sp - sm) / (2.0 * step)

    return ActionGradients(
        d_theta=d_th, d_omega=d_om, d_theta_fd=d_th_fd, d_omega_fd=d_om_fd
    )


@dataclass(frozen=True)
class MixedHessian:
    """The (n-1)x(n-1) block d_theta d_omega S, two constructions."""

    of_gradient: np.ndarray
    of_action: np.ndarray

    @property
    def det(self):
        return float(np.linalg.det(self.of_gradient))


def mixed_hessian(theta, omega, z, cfg, V, step=_HESS_STEP):
    """Mixed second derivatives of S in the two direction charts.

    of_gradient differentiates the closed-form d_omega S over theta
    (one finite difference on an exactly known quantity); of_action
    double-differences S itself.  The double difference divides the
    action error by step^2, so the step is kept at 1e-3 rather than
    the gradient step to hold the comparison near 1e-6.
    """
    from .branches import continue_branch

    th = unit(theta)
    om = unit(omega)
    E_om = frame(om)
    v = cfg.speed
    z0, _ = continue_branch(th, om, z, cfg, V)

    n1 = cfg.n - 1
    of_grad = np.empty((n1, n1))
    for i in range(n1):
        u = np.zeros(n1)
        u[i] = step
        th_p = chart_point(th, u)
        th_m = chart_point(th, -u)
        zp, tp = continue_branch(th_p, om, z0, cfg, V)
        zm, tm = continue_branch(th_m, om, z0, cfg, V)
        # d_omega S in the frozen base chart of omega.
        g_p = -v * (E_om.T @ tp.final_state.x)
        g_m = -v * (E_om.T @ tm.final_state.x)
        of_grad[i, :] = (g_p - g_m) / (2.0 * step)

    of_act = np.empty((n1, n1))
    for i in range(n1):
        ui = np.zeros(n1)
        ui[i] = step
        th_p = chart_point(th, ui)
        th_m = chart_point(th, -ui)
        for j in range(n1):
            uj = np.zeros(n1)
            uj[j] = step
            om_p = chart_point(om, uj)
            om_m = chart_point(om, -uj)
            vals = []
            for t_dir, o_dir in (
                (th_p, om_p),
                (th_p, om_m),
                (th_m, om_p),
                (th_m, om_m),
            ):
                zz, tt = continue_branch(t_dir, o_dir, z0, cfg, V)
                vals.append(modified_action(tt, t_dir, o_dir, cfg))
            of_act[i, j] = (vals[0] - vals[1] - vals[2] + vals[3]) / (
                4.0 * step * step
            )

    return MixedHessian(of_gradient=of_grad, of_action=of_act)


def _tail_crossings(A, B, n, scale, tol):
    """Sign changes of q(dt) = det(A + dt B) for dt > 0.

    A and B are the dx(t)/dx(0) and dxi(t)/dx(0) blocks at exit.  The
    flow-direction variation is in the kernel of B (its momentum stays
    zero once outside the support), so q has degree <= n - 1 and n
    interpolation nodes pin it down exactly.
    """
    deg = n - 1
    nodes = np.linspace(0.0, float(deg + 1), deg + 1) if deg else np.array([0.0])
    vals = np.array([np.linalg.det(A + t * B) for t in nodes])
    if deg == 0:
        coeffs = vals
    else:
        coeffs = np.polynomial.polynomial.polyvander(nodes, deg)
        coeffs = np.linalg.solve(coeffs, vals)
    # coeffs[k] multiplies dt^k; highest first for np.roots.
    c = coeffs[::-1].copy()
    cmax = np.max(np.abs(c))
    if cmax <= tol * scale:
        raise TangentZero("outgoing Jacobian determinant vanishes identically")
    while len(c) > 1 and abs(c[0]) <= 1e-9 * cmax:
        c = c[1:]
    q0 = vals[0]
    if abs(q0) <= tol * scale:
        raise TangentZero("conjugate point at the exit sample")
    if len(c) == 1:
        return 0
    roots = np.roots(c)
    pos = sorted(
        float(r.real)
        for r in roots
        if abs(r.imag) <= 1e-7 * (1.0 + abs(r.real)) and r.real > 1e-12
    )
    if not pos:
        return 0
    # Count actual sign flips across the roots (even-order touches do
    # not flip), evaluating q between consecutive roots.
    qpoly = np.poly1d(c)
    probes = [0.0]
    for a, b in zip(pos[:-1], pos[1:]):
        probes.append(0.5 * (a + b))
    probes.append(pos[-1] + 1.0)
    signs = [np.sign(qpoly(p)) if p > 0.0 else np.sign(q0) for p in probes]
    flips = 0
    for a, b in zip(signs[:-1], signs[1:]):
        if a != 0 and b != 0 and a != b:
            flips += 1
    return flips


def maslov_index_from_trajectory(traj, cfg, V, base_samples=_MASLOV_SAMPLES):
    """Conjugate-point count of an exit trajectory.

    Re-integrates with a forced maximum step so the determinant
    D(t) = det(M_xx) is densely sampled, counts its interior sign
    changes, then adds crossings on the outgoing free tail.  Raises
    TangentZero when D hugs zero over consecutive samples, which the
    crossing parity cannot resolve.
    """
    if traj.exit_time is None:
        raise ValueError("maslov index needs an exit trajectory")
    n = traj.n
    if traj.numeric_start is None or not traj.entered_support:
        M = traj.monodromy
        return _tail_crossings(M[:n, :n], M[n:, :n], n, 1.0, 1e-10)

    duration = traj.exit_time - traj.numeric_start
    max_step = max(duration, 1e-9) / float(base_samples)
    dense = integrate_until_exit(traj.launch, V, cfg, max_step=max_step)

    M = dense.monodromies
    dets = np.linalg.det(M[:, :n, :n])
    scale = float(np.max(np.abs(dets)))
    tangent_tol = 1e-10 * scale
    tiny = np.abs(dets) <= tangent_tol
    run = 0
    for t in tiny:
        run = run + 1 if t else 0
        if run >= 3:
            raise TangentZero("Jacobian determinant vanishes along a window")
    signs = np.sign(dets[~tiny])
    interior = int(np.sum(signs[:-1] != signs[1:]))

    Mf = dense.monodromy
    tail = _tail_crossings(Mf[:n, :n], Mf[n:, :n], n, scale, 1e-10)
    return interior + tail


def maslov_index(theta, z, cfg, V, base_samples=_MASLOV_SAMPLES):
    """Maslov index of the trajectory launched from chart point z."""
    from .asymptotics import trace

    traj = trace(theta, z, cfg, V)
    return maslov_index_from_trajectory(traj, cfg, V, base_samples=base_samples)


@dataclass(frozen=True)
class Contribution:
    """One branch term of the amplitude sum."""

    index: int
    sigma_hat: float
    action: float
    maslov: int
    weight: complex


@dataclass(frozen=True)
class AmplitudeResult:
    """Leading-order amplitude at one (theta, omega, h)."""

    theta: np.ndarray
    omega: np.ndarray
    h: float
    contributions: tuple
    f: complex

    @property
    def cross_section(self):
        return float(abs(self.f)) ** 2


def assemble_from_branches(branch_set, h, cfg):
    """Amplitude from an already-solved branch set.

    Refuses (DegenerateBranchPresent) when the set carries a free
    continuum, a root at or below the density threshold, or a fold
    pair the solver could not separate; the stationary-phase weights
    sigma_hat^(-1/2) are meaningless there.
    """
    if branch_set.degenerate_family:
        raise DegenerateBranchPresent(
            "free continuum at omega = theta; no isolated branch sum exists"
        )
    if branch_set.degenerate_roots:
        raise DegenerateBranchPresent(
            "root with angular density at or below tol_degenerate"
        )
    if branch_set.fold_pairs:
        raise DegenerateBranchPresent(
            "unresolved fold pair among the branch roots",
            branch_indices=tuple(
                i for pair in branch_set.fold_pairs for i in pair
            ),
        )
    contributions = []
    total = 0.0 + 0.0j
    for br in branch_set.branches:
        phase = br.action / h - br.maslov * np.pi / 2.0
        weight = br.sigma_hat ** -0.5 * np.exp(1j * phase)
        contributions.append(
            Contribution(
                index=br.index,
                sigma_hat=br.sigma_hat,
                action=br.action,
                maslov=br.maslov,
                weight=weight,
            )
        )
        total += weight
    return AmplitudeResult(
        theta=branch_set.theta,
        omega=branch_set.omega,
        h=h,
        contributions=tuple(contributions),
        f=total,
    )


def assemble_amplitude(theta, omega, cfg, V, h, branch_set=None):
    """Leading-order scattering amplitude at one direction pair."""
    from .branches import find_branches

    if branch_set is None:
        branch_set = find_branches(theta, omega, cfg, V)
    return assemble_from_branches(branch_set, h, cfg)


def _thread_count(requested=None):
    if requested is not None:
        return max(1, int(requested))
    env = os.environ.get("SCATREL_THREADS")
    if env:
        return max(1, int(env))
    return min(8, os.cpu_count() or 1)


@dataclass(frozen=True)
class FanEntry:
    """Per-direction record of an amplitude fan."""

    omega: np.ndarray
    result: object
    error: str


def amplitude_fan(theta, omegas, cfg, V, h, threads=None):
    """Amplitudes over a grid of outgoing directions.

    Entries keep the input order; per-direction failures are recorded
    as error strings instead of aborting the fan.  Work is spread over
    a thread pool (the integrator core releases the interpreter lock).
    """
    from concurrent.futures import ThreadPoolExecutor

    from .errors import ScatrelError

    def one(om):
        try:
            return FanEntry(
                omega=unit(om),
                result=assemble_amplitude(theta, om, cfg, V, h),
                error="",
            )
        except ScatrelError as exc:
            return FanEntry(omega=unit(om), result=None, error=str(exc))

    omegas = list(omegas)
    workers = min(_thread_count(threads), max(1, len(omegas)))
    if workers == 1:
        return [one(om) for om in omegas]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(one, omegas))
