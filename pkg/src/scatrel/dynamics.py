"""Hamiltonian flow with exact free-flight splicing.

The Hamiltonian is p(x, xi) = |xi|^2/2 + V(x).  Outside the centered
ball containing supp V the motion is affine, so trajectories are spliced
from three exact/numeric parts:

    launch --(exact free flight)--> support-ball entry
          --(adaptive DP45 with monodromy)--> support-ball exit
          --(exact free flight)--> crossing of |x| = r0

Trajectories that never meet the support ball are computed entirely in
closed form.  The monodromy is always taken with respect to the launch
state, and the accumulated integral of the Lagrangian L = |xi|^2/2 - V
rides along in the augmented state.
"""

from dataclasses import dataclass

import numpy as np

from . import _core
from .errors import SegmentIntersectsSupport, StepFailure, TimeBudgetExhausted
from .potentials import PhasePoint, check_support_inside

_REC_CAP = 4096
_REC_CAP_MAX = 1048576


def eval_hamiltonian(pt, V):
    """Energy |xi|^2/2 + V(x) at a phase point."""
    return 0.5 * float(np.dot(pt.xi, pt.xi)) + V.value(pt.x)


def symplectic_form(n):
    """The 2n x 2n matrix J with blocks [[0, I], [-I, 0]]."""
    J = np.zeros((2 * n, 2 * n))
    J[:n, n:] = np.eye(n)
    J[n:, :n] = -np.eye(n)
    return J


def free_monodromy(dt, n):
    """Tangent map [[I, dt I], [0, I]] of free flight."""
    M = np.eye(2 * n)
    M[:n, n:] = dt * np.eye(n)
    return M


def free_flight(pt, dt, V):
    """Exact free translation (x + dt xi, xi).

    Raises SegmentIntersectsSupport if the swept segment meets the
    support of V (per bump, exact point-segment distance).
    """
    x = pt.x
    xi = pt.xi
    v2 = float(np.dot(xi, xi))
    lo, hi = (dt, 0.0) if dt < 0 else (0.0, dt)
    for b in V.bumps:
        c = np.asarray(b.center, dtype=float)
        if v2 == 0.0:
            s_star = 0.0
        else:
            s_star = float(np.clip(-np.dot(x - c, xi) / v2, lo, hi))
        d = x + s_star * xi - c
        if float(np.linalg.norm(d)) < b.radius:
            raise SegmentIntersectsSupport(
                f"free segment passes within {b.radius} of bump center {b.center}"
            )
    return PhasePoint(x + dt * xi, xi.copy())


@dataclass
class Trajectory:
    """Time-sampled phase curve with propagated monodromy and action.

    times/states/monodromies/actions are aligned arrays, one row per
    stored sample; states rows are (x, xi).  actions holds the running
    integral of L = |xi|^2/2 - V from the launch time.  exit_time is the
    time of the last crossing out of the ball |x| = r0 (the time of
    closest approach for trajectories that never enter it, so the
    readout state is always outgoing); fixed-time runs carry None.
    numeric_start is the splice time at which adaptive integration
    began, None when the whole trajectory is exact free flight.
    """

    times: np.ndarray
    states: np.ndarray
    monodromies: np.ndarray
    actions: np.ndarray
    exit_time: float
    entered_support: bool
    steps_taken: int
    n: int
    launch: PhasePoint
    numeric_start: float = None

    @property
    def monodromy(self):
        """Tangent map at the final stored sample."""
        return self.monodromies[-1]

    @property
    def final_state(self):
        return PhasePoint(self.states[-1, : self.n], self.states[-1, self.n :])

    @property
    def final_action(self):
        return float(self.actions[-1])

    @property
    def samples(self):
        """Ordered list of (t, PhasePoint)."""
        return [
            (float(t), PhasePoint(s[: self.n], s[self.n :]))
            for t, s in zip(self.times, self.states)
        ]

    def energy_profile(self, V):
        """Energy at every stored sample."""
        return np.array(
            [
                0.5 * float(np.dot(s[self.n :], s[self.n :])) + V.value(s[: self.n])
                for s in self.states
            ]
        )

    def symplectic_defect(self):
        """max-norm of M^T J M - J at every stored sample."""
        J = symplectic_form(self.n)
        out = np.empty(len(self.times))
        for i, M in enumerate(self.monodromies):
            out[i] = np.max(np.abs(M.T @ J @ M - J))
        return out


def _ball_entry_time(x0, xi, radius):
    """Earliest t >= 0 with |x0 + t xi| = radius, or None if the forward
    ray stays outside the open ball."""
    v2 = float(np.dot(xi, xi))
    if v2 == 0.0:
        return 0.0 if float(np.dot(x0, x0)) < radius * radius else None
    c0 = float(np.dot(x0, x0)) - radius * radius
    if c0 < 0.0:
        return 0.0
    beta = float(np.dot(x0, xi))
    disc = beta * beta - v2 * c0
    if disc <= 0.0:
        return None
    t_in = (-beta - np.sqrt(disc)) / v2
    if t_in < 0.0:
        return None
    return t_in


def _outgoing_crossing_time(x0, xi, radius):
    """Last t >= 0 with |x0 + t xi| = radius on a free ray, or the time
    of closest approach when the ray never reaches that radius."""
    v2 = float(np.dot(xi, xi))
    beta = float(np.dot(x0, xi))
    if v2 == 0.0:
        return 0.0
    c0 = float(np.dot(x0, x0)) - radius * radius
    disc = beta * beta - v2 * c0
    if disc > 0.0:
        t_out = (-beta + np.sqrt(disc)) / v2
        if t_out > 0.0:
            return t_out
    return max(0.0, -beta / v2)


def _pack_state(x, xi, M, action):
    n = x.size
    y = np.empty(2 * n + 4 * n * n + 1)
    y[:n] = x
    y[n : 2 * n] = xi
    y[2 * n : 2 * n + 4 * n * n] = M.reshape(-1)
    y[-1] = action
    return y


def _unpack(rec_t, rec_y, count, n):
    times = rec_t[:count].copy()
    states = rec_y[:count, : 2 * n].copy()
    monos = rec_y[:count, 2 * n : 2 * n + 4 * n * n].reshape(count, 2 * n, 2 * n).copy()
    actions = rec_y[:count, -1].copy()
    return times, states, monos, actions


def _free_trajectory(start, V, cfg):
    """Exact trajectory for a launch whose ray misses the support ball."""
    n = cfg.n
    x0, xi = start.x, start.xi
    t_exit = _outgoing_crossing_time(x0, xi, cfg.r0)
    kin = 0.5 * float(np.dot(xi, xi))
    if t_exit > 0.0:
        times = np.array([0.0, t_exit])
        states = np.vstack([np.concatenate([x0, xi]), np.concatenate([x0 + t_exit * xi, xi])])
        monos = np.stack([np.eye(2 * n), free_monodromy(t_exit, n)])
        actions = np.array([0.0, kin * t_exit])
    else:
        times = np.array([0.0])
        states = np.concatenate([x0, xi])[None, :]
        monos = np.eye(2 * n)[None, :, :]
        actions = np.array([0.0])
    return Trajectory(
        times=times,
        states=states,
        monodromies=monos,
        actions=actions,
        exit_time=t_exit,
        entered_support=False,
        steps_taken=0,
        n=n,
        launch=start,
        numeric_start=None,
    )


def _structural_max_step(cfg, V):
    """Largest step that cannot fly over a bump unnoticed.

    The stage points of one embedded step are at most half a step
    apart; if all of them land outside a bump the error estimate is
    exactly zero and a straight line is accepted across it.  Capping
    the step so half a step of path length stays below a quarter of
    the smallest bump radius keeps the shell where the bump exceeds
    1e-12 (thickness ~0.38 rho on a crossing) sampled by some stage.
    """
    if not V.bumps:
        return np.inf
    rho_min = min(b.radius for b in V.bumps)
    drop = -sum(min(0.0, b.amplitude) for b in V.bumps)
    v_cap = np.sqrt(2.0 * (cfg.lam + drop))
    return rho_min / (2.0 * v_cap)


def _run_core(y0, t0, cfg, V, mode, t_target, r_stop, max_step, hess_skew):
    """Call the compiled integrator, growing the record buffer on demand."""
    centers, radii, amps = V.packed(cfg.n)
    ms = max_step if (max_step is not None and max_step > 0) else np.inf
    ms = min(ms, _structural_max_step(cfg, V))
    if not np.isfinite(ms):
        ms = 2.0 * cfg.r0 / cfg.speed
    cap = _REC_CAP
    if mode == 1:
        cap = min(max(cap, int(4.0 * t_target / ms) + 64), 65536)
    while True:
        rec_t = np.empty(cap)
        rec_y = np.empty((cap, y0.size))
        status, count, t_end = _core.integrate(
            y0,
            t0,
            cfg.n,
            centers,
            radii,
            amps,
            float(hess_skew),
            cfg.tol_integrate,
            mode,
            t_target,
            r_stop,
            cfg.t_max,
            ms,
            min(cfg.tol_integrate, 1e-13),
            rec_t,
            rec_y,
        )
        if status == _core.STATUS_RECORD_FULL and cap < _REC_CAP_MAX:
            cap *= 4
            continue
        return status, count, t_end, rec_t, rec_y


def integrate_until_exit(start, V, cfg, max_step=None, hess_skew=0.0):
    """Integrate Hamilton's equations until the trajectory leaves the
    ball |x| = r0 outgoing, splicing exact free flight outside the
    support ball.

    Raises TimeBudgetExhausted for (near-)trapped trajectories and
    StepFailure when the local tolerance cannot be met.
    """
    check_support_inside(V, cfg)
    n = cfg.n
    if start.x.size != n:
        raise ValueError("phase point dimension does not match config")
    x0, xi0 = start.x, start.xi
    r_support = V.support_radius
    t_entry = _ball_entry_time(x0, xi0, r_support) if r_support > 0 else None
    if t_entry is None:
        return _free_trajectory(start, V, cfg)

    kin0 = 0.5 * float(np.dot(xi0, xi0))
    x_in = x0 + t_entry * xi0
    y0 = _pack_state(x_in, xi0, free_monodromy(t_entry, n), kin0 * t_entry)
    status, count, t_end, rec_t, rec_y = _run_core(
        y0, t_entry, cfg, V, mode=0, t_target=0.0, r_stop=r_support,
        max_step=max_step, hess_skew=hess_skew,
    )
    if status == _core.STATUS_TIME_BUDGET:
        raise TimeBudgetExhausted(
            f"no exit from the interaction region within t_max = {cfg.t_max}"
        )
    if status != _core.STATUS_EXIT:
        raise StepFailure(f"integrator failed with status {status} at t = {t_end}")

    times, states, monos, actions = _unpack(rec_t, rec_y, count, n)

    # exact free coast from the support-ball exit to the r0 sphere
    x_s = states[-1, :n]
    xi_s = states[-1, n:]
    v2 = float(np.dot(xi_s, xi_s))
    beta = float(np.dot(x_s, xi_s))
    disc = beta * beta + v2 * (cfg.r0 * cfg.r0 - float(np.dot(x_s, x_s)))
    delta = max(0.0, (-beta + np.sqrt(max(disc, 0.0))) / v2)
    t_exit = t_end + delta
    if delta > 0.0:
        exit_state = np.concatenate([x_s + delta * xi_s, xi_s])
        exit_mono = free_monodromy(delta, n) @ monos[-1]
        exit_action = actions[-1] + 0.5 * v2 * delta
        times = np.append(times, t_exit)
        states = np.vstack([states, exit_state])
        monos = np.concatenate([monos, exit_mono[None, :, :]])
        actions = np.append(actions, exit_action)

    if t_entry > 0.0:
        times = np.concatenate([[0.0], times])
        states = np.vstack([np.concatenate([x0, xi0]), states])
        monos = np.concatenate([np.eye(2 * n)[None, :, :], monos])
        actions = np.concatenate([[0.0], actions])

    return Trajectory(
        times=times,
        states=states,
        monodromies=monos,
        actions=actions,
        exit_time=t_exit,
        entered_support=True,
        steps_taken=count - 1,
        n=n,
        launch=start,
        numeric_start=t_entry,
    )


def integrate_fixed_time(start, V, cfg, t_final, max_step=None, hess_skew=0.0):
    """Integrate for exactly t_final time units (no exit event).

    Free stretches are integrated numerically here; the Runge-Kutta
    stages reproduce affine motion exactly, so no accuracy is lost.
    Used by tangent-map cross-checks and time-reversal tests.
    """
    check_support_inside(V, cfg)
    n = cfg.n
    if t_final < 0:
        raise ValueError("t_final must be >= 0")
    y0 = _pack_state(start.x, start.xi, np.eye(2 * n), 0.0)
    if t_final == 0.0:
        return Trajectory(
            times=np.array([0.0]),
            states=y0[None, : 2 * n].copy(),
            monodromies=np.eye(2 * n)[None, :, :],
            actions=np.array([0.0]),
            exit_time=None,
            entered_support=False,
            steps_taken=0,
            n=n,
            launch=start,
            numeric_start=0.0,
        )
    status, count, t_end, rec_t, rec_y = _run_core(
        y0, 0.0, cfg, V, mode=1, t_target=float(t_final), r_stop=0.0,
        max_step=max_step, hess_skew=hess_skew,
    )
    if status != _core.STATUS_REACHED_T:
        raise StepFailure(f"integrator failed with status {status} at t = {t_end}")
    times, states, monos, actions = _unpack(rec_t, rec_y, count, n)
    r_support = V.support_radius
    entered = bool(
        np.any(np.linalg.norm(states[:, :n], axis=1) < r_support)
    )
    return Trajectory(
        times=times,
        states=states,
        monodromies=monos,
        actions=actions,
        exit_time=None,
        entered_support=entered,
        steps_taken=count - 1,
        n=n,
        launch=start,
        numeric_start=0.0,
    )
