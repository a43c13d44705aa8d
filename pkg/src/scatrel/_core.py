"""Compiled integration kernels.

The augmented state for dimension n is one flat vector of length
2n + 4n^2 + 1:

    y[0:n]           position x
    y[n:2n]          momentum xi
    y[2n:2n+4n^2]    monodromy M, row-major 2n x 2n
    y[2n+4n^2]       accumulated Lagrangian integral  int (|xi|^2/2 - V) dt

The flow is Hamilton's equations for p = |xi|^2/2 + V(x) joint with the
variational equations dM/dt = [[0, I], [-Hess V, 0]] M.  The stepper is
an embedded Dormand-Prince 5(4) pair with FSAL and mixed abs/rel error
control; symplecticity of M is checked downstream, not enforced.

`hess_skew` adds an asymmetric perturbation to Hess V[0,1] only.  It is
a fault-injection hook for the invariant harness: a symmetric scaling
would leave the flow symplectic, so only an asymmetric corruption can
prove the symplecticity check has teeth.  It must be 0.0 in real runs.
"""

import numpy as np
from numba import njit

# exp(1 - 1/u) underflows far below double precision for u under this floor
U_FLOOR = 1.0 / 700.0

# Dormand-Prince 5(4) tableau
A21 = 1.0 / 5.0
A31, A32 = 3.0 / 40.0, 9.0 / 40.0
A41, A42, A43 = 44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0
A51, A52, A53, A54 = 19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0
A61, A62, A63, A64, A65 = (
    9017.0 / 3168.0,
    -355.0 / 33.0,
    46732.0 / 5247.0,
    49.0 / 176.0,
    -5103.0 / 18656.0,
)
B1, B3, B4, B5, B6 = 35.0 / 384.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0
# b - b*: coefficients of the embedded error estimate
E1, E3, E4, E5, E6, E7 = (
    71.0 / 57600.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
)

STATUS_EXIT = 0
STATUS_REACHED_T = 1
STATUS_STEP_FAILURE = 2
STATUS_TIME_BUDGET = 3
STATUS_RECORD_FULL = 4


@njit(cache=True, nogil=True)
def potential_vgh(x, centers, radii, amps, grad, hess, skew):
    """Value of V at x; fills grad and hess in place."""
    n = x.shape[0]
    for i in range(n):
        grad[i] = 0.0
        for j in range(n):
            hess[i, j] = 0.0
    val_total = 0.0
    for k in range(centers.shape[0]):
        amp = amps[k]
        if amp == 0.0:
            continue
        rho2 = radii[k] * radii[k]
        s = 0.0
        for i in range(n):
            d = x[i] - centers[k, i]
            s += d * d
        s /= rho2
        if s < 1.0:
            u = 1.0 - s
            if u > U_FLOOR:
                val = amp * np.exp(1.0 - 1.0 / u)
                val_total += val
                dv = -val / (u * u)
                d2v = val * (1.0 / (u * u * u * u) - 2.0 / (u * u * u))
                c1 = dv * 2.0 / rho2
                c2 = d2v * 4.0 / (rho2 * rho2)
                for i in range(n):
                    di = x[i] - centers[k, i]
                    grad[i] += c1 * di
                    hess[i, i] += c1
                    for j in range(n):
                        hess[i, j] += c2 * di * (x[j] - centers[k, j])
    if skew != 0.0:
        hess[0, 1] += skew
    return val_total


@njit(cache=True, nogil=True)
def deriv(y, dy, n, centers, radii, amps, skew, grad, hess):
    """Right-hand side of the augmented system."""
    m2 = 2 * n
    v = potential_vgh(y[0:n], centers, radii, amps, grad, hess, skew)
    kin = 0.0
    for i in range(n):
        dy[i] = y[n + i]
        kin += y[n + i] * y[n + i]
        dy[n + i] = -grad[i]
    base = m2
    for c in range(m2):
        for r in range(n):
            dy[base + r * m2 + c] = y[base + (n + r) * m2 + c]
        for r in range(n):
            acc = 0.0
            for j in range(n):
                acc += hess[r, j] * y[base + j * m2 + c]
            dy[base + (n + r) * m2 + c] = -acc
    dy[base + m2 * m2] = 0.5 * kin - v


@njit(cache=True, nogil=True)
def _stage_sum1(ytmp, y, h, c1, k1, m):
    for i in range(m):
        ytmp[i] = y[i] + h * c1 * k1[i]


@njit(cache=True, nogil=True)
def rk_step(y, h, n, centers, radii, amps, skew, k1, k2, k3, k4, k5, k6, k7, ytmp, grad, hess, ynew):
    """One Dormand-Prince step of size h from y.

    k1 must hold f(y) on entry.  On return ynew holds the 5th-order
    solution, k7 holds f(ynew) (FSAL), and the scaled max error norm is
    returned.
    """
    m = y.shape[0]
    _stage_sum1(ytmp, y, h, A21, k1, m)
    deriv(ytmp, k2, n, centers, radii, amps, skew, grad, hess)
    for i in range(m):
        ytmp[i] = y[i] + h * (A31 * k1[i] + A32 * k2[i])
    deriv(ytmp, k3, n, centers, radii, amps, skew, grad, hess)
    for i in range(m):
        ytmp[i] = y[i] + h * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i])
    deriv(ytmp, k4, n, centers, radii, amps, skew, grad, hess)
    for i in range(m):
        ytmp[i] = y[i] + h * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i])
    deriv(ytmp, k5, n, centers, radii, amps, skew, grad, hess)
    for i in range(m):
        ytmp[i] = y[i] + h * (
            A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]
        )
    deriv(ytmp, k6, n, centers, radii, amps, skew, grad, hess)
    for i in range(m):
        ynew[i] = y[i] + h * (
            B1 * k1[i] + B3 * k3[i] + B4 * k4[i] + B5 * k5[i] + B6 * k6[i]
        )
    deriv(ynew, k7, n, centers, radii, amps, skew, grad, hess)
    err = 0.0
    for i in range(m):
        e = h * (
            E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]
        )
        ay = abs(y[i])
        an = abs(ynew[i])
        sc = ay if ay > an else an
        w = abs(e) / (1.0 + sc)
        if w > err:
            err = w
    return err


@njit(cache=True, nogil=True)
def _radial(y, n):
    """(|x|^2, <x, xi>) of the state."""
    r2 = 0.0
    dot = 0.0
    for i in range(n):
        r2 += y[i] * y[i]
        dot += y[i] * y[n + i]
    return r2, dot


@njit(cache=True, nogil=True)
def integrate(
    y0,
    t0,
    n,
    centers,
    radii,
    amps,
    skew,
    tol,
    mode,
    t_target,
    r_stop,
    t_budget,
    max_step,
    bisect_tol,
    rec_t,
    rec_y,
):
    """Adaptive integration with recording.

    mode 0: run until the state is outside radius r_stop with <x, xi> > 0,
    then bisect the last crossing of |x| = r_stop; t_budget bounds the
    integration time.  mode 1: run to exactly t = t_target.

    Records (t, y) for the initial point and every accepted step into
    rec_t / rec_y.  Returns (status, count, t_end); the final state is
    rec_y[count - 1].
    """
    m = y0.shape[0]
    cap = rec_t.shape[0]
    y = y0.copy()
    ynew = np.empty(m)
    ytmp = np.empty(m)
    k1 = np.empty(m)
    k2 = np.empty(m)
    k3 = np.empty(m)
    k4 = np.empty(m)
    k5 = np.empty(m)
    k6 = np.empty(m)
    k7 = np.empty(m)
    grad = np.empty(n)
    hess = np.empty((n, n))

    t = t0
    count = 0
    rec_t[count] = t
    for i in range(m):
        rec_y[count, i] = y[i]
    count += 1

    # immediate-exit guard for mode 0
    if mode == 0:
        r2, dot = _radial(y, n)
        if r2 >= r_stop * r_stop and dot > 0.0:
            return STATUS_EXIT, count, t

    deriv(y, k1, n, centers, radii, amps, skew, grad, hess)
    h = 0.01 * max_step
    if h <= 0.0:
        h = 1e-6
    total_steps = 0
    while True:
        total_steps += 1
        if total_steps > 2000000:
            return STATUS_STEP_FAILURE, count, t
        if mode == 1 and t + h > t_target:
            h = t_target - t
        if h > max_step:
            h = max_step
        if h < 1e-14 * (1.0 + abs(t)):
            return STATUS_STEP_FAILURE, count, t
        err = rk_step(
            y, h, n, centers, radii, amps, skew,
            k1, k2, k3, k4, k5, k6, k7, ytmp, grad, hess, ynew,
        )
        err = err / tol
        if err <= 1.0:
            t_prev = t
            t = t + h
            # keep y_prev in ytmp for the event bracket
            for i in range(m):
                ytmp[i] = y[i]
                y[i] = ynew[i]
                k1[i] = k7[i]
            if count >= cap:
                return STATUS_RECORD_FULL, count, t
            rec_t[count] = t
            for i in range(m):
                rec_y[count, i] = y[i]
            count += 1

            if mode == 0:
                r2, dot = _radial(y, n)
                if r2 >= r_stop * r_stop and dot > 0.0:
                    te, ok = _refine_exit(
                        ytmp, t_prev, t - t_prev, r_stop, n,
                        centers, radii, amps, skew, bisect_tol,
                        k2, k3, k4, k5, k6, k7, ynew, y, grad, hess,
                    )
                    # overwrite the overshoot sample with the exit state
                    rec_t[count - 1] = te
                    for i in range(m):
                        rec_y[count - 1, i] = y[i]
                    return STATUS_EXIT, count, te
                if t - t0 > t_budget:
                    return STATUS_TIME_BUDGET, count, t
            else:
                if t >= t_target - 1e-14 * (1.0 + abs(t_target)):
                    return STATUS_REACHED_T, count, t
            fac = 0.9 * err ** -0.2 if err > 0.0 else 5.0
            if fac > 5.0:
                fac = 5.0
            if fac < 0.2:
                fac = 0.2
            h = h * fac
        else:
            fac = 0.9 * err ** -0.2
            if fac < 0.1:
                fac = 0.1
            if fac > 0.9:
                fac = 0.9
            h = h * fac


@njit(cache=True, nogil=True)
def _trial_step(y_from, tau, n, centers, radii, amps, skew, k1, k2, k3, k4, k5, k6, k7, ytmp, grad, hess, yout):
    """Single uncontrolled DP step of size tau from y_from into yout."""
    deriv(y_from, k1, n, centers, radii, amps, skew, grad, hess)
    rk_step(
        y_from, tau, n, centers, radii, amps, skew,
        k1, k2, k3, k4, k5, k6, k7, ytmp, grad, hess, yout,
    )


@njit(cache=True, nogil=True)
def _refine_exit(
    y_prev, t_prev, h, r_stop, n, centers, radii, amps, skew, bisect_tol,
    k2, k3, k4, k5, k6, k7, ytmp, y_out, grad, hess,
):
    """Bisect the last crossing of |x| = r_stop inside the accepted step.

    y_prev is the state at t_prev; the step of size h ends outside and
    outgoing.  Writes the exit state into y_out and returns (t_exit, ok).
    A single controlled-size DP substep from y_prev has local error no
    larger than the accepted full step, so trial states inherit the
    integration tolerance.
    """
    m = y_prev.shape[0]
    k1 = np.empty(m)
    ytrial = np.empty(m)
    # coarse backward scan for the last inside sample
    nscan = 16
    lo = 0.0
    hi = h
    found = False
    for j in range(nscan - 1, -1, -1):
        tau = h * j / nscan
        if tau == 0.0:
            r2, _ = _radial(y_prev, n)
            rr = np.sqrt(r2) - r_stop
            if rr < 0.0:
                lo = 0.0
                found = True
            break
        _trial_step(
            y_prev, tau, n, centers, radii, amps, skew,
            k1, k2, k3, k4, k5, k6, k7, ytmp, grad, hess, ytrial,
        )
        r2, _ = _radial(ytrial, n)
        if np.sqrt(r2) - r_stop < 0.0:
            lo = tau
            found = True
            break
        hi = tau
    if not found:
        # grazing pass that never dipped inside; exit at the step end
        _trial_step(
            y_prev, h, n, centers, radii, amps, skew,
            k1, k2, k3, k4, k5, k6, k7, ytmp, grad, hess, y_out,
        )
        return t_prev + h, True
    for _ in range(90):
        if hi - lo <= bisect_tol:
            break
        mid = 0.5 * (lo + hi)
        _trial_step(
            y_prev, mid, n, centers, radii, amps, skew,
            k1, k2, k3, k4, k5, k6, k7, ytmp, grad, hess, ytrial,
        )
        r2, _ = _radial(ytrial, n)
        if np.sqrt(r2) - r_stop < 0.0:
            lo = mid
        else:
            hi = mid
    _trial_step(
        y_prev, hi, n, centers, radii, amps, skew,
        k1, k2, k3, k4, k5, k6, k7, ytmp, grad, hess, y_out,
    )
    return t_prev + hi, True
