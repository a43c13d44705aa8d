"""Independent references for central potentials and fringe analysis.

Everything here avoids the production integrator on purpose: the
deflection and action come from radial quadrature after reduction by
angular momentum, conjugate points from a small dense-output ODE for
the transverse Jacobi field, and the interference period from a
nonlinear fit.  Agreement between these routes and the Hamiltonian
pipeline is the backbone of the acceptance tests.

Conventions.  For a central potential of support radius a and energy
lam = v^2 / 2, a ray with impact parameter b >= 0 turns by

    Theta(b) = pi - 2 asin(b / a) - 2 b int_{r0}^{a} dr / (r^2 sqrt(g))

with g(r) = 1 - b^2 / r^2 - V(r) / lam and r0 the outermost root of g.
Theta is positive toward the ray's near side; the signed deflection
delta(b) = sign(b) Theta(|b|) is the planar rotation angle from theta
to xi_inf in the chart orientation where b > 0 launches on the +e side
of the axis (a repulsive bump pushes such a ray further toward +e,
giving delta > 0).
"""

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.integrate import IntegrationWarning, quad, solve_ivp
from scipy.optimize import brentq, least_squares

from .errors import FitDiverged, OrbitingRegime

_ORBIT_TOL = 1e-8
_SCAN_POINTS = 4001


@dataclass(frozen=True)
class DeflectionCurve:
    """Tabulated (b, Theta(b), Theta'(b)) samples at one energy."""

    lam: float
    samples: tuple


def _central_checks(V, lam, b):
    if not V.is_central():
        raise ValueError("radial quadrature needs a single centered bump")
    if lam <= 0.0:
        raise ValueError("energy must be positive")
    if b < 0.0:
        raise ValueError("impact parameter must be nonnegative here")
    return V.support_radius


def _turning_radius(V, lam, b, a):
    """Outermost root of g(r) = 1 - b^2/r^2 - V(r)/lam in (0, a]."""

    def g(r):
        return 1.0 - (b / r) ** 2 - V.radial_value(r) / lam

    rs = np.linspace(a, max(1e-9 * a, 1e-12), _SCAN_POINTS)
    g_hi = g(rs[0])
    if g_hi <= 0.0:
        raise OrbitingRegime("no classically allowed region at the support edge")
    for k in range(1, len(rs)):
        g_lo = g(rs[k])
        if g_lo <= 0.0:
            if g_lo == 0.0:
                r0 = rs[k]
            else:
                r0 = brentq(g, rs[k], rs[k - 1], xtol=1e-15, rtol=8.9e-16)
            dg = 2.0 * b * b / r0**3 - V.radial_gradient(r0) / lam
            if abs(dg) < _ORBIT_TOL:
                raise OrbitingRegime(
                    f"double turning point at r = {r0:.6g}; trapped orbit"
                )
            return r0, dg
    raise OrbitingRegime("no turning point found; ray falls to the center")


def _inner_integral(V, lam, b, a, r0, dg, weight):
    """int over the bent arc with the sqrt singularity removed.

    Substituting r = r0 / (1 - u^2) turns dr / sqrt(g) into a smooth
    integrand on [0, sqrt(1 - r0/a)]; weight(r) multiplies it.
    """
    u_max = np.sqrt(max(1.0 - r0 / a, 0.0))
    if u_max == 0.0:
        return 0.0

    def integrand(u):
        one = 1.0 - u * u
        r = r0 / one
        g = 1.0 - (b / r) ** 2 - V.radial_value(r) / lam
        jac = 2.0 * r0 * u / (one * one)
        if g <= 0.0:
            # Roundoff at the turning point; use the analytic limit.
            return weight(r0) * 2.0 * r0 / np.sqrt(dg * r0)
        return weight(r) * jac / np.sqrt(g)

    # The flat bump tail defeats quad's error certificate below ~1e-12;
    # the returned best estimate is cross-validated against the ODE route.
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", IntegrationWarning)
        val, _ = quad(integrand, 0.0, u_max, epsabs=1e-12, epsrel=1e-12, limit=400)
    return val


def central_deflection_quadrature(V, lam, b):
    """Deflection angle Theta(b) >= 0 convention, by radial quadrature."""
    a = _central_checks(V, lam, b)
    if b >= a:
        return 0.0
    if b == 0.0:
        vmax = max(V.radial_value(r) for r in np.linspace(0.0, a, 2001))
        if lam > vmax:
            return 0.0
        return np.pi
    r0, dg = _turning_radius(V, lam, b, a)
    inner = _inner_integral(V, lam, b, a, r0, dg, lambda r: b / r**2)
    return np.pi - 2.0 * np.arcsin(min(b / a, 1.0)) - 2.0 * inner


def signed_deflection(V, lam, b):
    """Odd extension delta(b) = sign(b) Theta(|b|)."""
    if b < 0.0:
        return -central_deflection_quadrature(V, lam, -b)
    return central_deflection_quadrature(V, lam, b)


def deflection_derivative(V, lam, b, step=2e-3):
    """d delta / d b by twice Richardson-extrapolated central differences.

    Two extrapolation levels kill the h^2 and h^4 truncation terms;
    the h^4 term alone is not small enough near b = 0, where the odd
    extension has strong fifth-order structure.
    """

    def diff(h):
        return (signed_deflection(V, lam, b + h) - signed_deflection(V, lam, b - h)) / (
            2.0 * h
        )

    d1 = diff(step)
    d2 = diff(step / 2.0)
    d3 = diff(step / 4.0)
    r1 = (4.0 * d2 - d1) / 3.0
    r2 = (4.0 * d3 - d2) / 3.0
    return (16.0 * r2 - r1) / 15.0


def central_action_quadrature(V, lam, b):
    """Modified action of the central-scattering ray with parameter b.

    Reduces the boundary-corrected action to radial integrals; the
    incoming and outgoing boundary terms contribute -2 v sqrt(a^2-b^2)
    and the bent arc int (1 - V/lam) / sqrt(g) v dr.  Vanishes
    identically for V = 0.
    """
    a = _central_checks(V, lam, b)
    v = np.sqrt(2.0 * lam)
    if b >= a:
        return 0.0
    if b == 0.0:
        vmax = max(V.radial_value(r) for r in np.linspace(0.0, a, 2001))
        if lam <= vmax:
            raise OrbitingRegime("head-on reflection; no transmitted ray")

        def head_on(r):
            return np.sqrt(1.0 - V.radial_value(r) / lam) - 1.0

        val, _ = quad(head_on, 0.0, a, epsabs=1e-12, epsrel=1e-12, limit=400)
        return 2.0 * v * val
    r0, dg = _turning_radius(V, lam, b, a)
    inner = _inner_integral(
        V, lam, b, a, r0, dg, lambda r: 1.0 - V.radial_value(r) / lam
    )
    return -2.0 * v * np.sqrt(a * a - b * b) + 2.0 * v * inner


def deflection_curve(V, lam, bs, derivative_step=5e-3):
    """DeflectionCurve over the given impact parameters (signed)."""
    samples = tuple(
        (
            float(b),
            signed_deflection(V, lam, float(b)),
            deflection_derivative(V, lam, float(b), step=derivative_step),
        )
        for b in bs
    )
    return DeflectionCurve(lam=float(lam), samples=samples)


def deflection_roots(V, lam, target, n_scan=2001, b_pad=0.0):
    """All signed impact parameters with delta(b) = target (nonzero).

    Scans a signed grid over the support and refines each bracket; the
    target must avoid 0, where the free continuum outside the support
    makes the root set infinite.
    """
    a = V.support_radius
    if target == 0.0:
        raise ValueError("target 0 has a free continuum of roots")
    lo, hi = -(a + b_pad), a + b_pad
    bs = np.linspace(lo, hi, n_scan)
    vals = np.array([signed_deflection(V, lam, b) - target for b in bs])
    roots = []
    for k in range(len(bs) - 1):
        va, vb = vals[k], vals[k + 1]
        if va == 0.0:
            roots.append(bs[k])
        elif va * vb < 0.0:
            roots.append(
                brentq(
                    lambda b: signed_deflection(V, lam, b) - target,
                    bs[k],
                    bs[k + 1],
                    xtol=1e-14,
                    rtol=8.9e-16,
                )
            )
    if vals[-1] == 0.0:
        roots.append(bs[-1])
    dedup = []
    for r in sorted(roots):
        if not dedup or abs(r - dedup[-1]) > 1e-10:
            dedup.append(r)
    return dedup


def radial_jacobi_conjugate_points(V, lam, b, launch_pad=2.0, grid=4096):
    """Conjugate points of a central-scattering ray, counted directly.

    Integrates the planar trajectory together with the transverse
    Jacobi field (delta x(0) = e_perp, delta xdot(0) = 0, the variation
    of the launch point across the incoming plane wave) and counts the
    zeros of psi(t) = <delta x, n(t)>, n the unit normal to the
    velocity, up to the support exit, then adds the zero on the free
    tail when the outgoing pair (psi, psidot) still points at one.
    """
    if not V.is_central():
        raise ValueError("the Jacobi oracle needs a single centered bump")
    a = V.support_radius
    v = np.sqrt(2.0 * lam)
    L = a + launch_pad

    def rhs(t, y):
        x = y[0:2]
        dx = y[4:6]
        g = V.gradient(x)
        H = V.hessian(x)
        return np.concatenate([y[2:4], -g, y[6:8], -(H @ dx)])

    y0 = np.array([-L, b, v, 0.0, 0.0, 1.0, 0.0, 0.0])
    t_end = (4.0 * L + 8.0 * a) / v
    sol = solve_ivp(
        rhs,
        (0.0, t_end),
        y0,
        method="DOP853",
        rtol=1e-12,
        atol=1e-13,
        dense_output=True,
    )
    if not sol.success:
        raise RuntimeError(f"jacobi oracle integration failed: {sol.message}")

    ts = np.linspace(0.0, t_end, grid)
    ys = sol.sol(ts)
    speed = np.hypot(ys[2], ys[3])
    normal = np.vstack([-ys[3] / speed, ys[2] / speed])
    psi = ys[4] * normal[0] + ys[5] * normal[1]

    r2 = ys[0] ** 2 + ys[1] ** 2
    outgoing = (r2 >= (a + 1e-9) ** 2) & (ys[0] * ys[2] + ys[1] * ys[3] > 0.0)
    exit_idx = np.argmax(outgoing)
    if not outgoing[exit_idx]:
        raise RuntimeError("ray never left the support within the window")

    scale = np.max(np.abs(psi[: exit_idx + 1]))
    sig = psi[: exit_idx + 1]
    keep = np.abs(sig) > 1e-9 * scale
    signs = np.sign(sig[keep])
    crossings = int(np.sum(signs[:-1] != signs[1:]))

    # Outside the support psi is linear in t.
    psi_e = psi[exit_idx]
    n_e = normal[:, exit_idx]
    psidot_e = ys[6, exit_idx] * n_e[0] + ys[7, exit_idx] * n_e[1]
    if psi_e * psidot_e < 0.0:
        crossings += 1
    return crossings


def interference_period_extract(h_values, cross_sections):
    """Action gap from a two-branch fringe pattern |f|^2(h).

    Fits c0 + c1 cos(dS / h + phi) over the sampled h grid, seeding dS
    from the dominant frequency of the pattern in u = 1/h.  Returns
    (dS, fit_info dict).  Raises FitDiverged when the pattern carries
    no usable oscillation.
    """
    h = np.asarray(h_values, dtype=float)
    y = np.asarray(cross_sections, dtype=float)
    if h.ndim != 1 or h.shape != y.shape or h.size < 64:
        raise ValueError("need matching 1-d arrays with at least 64 samples")
    u = 1.0 / h
    order = np.argsort(u)
    u, y = u[order], y[order]

    c0 = float(np.mean(y))
    c1 = float(0.5 * (np.max(y) - np.min(y)))
    if not np.isfinite(c0) or c1 <= 1e-12 * max(abs(c0), 1.0):
        raise FitDiverged("cross-section grid shows no fringe contrast")

    # Seed frequency from an FFT on a uniform resampling in u.
    m = 4 * u.size
    uu = np.linspace(u[0], u[-1], m)
    yy = np.interp(uu, u, y) - c0
    spec = np.abs(np.fft.rfft(yy))
    freqs = np.fft.rfftfreq(m, d=(uu[1] - uu[0]))
    kpk = 1 + int(np.argmax(spec[1:]))
    ds0 = 2.0 * np.pi * freqs[kpk]
    if ds0 <= 0.0:
        raise FitDiverged("no dominant fringe frequency")

    def model(p):
        return p[0] + p[1] * np.cos(p[2] * u + p[3]) - y

    best = None
    for phi0 in (0.0, np.pi / 2.0, np.pi, -np.pi / 2.0):
        try:
            fit = least_squares(
                model, np.array([c0, c1, ds0, phi0]), method="lm", max_nfev=4000
            )
        except Exception:
            continue
        if best is None or fit.cost < best.cost:
            best = fit
    if best is None or not best.success:
        raise FitDiverged("fringe fit did not converge")
    resid = float(np.sqrt(2.0 * best.cost / y.size))
    if abs(best.x[1]) <= 1e-12 * max(abs(best.x[0]), 1.0):
        raise FitDiverged("fit collapsed to a constant")
    info = {
        "c0": float(best.x[0]),
        "c1": float(best.x[1]),
        "phase": float(best.x[3]),
        "rms_residual": resid,
    }
    return abs(float(best.x[2])), info
