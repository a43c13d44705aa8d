"""Problem statement types: energy-shell configuration and bump potentials.

The potential is a finite sum of smooth compactly supported bumps

    V_b(x) = A * exp(1 - 1/(1 - |x - c|^2 / rho^2))   for |x - c| < rho,
    V_b(x) = 0                                         otherwise,

normalized so V_b(center) = A exactly.  Value, gradient and Hessian are
evaluated in closed form; the variational equations amplify Hessian
noise, so finite-differencing the Hessian is never an option here.
"""

from dataclasses import dataclass, field

import numpy as np

# exp(1 - 1/u) underflows for 1/u > ~745; below this u the bump and all
# of its derivatives are < 1e-300 and are treated as exactly zero
_U_FLOOR = 1.0 / 700.0


@dataclass(frozen=True)
class ScatteringConfig:
    """Global problem statement for one scattering computation.

    lam is the energy (the speed on the shell is sqrt(2*lam)), r0 the
    radius of the centered ball containing the perturbation, n the
    dimension, and margin the offset of the launch/readout planes beyond
    r0.  t_max_factor scales the time budget T_max =
    t_max_factor * 2*r0/sqrt(2*lam) after which a trajectory is declared
    trapped.  tol_degenerate is the angular-density threshold below which
    a configuration is treated as degenerate.
    """

    lam: float
    r0: float
    n: int = 2
    tol_integrate: float = 1e-13
    tol_newton: float = 1e-11
    margin: float = 1.0
    tol_degenerate: float = 1e-8
    t_max_factor: float = 50.0

    def __post_init__(self):
        if not (self.lam > 0):
            raise ValueError("lam must be > 0")
        if not (self.r0 > 0):
            raise ValueError("r0 must be > 0")
        if self.n not in (2, 3):
            raise ValueError("n must be 2 or 3")
        for name in ("tol_integrate", "tol_newton", "tol_degenerate"):
            if not (getattr(self, name) > 0):
                raise ValueError(f"{name} must be > 0")
        if not (self.margin >= 1):
            raise ValueError("margin must be >= 1")
        if not (self.t_max_factor > 0):
            raise ValueError("t_max_factor must be > 0")

    @property
    def speed(self):
        """Shell speed sqrt(2*lam)."""
        return float(np.sqrt(2.0 * self.lam))

    @property
    def t_max(self):
        """Time budget before a trajectory is declared trapped."""
        return self.t_max_factor * (2.0 * self.r0) / self.speed

    def replace(self, **kw):
        d = {k: getattr(self, k) for k in self.__dataclass_fields__}
        d.update(kw)
        return ScatteringConfig(**d)


@dataclass(frozen=True)
class Bump:
    """One smooth compactly supported bump."""

    center: tuple
    radius: float
    amplitude: float

    def __post_init__(self):
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))
        if not (self.radius > 0):
            raise ValueError("bump radius must be > 0")
        if not np.all(np.isfinite(self.center)) or not np.isfinite(self.amplitude):
            raise ValueError("bump parameters must be finite")


@dataclass(frozen=True)
class PotentialField:
    """Finite sum of bumps with exact value/gradient/Hessian evaluation."""

    bumps: tuple = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "bumps", tuple(self.bumps))
        dims = {len(b.center) for b in self.bumps}
        if len(dims) > 1:
            raise ValueError("all bump centers must share one dimension")

    @property
    def support_radius(self):
        """Radius of the smallest centered ball containing every bump."""
        if not self.bumps:
            return 0.0
        return max(
            float(np.linalg.norm(b.center)) + b.radius for b in self.bumps
        )

    def packed(self, n):
        """Arrays (centers, radii, amplitudes) for the compiled kernels."""
        nb = len(self.bumps)
        centers = np.zeros((max(nb, 1), n))
        radii = np.zeros(max(nb, 1))
        amps = np.zeros(max(nb, 1))
        for i, b in enumerate(self.bumps):
            if len(b.center) != n:
                raise ValueError("bump dimension does not match config")
            centers[i] = b.center
            radii[i] = b.radius
            amps[i] = b.amplitude
        if nb == 0:
            radii[0] = 1.0  # placeholder slot, amplitude 0 contributes nothing
        return centers, radii, amps

    def value(self, x):
        x = np.asarray(x, dtype=float)
        total = 0.0
        for b in self.bumps:
            d = x - np.asarray(b.center)
            s = float(np.dot(d, d)) / (b.radius * b.radius)
            if s < 1.0:
                u = 1.0 - s
                if u > _U_FLOOR:
                    total += b.amplitude * np.exp(1.0 - 1.0 / u)
        return total

    def gradient(self, x):
        x = np.asarray(x, dtype=float)
        g = np.zeros_like(x)
        for b in self.bumps:
            d = x - np.asarray(b.center)
            rho2 = b.radius * b.radius
            s = float(np.dot(d, d)) / rho2
            if s < 1.0:
                u = 1.0 - s
                if u > _U_FLOOR:
                    val = b.amplitude * np.exp(1.0 - 1.0 / u)
                    dv_ds = -val / (u * u)
                    g += dv_ds * (2.0 / rho2) * d
        return g

    def hessian(self, x):
        x = np.asarray(x, dtype=float)
        n = x.size
        H = np.zeros((n, n))
        for b in self.bumps:
            d = x - np.asarray(b.center)
            rho2 = b.radius * b.radius
            s = float(np.dot(d, d)) / rho2
            if s < 1.0:
                u = 1.0 - s
                if u > _U_FLOOR:
                    val = b.amplitude * np.exp(1.0 - 1.0 / u)
                    dv_ds = -val / (u * u)
                    d2v_ds2 = val * (1.0 / u**4 - 2.0 / u**3)
                    grad_s = (2.0 / rho2) * d
                    H += d2v_ds2 * np.outer(grad_s, grad_s)
                    H += dv_ds * (2.0 / rho2) * np.eye(n)
        return H

    def is_central(self):
        """True when the field is a single bump centered at the origin."""
        return (
            len(self.bumps) == 1
            and float(np.linalg.norm(self.bumps[0].center)) == 0.0
        )

    def radial_value(self, r):
        """V(r e) for a central field; requires is_central()."""
        if not self.is_central():
            raise ValueError("radial_value requires a single centered bump")
        b = self.bumps[0]
        x = np.zeros(len(b.center))
        x[0] = r
        return self.value(x)

    def radial_gradient(self, r):
        """dV/dr along a ray from the origin; requires is_central()."""
        if not self.is_central():
            raise ValueError("radial_gradient requires a single centered bump")
        b = self.bumps[0]
        x = np.zeros(len(b.center))
        x[0] = r
        return float(self.gradient(x)[0])


@dataclass(frozen=True)
class PhasePoint:
    """One point (x, xi) of phase space."""

    x: np.ndarray
    xi: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "x", np.array(self.x, dtype=float))
        object.__setattr__(self, "xi", np.array(self.xi, dtype=float))
        if self.x.shape != self.xi.shape or self.x.ndim != 1:
            raise ValueError("x and xi must be 1D arrays of equal length")
        if not (np.all(np.isfinite(self.x)) and np.all(np.isfinite(self.xi))):
            raise ValueError("phase point coordinates must be finite")


def check_support_inside(V, cfg):
    """Raise if the potential support pokes out of the ball of radius r0."""
    sr = V.support_radius
    if sr > cfg.r0 + 1e-12:
        raise ValueError(
            f"potential support radius {sr} exceeds configured r0 {cfg.r0}"
        )
