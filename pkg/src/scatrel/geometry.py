"""Sphere charts and deterministic orthonormal frames.

Impact parameters z live in the hyperplane theta-perp, so every
direction needs a concrete orthonormal frame of its orthogonal
complement.  The frame is built by Gram-Schmidt on standard basis
vectors, ordered by |<e_i, theta>| ascending with ties broken by lower
index, which makes the chart deterministic and reproducible across
runs.  A second "variant" frame (negated column in 2D, swapped columns
in 3D) exists so frame-independence of scalar outputs can be tested.
"""

import numpy as np


def unit(vec):
    """Return vec normalized to unit length."""
    v = np.asarray(vec, dtype=float)
    nrm = np.linalg.norm(v)
    if nrm == 0.0 or not np.isfinite(nrm):
        raise ValueError("cannot normalize zero or non-finite vector")
    return v / nrm


def frame(theta, variant=0):
    """Orthonormal basis of theta-perp as columns of an n x (n-1) matrix.

    Parameters
    ----------
    theta : unit vector, shape (n,)
    variant : 0 for the canonical frame, 1 for the alternate frame
        (sign flip in 2D, column swap in 3D) used by invariance tests.

    Returns
    -------
    E : ndarray, shape (n, n-1), columns orthonormal and orthogonal to theta.
    """
    th = unit(theta)
    n = th.size
    order = sorted(range(n), key=lambda i: (abs(th[i]), i))
    cols = []
    for idx in order[: n - 1]:
        v = np.zeros(n)
        v[idx] = 1.0
        v = v - np.dot(v, th) * th
        for c in cols:
            v = v - np.dot(v, c) * c
        cols.append(unit(v))
    E = np.column_stack(cols)
    if variant:
        if n == 2:
            E = -E
        else:
            E = E[:, ::-1].copy()
    return E


def embed(theta, z, variant=0):
    """Map chart coordinates z in R^(n-1) to the vector E(theta) @ z in theta-perp."""
    z = np.atleast_1d(np.asarray(z, dtype=float))
    return frame(theta, variant) @ z


def chart(direction, vec):
    """Coordinates of vec projected onto direction-perp, in the frame of direction."""
    return frame(direction).T @ np.asarray(vec, dtype=float)


def chart_point(direction, u):
    """Inverse-ish chart: unit vector obtained by normalizing direction + E @ u.

    This is the concrete sphere chart used for finite differences over
    directions; it is a diffeomorphism of a neighborhood of u = 0 onto a
    neighborhood of direction, with derivative E(direction) at u = 0.
    """
    d = unit(direction)
    u = np.atleast_1d(np.asarray(u, dtype=float))
    return unit(d + frame(d) @ u)


def rotate_in_plane(theta, direction_perp, angle):
    """Rotate unit vector theta by angle within span(theta, direction_perp).

    direction_perp must be a unit vector orthogonal to theta; positive
    angle rotates toward direction_perp.
    """
    th = unit(theta)
    e = np.asarray(direction_perp, dtype=float)
    return np.cos(angle) * th + np.sin(angle) * e


def wrap_angle(a):
    """Wrap an angle to the interval (-pi, pi]."""
    w = (a + np.pi) % (2.0 * np.pi) - np.pi
    if w == -np.pi:
        w = np.pi
    return w


def plane_angle(theta, omega):
    """Signed angle from theta to omega in 2D, or the unsigned angle in nD."""
    th = unit(theta)
    om = unit(omega)
    if th.size == 2:
        return wrap_angle(np.arctan2(om[1], om[0]) - np.arctan2(th[1], th[0]))
    c = float(np.clip(np.dot(th, om), -1.0, 1.0))
    return float(np.arccos(c))


def orientation(theta):
    """det([theta | E(theta)]) in 2D: +1 if the frame column is theta rotated
    by +90 degrees, -1 otherwise.  Used to translate signed chart
    coordinates into the fixed counterclockwise convention of the radial
    oracles."""
    th = unit(theta)
    if th.size != 2:
        raise ValueError("orientation is a 2D notion")
    E = frame(th)
    return float(np.sign(np.linalg.det(np.column_stack([th, E[:, 0]]))))
