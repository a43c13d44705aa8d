"""Impact map, asymptotic data, angular density, degeneracy location."""

import numpy as np
import pytest
from hypothesis import given, settings
import hypothesis.strategies as st

from scatrel.asymptotics import (
    angular_density,
    extract_asymptotics,
    impact_map,
    jacobian_dxi_dz,
    launch_incoming,
    locate_degenerate,
    signed_density,
    trace,
)
from scatrel.errors import NoSignChange, NotOutgoing
from scatrel.dynamics import integrate_fixed_time

# Rainbow of the repulsive test bump (A=0.1, rho=1, lam=0.5): zero of the
# quadrature deflection derivative, refined to the oracle's accuracy.
B_RAINBOW = 0.5695061370398609


def test_launch_plane_geometry(cfg2, repulsive):
    th = np.array([1.0, 0.0])
    pt = launch_incoming(th, [0.4], cfg2, repulsive)
    assert np.dot(pt.x + (cfg2.r0 + cfg2.margin) * th, th) == pytest.approx(0.0, abs=1e-14)
    assert np.allclose(pt.xi, cfg2.speed * th)
    with pytest.raises(ValueError):
        launch_incoming(th, [0.4, 0.1], cfg2, repulsive)


def test_asymptotic_data_conventions(cfg2, repulsive):
    traj = trace(np.array([1.0, 0.0]), [0.45], cfg2, repulsive)
    data = extract_asymptotics(traj, cfg2)
    assert abs(np.linalg.norm(data.xi_inf) - 1.0) <= 1e-12
    assert abs(np.dot(data.r_inf, data.xi_inf)) <= 1e-10
    assert data.t_exit == pytest.approx(traj.exit_time)


def test_fixed_time_has_no_asymptotics(cfg2, repulsive):
    start = launch_incoming(np.array([1.0, 0.0]), [0.45], cfg2, repulsive)
    traj = integrate_fixed_time(start, repulsive, cfg2, 1.0)
    with pytest.raises(NotOutgoing):
        extract_asymptotics(traj, cfg2)


@settings(max_examples=20, deadline=None)
@given(z=st.floats(min_value=1.0, max_value=1.9))
def test_outside_support_identity(z, cfg2, repulsive):
    # Rays missing the support keep their direction exactly.
    th = np.array([1.0, 0.0])
    assert np.array_equal(impact_map(th, [z], cfg2, repulsive), th)


def test_jacobian_monodromy_vs_finite_difference(cfg2, twobump):
    th = np.array([1.0, 0.0])
    for z in np.linspace(-1.2, 1.2, 20):
        Jm = jacobian_dxi_dz(th, [z], cfg2, twobump, method="monodromy")
        Jf = jacobian_dxi_dz(th, [z], cfg2, twobump, method="finite_difference")
        scale = max(1.0, float(np.max(np.abs(Jm))))
        assert np.max(np.abs(Jm - Jf)) <= 1e-4 * scale


def test_jacobian_method_validation(cfg2, repulsive):
    with pytest.raises(ValueError):
        jacobian_dxi_dz(np.array([1.0, 0.0]), [0.3], cfg2, repulsive, method="nope")


def test_density_frame_independence(cfg2, twobump):
    # The alternate 2D frame is the negated column, so the same physical
    # launch point has negated chart coordinates.
    th = np.array([1.0, 0.0])
    for z in (-0.8, 0.2, 0.55):
        s0 = angular_density(th, [z], cfg2, twobump, variant=0)
        s1 = angular_density(th, [-z], cfg2, twobump, variant=1)
        assert abs(s0 - s1) <= 1e-10


def test_density_positive_at_regular_points(cfg2, repulsive):
    th = np.array([1.0, 0.0])
    assert angular_density(th, [0.4], cfg2, repulsive) > 1e-2


@settings(max_examples=15, deadline=None)
@given(z=st.floats(min_value=-1.7, max_value=1.7))
def test_reciprocity(z, cfg2, twobump):
    from scatrel import PhasePoint
    from scatrel.dynamics import integrate_until_exit

    th = np.array([1.0, 0.0])
    traj = trace(th, [z], cfg2, twobump)
    data = extract_asymptotics(traj, cfg2)
    back = integrate_until_exit(
        PhasePoint(data.x_exit, -cfg2.speed * data.xi_inf), twobump, cfg2
    )
    xi_b = back.final_state.xi / np.linalg.norm(back.final_state.xi)
    assert np.linalg.norm(xi_b + th) <= 1e-7


def test_locate_degenerate_rainbow(cfg2, repulsive):
    th = np.array([1.0, 0.0])
    z_star = locate_degenerate(th, [0.45], [0.7], cfg2, repulsive)
    assert abs(z_star[0] - B_RAINBOW) <= 1e-6
    # The signed density changes sign across the fold.
    assert signed_density(th, [z_star[0] - 1e-3], cfg2, repulsive) * signed_density(
        th, [z_star[0] + 1e-3], cfg2, repulsive
    ) < 0.0


def test_locate_degenerate_support_boundary(cfg2, repulsive):
    th = np.array([1.0, 0.0])
    z_star = locate_degenerate(th, [0.9], [1.1], cfg2, repulsive)
    assert 0.9 < z_star[0] < 1.0
    # Just past the located point the density sits at or under the cut.
    assert angular_density(th, [z_star[0] + 1e-4], cfg2, repulsive) <= cfg2.tol_degenerate


def test_locate_degenerate_requires_crossing(cfg2, repulsive):
    th = np.array([1.0, 0.0])
    with pytest.raises(NoSignChange):
        locate_degenerate(th, [0.2], [0.4], cfg2, repulsive)
    with pytest.raises(NoSignChange):
        locate_degenerate(th, [0.3], [0.3], cfg2, repulsive)


def test_impact_map_3d(cfg3, repulsive3):
    th = np.array([1.0, 0.0, 0.0])
    om = impact_map(th, [0.3, 0.2], cfg3, repulsive3)
    assert abs(np.linalg.norm(om) - 1.0) <= 1e-12
    # A central repulsive bump scatters in the plane spanned by theta
    # and the impact vector, away from the axis.
    assert np.dot(om, th) < 1.0
    # The alternate 3D frame swaps the two columns, so the same physical
    # launch point has swapped chart coordinates.
    s0 = angular_density(th, [0.3, 0.2], cfg3, repulsive3, variant=0)
    s1 = angular_density(th, [0.2, 0.3], cfg3, repulsive3, variant=1)
    assert abs(s0 - s1) <= 1e-10
