"""Modified action, gradients, Maslov index, amplitude assembly."""

import numpy as np
import pytest

from scatrel.asymptotics import trace
from scatrel.branches import find_branches
from scatrel.errors import DegenerateBranchPresent
from scatrel.geometry import frame, rotate_in_plane, unit
from scatrel.semiclassics import (
    action_gradients,
    amplitude_fan,
    assemble_amplitude,
    assemble_from_branches,
    maslov_index,
    mixed_hessian,
    modified_action,
)

ALPHA = 0.05
# Fringe pair of the repulsive test bump (see test_branches).
Z_NEAR = 0.0949686781096278
Z_FAR = 0.8726549323860585
S_NEAR = -0.12845682597257846
S_FAR = -0.045020741615853455


def _pair(alpha=ALPHA):
    th = np.array([1.0, 0.0])
    om = rotate_in_plane(th, frame(th)[:, 0], alpha)
    return th, om


def test_action_free_forward_is_zero(cfg2, free2):
    th = np.array([1.0, 0.0])
    traj = trace(th, [0.7], cfg2, free2)
    assert modified_action(traj, th, th, cfg2) == pytest.approx(0.0, abs=1e-14)


def test_action_frozen_values(cfg2, repulsive):
    th, om = _pair()
    for z, s_ref in ((Z_NEAR, S_NEAR), (Z_FAR, S_FAR)):
        traj = trace(th, [z], cfg2, repulsive)
        assert modified_action(traj, th, om, cfg2) == pytest.approx(s_ref, abs=1e-10)


def test_action_readout_invariance(cfg2, repulsive):
    th, om = _pair()
    traj = trace(th, [Z_NEAR], cfg2, repulsive)
    s0 = modified_action(traj, th, om, cfg2)
    delta = 2.0 * cfg2.r0 / cfg2.speed
    s1 = modified_action(traj, th, om, cfg2, extra_time=delta)
    assert abs(s1 - s0) <= 1e-8 * max(1.0, abs(s0))


def test_action_offset_invariance(cfg2, repulsive):
    th, om = _pair()
    vals = []
    for margin in (1.0, 1.5, 2.0):
        cfg_m = cfg2.replace(margin=margin)
        traj = trace(th, [Z_NEAR], cfg_m, repulsive)
        vals.append(modified_action(traj, th, om, cfg_m))
    assert max(vals) - min(vals) <= 1e-8 * max(1.0, abs(vals[0]))


def test_action_needs_exit_trajectory(cfg2, repulsive):
    from scatrel.asymptotics import launch_incoming
    from scatrel.dynamics import integrate_fixed_time

    th, om = _pair()
    start = launch_incoming(th, [0.4], cfg2, repulsive)
    traj = integrate_fixed_time(start, repulsive, cfg2, 1.0)
    with pytest.raises(ValueError):
        modified_action(traj, th, om, cfg2)


def test_gradient_identities(cfg2, repulsive):
    th, om = _pair()
    g = action_gradients(th, om, np.array([Z_NEAR]), cfg2, repulsive)
    assert np.allclose(g.d_theta, g.d_theta_fd, rtol=1e-5, atol=1e-8)
    assert np.allclose(g.d_omega, g.d_omega_fd, rtol=1e-5, atol=1e-8)
    # The closed forms have explicit endpoint values: v z on the launch
    # plane and -v w on the exit chart.
    assert g.d_theta[0] == pytest.approx(cfg2.speed * Z_NEAR, abs=1e-9)


def test_mixed_hessian_routes_agree(cfg2, repulsive):
    th, om = _pair()
    H = mixed_hessian(th, om, np.array([Z_NEAR]), cfg2, repulsive)
    assert np.max(np.abs(H.of_gradient - H.of_action)) <= 1e-4
    assert abs(H.det) > 1e-6


def test_mixed_hessian_density_identity(cfg2, repulsive):
    # For a generating function of the exit map, |det d_theta d_omega S|
    # equals v^2 / sigma_hat in the planar chart (v = 1 here).
    from scatrel.asymptotics import angular_density

    th, om = _pair()
    H = mixed_hessian(th, om, np.array([Z_NEAR]), cfg2, repulsive)
    sig = angular_density(th, [Z_NEAR], cfg2, repulsive)
    assert abs(H.det) == pytest.approx(1.0 / sig, rel=1e-3)


def test_maslov_free_is_zero(cfg2, free2):
    assert maslov_index(np.array([1.0, 0.0]), [0.4], cfg2, free2) == 0


def test_maslov_repulsive_below_rainbow(cfg2, repulsive):
    assert maslov_index(np.array([1.0, 0.0]), [0.4], cfg2, repulsive) == 0


def test_maslov_repulsive_above_rainbow(cfg2, repulsive):
    # Past the fold the outgoing ray has crossed the rainbow caustic.
    assert maslov_index(np.array([1.0, 0.0]), [0.70878982], cfg2, repulsive) == 1


def test_maslov_attractive_focus(cfg2, attractive):
    assert maslov_index(np.array([1.0, 0.0]), [0.3], cfg2, attractive) == 1


def test_maslov_sampling_parity(cfg2, attractive, repulsive):
    # Doubling the sampling density never changes the count.
    th = np.array([1.0, 0.0])
    for V, z in ((attractive, 0.3), (repulsive, 0.4), (repulsive, 0.70878982)):
        mu_base = maslov_index(th, [z], cfg2, V, base_samples=512)
        mu_fine = maslov_index(th, [z], cfg2, V, base_samples=1024)
        assert mu_base == mu_fine


def test_maslov_3d_central(cfg3, repulsive3):
    th = np.array([1.0, 0.0, 0.0])
    # A repulsive bump defocuses in every transverse direction.
    assert maslov_index(th, [0.4, 0.0], cfg3, repulsive3) == 0
    assert maslov_index(th, [0.3, 0.2], cfg3, repulsive3) == 0


def test_maslov_3d_attractive(cfg3):
    from scatrel import Bump, PotentialField

    att3 = PotentialField(
        (Bump(center=(0.0, 0.0, 0.0), radius=1.0, amplitude=-0.1),)
    )
    th = np.array([1.0, 0.0, 0.0])
    # The in-plane focus seen in 2D plus the axis crossing of the bent
    # outgoing ray: one conjugate point from each transverse direction.
    assert maslov_index(th, [0.3, 0.0], cfg3, att3) == 2


def test_amplitude_single_branch_modulus(cfg2, repulsive):
    # With a single regular branch |f|^2 = 1/sigma_hat by construction.
    # Compactly supported deflection curves pair their roots, so the
    # one-branch set is assembled from a restriction of a found set.
    from scatrel.branches import BranchSet

    th, om = _pair()
    full = find_branches(th, om, cfg2, repulsive)
    single = BranchSet(theta=full.theta, omega=full.omega, branches=(full[0],))
    res = assemble_from_branches(single, 0.015, cfg2)
    assert res.cross_section == abs(res.f) ** 2
    assert res.cross_section == pytest.approx(1.0 / full[0].sigma_hat, rel=1e-13)


def test_amplitude_sum_identity(cfg2, repulsive):
    th, om = _pair()
    res = assemble_amplitude(th, om, cfg2, repulsive, 0.015)
    assert len(res.contributions) == 2
    total = sum(c.weight for c in res.contributions)
    assert res.f == total
    for c in res.contributions:
        phase = c.action / res.h - c.maslov * np.pi / 2.0
        assert c.weight == c.sigma_hat ** -0.5 * np.exp(1j * phase)


def test_amplitude_h_dependence_is_phase_only(cfg2, repulsive):
    th, om = _pair()
    bset = find_branches(th, om, cfg2, repulsive)
    r1 = assemble_from_branches(bset, 0.01, cfg2)
    r2 = assemble_from_branches(bset, 0.02, cfg2)
    mags1 = sorted(abs(c.weight) for c in r1.contributions)
    mags2 = sorted(abs(c.weight) for c in r2.contributions)
    assert np.allclose(mags1, mags2)


def test_amplitude_refuses_forward_family(cfg2, repulsive):
    th = np.array([1.0, 0.0])
    with pytest.raises(DegenerateBranchPresent):
        assemble_amplitude(th, th, cfg2, repulsive, 0.015)


def test_amplitude_refuses_fold(cfg2, repulsive):
    th, om = _pair(0.21696322341142382)
    with pytest.raises(DegenerateBranchPresent) as err:
        assemble_amplitude(th, om, cfg2, repulsive, 0.015)
    # The structured record names the offending branches when the
    # refusal comes from a fold pair.
    assert isinstance(err.value.branch_indices, tuple)


def test_fan_preserves_order_and_reports_errors(cfg2, repulsive):
    th = np.array([1.0, 0.0])
    e = frame(th)[:, 0]
    omegas = [
        rotate_in_plane(th, e, a) for a in (0.03, 0.0, 0.05, 0.3)
    ]
    entries = amplitude_fan(th, omegas, cfg2, repulsive, 0.015)
    assert len(entries) == 4
    for om, entry in zip(omegas, entries):
        assert np.allclose(entry.omega, unit(om))
    assert entries[0].error == "" and entries[0].result is not None
    assert entries[1].result is None and entries[1].error != ""
    assert entries[2].error == ""
    # Beyond the deflection range the branch sum is empty but valid.
    assert entries[3].error == ""
    assert entries[3].result.f == 0.0


def test_fan_thread_count_invariance(cfg2, repulsive):
    th = np.array([1.0, 0.0])
    e = frame(th)[:, 0]
    omegas = [rotate_in_plane(th, e, a) for a in np.linspace(0.03, 0.2, 7)]
    one = amplitude_fan(th, omegas, cfg2, repulsive, 0.015, threads=1)
    many = amplitude_fan(th, omegas, cfg2, repulsive, 0.015, threads=4)
    for a, b in zip(one, many):
        assert a.error == b.error
        if a.result is not None:
            assert a.result.f == b.result.f
