"""Acceptance suite: the package's release criteria, one test each at a
fixed tolerance and, where given, a time budget.  Run with -v to get one
pass/fail line per criterion."""

import time

import numpy as np
import pytest

from scatrel import Bump, PotentialField, PhasePoint
from scatrel.asymptotics import (
    extract_asymptotics,
    impact_map,
    locate_degenerate,
    signed_density_from_trajectory,
    trace,
)
from scatrel.branches import find_branches
from scatrel.dynamics import integrate_until_exit
from scatrel.errors import DegenerateBranchPresent
from scatrel.geometry import orientation, plane_angle
from scatrel.oracles import (
    deflection_derivative,
    deflection_roots,
    interference_period_extract,
    radial_jacobi_conjugate_points,
    signed_deflection,
)
from scatrel.semiclassics import (
    action_gradients,
    assemble_from_branches,
    maslov_index,
    mixed_hessian,
    modified_action,
)

# Independently computed reference values for the repulsive test bump
# (amplitude 0.1, radius 1, lam = 0.5): rainbow impact parameter and
# peak deflection from the quadrature oracle, and the action gap of the
# two branches at outgoing angle 0.05.
B_RAINBOW = 0.5695061370398609
THETA_MAX = 0.21696322341142382
DS_FRINGE = 0.083436084356725


def _dir2(angle):
    return np.array([np.cos(angle), np.sin(angle)])


def _random_launches(cfg, V, rng, count):
    extent = max(V.support_radius, 0.25 * cfg.r0) + 0.5
    thetas = rng.normal(size=(count, cfg.n))
    thetas /= np.linalg.norm(thetas, axis=1, keepdims=True)
    zs = rng.uniform(-extent, extent, size=(count, cfg.n - 1))
    return thetas, zs


@pytest.fixture(scope="module")
def conservation_suite(cfg2, repulsive, attractive, twobump):
    """100 random trajectories per shipped potential, with timings."""
    worst_energy = 0.0
    worst_symplectic = 0.0
    start = time.perf_counter()
    for seed, V in enumerate((repulsive, attractive, twobump)):
        rng = np.random.default_rng(seed)
        thetas, zs = _random_launches(cfg2, V, rng, 100)
        for theta, z in zip(thetas, zs):
            traj = trace(theta, z, cfg2, V)
            drift = float(np.max(np.abs(traj.energy_profile(V) - cfg2.lam)))
            worst_energy = max(worst_energy, drift)
            worst_symplectic = max(
                worst_symplectic, float(np.max(traj.symplectic_defect()))
            )
    elapsed = time.perf_counter() - start
    return {
        "worst_energy": worst_energy,
        "worst_symplectic": worst_symplectic,
        "elapsed": elapsed,
    }


@pytest.fixture(scope="module")
def regular_pairs(cfg2, repulsive):
    """10 regular direction pairs of the central bump, away from the
    rainbow and the support edge."""
    pairs = []
    z_values = (0.1, 0.15, 0.2, 0.25, 0.3)
    for k in range(10):
        theta = _dir2(2.0 * np.pi * k / 10.0 + 0.15)
        z = np.array([z_values[k % 5] * (1.0 if k < 5 else -1.0)])
        omega = impact_map(theta, z, cfg2, repulsive)
        pairs.append((theta, omega, z))
    return pairs


def test_c01_energy_conservation(cfg2, conservation_suite):
    assert conservation_suite["worst_energy"] <= 1e-9 * cfg2.lam
    assert conservation_suite["elapsed"] < 30.0


def test_c02_symplecticity(conservation_suite):
    assert conservation_suite["worst_symplectic"] <= 1e-6


def test_c03_oracle_equivalence(cfg2):
    start = time.perf_counter()
    theta = _dir2(0.0)
    orient = orientation(theta)
    worst_angle = 0.0
    worst_density = 0.0
    for amp in (0.05, -0.05, 0.2 * cfg2.lam):
        V = PotentialField((Bump(center=(0.0, 0.0), radius=1.0, amplitude=amp),))
        for zeta in np.linspace(-0.9, 0.9, 20):
            traj = trace(theta, [zeta], cfg2, V)
            data = extract_asymptotics(traj, cfg2)
            ode = plane_angle(theta, data.xi_inf)
            ref = signed_deflection(V, cfg2.lam, orient * zeta)
            worst_angle = max(worst_angle, abs(ode - ref))
            dref = deflection_derivative(V, cfg2.lam, orient * zeta)
            if abs(dref) > 1e-3:
                sig = abs(signed_density_from_trajectory(traj, theta, cfg2))
                worst_density = max(worst_density, abs(sig - abs(dref)) / abs(dref))
    assert worst_angle <= 1e-6
    assert worst_density <= 1e-5
    assert time.perf_counter() - start < 60.0


def test_c04_gradient_identities(cfg2, repulsive, regular_pairs):
    start = time.perf_counter()
    worst = 0.0
    for theta, omega, z in regular_pairs:
        g = action_gradients(theta, omega, z, cfg2, repulsive)
        scale = max(float(np.max(np.abs(g.d_theta))), 1e-6)
        worst = max(worst, float(np.max(np.abs(g.d_theta - g.d_theta_fd))) / scale)
        scale = max(float(np.max(np.abs(g.d_omega))), 1e-6)
        worst = max(worst, float(np.max(np.abs(g.d_omega - g.d_omega_fd))) / scale)
    assert worst <= 1e-5
    assert time.perf_counter() - start < 120.0


def test_c05_action_invariance(cfg2, repulsive, twobump):
    worst = 0.0
    for V, th_angle, z_val in (
        (repulsive, 0.0, 0.3),
        (repulsive, 2.1, -0.55),
        (twobump, 0.9273, 0.42),
    ):
        theta = _dir2(th_angle)
        z = np.array([z_val])
        traj = trace(theta, z, cfg2, V)
        omega = extract_asymptotics(traj, cfg2).xi_inf
        base = modified_action(traj, theta, omega, cfg2)
        for extra in (0.7, 3.1):
            shifted = modified_action(traj, theta, omega, cfg2, extra_time=extra)
            worst = max(worst, abs(shifted - base))
        for margin in (1.6, 2.9):
            other = cfg2.replace(margin=margin)
            traj_m = trace(theta, z, other, V)
            worst = max(worst, abs(modified_action(traj_m, theta, omega, other) - base))
    assert worst <= 1e-8


def test_c06_mixed_hessian_nondegenerate(cfg2, repulsive, regular_pairs):
    for theta, omega, z in regular_pairs:
        H = mixed_hessian(theta, omega, z, cfg2, repulsive)
        assert abs(H.det) > 1e-6
        assert float(np.max(np.abs(H.of_gradient - H.of_action))) <= 1e-4


def test_c07_branch_completeness(cfg2, repulsive):
    alphas = [s * a for a in (0.04, 0.08, 0.12, 0.16, 0.2) for s in (1.0, -1.0)]
    oracle_cache = {}
    worst = 0.0
    for k in range(10):
        th_angle = 2.0 * np.pi * k / 10.0 + 0.15
        theta = _dir2(th_angle)
        orient = orientation(theta)
        for alpha in alphas:
            omega = _dir2(th_angle + alpha)
            bset = find_branches(theta, omega, cfg2, repulsive)
            assert not bset.degenerate_family
            assert bset.degenerate_roots == ()
            assert bset.fold_pairs == ()
            if alpha not in oracle_cache:
                oracle_cache[alpha] = deflection_roots(
                    repulsive, cfg2.lam, alpha, n_scan=301
                )
            expected = sorted(orient * b for b in oracle_cache[alpha])
            got = sorted(float(br.z[0]) for br in bset.branches)
            assert len(got) == len(expected) == 2
            worst = max(
                worst, max(abs(g - e) for g, e in zip(got, expected))
            )
    assert worst <= 1e-6


def test_c08_interference_recovers_action_gap(cfg2, repulsive):
    theta = _dir2(0.0)
    omega = _dir2(0.05)
    bset = find_branches(theta, omega, cfg2, repulsive)
    assert len(bset.branches) == 2
    gap = abs(bset.branches[0].action - bset.branches[1].action)
    assert gap == pytest.approx(DS_FRINGE, abs=1e-6)
    hs = np.linspace(0.01, 0.02, 160)
    xs = [assemble_from_branches(bset, h, cfg2).cross_section for h in hs]
    fitted, info = interference_period_extract(hs, xs)
    assert abs(fitted - gap) / gap <= 0.02
    assert info["rms_residual"] <= 1e-6


def test_c09_degeneracy_location_and_refusal(cfg2, repulsive):
    theta = _dir2(0.0)
    # Rainbow: the signed density changes sign at the fold.
    z_rainbow = locate_degenerate(theta, 0.3, 0.9, cfg2, repulsive)
    assert abs(abs(z_rainbow) - B_RAINBOW) <= 1e-6
    # Support edge: the density decays below the degeneracy threshold.
    z_edge = locate_degenerate(theta, 0.9, 1.1, cfg2, repulsive)
    assert 0.9 < z_edge < 1.0
    # Assembly refuses at the flagged directions and succeeds elsewhere.
    with pytest.raises(DegenerateBranchPresent):
        bset = find_branches(theta, _dir2(THETA_MAX), cfg2, repulsive)
        assemble_from_branches(bset, 0.015, cfg2)
    with pytest.raises(DegenerateBranchPresent):
        bset = find_branches(theta, theta, cfg2, repulsive)
        assemble_from_branches(bset, 0.015, cfg2)
    bset = find_branches(theta, _dir2(0.12), cfg2, repulsive)
    res = assemble_from_branches(bset, 0.015, cfg2)
    assert res.cross_section > 0.0


def test_c10_maslov_indices(cfg2, free2, repulsive, attractive):
    theta = _dir2(0.0)
    assert maslov_index(theta, [0.2], cfg2, free2) == 0
    for z in (0.15, 0.3, 0.45):
        assert maslov_index(theta, [z], cfg2, repulsive) == 0
    expected = {0.15: 1, 0.3: 1, 0.45: 1, 0.6: 1, 0.75: 0}
    for b, want in expected.items():
        mu = maslov_index(theta, [b], cfg2, attractive)
        ref = radial_jacobi_conjugate_points(attractive, cfg2.lam, b)
        assert mu == ref == want


def test_c11_reciprocity(cfg2, repulsive, attractive, twobump):
    worst = 0.0
    rng = np.random.default_rng(11)
    for V, count in ((repulsive, 17), (attractive, 17), (twobump, 16)):
        thetas, zs = _random_launches(cfg2, V, rng, count)
        for theta, z in zip(thetas, zs):
            traj = trace(theta, z, cfg2, V)
            data = extract_asymptotics(traj, cfg2)
            back = PhasePoint(data.x_exit, -cfg2.speed * data.xi_inf)
            data_b = extract_asymptotics(integrate_until_exit(back, V, cfg2), cfg2)
            worst = max(worst, float(np.linalg.norm(data_b.xi_inf + theta)))
    assert worst <= 1e-7
