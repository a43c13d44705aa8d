"""Invariant suites: clean runs pass, seeded faults are detected, and
central-only suites skip rather than fail elsewhere."""

import pytest

from scatrel.checks import run_suites, suite_names
from scatrel.errors import ConfigError

RECORD_KEYS = {"name", "status", "residual", "tolerance", "detail"}


def test_all_suites_pass_on_central_repulsive(cfg2, repulsive):
    records, all_ok = run_suites(cfg2, repulsive, ["all"], samples=8, seed=0)
    assert all_ok
    assert [r["name"] for r in records] == suite_names()
    for r in records:
        assert set(r) == RECORD_KEYS
        assert r["status"] == "passed"
        assert r["residual"] <= r["tolerance"]


def test_selected_subset_runs_in_order(cfg2, repulsive):
    records, all_ok = run_suites(
        cfg2, repulsive, ["reciprocity", "energy"], samples=4, seed=3
    )
    assert all_ok
    assert [r["name"] for r in records] == ["reciprocity", "energy"]


def test_unknown_suite_rejected(cfg2, repulsive):
    with pytest.raises(ConfigError, match="unknown suite 'turning'"):
        run_suites(cfg2, repulsive, ["turning"], samples=4)


def test_hessian_fault_breaks_symplecticity_only(cfg2, repulsive):
    records, all_ok = run_suites(
        cfg2, repulsive, ["energy", "symplectic"], samples=6, seed=0, hess_skew=1e-3
    )
    assert not all_ok
    by_name = {r["name"]: r for r in records}
    # The seeded skew perturbs only the variational equations, so the
    # trajectory itself still conserves energy.
    assert by_name["energy"]["status"] == "passed"
    assert by_name["symplectic"]["status"] == "failed"
    assert by_name["symplectic"]["residual"] > by_name["symplectic"]["tolerance"]


def test_central_only_suites_skip_for_twobump(cfg2, twobump):
    names = ["deflection_oracle", "density_oracle", "maslov_oracle"]
    records, all_ok = run_suites(cfg2, twobump, names, samples=4)
    assert all_ok
    for r in records:
        assert r["status"] == "skipped"
        assert "single centered bump" in r["detail"]


def test_planar_only_suites_skip_in_3d(cfg3, repulsive3):
    records, all_ok = run_suites(
        cfg3, repulsive3, ["density_oracle", "maslov_oracle"], samples=4
    )
    assert all_ok
    assert all(r["status"] == "skipped" for r in records)


def test_noncentral_suites_still_run_for_twobump(cfg2, twobump):
    records, all_ok = run_suites(
        cfg2, twobump, ["energy", "reciprocity", "action_invariance"], samples=5, seed=1
    )
    assert all_ok
    assert all(r["status"] == "passed" for r in records)
