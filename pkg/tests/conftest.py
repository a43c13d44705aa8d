"""Shared fixtures: standard test problems and kernel warmup."""

from pathlib import Path

import numpy as np
import pytest

from scatrel import Bump, PotentialField, ScatteringConfig
from scatrel.asymptotics import trace


@pytest.fixture(scope="session")
def shipped_configs():
    return Path(__file__).resolve().parent.parent / "configs"


@pytest.fixture(scope="session")
def cfg2():
    return ScatteringConfig(lam=0.5, r0=2.0, n=2)


@pytest.fixture(scope="session")
def cfg3():
    return ScatteringConfig(lam=0.5, r0=2.0, n=3)


@pytest.fixture(scope="session")
def repulsive():
    return PotentialField((Bump(center=(0.0, 0.0), radius=1.0, amplitude=0.1),))


@pytest.fixture(scope="session")
def attractive():
    return PotentialField((Bump(center=(0.0, 0.0), radius=1.0, amplitude=-0.1),))


@pytest.fixture(scope="session")
def twobump():
    return PotentialField(
        (
            Bump(center=(0.6, 0.3), radius=0.5, amplitude=0.08),
            Bump(center=(-0.5, -0.4), radius=0.7, amplitude=-0.06),
        )
    )


@pytest.fixture(scope="session")
def repulsive3():
    return PotentialField((Bump(center=(0.0, 0.0, 0.0), radius=1.0, amplitude=0.1),))


@pytest.fixture(scope="session")
def free2():
    return PotentialField(())


@pytest.fixture(scope="session", autouse=True)
def _warm_kernels():
    # Force the jit compilation of the integrator core in both dimensions
    # before any timed block runs.
    cfg2 = ScatteringConfig(lam=0.5, r0=2.0, n=2)
    cfg3 = ScatteringConfig(lam=0.5, r0=2.0, n=3)
    V2 = PotentialField((Bump(center=(0.0, 0.0), radius=1.0, amplitude=0.1),))
    V3 = PotentialField((Bump(center=(0.0, 0.0, 0.0), radius=1.0, amplitude=0.1),))
    trace(np.array([1.0, 0.0]), [0.3], cfg2, V2)
    trace(np.array([1.0, 0.0, 0.0]), [0.3, 0.1], cfg3, V3)
