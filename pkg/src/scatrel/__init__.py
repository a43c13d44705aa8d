"""Classical scattering relation and semiclassical amplitude toolkit.

Computes trajectories of p = |xi|^2/2 + V for compactly supported bump
potentials, the scattering relation and its angular density, trajectory
branches between direction pairs, modified actions, Maslov indices, and
the leading-order semiclassical amplitude, with quadrature and Jacobi
oracles for independent verification.
"""

from .asymptotics import (
    AsymptoticData,
    SRSample,
    angular_density,
    extract_asymptotics,
    impact_map,
    jacobian_dxi_dz,
    launch_incoming,
    locate_degenerate,
    signed_density,
    trace,
)
from .branches import Branch, BranchSet, check_regular, continue_branch, find_branches
from .dynamics import (
    Trajectory,
    eval_hamiltonian,
    free_flight,
    free_monodromy,
    integrate_fixed_time,
    integrate_until_exit,
    symplectic_form,
)
from .errors import (
    BranchContinuationFailed,
    ConfigError,
    DegenerateBranchPresent,
    FitDiverged,
    NoSignChange,
    NotOutgoing,
    OrbitingRegime,
    ScatrelError,
    SegmentIntersectsSupport,
    StepFailure,
    TangentZero,
    TimeBudgetExhausted,
)
from .potentials import (
    Bump,
    PhasePoint,
    PotentialField,
    ScatteringConfig,
    check_support_inside,
)
from .semiclassics import (
    ActionGradients,
    AmplitudeResult,
    Contribution,
    MixedHessian,
    action_gradients,
    amplitude_fan,
    assemble_amplitude,
    assemble_from_branches,
    maslov_index,
    mixed_hessian,
    modified_action,
)

__version__ = "0.1.0"
