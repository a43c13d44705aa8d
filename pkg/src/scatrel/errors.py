"""Exception taxonomy for the scattering toolkit.

Every failure mode that callers are expected to branch on gets its own
class.  All of them derive from ScatrelError so batch drivers can catch
the whole family at once; ConfigError additionally carries a JSON path
and a best-effort line number for CLI diagnostics.
"""


class ScatrelError(Exception):
    """Base class for all toolkit errors."""


class ConfigError(ScatrelError):
    """Invalid run configuration (schema violation, bad value, unknown key)."""

    def __init__(self, message, json_path=None, line=None):
        self.json_path = json_path
        self.line = line
        loc = ""
        if json_path is not None:
            loc = f" at {json_path}"
        if line is not None:
            loc += f" (line {line})"
        super().__init__(f"{message}{loc}")


class TimeBudgetExhausted(ScatrelError):
    """Trajectory did not leave the interaction region within the time budget.

    Signals a trapped or near-trapped trajectory at this energy.
    """


class StepFailure(ScatrelError):
    """Adaptive integrator could not reach the requested local tolerance."""


class SegmentIntersectsSupport(ScatrelError):
    """A free-flight segment would cross the support of the potential."""


class NotOutgoing(ScatrelError):
    """Asymptotic data requested from a trajectory that did not exit outgoing."""


class NoSignChange(ScatrelError):
    """Degeneracy bisection called on a segment with no detectable crossing."""


class OrbitingRegime(ScatrelError):
    """Quadrature oracle declined: effective radial potential has a near-double
    turning point, so the deflection integral is singular beyond order 1/2."""


class BranchContinuationFailed(ScatrelError):
    """Newton continuation of a branch diverged at a perturbed direction pair."""


class TangentZero(ScatrelError):
    """det of the position block vanishes on an interval; the fold-counting
    index is undefined there and is reported rather than guessed."""


class DegenerateBranchPresent(ScatrelError):
    """Leading-order amplitude assembly refused: a branch is degenerate
    (angular density at or below threshold, an unresolved fold pair, or a
    degenerate free continuum)."""

    def __init__(self, message, branch_indices=()):
        self.branch_indices = tuple(branch_indices)
        super().__init__(message)


class FitDiverged(ScatrelError):
    """Interference-period fit failed (flat data or non-convergent optimizer)."""
