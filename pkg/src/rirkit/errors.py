"""Exception taxonomy shared by every analysis module.

Each class names the single condition it reports. Operations raise these
instead of returning sentinel values so that callers can distinguish
"the math says no" (e.g. ``PipFailed``) from "the computation broke"
(e.g. ``NonConvergence``).
"""


class AnalysisError(Exception):
    """Base class for every error raised by this package."""


class MalformedInput(AnalysisError):
    """Input file or literal does not parse or fails schema validation."""


class NonConvergence(AnalysisError):
    """An iterative numeric routine failed to reach its tolerance."""


class PoleEvaluation(AnalysisError):
    """Requested evaluation point sits on (or within tolerance of) a pole."""


class ZeroOnAxis(AnalysisError):
    """The function vanishes on the imaginary axis where a phase or a
    logarithmic gain is required, so the quantity is undefined."""


class PoleOnAxis(AnalysisError):
    """A pole on the imaginary axis rules out the requested computation."""


class DegenerateLoop(AnalysisError):
    """The closed-loop characteristic polynomial is identically zero."""


class NotMinimumPhase(AnalysisError):
    """Operation requires a stable function with no closed-right-half-plane
    zeros and the input has at least one."""


class NotNormalizedPeak(AnalysisError):
    """Operation requires unit gain at the supplied peak frequency."""


class TangentialCrossing(AnalysisError):
    """A Nyquist-curve contact with the real axis is not transverse, so the
    crossing count is ill-defined at this contour shift."""


class HypothesisViolated(AnalysisError):
    """A stated hypothesis of the check being run does not hold, so the
    check's conclusion would be meaningless."""


class NotInG(AnalysisError):
    """System is outside the admissible class: it must be strictly proper,
    free of imaginary-axis poles and have at least one unstable pole."""


class PipFailed(AnalysisError):
    """Parity interlacing fails, so no stable stabilizer exists at all."""


class ConditionFailed(AnalysisError):
    """A certified sufficient condition does not hold.  Carries the signed
    numeric margin (condition LHS minus RHS) in ``margin``."""

    def __init__(self, message, margin=None):
        super().__init__(message)
        self.margin = margin


class SearchExhausted(AnalysisError):
    """A bounded numeric search ended without finding an admissible point."""


class NotDagger(AnalysisError):
    """System does not have the multi-peak structure this routine needs."""


class NoAttainment(AnalysisError):
    """The supremum exists but no admissible function attains it."""


class EmptyFeasibleSet(AnalysisError):
    """No grid point satisfied the phase-matching constraint."""


class DomainViolation(AnalysisError):
    """Arguments lie outside the operation's stated domain."""


class PeakMismatch(AnalysisError):
    """Supplied frequency is not a peak of the supplied function."""
