"""Certified instability-radius analysis for unstable rational plants.

The package measures how far an exponentially unstable transfer function
sits from the set of plants it fails to stabilize robustly: lower bounds
from gain peaks, exactness certificates driven by phase change rates,
synthesis of the minimum-norm destabilizing-boundary perturbations, and
brute-force cross-checks of the extremal change-rate theory.
"""

from .config import DEFAULT, Tolerances
from .errors import (
    AnalysisError,
    ConditionFailed,
    DegenerateLoop,
    DomainViolation,
    EmptyFeasibleSet,
    HypothesisViolated,
    MalformedInput,
    NoAttainment,
    NonConvergence,
    NotDagger,
    NotInG,
    NotMinimumPhase,
    NotNormalizedPeak,
    PeakMismatch,
    PipFailed,
    PoleEvaluation,
    PoleOnAxis,
    SearchExhausted,
    TangentialCrossing,
    ZeroOnAxis,
)
from .poly import (
    Polynomial,
    RationalTF,
    RootSet,
    closed_loop_poles,
    poly_roots,
    rtf_arith,
    rtf_derivative,
    rtf_eval,
)
from .freq import (
    FreqSample,
    PeakSet,
    change_rates,
    cr_integral_check,
    eval_offset,
    gain_phase,
    linf_norm_and_peaks,
)
from .stability import (
    Certificate,
    ClassMembership,
    NyquistCrossings,
    StabilityVerdict,
    class_membership,
    classify_poles,
    clhp_necessity_check,
    default_epsilon,
    marginal_stability_certificate,
    nyquist_crossings,
    pip_check,
)
from .rir import (
    Exactness,
    RirReport,
    SecondOrderFacts,
    Stabilizer,
    exact_rir_certificate,
    multi_peak_certificate,
    perturb_to_strict,
    rir_bounds,
    second_order_closed_form,
    synthesize_marginal_stabilizer,
)
from .crmax import (
    APFirst,
    APNegated,
    APProduct,
    APSecond,
    BruteForceResult,
    CrMaxProblem,
    CrMaxResult,
    GridBudget,
    allpass_cr,
    allpass_phase,
    attain_sup,
    blaschke_factors,
    brute_force_sup,
    closed_form_sup,
    delay_comparison,
    descriptor_tf,
    minphase_bound_check,
    sine_sum_bound,
)

__version__ = "0.1.0"
