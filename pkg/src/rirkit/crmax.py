"""Extremal phase change rates of stable all-pass functions.

Fixing a frequency omega_p and a phase value theta_p, the supremum of
the phase change rate at omega_p over all stable real-rational all-pass
functions whose phase at omega_p equals theta_p has the closed form
-|sin(theta_p)|/omega_p (zero when omega_p = 0, where only phases 0 and
pi are reachable).  The supremum is attained by a first-order section,
or a constant when sin(theta_p) = 0.

This module exposes the closed form, the attaining section, descriptor
algebra with exact change-rate formulas, and brute-force grid sweeps
over several all-pass families used to cross-check the closed form.  A
pair of comparison helpers cover minimum-phase functions and pure
delays, which both obey strictly worse bounds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .config import DEFAULT, Tolerances
from .errors import (
    DomainViolation,
    EmptyFeasibleSet,
    HypothesisViolated,
    NoAttainment,
    NotMinimumPhase,
)
from .freq import change_rates, linf_norm_and_peaks
from .poly import RationalTF, rtf_arith

__all__ = [
    "CrMaxProblem",
    "CrMaxResult",
    "BruteForceResult",
    "GridBudget",
    "APFirst",
    "APSecond",
    "APProduct",
    "APNegated",
    "allpass_cr",
    "allpass_phase",
    "descriptor_tf",
    "closed_form_sup",
    "attain_sup",
    "brute_force_sup",
    "sine_sum_bound",
    "minphase_bound_check",
    "delay_comparison",
    "blaschke_factors",
]

_FAMILIES = ("AP_first", "AP_second_real", "AP_second_complex", "AP_product")


@dataclass(frozen=True)
class CrMaxProblem:
    """Target frequency omega_p >= 0 and phase theta_p in (-pi, pi]."""

    omega_p: float
    theta_p: float

    def __post_init__(self) -> None:
        if not (self.omega_p >= 0.0 and math.isfinite(self.omega_p)):
            raise DomainViolation("omega_p must be finite and nonnegative")
        if not (-math.pi < self.theta_p <= math.pi):
            raise DomainViolation("theta_p must lie in (-pi, pi]")


@dataclass(frozen=True)
class APFirst:
    """First-order all-pass (a - s)/(a + s), a > 0."""

    a: float

    def __post_init__(self) -> None:
        if not (self.a > 0.0 and math.isfinite(self.a)):
            raise DomainViolation("first-order section needs a > 0")


@dataclass(frozen=True)
class APSecond:
    """Second-order all-pass (s^2 - b s + a)/(s^2 + b s + a), a, b > 0."""

    a: float
    b: float

    def __post_init__(self) -> None:
        if not (self.a > 0.0 and self.b > 0.0):
            raise DomainViolation("second-order section needs a > 0 and b > 0")


@dataclass(frozen=True)
class APProduct:
    """Product of first- and second-order sections (empty product is 1)."""

    factors: tuple = field(default_factory=tuple)


@dataclass(frozen=True)
class APNegated:
    """Sign flip of another descriptor; shifts phase by pi, keeps the rate."""

    inner: "APFirst | APSecond | APProduct"


def allpass_cr(descr, omega: float) -> float:
    """Exact phase change rate of a descriptor at ``omega``."""
    if isinstance(descr, APFirst):
        return -2.0 * descr.a / (omega * omega + descr.a * descr.a)
    if isinstance(descr, APSecond):
        a, b = descr.a, descr.b
        w2 = omega * omega
        return -2.0 * b * (a + w2) / ((a - w2) ** 2 + b * b * w2)
    if isinstance(descr, APProduct):
        return sum(allpass_cr(f, omega) for f in descr.factors)
    if isinstance(descr, APNegated):
        return allpass_cr(descr.inner, omega)
    raise DomainViolation(f"not an all-pass descriptor: {descr!r}")


def allpass_phase(descr, omega: float) -> float:
    """Unwrapped phase of a descriptor at ``omega >= 0`` (anchored at the
    sign of the DC value: 0 for positive, pi for negated)."""
    if isinstance(descr, APFirst):
        return -2.0 * math.atan(omega / descr.a)
    if isinstance(descr, APSecond):
        return -2.0 * math.atan2(descr.b * omega, descr.a - omega * omega)
    if isinstance(descr, APProduct):
        return sum(allpass_phase(f, omega) for f in descr.factors)
    if isinstance(descr, APNegated):
        return math.pi + allpass_phase(descr.inner, omega)
    raise DomainViolation(f"not an all-pass descriptor: {descr!r}")


def descriptor_tf(descr, tol: Tolerances = DEFAULT) -> RationalTF:
    """Transfer function realizing a descriptor."""
    if isinstance(descr, APFirst):
        return RationalTF([descr.a, -1.0], [descr.a, 1.0], tol)
    if isinstance(descr, APSecond):
        return RationalTF([descr.a, -descr.b, 1.0], [descr.a, descr.b, 1.0], tol)
    if isinstance(descr, APProduct):
        out = RationalTF([1.0], [1.0], tol)
        for f in descr.factors:
            out = rtf_arith(out, descriptor_tf(f, tol), "mul")
        return out
    if isinstance(descr, APNegated):
        return rtf_arith(descriptor_tf(descr.inner, tol), -1.0, "scalar_mul")
    raise DomainViolation(f"not an all-pass descriptor: {descr!r}")


@dataclass(frozen=True)
class CrMaxResult:
    sup: float
    descriptor: object
    tf: RationalTF
    phase_at_peak: float
    cr_at_peak: float


@dataclass(frozen=True)
class GridBudget:
    points: int = 2000
    a_min: float = 1e-3
    a_max: float = 1e3
    phase_tol: float = 1e-3
    polish: bool = True


@dataclass(frozen=True)
class BruteForceResult:
    family: str
    best_cr: float
    descriptor: object
    phase_err: float
    n_feasible: int
    polished: bool


def closed_form_sup(problem: CrMaxProblem) -> float:
    """Supremum of the phase change rate over phase-matched stable
    all-pass functions: -|sin(theta_p)|/omega_p, and 0 at omega_p = 0
    (where theta_p must be 0 or pi)."""
    if problem.omega_p == 0.0:
        if problem.theta_p == 0.0 or problem.theta_p == math.pi:
            return 0.0
        raise DomainViolation(
            "at omega_p = 0 an all-pass phase can only be 0 or pi"
        )
    return -abs(math.sin(problem.theta_p)) / problem.omega_p


def attain_sup(problem: CrMaxProblem, tol: Tolerances = DEFAULT) -> CrMaxResult:
    """All-pass function attaining the supremum.

    Constants handle sin(theta_p) = 0; otherwise a single first-order
    section with the corner solving the phase match does it.  At
    omega_p = 0 with theta_p not in {0, pi} no all-pass matches the
    phase at all, so NoAttainment is raised.  The returned phase and
    change rate are re-verified against the closed form before return.
    """
    wp, th = problem.omega_p, problem.theta_p
    descr: object
    if th == 0.0:
        descr = APProduct(())
    elif th == math.pi:
        descr = APNegated(APProduct(()))
    elif wp == 0.0:
        raise NoAttainment(
            "at omega_p = 0 only the phases 0 and pi are reachable"
        )
    elif 0.0 < th < math.pi:
        a = wp * math.tan(th / 2.0)
        descr = APNegated(APFirst(a))
    else:
        a = wp / math.tan(-th / 2.0)
        descr = APFirst(a)
    sup = closed_form_sup(problem)
    phase = allpass_phase(descr, wp)
    cr = allpass_cr(descr, wp)
    if abs(phase - th) > 1e-10 or abs(cr - sup) > 1e-10:
        raise DomainViolation(
            f"attained section mismatch: phase {phase!r} vs {th!r}, rate {cr!r} vs {sup!r}"
        )
    return CrMaxResult(
        sup=sup,
        descriptor=descr,
        tf=descriptor_tf(descr, tol),
        phase_at_peak=phase,
        cr_at_peak=cr,
    )


def _first_order_arrays(wp: float, a: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    phase = -2.0 * np.arctan(wp / a)
    cr = -2.0 * a / (wp * wp + a * a)
    return phase, cr


def _second_order_arrays(
    wp: float, a: np.ndarray, b: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    w2 = wp * wp
    phase = -2.0 * np.arctan2(b * wp, a - w2)
    cr = -2.0 * b * (a + w2) / ((a - w2) ** 2 + b * b * w2)
    return phase, cr


def _polish_first(wp: float, th: float, a0: float, negated: bool) -> float:
    """Newton refinement of the corner parameter so the section phase at
    wp matches th; dphi/da = 2 wp / (a^2 + wp^2) for both signs."""
    target = th - math.pi if negated else th
    a = a0
    for _ in range(60):
        resid = -2.0 * math.atan(wp / a) - target
        if abs(resid) <= 1e-14:
            break
        step = resid / (2.0 * wp / (a * a + wp * wp))
        nxt = a - step
        if nxt <= 0.0:
            nxt = a / 2.0
        a = nxt
    return a


def _axis_count(points: int, dim: int) -> int:
    return max(8, int(round(points ** (1.0 / dim))))


_PRODUCT_STRUCTURES = (
    (1, 0), (2, 0), (0, 1), (3, 0), (1, 1), (4, 0), (2, 1), (0, 2),
)


def _structure_sweep(
    wp: float, k1: int, k2: int, budget: GridBudget
) -> tuple[np.ndarray, np.ndarray, list[np.ndarray]]:
    """Phase and rate grids for k1 first-order and k2 second-order
    sections; returns (phase, cr, parameter axes flattened)."""
    dim = k1 + 2 * k2
    n = _axis_count(budget.points, dim)
    a_axis = np.logspace(math.log10(budget.a_min), math.log10(budget.a_max), n)
    w0_axis = np.logspace(
        math.log10(math.sqrt(budget.a_min)), math.log10(math.sqrt(budget.a_max)), n
    )
    zeta_axis = np.linspace(1e-3, 1.0 - 1e-3, n)
    axes = [a_axis] * k1 + [w0_axis, zeta_axis] * k2
    grids = np.meshgrid(*axes, indexing="ij")
    flat = [g.ravel() for g in grids]
    phase = np.zeros_like(flat[0])
    cr = np.zeros_like(flat[0])
    for i in range(k1):
        ph, c = _first_order_arrays(wp, flat[i])
        phase += ph
        cr += c
    for j in range(k2):
        w0 = flat[k1 + 2 * j]
        zeta = flat[k1 + 2 * j + 1]
        ph, c = _second_order_arrays(wp, w0 * w0, 2.0 * zeta * w0)
        phase += ph
        cr += c
    return phase, cr, flat


def _best_feasible(
    phase: np.ndarray, cr: np.ndarray, th: float, ptol: float
) -> tuple[int | None, int, float]:
    """Index of the best feasible sample, feasible count and phase error."""
    err = np.abs(phase - th)
    mask = err <= ptol
    count = int(mask.sum())
    if count == 0:
        return None, 0, math.inf
    masked = np.where(mask, cr, -np.inf)
    idx = int(np.argmax(masked))
    return idx, count, float(err[idx])


def brute_force_sup(
    problem: CrMaxProblem,
    family: str,
    budget: GridBudget = GridBudget(),
) -> BruteForceResult:
    """Grid sweep of one all-pass family for the phase-matched maximum
    change rate at omega_p.

    Families: AP_first (one section, both signs, Newton-polished),
    AP_second_real (two mirrored real pairs), AP_second_complex (complex
    pair by natural frequency and damping in (0,1)), AP_product (all
    section products up to degree four, both signs).  A sample is
    feasible when its unwrapped phase at omega_p matches theta_p within
    budget.phase_tol; EmptyFeasibleSet is raised when nothing in the
    sweep is feasible.  omega_p must be positive here: the grid families
    all have zero phase at zero frequency.
    """
    if family not in _FAMILIES:
        raise DomainViolation(
            f"family must be one of {_FAMILIES}, got {family!r}"
        )
    wp, th = problem.omega_p, problem.theta_p
    if wp <= 0.0:
        raise DomainViolation("grid sweeps need omega_p > 0")
    ptol = budget.phase_tol

    if family == "AP_first":
        a = np.logspace(
            math.log10(budget.a_min), math.log10(budget.a_max), budget.points
        )
        phase, cr = _first_order_arrays(wp, a)
        best = None
        n_total = 0
        for negated in (False, True):
            ph = phase + math.pi if negated else phase
            idx, count, err = _best_feasible(ph, cr, th, ptol)
            n_total += count
            if idx is not None and (best is None or cr[idx] > best[1]):
                best = (negated, float(cr[idx]), float(a[idx]), err)
        if best is None:
            raise EmptyFeasibleSet(
                "no first-order section matched the phase on the grid"
            )
        negated, best_cr, best_a, err = best
        polished = False
        if budget.polish:
            best_a = _polish_first(wp, th, best_a, negated)
            best_cr = -2.0 * best_a / (wp * wp + best_a * best_a)
            err = abs(
                (math.pi if negated else 0.0)
                - 2.0 * math.atan(wp / best_a) - th
            )
            polished = True
        descr: object = APFirst(best_a)
        if negated:
            descr = APNegated(descr)
        return BruteForceResult(
            family=family, best_cr=best_cr, descriptor=descr,
            phase_err=err, n_feasible=n_total, polished=polished,
        )

    if family == "AP_second_real":
        n = _axis_count(budget.points, 2)
        a_axis = np.logspace(math.log10(budget.a_min), math.log10(budget.a_max), n)
        a1, a2 = np.meshgrid(a_axis, a_axis, indexing="ij")
        a1, a2 = a1.ravel(), a2.ravel()
        ph1, c1 = _first_order_arrays(wp, a1)
        ph2, c2 = _first_order_arrays(wp, a2)
        phase, cr = ph1 + ph2, c1 + c2

        def build(i: int, negated: bool) -> object:
            d: object = APSecond(a=float(a1[i] * a2[i]), b=float(a1[i] + a2[i]))
            return APNegated(d) if negated else d

        return _signed_sweep(family, phase, cr, th, ptol, build)

    if family == "AP_second_complex":
        n = _axis_count(budget.points, 2)
        w0_axis = np.logspace(
            math.log10(math.sqrt(budget.a_min)),
            math.log10(math.sqrt(budget.a_max)), n,
        )
        zeta_axis = np.linspace(1e-3, 1.0 - 1e-3, n)
        w0, zeta = np.meshgrid(w0_axis, zeta_axis, indexing="ij")
        w0, zeta = w0.ravel(), zeta.ravel()
        phase, cr = _second_order_arrays(wp, w0 * w0, 2.0 * zeta * w0)

        def build(i: int, negated: bool) -> object:
            d: object = APSecond(a=float(w0[i] ** 2), b=float(2.0 * zeta[i] * w0[i]))
            return APNegated(d) if negated else d

        return _signed_sweep(family, phase, cr, th, ptol, build)

    # AP_product
    best_result: BruteForceResult | None = None
    n_total = 0
    for k1, k2 in _PRODUCT_STRUCTURES:
        phase, cr, flat = _structure_sweep(wp, k1, k2, budget)

        def build(i: int, negated: bool, k1=k1, k2=k2, flat=flat) -> object:
            factors: list = [APFirst(float(flat[j][i])) for j in range(k1)]
            for j in range(k2):
                w0 = float(flat[k1 + 2 * j][i])
                zeta = float(flat[k1 + 2 * j + 1][i])
                factors.append(APSecond(a=w0 * w0, b=2.0 * zeta * w0))
            d: object = APProduct(tuple(factors))
            return APNegated(d) if negated else d

        try:
            r = _signed_sweep(family, phase, cr, th, ptol, build)
        except EmptyFeasibleSet:
            continue
        n_total += r.n_feasible
        if best_result is None or r.best_cr > best_result.best_cr:
            best_result = r
    if best_result is None:
        raise EmptyFeasibleSet(
            "no section product matched the phase on any structure grid"
        )
    return BruteForceResult(
        family=family, best_cr=best_result.best_cr,
        descriptor=best_result.descriptor, phase_err=best_result.phase_err,
        n_feasible=n_total, polished=False,
    )


def _signed_sweep(
    family: str,
    phase: np.ndarray,
    cr: np.ndarray,
    th: float,
    ptol: float,
    build,
) -> BruteForceResult:
    best = None
    n_total = 0
    for negated in (False, True):
        ph = phase + math.pi if negated else phase
        idx, count, err = _best_feasible(ph, cr, th, ptol)
        n_total += count
        if idx is not None and (best is None or cr[idx] > best[1]):
            best = (negated, float(cr[idx]), idx, err)
    if best is None:
        raise EmptyFeasibleSet(
            f"no sample in the {family} sweep matched the phase"
        )
    negated, best_cr, idx, err = best
    return BruteForceResult(
        family=family, best_cr=best_cr, descriptor=build(idx, negated),
        phase_err=err, n_feasible=n_total, polished=False,
    )


def sine_sum_bound(thetas) -> tuple[float, float]:
    """(sum of sines, -|sin of sum|) for angles in [-pi, 0]; the first
    never exceeds the second."""
    ts = [float(t) for t in thetas]
    if not ts:
        raise DomainViolation("need at least one angle")
    for t in ts:
        if not (-math.pi <= t <= 0.0):
            raise DomainViolation("angles must lie in [-pi, 0]")
    lhs = sum(math.sin(t) for t in ts)
    rhs = -abs(math.sin(sum(ts)))
    return lhs, rhs


def minphase_bound_check(
    f: RationalTF, omega_p: float, tol: Tolerances = DEFAULT
) -> tuple[float, float]:
    """Phase change rate of a minimum-phase function at its peak against
    the bound -|theta(omega_p)|/omega_p (zero at omega_p = 0).

    Requires f free of closed-right-half-plane poles and zeros, the gain
    peak attained at omega_p, and the unwrapped phase there inside
    [-pi, pi].  Returns (rate, bound); the rate never exceeds the bound.
    """
    if omega_p < 0.0:
        raise DomainViolation("omega_p must be nonnegative")
    if f.is_zero:
        raise NotMinimumPhase("the zero function has no phase")
    for rs in (f.num_roots, f.den_roots):
        for z, _ in rs.roots:
            if z.real >= -tol.axis_band(z):
                raise NotMinimumPhase(
                    "minimum phase requires all poles and zeros strictly in "
                    "the open left half-plane"
                )
    pk = linf_norm_and_peaks(f, tol)
    gain = abs(f.eval_unchecked(1j * omega_p))
    if abs(gain - pk.peak_gain) > tol.peak_rel * pk.peak_gain:
        raise HypothesisViolated(
            f"|f| at {omega_p:.6g} is below its peak gain"
        )
    fs = change_rates(f, omega_p, tol)
    if abs(fs.phase) > math.pi + 1e-12:
        raise HypothesisViolated(
            "the unwrapped phase at the peak leaves [-pi, pi]"
        )
    bound = 0.0 if omega_p == 0.0 else -abs(fs.phase) / omega_p
    return fs.phase_cr, bound


def delay_comparison(theta_p: float, omega_p: float) -> tuple[float, float]:
    """Change rate of the pure delay with phase lag theta_p at omega_p
    against the all-pass supremum with the same lag.

    The delay exp(-s*theta_p/omega_p) has constant rate -theta_p/omega_p,
    strictly below the all-pass value -sin(theta_p)/omega_p for lags in
    (0, pi).  Returns (delay rate, all-pass rate).
    """
    if omega_p <= 0.0:
        raise DomainViolation("omega_p must be positive")
    if not (0.0 < theta_p < math.pi):
        raise DomainViolation("theta_p must lie in (0, pi)")
    return -theta_p / omega_p, -math.sin(theta_p) / omega_p


def blaschke_factors(f: RationalTF, tol: Tolerances = DEFAULT):
    """Descriptor decomposition of a stable rational all-pass function.

    The poles must all be strictly in the open left half-plane and the
    gain identically one; real poles become first-order sections and
    conjugate pairs second-order ones, with a sign flip recorded when
    f(0) is negative.  The reconstruction is verified coefficientwise.
    """
    pk = linf_norm_and_peaks(f, tol)
    if not pk.dense or abs(pk.peak_gain - 1.0) > 1e-9:
        raise DomainViolation("gain is not identically one")
    factors: list = []
    for z, m in f.den_roots.roots:
        if z.real >= -tol.axis_band(z):
            raise DomainViolation("all-pass poles must be strictly stable")
        for _ in range(m):
            if z.imag > 0.0:
                factors.append(APSecond(a=abs(z) ** 2, b=-2.0 * z.real))
            elif z.imag == 0.0:
                factors.append(APFirst(-z.real))
    factors.sort(key=lambda d: (isinstance(d, APSecond), d.a))
    descr: object = APProduct(tuple(factors))
    if f.eval_unchecked(0.0).real < 0.0:
        descr = APNegated(descr)
    rebuilt = descriptor_tf(descr, tol)
    scale = max(f.num.scale(), f.den.scale())
    num_a = np.asarray(f.num.coeffs)
    num_b = np.asarray(rebuilt.num.coeffs)
    den_a = np.asarray(f.den.coeffs)
    den_b = np.asarray(rebuilt.den.coeffs)
    if (
        num_a.shape != num_b.shape
        or den_a.shape != den_b.shape
        or np.max(np.abs(num_a - num_b)) > 1e-9 * scale
        or np.max(np.abs(den_a - den_b)) > 1e-9 * scale
    ):
        raise DomainViolation("reconstruction from factors failed")
    return descr
