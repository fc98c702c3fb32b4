"""Certified robust-instability-radius analysis and stabilizer synthesis.

The pipeline: lower bounds from the peak gain (always) and the DC gain
(odd unstable pole count); exactness certificates keyed on the sign of a
phase-change-rate margin at the governing peak; construction of the
minimum-norm marginally-stabilizing perturbation (a constant or a scaled
first-order all-pass matched in phase at the peak); and the final
epsilon-perturbation that turns the marginal loop into a strictly stable
one at an arbitrarily small norm premium.

Certified outcomes are never trusted blind: every synthesized stabilizer
is re-verified through the curve certificate and by direct closed-loop
root classification before it is returned.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .config import DEFAULT, Tolerances
from .errors import (
    AnalysisError,
    ConditionFailed,
    DomainViolation,
    NotDagger,
    NotInG,
    PeakMismatch,
    PipFailed,
    SearchExhausted,
)
from .freq import change_rates, linf_norm_and_peaks
from .poly import RationalTF, RootSet, closed_loop_poles, rtf_arith
from .stability import (
    Certificate,
    ClassMembership,
    class_membership,
    classify_poles,
    classify_rootset,
    marginal_stability_certificate,
)

__all__ = [
    "Stabilizer",
    "Exactness",
    "RirReport",
    "SecondOrderFacts",
    "rir_bounds",
    "synthesize_marginal_stabilizer",
    "exact_rir_certificate",
    "second_order_closed_form",
    "perturb_to_strict",
    "multi_peak_certificate",
]


@dataclass(frozen=True)
class Stabilizer:
    """A stable perturbation together with the closed loop it produces.

    kind is constant, first_order_allpass or perturbed.  omega_c is the
    marginal frequency for the first two kinds; a is the all-pass corner
    parameter; epsilon the strictifying offset for kind = perturbed.
    """

    delta: RationalTF
    kind: str
    hinf_norm: float
    cl_poles: RootSet
    omega_c: float | None = None
    a: float | None = None
    epsilon: float = 0.0
    certificate: Certificate | None = None


@dataclass(frozen=True)
class Exactness:
    """Exactness verdict: exact (with the certified value), strict_gap
    (the peak-gain bound is certifiably not attained) or undecided."""

    status: str
    value: float | None = None
    reason: str | None = None


@dataclass(frozen=True)
class RirReport:
    rho_p: float
    rho_o: float | None
    membership: ClassMembership
    exactness: Exactness
    margin: float | None
    stabilizer: Stabilizer | None
    notch_consistent: bool | None = None


@dataclass(frozen=True)
class SecondOrderFacts:
    """Closed-form analysis of 1/(s^2 + p s + q).

    m0 is the sigma-gain change rate at omega = 0 (equal to -p/q); m_peak
    the rate at the positive peak when one exists (equal to -2/p).
    class_tag is G_10, G_20, G_2sharp or not_admissible; exactness one of
    exact, strict_gap, undecided, not_applicable.
    """

    p: float
    q: float
    n: int
    class_tag: str
    omega_p: float
    m0: float
    m_peak: float | None
    exactness: str
    rho_p: float | None


def _admissibility(g: RationalTF, tol: Tolerances) -> tuple[int, float]:
    """ORHP pole count and peak gain, raising NotInG when g is outside the
    admissible class."""
    verdict = classify_poles(g, tol)
    if not g.strictly_proper:
        raise NotInG("plant must be strictly proper")
    if verdict.axis_poles:
        raise NotInG("plant has poles on the imaginary axis")
    if verdict.n_orhp < 1:
        raise NotInG("plant is already stable")
    pk = linf_norm_and_peaks(g, tol)
    return verdict.n_orhp, pk.peak_gain


def rir_bounds(g: RationalTF, tol: Tolerances = DEFAULT) -> tuple[float, float | None]:
    """Lower bounds for the instability radius.

    The reciprocal peak gain always bounds from below; the reciprocal DC
    gain also does when the unstable pole count is odd (and g(0) is not
    zero).  Returns (rho_p, rho_o or None).
    """
    n, peak_gain = _admissibility(g, tol)
    rho_p = 1.0 / peak_gain
    rho_o = None
    if n % 2 == 1:
        g0 = abs(g.eval_unchecked(0.0))
        if g0 > tol.zero_mag * (1.0 + g.num.scale()):
            rho_o = 1.0 / g0
    return rho_p, rho_o


def _peak_margin(g: RationalTF, w: float, tol: Tolerances) -> tuple[float, float, float]:
    """(margin, rhs, unwrapped phase) of the peak condition at ``w``."""
    fs = change_rates(g, w, tol)
    if w <= 1e-9:
        return fs.phase_cr, 0.0, fs.phase
    rhs = abs(math.sin(fs.phase)) / w
    return fs.phase_cr - rhs, rhs, fs.phase


def _principal(angle: float) -> float:
    a = math.fmod(angle + math.pi, 2.0 * math.pi)
    if a <= 0.0:
        a += 2.0 * math.pi
    return a - math.pi


def synthesize_marginal_stabilizer(
    g: RationalTF,
    tol: Tolerances = DEFAULT,
    at_peak: float | None = None,
) -> Stabilizer:
    """Minimum-norm perturbation making the positive feedback loop
    single-mode marginally stable at a peak frequency.

    The admissible inputs are plants with a unique peak (zero-frequency
    with one unstable pole, or positive with two) and the multi-peak
    variants with a qualifying peak.  ``at_peak`` selects a specific peak
    (matched against the computed peak list); phase and gain are then
    matched at exactly that frequency, which is what published
    rounded-frequency case studies require.  Without it the qualifying
    peak with the largest condition margin is used.

    The peak condition must hold strictly: the phase change rate at the
    chosen peak has to exceed |sin(theta)|/omega (zero at omega = 0), else
    ConditionFailed carries the signed margin.  When sin(theta) vanishes
    the stabilizer is the constant 1/g(j omega_p); otherwise it is
    c*(a-s)/(a+s) or c*(s-a)/(s+a) with c the reciprocal gain at the peak
    and a > 0 solving the phase match.  The returned loop is re-certified
    before anything is returned.
    """
    cm = class_membership(g, tol)
    if not cm.in_G:
        raise NotInG("plant is not strictly proper, unstable and axis-pole-free")
    if not cm.pip:
        raise PipFailed("parity interlacing fails; no stable stabilizer exists")
    pk = cm.peaks
    if pk is None or pk.dense or not pk.peaks or not all(math.isfinite(w) for w in pk.peaks):
        raise ConditionFailed("peak structure admits no certified synthesis", margin=None)

    single = cm.subclass in ("G_n0", "G_nsharp")
    covered = (
        (cm.subclass == "G_n0" and cm.n == 1)
        or (cm.subclass == "G_nsharp" and cm.n == 2)
        or cm.subclass in ("G_1dagger", "G_2dagger")
    )
    if not covered:
        raise ConditionFailed(
            f"no certified synthesis route covers subclass {cm.subclass} "
            f"with {cm.n} unstable pole(s)",
            margin=None,
        )

    relaxed = at_peak is not None
    if at_peak is not None:
        wp = float(at_peak)
        if not any(abs(wp - w) <= 1e-3 * (1.0 + w) for w in pk.peaks):
            raise PeakMismatch(f"{wp} is not within 1e-3 of any peak of the plant")
    elif cm.subclass in ("G_n0", "G_1dagger"):
        wp = 0.0
    elif cm.subclass == "G_nsharp":
        wp = pk.peaks[0]
    else:
        wp = max(pk.peaks, key=lambda w: _peak_margin(g, w, tol)[0])

    margin, rhs, theta_g = _peak_margin(g, wp, tol)
    if margin <= tol.cond_band(rhs):
        raise ConditionFailed(
            f"peak condition fails at ω={wp:.6g}: margin {margin:.6g}",
            margin=margin,
        )

    v = g.eval_unchecked(1j * wp)
    c = 1.0 / abs(v)
    if abs(math.sin(theta_g)) <= tol.sin_zero:
        value = 1.0 / v.real
        delta = RationalTF([value], [1.0], tol)
        kind, a = "constant", None
    else:
        tstar = _principal(theta_g)
        if 0.0 < tstar < math.pi:
            a = wp / math.tan(tstar / 2.0)
            delta = RationalTF([c * a, -c], [a, 1.0], tol)
        elif -math.pi < tstar < 0.0:
            a = wp * math.tan(-tstar / 2.0)
            delta = RationalTF([-c * a, c], [a, 1.0], tol)
        else:
            raise ConditionFailed(
                "peak phase sits on the branch boundary", margin=margin
            )
        kind = "first_order_allpass"

    L = rtf_arith(g, delta, "mul")
    cert = marginal_stability_certificate(
        L, wp, tol, stationary_tol=(5e-2 if relaxed else None)
    )
    if not cert.certified:
        raise AnalysisError(f"synthesized loop failed certification: {cert.reason}")
    cl = closed_loop_poles(L, tol)
    hinf = linf_norm_and_peaks(delta, tol).peak_gain
    tight = single and not relaxed
    norm_product = hinf * (pk.peak_gain if tight else abs(v))
    if abs(norm_product - 1.0) > (tol.hinf_match if tight else tol.peak_rel):
        raise AnalysisError(
            f"stabilizer norm law violated: ||f||*gain = {norm_product!r}"
        )
    return Stabilizer(
        delta=delta,
        kind=kind,
        hinf_norm=hinf,
        cl_poles=cl,
        omega_c=wp,
        a=a,
        certificate=cert,
    )


def _borderline_constant_probe(
    g: RationalTF, tol: Tolerances
) -> Stabilizer | None:
    """Exactness probe for a zero-frequency peak whose phase change rate
    vanishes: the scaled constants (1/g(0))*(1+eta) must give single-mode
    marginal loops for every probe eta, which exhibits stabilizers with
    norm arbitrarily close to the DC bound."""
    g0 = g.eval_unchecked(0.0).real
    if g0 == 0.0:
        return None
    base = 1.0 / g0
    last: Stabilizer | None = None
    for eta in (1e-2, 1e-3, 1e-4):
        delta = RationalTF([base * (1.0 + eta)], [1.0], tol)
        L = rtf_arith(g, delta, "mul")
        try:
            cl = closed_loop_poles(L, tol)
        except AnalysisError:
            return None
        verdict = classify_rootset(cl, tol)
        if verdict.kind != "marginally_stable" or verdict.single_mode is None:
            return None
        last = Stabilizer(
            delta=delta,
            kind="constant",
            hinf_norm=abs(base) * (1.0 + eta),
            cl_poles=cl,
            omega_c=verdict.single_mode,
        )
    return last


def _report(
    g: RationalTF,
    cm: ClassMembership,
    tol: Tolerances,
    exactness: Exactness,
    margin: float | None,
    stabilizer: Stabilizer | None,
    notch: bool | None = None,
) -> RirReport:
    rho_p, rho_o = rir_bounds(g, tol)
    return RirReport(
        rho_p=rho_p,
        rho_o=rho_o,
        membership=cm,
        exactness=exactness,
        margin=margin,
        stabilizer=stabilizer,
        notch_consistent=notch,
    )


def exact_rir_certificate(g: RationalTF, tol: Tolerances = DEFAULT) -> RirReport:
    """Full exactness analysis of a plant.

    Dispatches on the subclass: a unique zero-frequency peak with one
    unstable pole or a unique positive peak with two are decided by the
    sign of the peak-condition margin (positive: exact, certified by
    synthesis; negative: the bound is strictly not attained; inside the
    dead band: undecided, except for the zero-frequency case where the
    scaled-constant probe can still certify exactness).  A unique positive
    peak with one unstable pole is always a strict gap.  Multi-peak plants
    go through the qualifying-peak extension.  Everything else is
    undecided with a reason.
    """
    cm = class_membership(g, tol)
    if not cm.in_G:
        raise NotInG("plant is not strictly proper, unstable and axis-pole-free")
    if not cm.pip:
        raise PipFailed("parity interlacing fails; the instability radius is infinite")
    rho_p, _ = rir_bounds(g, tol)
    pk = cm.peaks

    if pk is None or pk.dense or not pk.peaks or not all(math.isfinite(w) for w in pk.peaks):
        return _report(
            g, cm, tol,
            Exactness("undecided", reason="peak structure outside the certified classes"),
            None, None,
        )

    if cm.subclass in ("G_1dagger", "G_2dagger"):
        return _dagger_report(g, cm, tol)

    if cm.subclass == "G_n0" and cm.n == 1:
        margin, rhs, _ = _peak_margin(g, 0.0, tol)
        band = tol.cond_band(rhs)
        if margin > band:
            stab = synthesize_marginal_stabilizer(g, tol)
            return _report(g, cm, tol, Exactness("exact", value=rho_p), margin, stab)
        if margin < -band:
            return _report(
                g, cm, tol,
                Exactness("strict_gap", reason="phase change rate at the peak is negative"),
                margin, None,
            )
        probe = _borderline_constant_probe(g, tol)
        if probe is not None:
            return _report(g, cm, tol, Exactness("exact", value=rho_p), margin, probe)
        return _report(
            g, cm, tol,
            Exactness("undecided", reason="borderline: margin inside the tolerance dead band"),
            margin, None,
        )

    if cm.subclass == "G_nsharp" and cm.n == 1:
        return _report(
            g, cm, tol,
            Exactness(
                "strict_gap",
                reason="one unstable pole with a positive peak never attains the bound",
            ),
            None, None,
        )

    if cm.subclass == "G_nsharp" and cm.n == 2:
        wp = pk.peaks[0]
        margin, rhs, _ = _peak_margin(g, wp, tol)
        band = tol.cond_band(rhs)
        if margin > band:
            stab = synthesize_marginal_stabilizer(g, tol)
            return _report(g, cm, tol, Exactness("exact", value=rho_p), margin, stab)
        if margin < -band:
            return _report(
                g, cm, tol,
                Exactness("strict_gap", reason="peak condition fails with strict margin"),
                margin, None,
            )
        return _report(
            g, cm, tol,
            Exactness("undecided", reason="borderline: margin inside the tolerance dead band"),
            margin, None,
        )

    if cm.subclass == "G_n0" and cm.n == 2:
        return _report(
            g, cm, tol,
            Exactness(
                "undecided",
                reason="zero-frequency peak with two unstable poles: no certificate applies",
            ),
            None, None,
        )

    return _report(
        g, cm, tol,
        Exactness(
            "undecided",
            reason=f"no certificate for subclass {cm.subclass} with n={cm.n}",
        ),
        None, None,
    )


def _notch_consistency(
    g: RationalTF, cm: ClassMembership, wq: float, margin: float, tol: Tolerances
) -> bool | None:
    """Re-derive the multi-peak certificate through the unit-peak notch
    filter that isolates the qualifying peak, and confirm the filtered
    plant passes its single-peak certificate.  Skipped (None) when the
    margin is too small for the filter to separate peaks beyond the peak
    collection tolerance."""
    if margin < 1e-3:
        return None
    eta = min(max(1.0 - margin / 4.0, 0.9), 1.0 - 1e-6)
    if cm.subclass == "G_1dagger":
        notch = RationalTF([1.0, eta], [1.0, 1.0], tol)
        expected = "G_n0"
    else:
        notch = RationalTF([eta * wq * wq, 1.0, eta], [wq * wq, 1.0, 1.0], tol)
        expected = "G_nsharp"
    gt = rtf_arith(g, notch, "mul")
    cmt = class_membership(gt, tol)
    if cmt.subclass != expected or cmt.n != cm.n or cmt.peaks is None:
        return False
    w2 = cmt.peaks.peaks[0]
    m2, rhs2, _ = _peak_margin(gt, w2, tol)
    return m2 > tol.cond_band(rhs2)


def _dagger_report(g: RationalTF, cm: ClassMembership, tol: Tolerances) -> RirReport:
    rho_p, _ = rir_bounds(g, tol)
    pk = cm.peaks
    assert pk is not None
    if cm.subclass == "G_1dagger":
        margins = [(0.0, *_peak_margin(g, 0.0, tol)[:2])]
    else:
        margins = [(w, *_peak_margin(g, w, tol)[:2]) for w in pk.peaks]
    wq, margin, rhs = max(margins, key=lambda t: t[1])
    band = tol.cond_band(rhs)
    if margin > band:
        stab = synthesize_marginal_stabilizer(g, tol)
        notch = _notch_consistency(g, cm, wq, margin, tol)
        return _report(g, cm, tol, Exactness("exact", value=rho_p), margin, stab, notch)
    if all(m < -tol.cond_band(r) for _, m, r in margins):
        return _report(
            g, cm, tol,
            Exactness("strict_gap", reason="every peak fails its condition strictly"),
            margin, None,
        )
    return _report(
        g, cm, tol,
        Exactness("undecided", reason="borderline: best margin inside the tolerance dead band"),
        margin, None,
    )


def multi_peak_certificate(g: RationalTF, tol: Tolerances = DEFAULT) -> RirReport:
    """Exactness certificate for plants whose peak gain is attained at
    several frequencies; requires the dagger structure (one unstable pole
    with a zero-frequency peak among them, or two with all peaks positive)."""
    cm = class_membership(g, tol)
    if not cm.in_G:
        raise NotInG("plant is not strictly proper, unstable and axis-pole-free")
    if not cm.pip:
        raise PipFailed("parity interlacing fails; the instability radius is infinite")
    if cm.subclass not in ("G_1dagger", "G_2dagger"):
        raise NotDagger(f"subclass {cm.subclass} does not have the multi-peak structure")
    return _dagger_report(g, cm, tol)


def second_order_closed_form(p: float, q: float, tol: Tolerances = DEFAULT) -> SecondOrderFacts:
    """Closed-form record for the family 1/(s^2 + p s + q), q nonzero.

    The squared-gain denominator D(Om) = Om^2 + (p^2 - 2q) Om + q^2 in
    Om = w^2 is stationary at Om_p = q - p^2/2; the sigma-gain change
    rates are -p/q at 0 and -2/p at a positive peak.  Exactness follows
    the case law: a negative q is exact precisely for p >= 0; a positive
    q with p < 0 is exact when 2q > p^2 and undecided when 0 < 2q <= p^2.
    """
    if q == 0.0:
        raise DomainViolation("q = 0 puts a pole at the origin")
    m0 = -p / q
    omega_sq = q - p * p / 2.0
    if q < 0.0:
        n = 1
        tag = "G_10"
        omega_p = 0.0
        m_peak = None
        exactness = "exact" if p >= 0.0 else "strict_gap"
        rho_p = -q
    elif p < 0.0:
        n = 2
        if omega_sq > 0.0:
            tag = "G_2sharp"
            omega_p = math.sqrt(omega_sq)
            m_peak = -2.0 / p
            exactness = "exact"
            rho_p = math.sqrt(q * q - omega_sq * omega_sq)
        else:
            tag = "G_20"
            omega_p = 0.0
            m_peak = None
            exactness = "undecided"
            rho_p = q
    else:
        # p >= 0 with q > 0: stable or axis poles, outside the class
        n = 0
        tag = "not_admissible"
        omega_p = math.sqrt(omega_sq) if omega_sq > 0.0 else 0.0
        m_peak = None if omega_sq <= 0.0 or p == 0.0 else -2.0 / p
        exactness = "not_applicable"
        rho_p = None
    return SecondOrderFacts(
        p=p, q=q, n=n, class_tag=tag, omega_p=omega_p, m0=m0,
        m_peak=m_peak, exactness=exactness, rho_p=rho_p,
    )


_EPS_MAGNITUDES = (1e-8, 1e-7, 1e-6, 1e-5, 1e-4, 1e-3, 1e-2)


def _crhp_cancellation(delta: RationalTF, g: RationalTF, tol: Tolerances) -> bool:
    """True when a closed-right-half-plane zero of delta collides with a
    pole of g, which the loop reduction would silently cancel."""
    for z, _ in delta.num_roots.roots:
        if z.real >= -tol.axis_band(z):
            for w, _ in g.den_roots.roots:
                if abs(z - w) <= tol.gcd_radius(w):
                    return True
    return False


def perturb_to_strict(
    g: RationalTF,
    delta0: "Stabilizer | RationalTF",
    delta1: RationalTF | None = None,
    tol: Tolerances = DEFAULT,
) -> Stabilizer:
    """Turn a marginally stabilizing perturbation into a strictly
    stabilizing one of nearly the same norm.

    Requires the closed loop of (g, delta0) to be single-mode marginally
    stable (a delta0 that already stabilizes strictly is returned as-is
    at epsilon = 0).  Candidate offsets delta0 + eps*delta1 are tried over
    magnitudes 1e-8 up to 1e-2, both signs, smallest first so the norm
    premium stays minimal; a candidate is accepted when it cancels no
    unstable pole of the plant and every closed-loop root is strictly in
    the left half-plane.  The default direction is the constant 1, with
    an automatic fallback to 1/(s+1) before giving up.
    """
    d0 = delta0.delta if isinstance(delta0, Stabilizer) else delta0
    if classify_poles(d0, tol).kind != "exponentially_stable":
        raise DomainViolation("delta0 must be a stable perturbation")
    L0 = rtf_arith(g, d0, "mul")
    cl0 = closed_loop_poles(L0, tol)
    v0 = classify_rootset(cl0, tol)
    if v0.kind == "exponentially_stable":
        return Stabilizer(
            delta=d0,
            kind="perturbed",
            hinf_norm=linf_norm_and_peaks(d0, tol).peak_gain,
            cl_poles=cl0,
            epsilon=0.0,
        )
    if v0.kind != "marginally_stable" or v0.single_mode is None:
        raise DomainViolation(
            f"closed loop of delta0 is {v0.kind}, not single-mode marginally stable"
        )
    directions: list[RationalTF] = []
    if delta1 is not None:
        if classify_poles(delta1, tol).kind != "exponentially_stable" or not delta1.proper:
            raise DomainViolation("delta1 must be stable and proper")
        directions.append(delta1)
    directions.append(RationalTF([1.0], [1.0], tol))
    directions.append(RationalTF([1.0], [1.0, 1.0], tol))

    for d1 in directions:
        for mag in _EPS_MAGNITUDES:
            for sign in (1.0, -1.0):
                eps = sign * mag
                de = rtf_arith(d0, rtf_arith(d1, eps, "scalar_mul"), "add")
                if _crhp_cancellation(de, g, tol):
                    continue
                L = rtf_arith(g, de, "mul")
                cl = closed_loop_poles(L, tol)
                if classify_rootset(cl, tol).kind == "exponentially_stable":
                    return Stabilizer(
                        delta=de,
                        kind="perturbed",
                        hinf_norm=linf_norm_and_peaks(de, tol).peak_gain,
                        cl_poles=cl,
                        epsilon=eps,
                    )
    raise SearchExhausted(
        "no epsilon offset in the search grid strictly stabilized the loop"
    )
