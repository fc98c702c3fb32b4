"""Frequency-domain analysis: gain, unwrapped phase, change rates, exact
L-infinity peaks and the two gain/phase integral relations.

Phase is the continuous branch anchored at ``omega = 0``, where a real
rational function takes a real value: the anchor is 0 for a positive value
and pi for a negative one.  Everything downstream (branch selection in the
stabilizer synthesis, the peak-condition margins) depends on this branch,
not on principal values.

Change rates come from the logarithmic derivative ``h = f'/f`` evaluated on
the axis: ``h(jw) = theta' - j A'``.  The two sigma-direction rates are tied
to these by the Cauchy-Riemann equations of ``log f`` and are filled in from
the same evaluation.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

from .config import DEFAULT, Tolerances
from .errors import (
    DomainViolation,
    NotMinimumPhase,
    NotNormalizedPeak,
    PoleEvaluation,
    PoleOnAxis,
    ZeroOnAxis,
)
from .poly import Polynomial, RationalTF, poly_roots

__all__ = [
    "FreqSample",
    "PeakSet",
    "gain_phase",
    "change_rates",
    "eval_offset",
    "linf_norm_and_peaks",
    "cr_integral_check",
]


@dataclass(frozen=True)
class FreqSample:
    """One frequency-response sample with all four change rates.

    gain_log is the natural-log gain, phase the unwrapped phase.  gain_cr
    and phase_cr are the frequency-direction rates A' and theta';
    sigma_gain_cr and sigma_phase_cr the real-axis-direction rates M' and
    phi'.  The pairs satisfy M' = theta' and phi' = -A' identically.
    """

    omega: float
    gain_log: float
    phase: float
    gain_cr: float
    phase_cr: float
    sigma_gain_cr: float
    sigma_phase_cr: float


@dataclass(frozen=True)
class PeakSet:
    """L-infinity norm and where it is attained.

    peaks lists nonnegative representative frequencies sorted ascending.
    A biproper function whose supremum is only approached at infinity
    reports the single representative ``math.inf``.  For an all-pass (or
    constant, or identically zero) input every frequency is a peak; then
    ``dense`` is set and the list is empty.
    """

    peak_gain: float
    peaks: tuple[float, ...]
    uniqueness: str  # unique_at_zero | unique_positive | multiple
    dense: bool = False


def _zero_threshold(f: RationalTF, tol: Tolerances) -> float:
    return tol.zero_mag * (1.0 + f.num.scale())


def _near_pole(f: RationalTF, s: complex, tol: Tolerances) -> bool:
    return any(abs(s - z) < tol.axis_band(z) for z, _ in f.den_roots.roots)


def _origin_anchor(f: RationalTF, tol: Tolerances) -> tuple[float, float]:
    """Phase anchor at omega -> 0+ and the multiplicity of a zero at 0.

    A zero of multiplicity k at the origin contributes k*pi/2 to the limit
    phase; the remaining factor is real at 0 and contributes 0 or pi.
    """
    coeffs = f.num.coeffs
    scale = f.num.scale()
    k = 0
    while k < len(coeffs) - 1 and abs(coeffs[k]) <= 1e-12 * scale:
        k += 1
    lead = coeffs[k] / f.den(0.0).real
    anchor = k * (math.pi / 2.0) + (0.0 if lead > 0 else math.pi)
    return anchor, k


def _phase_path(f: RationalTF, target: float, tol: Tolerances) -> float:
    """Continuously unwrapped phase at ``target``, continued from omega=0."""
    if f.is_zero:
        raise ZeroOnAxis("phase of the zero function is undefined")
    zero_thresh = _zero_threshold(f, tol)
    anchor, k = _origin_anchor(f, tol)
    if k > 0:
        # start just off the origin zero; near it arg f ~ anchor
        start = 1e-7 * (1.0 + abs(target))
        if abs(target) <= start:
            raise ZeroOnAxis("requested frequency sits on a zero at the origin")
        start = math.copysign(start, target if target != 0 else 1.0)
        v = f.eval_unchecked(1j * start)
        phase = anchor + _principal(cmath.phase(v) - anchor)
        w = start
    else:
        v = complex(f.eval_unchecked(0.0))
        phase = anchor
        w = 0.0
    if target == w:
        return phase
    direction = 1.0 if target > w else -1.0
    h = max(abs(target - w) / 8.0, 1e-3 * (1.0 + abs(target)))
    floor = 1e-13 * (1.0 + abs(target))
    while (target - w) * direction > 0:
        h = min(h, abs(target - w))
        w2 = w + direction * h
        v2 = f.eval_unchecked(1j * w2)
        if abs(v2) < zero_thresh:
            raise ZeroOnAxis(f"|f(j{w2:.6g})| vanishes; no continuous phase branch")
        d = _principal(cmath.phase(v2) - cmath.phase(v))
        if abs(d) > math.pi / 2:
            h *= 0.5
            if h < floor:
                if _near_pole(f, 1j * w2, tol):
                    raise PoleEvaluation(f"phase continuation hit a pole near ω={w2:.6g}")
                raise ZeroOnAxis(f"phase continuation stalled near ω={w2:.6g}")
            continue
        phase += d
        w, v = w2, v2
        if abs(d) < math.pi / 8:
            h *= 1.7
    return phase


def _principal(angle: float) -> float:
    """Wrap into (-pi, pi]."""
    a = math.fmod(angle + math.pi, 2.0 * math.pi)
    if a <= 0.0:
        a += 2.0 * math.pi
    return a - math.pi


def gain_phase(f: RationalTF, omega: float, tol: Tolerances = DEFAULT) -> tuple[float, float]:
    """Log gain and continuously unwrapped phase at ``omega``."""
    v = f.eval_unchecked(1j * omega)
    if abs(v) < _zero_threshold(f, tol):
        raise ZeroOnAxis(f"|f(j{omega:.6g})| below the zero threshold")
    if not math.isfinite(abs(v)):
        raise PoleEvaluation(f"f(j{omega:.6g}) is not finite")
    return math.log(abs(v)), _phase_path(f, omega, tol)


def _axis_rates(f: RationalTF, omega: float, tol: Tolerances) -> tuple[float, float, float]:
    """(gain_log, gain_cr, phase_cr) at ``omega`` without phase tracking."""
    s = 1j * omega
    nv = f.num(s)
    dv = f.den(s)
    if abs(dv) < 1e-300:
        raise PoleEvaluation(f"denominator vanishes at ω={omega:.6g}")
    v = nv / dv
    if abs(v) < _zero_threshold(f, tol):
        raise ZeroOnAxis(f"|f(j{omega:.6g})| below the zero threshold")
    h = f.num.derivative()(s) / nv - f.den.derivative()(s) / dv
    # h(jw) = theta'(w) - j A'(w)
    return math.log(abs(v)), -h.imag, h.real


def change_rates(f: RationalTF, omega: float, tol: Tolerances = DEFAULT) -> FreqSample:
    """All four directional change rates plus gain and unwrapped phase."""
    gain_log, gain_cr, phase_cr = _axis_rates(f, omega, tol)
    phase = _phase_path(f, omega, tol)
    return FreqSample(
        omega=omega,
        gain_log=gain_log,
        phase=phase,
        gain_cr=gain_cr,
        phase_cr=phase_cr,
        sigma_gain_cr=phase_cr,
        sigma_phase_cr=-gain_cr,
    )


def eval_offset(f: RationalTF, sigma: float, omega: float, tol: Tolerances = DEFAULT) -> complex:
    """f evaluated at the shifted point sigma + j*omega."""
    return f(complex(sigma, omega), tol)


def _even_odd_mag_sq(p: Polynomial) -> Polynomial:
    """|p(jw)|^2 as a polynomial in Omega = w^2."""
    even = [c * ((-1.0) ** m) for m, c in enumerate(p.coeffs[0::2])]
    odd = [c * ((-1.0) ** m) for m, c in enumerate(p.coeffs[1::2])]
    e = Polynomial(even if even else [0.0])
    o = Polynomial(odd if odd else [0.0])
    return e * e + Polynomial([0.0, 1.0]) * (o * o)


def linf_norm_and_peaks(f: RationalTF, tol: Tolerances = DEFAULT) -> PeakSet:
    """L-infinity norm with exact peak frequencies.

    Writes |f(jw)|^2 = N(Omega)/D(Omega) in Omega = w^2 and takes the
    nonnegative real roots of the derivative numerator N'D - ND' as
    stationary candidates, together with Omega = 0 and the limit at
    infinity.  Peaks are candidates whose gain is within ``tol.peak_rel``
    (relative) of the maximum.
    """
    for z, _ in f.den_roots.roots:
        if abs(z.real) <= tol.axis_band(z):
            raise PoleOnAxis(f"pole at {z} sits on the imaginary axis")
    if f.is_zero:
        return PeakSet(0.0, (), "multiple", dense=True)
    if not f.proper:
        return PeakSet(math.inf, (math.inf,), "multiple")
    N = _even_odd_mag_sq(f.num)
    D = _even_odd_mag_sq(f.den)
    # proportional N and D means constant gain: all-pass or constant
    if N.degree == D.degree:
        ratio = N.leading / D.leading
        diff = N - D * ratio
        if diff.scale() <= 1e-9 * max(N.scale(), 1e-300):
            return PeakSet(math.sqrt(ratio), (), "multiple", dense=True)
    W = N.derivative() * D - N * D.derivative()
    candidates = [0.0]
    if not W.is_zero and W.degree >= 1:
        for z, _ in poly_roots(W, tol).roots:
            if abs(z.imag) <= tol.cluster_radius(z) and z.real > -tol.cluster_radius(z):
                candidates.append(max(z.real, 0.0))
    gain_at = lambda Om: math.sqrt(max(N(Om).real, 0.0) / D(Om).real)
    gains = [gain_at(Om) for Om in candidates]
    limit = abs(f.num.leading) if f.num.degree == f.den.degree else 0.0
    peak_gain = max(max(gains), limit)
    if peak_gain == 0.0:
        return PeakSet(0.0, (), "multiple", dense=True)
    keep: list[float] = []
    for Om, gv in zip(candidates, gains):
        if gv >= peak_gain * (1.0 - tol.peak_rel):
            w = math.sqrt(Om)
            if not any(abs(w - u) <= 1e-9 * (1.0 + u) for u in keep):
                keep.append(w)
    keep.sort()
    if not keep:
        # supremum only approached at infinity
        return PeakSet(peak_gain, (math.inf,), "multiple")
    if len(keep) == 1:
        flag = "unique_at_zero" if keep[0] <= 1e-9 else "unique_positive"
    else:
        flag = "multiple"
    return PeakSet(peak_gain, tuple(keep), flag)


def _quad(fn, a, b, **kw):
    val, _ = quad(fn, a, b, limit=300, epsabs=1e-11, epsrel=1e-11, **kw)
    return val


def cr_integral_check(
    f: RationalTF,
    omega_p: float,
    tol: Tolerances = DEFAULT,
    require_rhs2: bool = False,
) -> tuple[float, float, float | None]:
    """Phase change rate against its two gain-side integral representations.

    lhs is the analytic theta'(omega_p).  rhs1 integrates the gain change
    rate against the principal-value kernel w/(w^2 - omega_p^2); rhs2
    integrates the log gain itself against (w^2 + omega_p^2)/(w^2 -
    omega_p^2)^2 and is defined only when the gain peaks at omega_p with
    value one.  When that normalization fails, rhs2 is None, or
    NotNormalizedPeak is raised if ``require_rhs2`` is set.

    The principal value uses a symmetric excision window of half-width
    ``tol.pv_excision * (1 + omega_p)``; the window's own contribution is
    restored from the odd-part expansion of the integrand (rhs1) or from a
    local quadratic model of the log gain (rhs2).
    """
    if omega_p < 0:
        raise DomainViolation("omega_p must be nonnegative")
    band = lambda z: tol.axis_band(z)
    for z, _ in f.den_roots.roots:
        if z.real >= -band(z):
            raise NotMinimumPhase(f"pole at {z} is not in the open left half-plane")
    for z, _ in f.num_roots.roots:
        if z.real >= -band(z):
            raise NotMinimumPhase(f"zero at {z} is not in the open left half-plane")
    if f.is_zero:
        raise NotMinimumPhase("the zero function has no phase")

    A = lambda w: _axis_rates(f, w, tol)[0]
    Acr = lambda w: _axis_rates(f, w, tol)[1]
    lhs = _axis_rates(f, omega_p, tol)[2]

    two_over_pi = 2.0 / math.pi
    delta = tol.pv_excision * (1.0 + omega_p)

    if omega_p > delta:
        integrand1 = lambda w: w * Acr(w) / (w * w - omega_p * omega_p)
        phi = lambda w: w * Acr(w) / (w + omega_p)
        h = 1e-5 * (1.0 + omega_p)
        window1 = 2.0 * delta * (phi(omega_p + h) - phi(omega_p - h)) / (2.0 * h)
        rhs1 = two_over_pi * (
            _quad(integrand1, 0.0, omega_p - delta)
            + window1
            + _quad(integrand1, omega_p + delta, np.inf)
        )
    elif omega_p == 0.0:
        floor = 1e-8

        def integrand1(w):
            # A' is odd, so A'(w)/w has a finite limit at w = 0
            return Acr(max(w, floor)) / max(w, floor)

        rhs1 = two_over_pi * (_quad(integrand1, 0.0, 1.0) + _quad(integrand1, 1.0, np.inf))
    else:
        raise DomainViolation(
            f"peak frequency {omega_p:.3g} is inside the excision width {delta:.3g}"
        )

    a_peak = A(omega_p)
    stationary = abs(Acr(omega_p)) <= 1e-5 * (1.0 + omega_p) or omega_p == 0.0
    normalized = abs(a_peak) <= 1e-7 and stationary
    if not normalized:
        if require_rhs2:
            raise NotNormalizedPeak(
                f"|f(j omega_p)| = {math.exp(a_peak):.6g} is not a unit peak"
            )
        return lhs, rhs1, None

    hfd = 1e-4 * (1.0 + omega_p)
    a2 = (A(omega_p + hfd) - 2.0 * a_peak + A(omega_p - hfd)) / (hfd * hfd)
    patch = 1e-5 * (1.0 + omega_p)

    def integrand2(w):
        t = w - omega_p
        if abs(t) < patch:
            body = 0.5 * a2
        else:
            body = A(w) / (t * t)
        return body * (w * w + omega_p * omega_p) / ((w + omega_p) ** 2)

    if omega_p > delta:
        rhs2 = two_over_pi * (
            _quad(integrand2, 0.0, omega_p - delta)
            + _quad(integrand2, omega_p - delta, omega_p + delta)
            + _quad(integrand2, omega_p + delta, np.inf)
        )
    else:
        rhs2 = two_over_pi * (_quad(integrand2, 0.0, 1.0) + _quad(integrand2, 1.0, np.inf))
    return lhs, rhs1, rhs2
