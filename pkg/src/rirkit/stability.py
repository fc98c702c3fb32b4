"""Pole-configuration classification, parity interlacing, admissible-class
membership, the shifted Nyquist crossing counter and the marginal-stability
certificate.

The crossing counter walks the curve ``L(epsilon + j omega)`` and counts
transverse crossings of the real interval (1, +inf): ``nu_plus`` upward
(negative to positive imaginary part as omega increases), ``nu_minus``
downward, ``nu_o`` their difference.  A crossing at omega = 0 counts once,
one at omega > 0 twice, because the conjugate mirror at -omega crosses in
the same direction.

The certificate for single-mode marginal closed loops checks the curve
conditions (axis solutions of L = 1 exactly at +/- j omega_c, nonvanishing
L' there) and then matches ``nu_o(0)`` and the sign of the phase change
rate against the two admissible patterns.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .config import DEFAULT, Tolerances
from .errors import (
    AnalysisError,
    DomainViolation,
    HypothesisViolated,
    PoleEvaluation,
    PoleOnAxis,
    TangentialCrossing,
)
from .freq import PeakSet, _axis_rates, linf_norm_and_peaks
from .poly import RationalTF, RootSet, closed_loop_poles

__all__ = [
    "StabilityVerdict",
    "NyquistCrossings",
    "ClassMembership",
    "Certificate",
    "classify_poles",
    "classify_rootset",
    "pip_check",
    "class_membership",
    "nyquist_crossings",
    "default_epsilon",
    "marginal_stability_certificate",
    "clhp_necessity_check",
]


@dataclass(frozen=True)
class StabilityVerdict:
    """Half-plane classification of a pole set.

    kind is one of exponentially_stable, exponentially_unstable,
    marginally_stable, polynomially_unstable.  single_mode carries the
    marginal frequency when the axis part is exactly one simple pole at 0
    or one simple conjugate pair.  axis_poles lists (omega, multiplicity)
    with one entry per conjugate pair.
    """

    kind: str
    single_mode: float | None
    axis_poles: tuple[tuple[float, int], ...]
    n_orhp: int


@dataclass(frozen=True)
class NyquistCrossings:
    epsilon: float
    nu_plus: int
    nu_minus: int
    nu_o: int
    crossing_freqs: tuple[float, ...]
    directions: tuple[int, ...]


@dataclass(frozen=True)
class ClassMembership:
    """Admissibility and subclass of a plant.

    in_G requires strictly proper, at least one unstable pole and none on
    the imaginary axis.  subclass refines by peak structure: G_n0 (unique
    peak at zero), G_nsharp (unique positive peak), G_1dagger / G_2dagger
    (multiple equal peaks, with and without a zero-frequency one), or
    other.  peaks is None when a pole on the axis makes the norm infinite.
    """

    in_G: bool
    n: int
    pip: bool
    subclass: str
    peaks: PeakSet | None


@dataclass(frozen=True)
class Certificate:
    """Outcome of the marginal-stability certificate.

    status is certified_iia, certified_iib or refuted; reason explains a
    refutation.  nu_o, phase_cr and n record the evidence used.
    """

    status: str
    reason: str | None
    nu_o: int | None
    phase_cr: float
    n: int

    @property
    def certified(self) -> bool:
        return self.status in ("certified_iia", "certified_iib")


def classify_rootset(rs: RootSet, tol: Tolerances = DEFAULT) -> StabilityVerdict:
    """Classify an explicit root set (e.g. closed-loop characteristic roots)."""
    n_orhp = 0
    axis: list[tuple[float, int]] = []
    for z, m in rs.roots:
        band = tol.axis_band(z)
        if z.real > band:
            n_orhp += m
        elif abs(z.real) <= band:
            if z.imag >= -band:
                w = z.imag if z.imag > band else 0.0
                axis.append((w, m))
    axis.sort()
    if n_orhp >= 1:
        kind = "exponentially_unstable"
    elif not axis:
        kind = "exponentially_stable"
    elif all(m == 1 for _, m in axis):
        kind = "marginally_stable"
    else:
        kind = "polynomially_unstable"
    single = None
    if kind == "marginally_stable" and len(axis) == 1:
        single = axis[0][0]
    return StabilityVerdict(kind=kind, single_mode=single, axis_poles=tuple(axis), n_orhp=n_orhp)


def classify_poles(f: RationalTF, tol: Tolerances = DEFAULT) -> StabilityVerdict:
    """Classify the poles of ``f`` per the four-way stability taxonomy."""
    return classify_rootset(f.den_roots, tol)


def pip_check(g: RationalTF, tol: Tolerances = DEFAULT) -> bool:
    """Parity interlacing: between consecutive real closed-right-half-plane
    zeros (infinity appended for a strictly proper plant), the number of
    real nonnegative poles, counted with multiplicity, must be even."""
    zeros: list[float] = []
    for z, _ in g.num_roots.roots:
        band = tol.axis_band(z)
        if abs(z.imag) <= band and z.real >= -band:
            zeros.append(max(z.real, 0.0))
    zeros.sort()
    distinct: list[float] = []
    for z in zeros:
        if not distinct or z - distinct[-1] > 1e-9 * (1.0 + z):
            distinct.append(z)
    if g.strictly_proper:
        distinct.append(math.inf)
    poles: list[float] = []
    for z, m in g.den_roots.roots:
        band = tol.axis_band(z)
        if abs(z.imag) <= band and z.real >= -band:
            poles.extend([max(z.real, 0.0)] * m)
    for a, b in zip(distinct, distinct[1:]):
        lo = a + tol.gcd_radius(a)
        hi = b - (0.0 if math.isinf(b) else tol.gcd_radius(b))
        count = sum(1 for p in poles if lo < p < hi)
        if count % 2 == 1:
            return False
    return True


def class_membership(g: RationalTF, tol: Tolerances = DEFAULT) -> ClassMembership:
    """Admissibility plus peak-structure subclass of a plant."""
    verdict = classify_poles(g, tol)
    has_axis = len(verdict.axis_poles) > 0
    in_g = g.strictly_proper and verdict.n_orhp >= 1 and not has_axis and not g.is_zero
    pip = pip_check(g, tol) if g.strictly_proper else False
    peaks: PeakSet | None
    try:
        peaks = linf_norm_and_peaks(g, tol)
    except PoleOnAxis:
        peaks = None
    subclass = "other"
    if in_g and pip and peaks is not None and not peaks.dense:
        finite = [w for w in peaks.peaks if math.isfinite(w)]
        if len(finite) == len(peaks.peaks) and finite:
            n = verdict.n_orhp
            if len(finite) == 1:
                subclass = "G_n0" if peaks.uniqueness == "unique_at_zero" else "G_nsharp"
            elif n == 1 and finite[0] <= 1e-9:
                subclass = "G_1dagger"
            elif n == 2 and finite[0] > 1e-9:
                subclass = "G_2dagger"
    return ClassMembership(
        in_G=in_g, n=verdict.n_orhp, pip=pip, subclass=subclass, peaks=peaks
    )


# --- Nyquist crossing counter ---------------------------------------------


def _grid(L: RationalTF, epsilon: float) -> np.ndarray:
    roots = [z for z, _ in L.num_roots.roots] + [z for z, _ in L.den_roots.roots]
    rmax = max([abs(z) for z in roots], default=1.0)
    W = 10.0 * (1.0 + rmax)
    # extend until the tail magnitude is safely below the critical circle
    for _ in range(40):
        tail = np.abs(_eval_line(L, epsilon, np.linspace(W, 2.0 * W, 17)))
        if tail.max() < 0.8:
            break
        W *= 2.0
    nodes = [np.linspace(0.0, W, 4097)]
    for z in roots:
        w0 = abs(z.imag)
        spread = max(abs(z.real - epsilon), 1e-3 * (1.0 + w0))
        local = w0 + spread * np.linspace(-12.0, 12.0, 97)
        nodes.append(np.clip(local, 0.0, W))
    grid = np.unique(np.concatenate(nodes))
    return grid


def _eval_line(L: RationalTF, epsilon: float, omegas: np.ndarray) -> np.ndarray:
    s = epsilon + 1j * omegas
    num = np.polyval(list(reversed(L.num.coeffs)), s)
    den = np.polyval(list(reversed(L.den.coeffs)), s)
    return num / den


def _refine_dips(L: RationalTF, epsilon: float, grid: np.ndarray, vals: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Subdivide intervals where Im dips toward zero without changing sign,
    to catch close crossing pairs the base grid straddles."""
    im = vals.imag
    mag = np.abs(vals)
    extra = []
    for i in range(1, len(grid) - 1):
        near = abs(im[i]) < 0.05 * (1.0 + mag[i])
        vee = abs(im[i]) <= abs(im[i - 1]) and abs(im[i]) <= abs(im[i + 1])
        if near and vee and im[i - 1] * im[i] > 0 and im[i] * im[i + 1] > 0:
            extra.append(np.linspace(grid[i - 1], grid[i + 1], 65))
    if not extra:
        return grid, vals
    grid2 = np.unique(np.concatenate([grid] + extra))
    return grid2, _eval_line(L, epsilon, grid2)


def _bisect_im_zero(L: RationalTF, epsilon: float, lo: float, hi: float) -> float:
    flo = L.eval_unchecked(complex(epsilon, lo)).imag
    for _ in range(200):
        if hi - lo <= 1e-10 * (1.0 + hi):
            break
        mid = 0.5 * (lo + hi)
        fm = L.eval_unchecked(complex(epsilon, mid)).imag
        if fm == 0.0:
            return mid
        if (flo < 0) != (fm < 0):
            hi = mid
        else:
            lo, flo = mid, fm
    return 0.5 * (lo + hi)


def nyquist_crossings(
    L: RationalTF, epsilon: float, tol: Tolerances = DEFAULT
) -> NyquistCrossings:
    """Transverse crossings of the shifted Nyquist curve over (1, +inf).

    Walks ``L(epsilon + j omega)`` on an adaptive grid, brackets the sign
    changes of the imaginary part, bisects each bracket and keeps crossings
    whose real part exceeds one.  Crossing direction is the sign of
    ``Re L'`` there, which equals d/d omega of the imaginary part.
    """
    if epsilon < 0:
        raise DomainViolation("epsilon must be nonnegative")
    if not L.strictly_proper:
        raise DomainViolation("crossing counter requires a strictly proper loop")
    if L.is_zero:
        return NyquistCrossings(epsilon, 0, 0, 0, (), ())
    for z, _ in L.den_roots.roots:
        if abs(z.real) <= tol.axis_band(z):
            if epsilon <= tol.axis_band(z):
                raise PoleOnAxis(f"pole at {z} sits on the contour")
            raise DomainViolation(
                f"pole at {z} lies within {epsilon} of the imaginary axis"
            )
        if abs(z.real - epsilon) <= tol.axis_band(z):
            raise PoleEvaluation(f"shifted contour passes through the pole at {z}")
        if epsilon > 0.0 and abs(z.real) < epsilon:
            raise DomainViolation(
                f"pole at {z} lies within {epsilon} of the imaginary axis"
            )

    dL = L.derivative()
    grid = _grid(L, epsilon)
    vals = _eval_line(L, epsilon, grid)
    grid, vals = _refine_dips(L, epsilon, grid, vals)
    im = vals.imag

    candidates: list[float] = [0.0]
    for i in range(len(grid) - 1):
        a, b = im[i], im[i + 1]
        if a == 0.0 and grid[i] > 0.0:
            # node falls exactly on a contact; transversality is decided by
            # the neighbors, a touch without sign change is excluded
            if i > 0 and (im[i - 1] < 0) != (b < 0) and b != 0.0:
                candidates.append(grid[i])
            continue
        if (a < 0) != (b < 0) and b != 0.0 and a != 0.0:
            candidates.append(_bisect_im_zero(L, epsilon, grid[i], grid[i + 1]))

    nu_plus = nu_minus = 0
    freqs: list[float] = []
    dirs: list[int] = []
    for w in candidates:
        v = L.eval_unchecked(complex(epsilon, w))
        if v.real <= 1.0 + 1e-9 * (1.0 + abs(v.real)):
            continue
        d = dL.eval_unchecked(complex(epsilon, w)).real
        speed = abs(dL.eval_unchecked(complex(epsilon, w)))
        if abs(d) < tol.trans * (1.0 + speed):
            raise TangentialCrossing(
                f"contact at ω={w:.6g} is tangential at this epsilon"
            )
        weight = 1 if w == 0.0 else 2
        if d > 0:
            nu_plus += weight
        else:
            nu_minus += weight
        freqs.append(w)
        dirs.append(1 if d > 0 else -1)
    order = np.argsort(freqs)
    return NyquistCrossings(
        epsilon=epsilon,
        nu_plus=nu_plus,
        nu_minus=nu_minus,
        nu_o=nu_plus - nu_minus,
        crossing_freqs=tuple(float(freqs[i]) for i in order),
        directions=tuple(int(dirs[i]) for i in order),
    )


def default_epsilon(L: RationalTF, tol: Tolerances = DEFAULT) -> float:
    """Contour shift for the crossing counter: half the gap between the
    closed-loop axis roots and the nearest other root's real-part distance,
    capped at 1e-3."""
    rs = closed_loop_poles(L, tol)
    axis = [z for z, _ in rs.roots if abs(z.real) <= tol.axis_band(z)]
    others = [z for z, _ in rs.roots if abs(z.real) > tol.axis_band(z)]
    if not axis or not others:
        return 1e-3
    gap = min(abs(z.real) for z in others)
    return min(1e-3, 0.5 * gap)


def marginal_stability_certificate(
    L: RationalTF,
    omega_c: float,
    tol: Tolerances = DEFAULT,
    stationary_tol: float | None = None,
) -> Certificate:
    """Certify that the positive feedback loop around ``L`` is single-mode
    marginally stable at ``omega_c``, from curve data alone.

    Requires the gain change rate of L to vanish at omega_c (a stationary
    gain point; ``stationary_tol`` overrides the default bound).  Checks
    that the axis solutions of L = 1 are exactly the simple pair at
    omega_c with L' nonzero, then certifies via the crossing count:
    nu_o(0) = n-1 (omega_c = 0) or n-2 (omega_c > 0) with positive phase
    change rate, or nu_o(0) = n with negative rate.

    A certified outcome is cross-validated against direct classification
    of the closed-loop roots; disagreement raises, it is never returned.
    """
    if omega_c < 0:
        raise DomainViolation("omega_c must be nonnegative")
    st = tol.stationary if stationary_tol is None else stationary_tol
    _, gain_cr, phase_cr = _axis_rates(L, omega_c, tol)
    if abs(gain_cr) > st:
        raise HypothesisViolated(
            f"|A'_L({omega_c:.6g})| = {abs(gain_cr):.3e} exceeds {st:.1e}; "
            "the gain is not stationary there"
        )
    n = classify_poles(L, tol).n_orhp
    at_zero = omega_c <= 1e-9

    cl = closed_loop_poles(L, tol)
    match = 1e-6 * (1.0 + omega_c)
    axis_ok = True
    seen = 0
    for z, m in cl.roots:
        if abs(z.real) <= tol.axis_band(z):
            if m != 1 or abs(abs(z.imag) - omega_c) > match:
                axis_ok = False
            else:
                seen += 1
    expected = 1 if at_zero else 2
    if not axis_ok or seen != expected:
        return Certificate(
            status="refuted",
            reason="axis solutions of L = 1 are not exactly the simple pair at omega_c",
            nu_o=None,
            phase_cr=phase_cr,
            n=n,
        )
    dl = L.derivative().eval_unchecked(1j * omega_c)
    if abs(dl) <= tol.trans * (1.0 + L.num.scale()):
        return Certificate("refuted", "L' vanishes at omega_c", None, phase_cr, n)
    if abs(phase_cr) <= tol.cond_band(0.0):
        return Certificate(
            "refuted",
            "phase change rate vanishes at omega_c (double axis pole)",
            None,
            phase_cr,
            n,
        )

    nyq = nyquist_crossings(L, 0.0, tol)
    target_a = n - 1 if at_zero else n - 2
    if nyq.nu_o == target_a and phase_cr > 0:
        status = "certified_iia"
        reason = None
    elif nyq.nu_o == n and phase_cr < 0:
        status = "certified_iib"
        reason = None
    else:
        status = "refuted"
        reason = (
            f"crossing count nu_o(0) = {nyq.nu_o} matches neither "
            f"{target_a} (with rising phase) nor {n} (with falling phase)"
        )
    cert = Certificate(status, reason, nyq.nu_o, phase_cr, n)
    if cert.certified:
        verdict = classify_rootset(cl, tol)
        mode_ok = (
            verdict.kind == "marginally_stable"
            and verdict.single_mode is not None
            and abs(verdict.single_mode - omega_c) <= match
        )
        if not mode_ok:
            raise AnalysisError(
                f"curve certificate ({cert.status}) disagrees with closed-loop "
                f"root classification ({verdict.kind})"
            )
    return cert


def clhp_necessity_check(
    L: RationalTF, omega_c: float, tol: Tolerances = DEFAULT
) -> bool:
    """Whether the phase change rate at a unit peak is nonnegative.

    Hypothesis: |L(j omega_c)| = 1 attains the L-infinity norm (within the
    relative peak tolerance, not attained densely).  When the closed loop
    has all poles in the closed left half-plane this must return True, so
    a False provides a necessity refutation.
    """
    pk = linf_norm_and_peaks(L, tol)
    if pk.dense:
        raise HypothesisViolated("all-pass loop: the peak is attained everywhere")
    v = abs(L.eval_unchecked(1j * omega_c))
    if abs(v - 1.0) > tol.peak_rel or abs(pk.peak_gain - 1.0) > tol.peak_rel:
        raise HypothesisViolated(
            f"|L(j omega_c)| = {v:.8g} and ||L|| = {pk.peak_gain:.8g} do not both equal 1"
        )
    _, _, phase_cr = _axis_rates(L, omega_c, tol)
    return phase_cr >= -1e-9
