"""Numeric tolerance policy.

All comparisons in the package go through a single ``Tolerances`` record so
that every knob is visible, overridable and reported in CLI output.  Scaled
tolerances follow the pattern ``tol * (1 + scale)`` where ``scale`` is the
magnitude of the quantity being tested; helpers below implement the common
cases so call sites stay short.
"""

from __future__ import annotations

from dataclasses import dataclass, replace


@dataclass(frozen=True)
class Tolerances:
    """Tolerance knobs, each an absolute number unless noted.

    root:        residual bound for accepting a polished polynomial root,
                 scaled by the largest coefficient magnitude.
    cluster:     radius for merging nearby roots into one multiple root,
                 scaled by (1 + |root|).
    axis:        half-width of the imaginary-axis band used for stability
                 classification, scaled by (1 + |root|).
    gcd:         root-matching radius for coprime cancellation, scaled by
                 (1 + |root|).
    peak_rel:    relative slack for treating two gains as the same peak
                 value.  Distinct true peaks of a plant given to six digits
                 agree only to about 2e-6, so this sits at 1e-5 rather than
                 at root accuracy.
    cond:        margin below which a certified inequality is declared
                 borderline, scaled by (1 + |RHS|).
    trans:       transversality floor for Nyquist crossings, scaled by the
                 local curve speed.
    stationary:  bound on the gain change rate |A'(omega_c)| under which a
                 frequency counts as a stationary point of the gain.
    zero_mag:    absolute |f(j omega)| below which the value is treated as a
                 zero on the axis.
    sin_zero:    |sin theta| below which the synthesized stabilizer
                 degenerates to a constant.
    hinf_match:  relative slack for the norm identity of a synthesized
                 stabilizer.
    pv_excision: half-width of the principal-value excision window, scaled
                 by (1 + omega_p).
    """

    root: float = 1e-10
    cluster: float = 1e-7
    axis: float = 1e-8
    gcd: float = 1e-7
    peak_rel: float = 1e-5
    cond: float = 1e-7
    trans: float = 1e-9
    stationary: float = 1e-7
    zero_mag: float = 1e-12
    sin_zero: float = 1e-10
    hinf_match: float = 1e-10
    pv_excision: float = 1e-3

    def axis_band(self, z: complex) -> float:
        """Half-plane banding radius at a root ``z``."""
        return self.axis * (1.0 + abs(z))

    def cluster_radius(self, z: complex) -> float:
        return self.cluster * (1.0 + abs(z))

    def gcd_radius(self, z: complex) -> float:
        return self.gcd * (1.0 + abs(z))

    def cond_band(self, rhs: float) -> float:
        return self.cond * (1.0 + abs(rhs))

    def with_overrides(self, **kwargs) -> "Tolerances":
        """Copy with the given fields replaced; unknown names raise."""
        return replace(self, **kwargs)


DEFAULT = Tolerances()
