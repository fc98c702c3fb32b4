"""Real polynomials and rational transfer functions.

Coefficients are stored in ascending order of degree, so ``[1, 2, 3]``
means ``1 + 2 s + 3 s^2``.  Root finding runs the companion-matrix
eigensolver once and then applies a single Newton polish to each root;
multiple roots are recovered by clustering, and complex roots are forced
into exact conjugate pairs so downstream real arithmetic stays real.

``RationalTF`` keeps its denominator monic and cancels common roots at
construction time, so poles and zeros of every derived object are the
poles and zeros of the reduced fraction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .config import DEFAULT, Tolerances
from .errors import (
    DegenerateLoop,
    MalformedInput,
    NonConvergence,
    PoleEvaluation,
)

__all__ = [
    "Polynomial",
    "RootSet",
    "RationalTF",
    "poly_roots",
    "rtf_arith",
    "rtf_eval",
    "rtf_derivative",
    "closed_loop_poles",
]


def _trim(coeffs: Sequence[float]) -> tuple[float, ...]:
    c = [float(x) for x in coeffs]
    while len(c) > 1 and c[-1] == 0.0:
        c.pop()
    if not c:
        c = [0.0]
    return tuple(c)


@dataclass(frozen=True)
class Polynomial:
    """Immutable real polynomial with ascending coefficients."""

    coeffs: tuple[float, ...]

    def __init__(self, coeffs: Iterable[float]):
        object.__setattr__(self, "coeffs", _trim(list(coeffs)))

    @property
    def degree(self) -> int:
        # the zero polynomial reports degree 0 here; use is_zero to tell apart
        return len(self.coeffs) - 1

    @property
    def is_zero(self) -> bool:
        return self.coeffs == (0.0,)

    @property
    def leading(self) -> float:
        return self.coeffs[-1]

    def __call__(self, s: complex) -> complex:
        acc = 0.0 + 0.0j
        for c in reversed(self.coeffs):
            acc = acc * s + c
        return acc

    def derivative(self) -> "Polynomial":
        if len(self.coeffs) == 1:
            return Polynomial([0.0])
        return Polynomial([k * c for k, c in enumerate(self.coeffs)][1:])

    def __mul__(self, other: "Polynomial | float") -> "Polynomial":
        if isinstance(other, Polynomial):
            if self.is_zero or other.is_zero:
                return Polynomial([0.0])
            return Polynomial(np.convolve(self.coeffs, other.coeffs))
        return Polynomial([c * float(other) for c in self.coeffs])

    __rmul__ = __mul__

    def __add__(self, other: "Polynomial") -> "Polynomial":
        a, b = list(self.coeffs), list(other.coeffs)
        if len(a) < len(b):
            a, b = b, a
        return Polynomial([x + (b[i] if i < len(b) else 0.0) for i, x in enumerate(a)])

    def __sub__(self, other: "Polynomial") -> "Polynomial":
        return self + (other * -1.0)

    def __neg__(self) -> "Polynomial":
        return self * -1.0

    def monic(self) -> "Polynomial":
        if self.is_zero:
            return self
        return self * (1.0 / self.leading)

    def scale(self) -> float:
        """Largest coefficient magnitude; residual tolerances scale by it."""
        return max(abs(c) for c in self.coeffs)

    @staticmethod
    def from_roots(roots: Sequence[complex], leading: float = 1.0) -> "Polynomial":
        """Real polynomial ``leading * prod (s - r)``.

        Roots must come in conjugate pairs (within roundoff); any residual
        imaginary part in the product is discarded.
        """
        acc = np.array([1.0 + 0.0j])
        for r in roots:
            acc = np.convolve(acc, np.array([-r, 1.0 + 0.0j]))
        return Polynomial([leading * z.real for z in acc])


@dataclass(frozen=True)
class RootSet:
    """Roots with multiplicities plus the worst polish residual.

    ``roots`` holds ``(value, multiplicity)`` pairs sorted by real part then
    imaginary part.  Conjugate partners are stored explicitly.
    """

    roots: tuple[tuple[complex, int], ...]
    residual: float

    def values(self) -> list[complex]:
        """All roots repeated according to multiplicity."""
        out: list[complex] = []
        for z, m in self.roots:
            out.extend([z] * m)
        return out

    def __len__(self) -> int:
        return sum(m for _, m in self.roots)

    def max_multiplicity(self) -> int:
        return max((m for _, m in self.roots), default=0)


def _newton_polish(coeffs_desc: np.ndarray, dcoeffs_desc: np.ndarray, z: complex) -> complex:
    p = np.polyval(coeffs_desc, z)
    dp = np.polyval(dcoeffs_desc, z)
    if dp == 0:
        return z
    step = p / dp
    # a Newton step longer than the root magnitude signals a bad derivative
    if abs(step) > 0.5 * (1.0 + abs(z)):
        return z
    nxt = z - step
    # near a multiple root the derivative is noise; keep only improving steps
    if abs(np.polyval(coeffs_desc, nxt)) > abs(p):
        return z
    return nxt


def _cluster(roots: np.ndarray, tol: Tolerances) -> list[tuple[complex, int]]:
    order = np.lexsort((roots.imag, roots.real))
    pending = [complex(roots[i]) for i in order]
    groups: list[list[complex]] = []
    for z in pending:
        placed = False
        for g in groups:
            center = sum(g) / len(g)
            if abs(z - center) <= tol.cluster_radius(center):
                g.append(z)
                placed = True
                break
        if not placed:
            groups.append([z])
    return [(sum(g) / len(g), len(g)) for g in groups]


def _pair_conjugates(clusters: list[tuple[complex, int]], tol: Tolerances) -> list[tuple[complex, int]]:
    """Snap near-real roots to the real axis and mirror conjugate pairs."""
    out: list[tuple[complex, int]] = []
    rest: list[tuple[complex, int]] = []
    for z, m in clusters:
        if abs(z.imag) <= tol.cluster_radius(z):
            out.append((complex(z.real, 0.0), m))
        else:
            rest.append((z, m))
    upper = sorted([r for r in rest if r[0].imag > 0], key=lambda t: (t[0].real, t[0].imag))
    lower = sorted([r for r in rest if r[0].imag < 0], key=lambda t: (t[0].real, t[0].imag))
    used = [False] * len(lower)
    for z, m in upper:
        best, best_d = -1, math.inf
        for i, (w, mw) in enumerate(lower):
            if used[i] or mw != m:
                continue
            d = abs(w.conjugate() - z)
            if d < best_d:
                best, best_d = i, d
        if best >= 0 and best_d <= 1e3 * tol.cluster_radius(z):
            used[best] = True
            w = lower[best][0]
            avg = complex(0.5 * (z.real + w.real), 0.5 * (z.imag - w.imag))
            out.append((avg, m))
            out.append((avg.conjugate(), m))
        else:
            # unmatched complex root of a real polynomial: snap to real axis
            out.append((complex(z.real, 0.0), m))
    for i, (w, m) in enumerate(lower):
        if not used[i]:
            out.append((complex(w.real, 0.0), m))
    out.sort(key=lambda t: (t[0].real, t[0].imag))
    return out


def poly_roots(p: Polynomial, tol: Tolerances = DEFAULT) -> RootSet:
    """All complex roots of ``p`` with multiplicities.

    Companion-matrix eigenvalues, one Newton polish per root, clustering
    within ``tol.cluster`` and conjugate-pair enforcement.  Raises
    ``NonConvergence`` when some polished root leaves a residual larger
    than ``tol.root`` times the coefficient scale.
    """
    if p.is_zero:
        raise MalformedInput("cannot take roots of the zero polynomial")
    if p.degree == 0:
        return RootSet(roots=(), residual=0.0)
    desc = np.array(list(reversed(p.coeffs)), dtype=float)
    ddesc = np.polyder(desc)
    raw = np.roots(desc)
    polished = np.array([_newton_polish(desc, ddesc, z) for z in raw])
    scale = p.scale()
    resid = 0.0
    for z in polished:
        # normalize by the growth of the polynomial away from the unit scale
        grow = max(1.0, abs(z)) ** p.degree
        resid = max(resid, abs(np.polyval(desc, z)) / (scale * grow))
    if resid > max(tol.root, 1e3 * np.finfo(float).eps * p.degree):
        # one more global polish pass before giving up
        polished = np.array([_newton_polish(desc, ddesc, z) for z in polished])
        resid = max(
            abs(np.polyval(desc, z)) / (scale * max(1.0, abs(z)) ** p.degree)
            for z in polished
        )
        if resid > 1e-6:
            raise NonConvergence(
                f"root residual {resid:.3e} exceeds tolerance for degree {p.degree}"
            )
    clusters = _cluster(polished, tol)
    paired = _pair_conjugates(clusters, tol)
    return RootSet(roots=tuple(paired), residual=float(resid))


def _match_and_cancel(
    nroots: list[complex], droots: list[complex], tol: Tolerances
) -> tuple[list[complex], list[complex], bool]:
    """Remove numerator/denominator root pairs closer than the gcd radius."""
    cancelled = False
    keep_n = list(nroots)
    keep_d = list(droots)
    changed = True
    while changed:
        changed = False
        for i, zn in enumerate(keep_n):
            for j, zd in enumerate(keep_d):
                if abs(zn - zd) <= tol.gcd_radius(zd):
                    del keep_n[i]
                    del keep_d[j]
                    cancelled = True
                    changed = True
                    break
            if changed:
                break
    return keep_n, keep_d, cancelled


class RationalTF:
    """Real rational function ``num/den`` in the Laplace variable.

    The stored denominator is monic and the stored fraction is coprime:
    common roots within the gcd radius are cancelled at construction.
    Root sets are computed once and cached.
    """

    __slots__ = ("num", "den", "_nroots", "_droots", "_tol")

    def __init__(
        self,
        num: Iterable[float] | Polynomial,
        den: Iterable[float] | Polynomial,
        tol: Tolerances = DEFAULT,
    ):
        n = num if isinstance(num, Polynomial) else Polynomial(num)
        d = den if isinstance(den, Polynomial) else Polynomial(den)
        if d.is_zero:
            raise MalformedInput("denominator is identically zero")
        lead = d.leading
        n = n * (1.0 / lead)
        d = d * (1.0 / lead)
        self._tol = tol
        self._nroots: RootSet | None = None
        self._droots: RootSet | None = None
        if not n.is_zero and n.degree >= 1 and d.degree >= 1:
            nr = poly_roots(n, tol)
            dr = poly_roots(d, tol)
            keep_n, keep_d, cancelled = _match_and_cancel(nr.values(), dr.values(), tol)
            if cancelled:
                n = Polynomial.from_roots(keep_n, leading=n.leading)
                d = Polynomial.from_roots(keep_d, leading=1.0)
                # re-derive cached roots from the rebuilt polynomials
                self._nroots = poly_roots(n, tol) if n.degree >= 1 else RootSet((), 0.0)
                self._droots = poly_roots(d, tol) if d.degree >= 1 else RootSet((), 0.0)
            else:
                self._nroots = nr
                self._droots = dr
        self.num = n
        self.den = d

    # --- root access -------------------------------------------------

    @property
    def num_roots(self) -> RootSet:
        if self._nroots is None:
            if self.num.is_zero or self.num.degree == 0:
                self._nroots = RootSet((), 0.0)
            else:
                self._nroots = poly_roots(self.num, self._tol)
        return self._nroots

    @property
    def den_roots(self) -> RootSet:
        if self._droots is None:
            if self.den.degree == 0:
                self._droots = RootSet((), 0.0)
            else:
                self._droots = poly_roots(self.den, self._tol)
        return self._droots

    # --- structure ---------------------------------------------------

    @property
    def relative_degree(self) -> int:
        if self.num.is_zero:
            return self.den.degree + 1
        return self.den.degree - self.num.degree

    @property
    def strictly_proper(self) -> bool:
        return self.num.is_zero or self.num.degree < self.den.degree

    @property
    def proper(self) -> bool:
        return self.num.is_zero or self.num.degree <= self.den.degree

    @property
    def is_zero(self) -> bool:
        return self.num.is_zero

    def __repr__(self) -> str:
        return f"RationalTF(num={list(self.num.coeffs)}, den={list(self.den.coeffs)})"

    # --- evaluation ----------------------------------------------------

    def __call__(self, s: complex, tol: Tolerances | None = None) -> complex:
        """Evaluate at ``s``; raises ``PoleEvaluation`` within the pole band."""
        t = tol or self._tol
        for z, _ in self.den_roots.roots:
            if abs(s - z) < t.axis_band(z):
                raise PoleEvaluation(f"evaluation point {s} sits on the pole at {z}")
        return self.num(s) / self.den(s)

    def eval_unchecked(self, s: complex) -> complex:
        return self.num(s) / self.den(s)

    def derivative(self) -> "RationalTF":
        """Derivative as a new reduced rational function."""
        n, d = self.num, self.den
        return RationalTF(n.derivative() * d - n * d.derivative(), d * d, self._tol)

    def logderiv(self, s: complex) -> complex:
        """f'(s)/f(s) evaluated as num'/num - den'/den.

        Avoids building the quotient-rule fraction; the caller must keep
        ``s`` away from both poles and zeros.
        """
        nv = self.num(s)
        dv = self.den(s)
        if nv == 0 or dv == 0:
            raise ZeroDivisionError("logarithmic derivative at a root or pole")
        return self.num.derivative()(s) / nv - self.den.derivative()(s) / dv

    # --- arithmetic ----------------------------------------------------

    def __add__(self, other: "RationalTF | float") -> "RationalTF":
        return rtf_arith(self, other, "add")

    def __radd__(self, other: float) -> "RationalTF":
        return rtf_arith(self, other, "add")

    def __mul__(self, other: "RationalTF | float") -> "RationalTF":
        return rtf_arith(self, other, "mul")

    __rmul__ = __mul__

    def __neg__(self) -> "RationalTF":
        return rtf_arith(self, -1.0, "scalar_mul")

    def __sub__(self, other: "RationalTF | float") -> "RationalTF":
        if isinstance(other, RationalTF):
            return rtf_arith(self, rtf_arith(other, -1.0, "scalar_mul"), "add")
        return rtf_arith(self, -float(other), "add")


def rtf_arith(a: RationalTF, b: "RationalTF | float", kind: str) -> RationalTF:
    """Combine two transfer functions; result is reduced and monic.

    ``kind`` selects ``add``, ``mul`` or ``scalar_mul`` (where ``b`` is a
    plain number).  ``add`` with a number treats it as a constant function.
    """
    tol = a._tol
    if kind == "scalar_mul":
        return RationalTF(a.num * float(b), a.den, tol)
    if not isinstance(b, RationalTF):
        b = RationalTF([float(b)], [1.0], tol)
    if kind == "add":
        return RationalTF(a.num * b.den + b.num * a.den, a.den * b.den, tol)
    if kind == "mul":
        return RationalTF(a.num * b.num, a.den * b.den, tol)
    raise ValueError(f"unknown arithmetic kind {kind!r}")


def rtf_eval(f: RationalTF, s: complex, tol: Tolerances | None = None) -> complex:
    """Evaluate ``f`` at a complex point; see ``RationalTF.__call__``."""
    return f(s, tol)


def rtf_derivative(f: RationalTF) -> RationalTF:
    """Derivative of ``f`` as a reduced rational function."""
    return f.derivative()


def closed_loop_poles(L: RationalTF, tol: Tolerances = DEFAULT) -> RootSet:
    """Roots of ``den(L) - num(L)``, the positive-feedback characteristic
    polynomial of the loop ``1 - L = 0``.

    Raises ``DegenerateLoop`` when the characteristic polynomial vanishes
    identically (the loop ``L = 1``).
    """
    char = L.den - L.num
    if char.is_zero:
        raise DegenerateLoop("1 - L is identically zero")
    if char.degree == 0:
        return RootSet((), 0.0)
    return poly_roots(char, tol)
