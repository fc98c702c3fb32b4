import numpy as np
import pytest

from rirkit.freq import linf_norm_and_peaks
from rirkit.poly import RationalTF, rtf_arith

import _criteria


def _normalized_product(num_a, den_a, num_b, den_b) -> RationalTF:
    raw = rtf_arith(RationalTF(num_a, den_a), RationalTF(num_b, den_b), "mul")
    peak = linf_norm_and_peaks(raw).peak_gain
    return rtf_arith(raw, 1.0 / peak, "scalar_mul")


_ZETA = 0.05
_WC = 2.94467


@pytest.fixture(scope="session")
def twin_peak_a() -> RationalTF:
    """Unit-peak plant with unstable resonance at the low peak."""
    return _normalized_product(
        [1.0], [1.0, -1.0, 1.0],
        [_WC * _WC], [_WC * _WC, 2.0 * _ZETA * _WC, 1.0],
    )


@pytest.fixture(scope="session")
def twin_peak_b() -> RationalTF:
    """Mirror plant: same gain profile, unstable resonance at the high peak."""
    return _normalized_product(
        [1.0], [1.0, 1.0, 1.0],
        [_WC * _WC], [_WC * _WC, -2.0 * _ZETA * _WC, 1.0],
    )


def second_order_plant(p: float, q: float) -> RationalTF:
    return RationalTF([1.0], [q, p, 1.0])


@pytest.fixture(scope="session")
def rng() -> np.random.Generator:
    return np.random.default_rng(20250817)


def random_stable_poly(rng, deg: int, spread: float = 3.0):
    """Ascending coefficients of a real polynomial with roots in the open
    left half-plane."""
    coeffs = np.poly1d([1.0])
    k = deg
    while k > 0:
        if k >= 2 and rng.random() < 0.5:
            re = -rng.uniform(0.05, spread)
            im = rng.uniform(0.05, spread)
            coeffs = coeffs * np.poly1d([1.0, -2.0 * re, re * re + im * im])
            k -= 2
        else:
            a = rng.uniform(0.05, spread)
            coeffs = coeffs * np.poly1d([1.0, a])
            k -= 1
    return list(np.asarray(coeffs.coeffs)[::-1])


def random_tf(rng, max_deg: int = 4, stable: bool = False) -> RationalTF:
    """Random rational function, denominator degree at least one."""
    dn = int(rng.integers(1, max_deg + 1))
    nn = int(rng.integers(0, dn + 1))
    if stable:
        num = random_stable_poly(rng, nn)
        den = random_stable_poly(rng, dn)
    else:
        num = list(rng.normal(size=nn + 1))
        den = list(rng.normal(size=dn + 1))
        den[-1] = den[-1] if abs(den[-1]) > 0.1 else 1.0
    scale = float(rng.uniform(0.2, 3.0))
    num = [scale * c for c in num]
    return RationalTF(num, den)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if _criteria.RESULTS:
        terminalreporter.write_line("")
        terminalreporter.write_line("acceptance criteria:")
        for line in _criteria.RESULTS:
            terminalreporter.write_line("  " + line)
