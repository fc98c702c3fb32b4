import math

import numpy as np
import pytest

from rirkit.crmax import (
    APFirst,
    APNegated,
    APProduct,
    APSecond,
    CrMaxProblem,
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
from rirkit.errors import (
    DomainViolation,
    EmptyFeasibleSet,
    HypothesisViolated,
    NotMinimumPhase,
)
from rirkit.freq import change_rates
from rirkit.poly import RationalTF

from oracles import matched_real_pair, richardson


def test_problem_validation():
    CrMaxProblem(1.0, math.pi)  # theta = pi is allowed
    with pytest.raises(DomainViolation):
        CrMaxProblem(-1.0, 0.5)
    with pytest.raises(DomainViolation):
        CrMaxProblem(1.0, -math.pi)  # open below
    with pytest.raises(DomainViolation):
        CrMaxProblem(1.0, 4.0)
    with pytest.raises(DomainViolation):
        CrMaxProblem(float("inf"), 0.5)
    # zero frequency restricts theta only when the closed form is asked for
    with pytest.raises(DomainViolation):
        closed_form_sup(CrMaxProblem(0.0, 0.5))


def test_closed_form_values():
    assert closed_form_sup(CrMaxProblem(2.0, math.pi / 2)) == pytest.approx(-0.5)
    assert closed_form_sup(CrMaxProblem(2.0, -math.pi / 2)) == pytest.approx(-0.5)
    assert closed_form_sup(CrMaxProblem(0.0, 0.0)) == 0.0
    assert closed_form_sup(CrMaxProblem(0.0, math.pi)) == 0.0
    assert closed_form_sup(CrMaxProblem(3.0, math.pi)) == pytest.approx(0.0)


def test_attain_branch_table():
    r = attain_sup(CrMaxProblem(0.0, 0.0))
    assert r.descriptor == APProduct(())
    assert r.sup == 0.0 and r.cr_at_peak == 0.0

    r = attain_sup(CrMaxProblem(0.0, math.pi))
    assert isinstance(r.descriptor, APNegated)
    assert r.phase_at_peak == pytest.approx(math.pi)

    wp, th = 2.0, 1.0
    r = attain_sup(CrMaxProblem(wp, th))
    assert isinstance(r.descriptor, APNegated)
    inner = r.descriptor.inner
    assert isinstance(inner, APFirst)
    assert inner.a == pytest.approx(wp * math.tan(th / 2.0))
    assert r.cr_at_peak == pytest.approx(-abs(math.sin(th)) / wp, abs=1e-12)
    assert r.phase_at_peak == pytest.approx(th, abs=1e-12)

    r = attain_sup(CrMaxProblem(wp, -th))
    assert isinstance(r.descriptor, APFirst)
    assert r.descriptor.a == pytest.approx(wp / math.tan(th / 2.0))
    assert r.phase_at_peak == pytest.approx(-th, abs=1e-12)
    assert r.cr_at_peak == pytest.approx(-abs(math.sin(th)) / wp, abs=1e-12)


def test_attain_pi_uses_sign_flip():
    # theta = pi is matched by the constant -1, whose rate is the zero sup
    r = attain_sup(CrMaxProblem(3.0, math.pi))
    assert isinstance(r.descriptor, APNegated)
    assert r.cr_at_peak == 0.0
    assert r.sup == pytest.approx(0.0)


def test_attain_unreachable_phase_at_zero_frequency():
    from rirkit.errors import NoAttainment

    with pytest.raises(NoAttainment):
        attain_sup(CrMaxProblem(0.0, 0.5))


def test_descriptor_tf_matches_semantics(rng):
    descriptors = [
        APFirst(0.7),
        APSecond(2.0, 0.8),
        APNegated(APFirst(1.3)),
        APProduct((APFirst(2.0), APSecond(3.0, 0.5))),
        APNegated(APProduct((APFirst(0.4), APFirst(4.0)))),
        APProduct(()),
    ]
    for d in descriptors:
        f = descriptor_tf(d)
        for w in (0.0, 0.3, 1.1, 2.7, 8.0):
            v = f.eval_unchecked(1j * w)
            assert abs(abs(v) - 1.0) < 1e-12, d
            if w > 0.0:
                cr = change_rates(f, w)
                assert cr.phase_cr == pytest.approx(allpass_cr(d, w), rel=1e-8, abs=1e-10)
        # descriptor phase matches an FD trace of the realized function
        for w in (0.5, 1.7):
            got = allpass_phase(d, w)
            v = f.eval_unchecked(1j * w)
            assert math.remainder(got - math.atan2(v.imag, v.real), 2 * math.pi) == pytest.approx(
                0.0, abs=1e-9
            )


def test_allpass_cr_is_phase_derivative(rng):
    for d in (APFirst(0.9), APSecond(1.7, 0.6), APNegated(APSecond(0.8, 2.0))):
        for w in (0.2, 1.0, 3.3):
            fd = richardson(lambda x: allpass_phase(d, x), w, 1e-4 * (1.0 + w))
            assert allpass_cr(d, w) == pytest.approx(fd, rel=1e-8)


def test_brute_force_first_order_hits_closed_form():
    p = CrMaxProblem(1.0, 0.8)
    cf = closed_form_sup(p)
    raw = brute_force_sup(p, "AP_first", GridBudget(points=20001, polish=False))
    assert raw.n_feasible > 0
    assert not raw.polished
    assert raw.best_cr <= cf + 1e-3 / p.omega_p + 1e-9

    r = brute_force_sup(p, "AP_first", GridBudget(points=20001))
    assert r.polished
    assert abs(r.best_cr - cf) <= 1e-9
    assert r.phase_err <= 1e-9


def test_brute_force_families_never_beat_closed_form():
    p = CrMaxProblem(0.7, -1.9)
    cf = closed_form_sup(p)
    budget = GridBudget(points=4000, phase_tol=0.05)
    slack = budget.phase_tol / p.omega_p + 1e-9
    for family in ("AP_first", "AP_second_real", "AP_second_complex", "AP_product"):
        try:
            r = brute_force_sup(p, family, budget)
        except EmptyFeasibleSet:
            continue
        assert r.best_cr <= cf + slack, family


def test_brute_force_empty_feasible():
    with pytest.raises(EmptyFeasibleSet):
        brute_force_sup(CrMaxProblem(10.0, math.pi), "AP_first", GridBudget())


def test_brute_force_rejects_unknown_family():
    with pytest.raises(DomainViolation):
        brute_force_sup(CrMaxProblem(1.0, 0.5), "AP_seventh", GridBudget())


def test_complex_pair_changes_phase_slower_than_real(rng):
    built = 0
    for _ in range(200):
        wp = float(rng.uniform(0.3, 3.0))
        zeta = float(rng.uniform(0.05, 0.95))
        w0 = float(rng.uniform(0.3, 3.0))
        ac, bc = w0 * w0, 2.0 * zeta * w0
        if bc * bc >= 4.0 * ac:
            continue  # keep the reference pair strictly complex
        real_pair = matched_real_pair(wp, ac, bc)
        if real_pair is None:
            continue
        cplx = APSecond(ac, bc)
        ph_c = allpass_phase(cplx, wp)
        ph_r = allpass_phase(real_pair, wp)
        assert math.remainder(ph_c - ph_r, 2.0 * math.pi) == pytest.approx(0.0, abs=1e-9)
        assert allpass_cr(cplx, wp) < allpass_cr(real_pair, wp)
        built += 1
    assert built >= 20


def test_sine_sum_bound_cases():
    s, bound = sine_sum_bound([-1.0, -0.3887])
    assert s == pytest.approx(math.sin(-1.0) + math.sin(-0.3887))
    assert bound == pytest.approx(-abs(math.sin(-1.3887)))
    assert s <= bound + 1e-12

    s, bound = sine_sum_bound([-math.pi, 0.0])
    assert s == pytest.approx(0.0, abs=1e-12)
    assert s <= bound + 1e-12

    with pytest.raises(DomainViolation):
        sine_sum_bound([])
    with pytest.raises(DomainViolation):
        sine_sum_bound([0.5])
    with pytest.raises(DomainViolation):
        sine_sum_bound([-4.0])


def test_delay_comparison_values():
    lin, ap = delay_comparison(1.0, 2.0)
    assert lin == pytest.approx(-0.5)
    assert ap == pytest.approx(-math.sin(1.0) / 2.0)
    assert lin <= ap
    with pytest.raises(DomainViolation):
        delay_comparison(0.0, 1.0)
    with pytest.raises(DomainViolation):
        delay_comparison(1.0, 0.0)


def test_minphase_bound_reference():
    # resonant minimum-phase function, peak away from zero
    f = RationalTF([1.0], [1.0, 0.1, 1.0])
    wp = math.sqrt(1.0 - 0.005)
    cr, bound = minphase_bound_check(f, wp)
    assert cr <= bound + 1e-12
    assert bound <= 0.0


def test_minphase_bound_rejects_orhp_zero():
    f = RationalTF([-1.0, 1.0], [1.0, 2.0, 1.0])
    with pytest.raises(NotMinimumPhase):
        minphase_bound_check(f, 1.0)


def test_minphase_bound_rejects_off_peak():
    f = RationalTF([1.0], [1.0, 0.1, 1.0])
    with pytest.raises(HypothesisViolated):
        minphase_bound_check(f, 0.2)


def test_blaschke_round_trips(rng):
    cases = [
        APFirst(2.0),
        APSecond(3.0, 0.8),
        APNegated(APProduct((APFirst(2.0), APSecond(3.0, 0.8)))),
        APProduct((APFirst(0.5), APFirst(1.5))),
    ]
    for d in cases:
        f = descriptor_tf(d)
        back = blaschke_factors(f)
        g = descriptor_tf(back)
        scale = max(abs(c) for c in f.den.coeffs)
        for cf, cg in zip(f.num.coeffs, g.num.coeffs):
            assert abs(cf - cg) <= 1e-9 * scale
        for cf, cg in zip(f.den.coeffs, g.den.coeffs):
            assert abs(cf - cg) <= 1e-9 * scale
        for w in (0.4, 1.3):
            assert allpass_cr(back, w) == pytest.approx(allpass_cr(d, w), rel=1e-9)


def test_blaschke_rejects_non_allpass():
    with pytest.raises(DomainViolation):
        blaschke_factors(RationalTF([2.0], [1.0, 1.0]))
    # axis gain one but a pole in the right half-plane
    with pytest.raises(DomainViolation):
        blaschke_factors(RationalTF([1.0, 1.0], [-1.0, 1.0]))


def test_blaschke_identity_is_empty_product():
    back = blaschke_factors(RationalTF([1.0, 1.0], [1.0, 1.0]))
    assert back == APProduct(())
