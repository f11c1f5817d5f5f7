import gmpy2
import pytest
from gmpy2 import mpfr

import frozen
from unimodal_lab.errors import DomainError, NoFixedPoint, PeriodicAttractorSuspected
from unimodal_lab.mapcore import (
    CRIT,
    LEFT,
    RIGHT,
    NumericContext,
    UnimodalMap,
    admissibility_check,
    critical_orbit,
    deriv,
    detect_periodic_attractor,
    eval_map,
    inverse_branch,
    orbit,
    pullback,
    reversing_fixed_point,
    sci,
    tau,
)


def test_eval_examples(cheb):
    assert eval_map(cheb, "0.5") == 1
    assert eval_map(cheb, "0.25") == mpfr("0.75", 256)
    assert deriv(cheb, "0.5") == 0


def test_eval_outside_unit_interval(cheb):
    with pytest.raises(DomainError):
        eval_map(cheb, "1.5")
    with pytest.raises(DomainError):
        deriv(cheb, "-0.01")


def test_endpoints_map_to_zero(m975):
    assert eval_map(m975, 0) == 0
    assert eval_map(m975, 1) == 0


def test_tau_examples(cheb):
    assert tau(cheb, "0.3") == cheb.ctx.mpf("0.7")
    assert tau(cheb, "0.5") == cheb.ctx.mpf("0.5")
    with cheb.ctx.precise():
        assert abs(tau(cheb, "0.74359") - mpfr("0.25641")) < mpfr("1e-70")


def test_orbit_examples(cheb, m975):
    assert orbit(cheb, "0.5", 3) == [0.5, 1, 0, 0]
    assert orbit(m975, "0.3", 0) == [m975.ctx.mpf("0.3")]
    pts = critical_orbit(m975, 8)
    with m975.ctx.precise():
        for got, want in zip(pts[1:], frozen.CRITICAL_ORBIT):
            assert abs(got - mpfr(want)) < mpfr("1e-29")


def test_orbit_rejects_negative_length(cheb):
    with pytest.raises(DomainError):
        orbit(cheb, "0.3", -1)


def test_numeric_context_guards():
    with pytest.raises(DomainError):
        NumericContext(precision_bits=32)
    with pytest.raises(DomainError):
        NumericContext(precision_bits=128, eq_tolerance="1e-60")
    ctx = NumericContext(precision_bits=128)
    assert ctx.eq_tolerance == gmpy2.exp2(-64)


def test_map_guards():
    with pytest.raises(DomainError):
        UnimodalMap(1.5, 1)
    with pytest.raises(DomainError):
        UnimodalMap(2, "1.01")
    with pytest.raises(DomainError):
        UnimodalMap(2, 0)


def test_sup_deriv_and_trusted_horizon(m975):
    assert m975.sup_deriv == m975.ctx.mpf("3.9")
    assert m975.trusted_horizon == 97


def test_reversing_fixed_point(m975, cheb):
    with m975.ctx.precise():
        assert abs(reversing_fixed_point(m975) - mpfr(frozen.P0)) < mpfr("1e-39")
    assert reversing_fixed_point(cheb) == cheb.ctx.mpf("0.75")
    with pytest.raises(NoFixedPoint):
        reversing_fixed_point(UnimodalMap(2, "0.5"))


def test_fixed_point_by_bisection_for_higher_order():
    m = UnimodalMap(4, "0.9")
    p = reversing_fixed_point(m)
    with m.ctx.precise():
        assert abs(m._f(p) - p) < m.tol
        assert p > m.c


def test_inverse_branches_and_pullback(m975):
    with m975.ctx.precise():
        z = mpfr("0.4")
        for side in (LEFT, RIGHT):
            y = inverse_branch(m975, z, side)
            assert abs(m975._f(y) - z) < m975.tol
            assert m975._side(y) == side
        y = pullback(m975, z, "LRRL")
        pts = orbit(m975, y, 4)
        assert "".join(m975._side(p) for p in pts[:4]) == "LRRL"
        assert abs(pts[4] - z) < mpfr(2) ** -180
    with pytest.raises(DomainError):
        inverse_branch(m975, "0.99", LEFT)


def test_sides(m975):
    with m975.ctx.precise():
        assert m975._side(mpfr("0.2")) == LEFT
        assert m975._side(mpfr("0.5")) == CRIT
        assert m975._side(mpfr("0.8")) == RIGHT


def test_admissibility_examples(cheb):
    rep = admissibility_check(cheb, 1000)
    assert rep.passed and rep.unimodal and rep.max_schwarzian < 0
    assert admissibility_check(UnimodalMap(2, "0.5"), 1000).passed
    assert admissibility_check(UnimodalMap(3, "0.9"), 200).passed
    with pytest.raises(DomainError):
        admissibility_check(cheb, 0)


def test_quadratic_schwarzian_closed_form(cheb):
    rep = admissibility_check(cheb, 9)
    # Sf = -6 / (2x - 1)^2 for alpha = 2
    with cheb.ctx.precise():
        u = 2 * rep.argmax - 1
        assert abs(rep.max_schwarzian + 6 / (u * u)) < mpfr("1e-60")


def test_periodic_attractor_detected():
    with pytest.raises(PeriodicAttractorSuspected) as err:
        detect_periodic_attractor(UnimodalMap(2, "0.7"))
    assert err.value.period == 1
    with pytest.raises(PeriodicAttractorSuspected) as err:
        detect_periodic_attractor(UnimodalMap(2, "0.85"))
    assert err.value.period == 2


def test_no_attractor_for_chaotic_heights(cheb, m975):
    assert detect_periodic_attractor(cheb) is None
    assert detect_periodic_attractor(m975) is None


def test_serialization_is_deterministic(m975):
    a = [m975.ctx.to_str(x) for x in critical_orbit(m975, 20)]
    b = [m975.ctx.to_str(x) for x in critical_orbit(m975, 20)]
    assert a == b
    assert len(a[1].split("e")[0].replace(".", "")) == m975.ctx.digits


def test_sci_formatting():
    with gmpy2.context(precision=256):
        assert sci(mpfr(0), 3) == "0.00e+00"
        assert sci(-mpfr(1) / 3, 4) == "-3.333e-01"
        assert sci(mpfr("9.99999"), 3) == "1.00e+01"
        assert sci(mpfr("1e-300"), 2) == "1.0e-300"
        assert sci(mpfr(12345), 2) == "1.2e+04"
        with pytest.raises(DomainError):
            sci(mpfr(12345), 1)
