import gmpy2
import mpmath
import pytest
from gmpy2 import mpfr

import oracles
from unimodal_lab.branches import (
    Interval,
    branch_of_word,
    deriv_iter,
    distortion_estimate,
    estimate_distortion,
    itinerary,
    koebe_bound,
    monotone_branch_at,
    monotone_branches,
    monotone_extension,
    scaled_factor,
)
from unimodal_lab.errors import (
    CriticalOnOrbit,
    DegenerateInterval,
    DomainError,
    NotMonotoneOnCore,
    NotNested,
)
from unimodal_lab.mapcore import critical_orbit


def iv(lo, hi):
    with gmpy2.context(precision=256):
        return Interval(mpfr(lo), mpfr(hi))


def _middle_third(b, m):
    with m.ctx.precise():
        third = b.domain.length / 3
        return Interval(b.domain.lo + third, b.domain.hi - third)


def test_interval_rejects_empty():
    with pytest.raises(DegenerateInterval):
        Interval(0.5, 0.5)
    with pytest.raises(DegenerateInterval):
        Interval(0.6, 0.5)


def test_interval_membership_respects_openness():
    closed = Interval(0.2, 0.4, False, False)
    open_ = Interval(0.2, 0.4)
    assert closed.contains_point(0.2) and not open_.contains_point(0.2)
    assert open_.contains_point(0.3)
    assert Interval(0.1, 0.9).contains(open_)
    assert open_.mirrored().as_floats() == pytest.approx((0.6, 0.8))


def test_itinerary_examples(cheb):
    assert itinerary(cheb, "0.3", 3) == "LRR"
    assert itinerary(cheb, "0.5", 1) == "C"
    assert itinerary(cheb, "0.25", 2) == "LR"
    assert itinerary(cheb, "0.25", 4) == "LRR" + "R"
    with pytest.raises(DomainError):
        itinerary(cheb, "0.3", 0)


def test_itinerary_truncates_at_critical_point(cheb):
    # 0.146447 = (2 - sqrt 2)/4 maps to c
    with cheb.ctx.precise():
        x = (2 - gmpy2.sqrt(2)) / 4
    assert itinerary(cheb, x, 5) == "LC"


def test_monotone_branch_examples(cheb):
    b = monotone_branch_at(cheb, "0.1", 1)
    assert b.domain.as_floats() == (0.0, 0.5)
    b = monotone_branch_at(cheb, "0.3", 2)
    with cheb.ctx.precise():
        assert abs(b.domain.lo - (2 - gmpy2.sqrt(2)) / 4) < mpfr(2) ** -200
        assert b.domain.hi == mpfr("0.5")
    assert b.itinerary == "LR"
    assert b.orientation == -1
    with pytest.raises(CriticalOnOrbit) as err:
        monotone_branch_at(cheb, "0.5", 1)
    assert err.value.step == 0


def test_branch_derivative_sign_matches_orientation(m975):
    for x in ("0.1", "0.37", "0.62", "0.93"):
        b = monotone_branch_at(m975, x, 7)
        with m975.ctx.precise():
            for k in range(1, 8):
                y = b.domain.lo + b.domain.length * k / 8
                d = deriv_iter(m975, y, 7)
                assert (d > 0) == (b.orientation > 0)


def test_branch_endpoints_hit_c_or_boundary(m975):
    b = monotone_branch_at(m975, "0.37", 9)
    with m975.ctx.precise():
        for e in (b.domain.lo, b.domain.hi):
            if e in (0, 1):
                continue
            y, hit = e, False
            for _ in range(9):
                if abs(y - m975.c) < m975.tol * 1e6:
                    hit = True
                    break
                y = m975._f(y)
            assert hit


def test_extension_image_boundary_in_critical_orbit(m975):
    n = 6
    ext = monotone_extension(m975, _middle_third(monotone_branch_at(m975, "0.3", n), m975), n)
    values = critical_orbit(m975, n)[1:]
    with m975.ctx.precise():
        ends = [m975.ctx.mpf(0)] + [mpfr(v) for v in values]
        for e in (ext.image.lo, ext.image.hi):
            assert min(abs(e - v) for v in ends) < mpfr(2) ** -150


def test_monotone_extension_examples(cheb):
    ext = monotone_extension(cheb, iv("0.2", "0.3"), 2)
    with cheb.ctx.precise():
        assert abs(ext.ext.lo - (2 - gmpy2.sqrt(2)) / 4) < mpfr(2) ** -200
    assert ext.ext.hi == 0.5
    assert ext.image.as_floats() == pytest.approx((0.0, 1.0), abs=1e-60)
    assert ext.ext.contains(ext.core)
    whole = monotone_extension(cheb, iv("0.2", "0.3"), 0)
    assert whole.ext.as_floats() == (0.0, 1.0) and whole.image.as_floats() == (0.0, 1.0)
    with pytest.raises(NotMonotoneOnCore):
        monotone_extension(cheb, iv("0.4", "0.6"), 1)


def test_branch_of_word_follows_the_word(m975):
    b = branch_of_word(m975, "LRRLR")
    assert b.itinerary == "LRRLR"
    assert itinerary(m975, b.domain.mid, 5) == "LRRLR"


def test_deriv_iter_examples(cheb):
    with cheb.ctx.precise():
        assert abs(deriv_iter(cheb, "0.3", 2) - mpfr("-4.352")) < mpfr("1e-70")
    assert deriv_iter(cheb, "0.5", 3) == 0
    assert deriv_iter(cheb, "0.123", 0) == 1
    with pytest.raises(DomainError):
        deriv_iter(cheb, "0.3", -1)


def test_distortion_examples(cheb):
    assert distortion_estimate(cheb, iv("0.1", "0.2"), 0) == 1
    K = distortion_estimate(cheb, iv("0.1", "0.2"), 1)
    with cheb.ctx.precise():
        assert abs(K - mpfr(4) / 3) < mpfr("1e-60")
    with pytest.raises(DegenerateInterval):
        distortion_estimate(cheb, iv("0.1", "0.1" + "0" * 65 + "1"), 1)
    with pytest.raises(NotMonotoneOnCore):
        distortion_estimate(cheb, iv("0.4", "0.6"), 1)


def test_distortion_records_grid(m975):
    core = _middle_third(monotone_branch_at(m975, "0.3", 6), m975)
    est = estimate_distortion(m975, core, 6, grid=4)
    assert est.converged and est.grid >= 4 and est.K >= 1


def test_scaled_factor_examples():
    assert scaled_factor(iv(0, 1), iv("0.25", "0.75")) == 0.5
    with gmpy2.context(precision=256):
        assert abs(scaled_factor(iv("0.2", "0.9"), iv("0.4", "0.6")) - 1) < mpfr("1e-70")
    assert scaled_factor(iv("0.2", "0.9"), iv("0.2", "0.9")) == 0
    with pytest.raises(NotNested):
        scaled_factor(iv("0.2", "0.5"), iv("0.4", "0.6"))


def test_koebe_examples():
    assert koebe_bound(1) == 4
    assert koebe_bound(10) == pytest.approx(1.21)
    assert koebe_bound(1e12) == pytest.approx(1.0)
    with pytest.raises(DomainError):
        koebe_bound(0)


def test_chebyshev_branch_oracle_small_n(cheb):
    for n in range(0, 7):
        branches = monotone_branches(cheb, n)
        assert len(branches) == 2 ** n
        ends = [b.domain.lo for b in branches] + [branches[-1].domain.hi]
        with cheb.ctx.precise():
            for got, want in zip(ends, oracles.chebyshev_endpoints(n)):
                assert abs(got - mpfr(mpmath.nstr(want, 90))) < mpfr(2) ** -128


def test_branches_by_midpoint_sweep_agree(cheb):
    n = 5
    branches = monotone_branches(cheb, n)
    for b in branches:
        again = monotone_branch_at(cheb, b.domain.mid, n)
        assert again.domain == b.domain
        assert again.itinerary == b.itinerary


def test_branch_count_below_full_height(m975):
    # a < 1 loses branches: the kneading sequence prunes words
    assert len(monotone_branches(m975, 10)) < 2 ** 10


def test_koebe_bound_holds_on_extensions(m975):
    for x in ("0.12", "0.31", "0.44"):
        for n in (3, 6, 9):
            b = monotone_branch_at(m975, x, n)
            core = _middle_third(b, m975)
            with m975.ctx.precise():
                ext = monotone_extension(m975, core, n)
                delta = scaled_factor(ext.image, ext.core_image)
                K = distortion_estimate(m975, core, n)
                assert K <= koebe_bound(delta) * (1 + mpfr("1e-6"))
