from fractions import Fraction
from math import comb

import mpmath
import pytest
from hypothesis import given, settings, strategies as st

from sqhard.orthopoly import kravchuk_value
from sqhard.scalar import Arith
from sqhard.univariate import (binom_deriv, binom_mass, binomial, chi_squared, chi_squared_kravchuk, custom,
                               derivative_audit, finite_difference, ising_deriv, ising_expected_h, ising_h,
                               ising_mass, ising_ratio_audit, ising_sum, kravchuk_moment, point_mass,
                               raw_moment, SupportError, tilted_binomial, tv_distance, tv_slope_audit,
                               uniform_binomial)

F256 = Arith("float", 256)


def random_dist(draw_fracs):
    total = sum(draw_fracs)
    return custom([f / total for f in draw_fracs])


dists = st.integers(1, 12).flatmap(
    lambda m: st.lists(st.fractions(min_value=0, max_value=1, max_denominator=50), min_size=m + 1, max_size=m + 1)
).filter(lambda xs: sum(xs) > 0).map(random_dist)


def test_binomial_examples():
    assert binomial(4, Fraction(1, 2)).pmf[2] == Fraction(6, 16)
    assert binomial(1, 1).pmf == (0, 1)
    assert binomial(4, Fraction(3, 5)).pmf[4] == Fraction(81, 625)
    assert tilted_binomial(4, Fraction(1, 10)) == binomial(4, Fraction(3, 5))
    with pytest.raises(ValueError):
        binomial(3, Fraction(3, 2))


def test_ising_sum_examples():
    is0 = ising_sum(4, 0)
    assert all(abs(a - b) < F256.tolerance(2) for a, b in zip(is0.pmf, uniform_binomial(4).pmf))
    assert [ising_h(4, x) for x in range(5)] == [6, 0, -2, 0, 6]
    assert abs(ising_expected_h(4, 0)) < F256.tolerance(2)
    with pytest.raises(ValueError):
        ising_sum(4, Fraction(1, 4))


def test_ising_sum_against_direct_formula():
    m = 7
    with mpmath.workprec(256):
        d = mpmath.mpf("0.05")
        w = [comb(m, x) * mpmath.exp(int(ising_h(m, x) * 2) * d / 2) for x in range(m + 1)]
        z = sum(w)
        want = [v / z for v in w]
    got = ising_sum(m, F256.num("0.05"), F256).pmf
    assert max(abs(a - b) for a, b in zip(got, want)) < mpmath.mpf(2) ** -200


def test_tv_examples():
    P = uniform_binomial(5)
    assert tv_distance(P, P) == 0
    assert tv_distance(point_mass(5, 0), point_mass(5, 5)) == 1
    assert tv_distance(binomial(2, Fraction(1, 2)), binomial(2, 1)) == Fraction(3, 4)
    with pytest.raises(ValueError):
        tv_distance(uniform_binomial(2), uniform_binomial(3))


def test_chi_squared_examples():
    assert chi_squared(uniform_binomial(3), uniform_binomial(3)) == 0
    assert chi_squared(binomial(1, 1), binomial(1, Fraction(1, 2))) == 1
    with pytest.raises(SupportError):
        chi_squared(binomial(1, Fraction(1, 2)), binomial(1, 1))


def test_moment_examples():
    B = uniform_binomial(4)
    assert raw_moment(B, 1) == 2
    assert raw_moment(B, 2) == 5
    assert raw_moment(point_mass(4, 3), 0) == 1


def test_kravchuk_moment_examples():
    for m in (3, 8):
        B = uniform_binomial(m)
        assert all(kravchuk_moment(B, t) == 0 for t in range(1, m + 1))
        assert kravchuk_moment(point_mass(m, 1), 0) == 1
    assert kravchuk_moment(point_mass(4, 0), 2) == 6 == kravchuk_value(2, 4, 0)
    with pytest.raises(ValueError):
        kravchuk_moment(uniform_binomial(4), 5)


@settings(max_examples=60, deadline=None)
@given(dists)
def test_chi_squared_equals_kravchuk_sum(P):
    assert chi_squared(P, uniform_binomial(P.m)) == chi_squared_kravchuk(P)
    assert chi_squared(P, uniform_binomial(P.m)) >= 0


@settings(max_examples=60, deadline=None)
@given(dists, st.data())
def test_tv_metric_properties(P, data):
    fr = st.lists(st.fractions(min_value=0, max_value=1, max_denominator=30), min_size=P.m + 1, max_size=P.m + 1)
    Q = random_dist(data.draw(fr.filter(lambda xs: sum(xs) > 0)))
    R = random_dist(data.draw(fr.filter(lambda xs: sum(xs) > 0)))
    assert tv_distance(P, Q) == tv_distance(Q, P)
    assert 0 <= tv_distance(P, Q) <= 1
    assert tv_distance(P, R) <= tv_distance(P, Q) + tv_distance(Q, R)


def test_binom_deriv_examples():
    assert binom_deriv(4, 2, 0, 1) == 0
    assert binom_deriv(2, 0, 0, 2) == 2
    # d/dd 4 (1/2+d)^3 (1/2-d) at 0 = 4 (3/8 - 1/8) = 1
    assert binom_deriv(4, 3, 0, 1) == 1
    step = F256.mp.ldexp(1, -24)
    fd = finite_difference(lambda d: binom_mass(4, 3, d, F256), F256.zero(), step, 1)
    assert abs(fd - 1) < 1e-8


def test_ising_deriv_examples():
    for m in (3, 4, 6):
        for x in range(m + 1):
            want = ising_mass(m, x, 0) * ising_h(m, x)
            assert abs(ising_deriv(m, x, 0, 1) - want) < F256.tolerance(2)
    assert abs(ising_deriv(4, 1, 0, 1)) < F256.tolerance(2)
    step = F256.mp.ldexp(1, -24)
    d = F256.num(Fraction(1, 10))
    fd = finite_difference(lambda t: ising_mass(4, 0, t, F256), d, step, 1)
    cf = ising_deriv(4, 0, d, 1, F256)
    assert abs(cf - fd) / abs(cf) < 1e-8


def test_derivative_audit_small():
    assert derivative_audit(ms=range(1, 5)).passed


def test_ising_ratio_upper_bound():
    for m in (4, 8, 12):
        for d in ("0.001", "0.01", "0.1"):
            assert ising_ratio_audit(m, d).passed


def test_tv_slope_small_grid():
    grid = ["1e-4", "1e-3", "1e-2", "1e-1"]
    assert tv_slope_audit("binary", 9, 9, grid).passed
    with pytest.raises(ValueError):
        tv_slope_audit("binary", 9, 9, ["1e-3", "2e-3", "3e-3", "4e-3"])
    tvs = [tv_distance(uniform_binomial(9, F256), tilted_binomial(9, F256.num(d), F256)) for d in ("1e-8", "1e-12")]
    assert tvs[1] < tvs[0] < 1e-7
