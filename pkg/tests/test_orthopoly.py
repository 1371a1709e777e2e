from fractions import Fraction
from math import comb

import pytest
from hypothesis import given, strategies as st

from sqhard.orthopoly import (Poly, abs_integral, isolate_real_roots, kravchuk, kravchuk_value, legendre,
                              legendre_explicit, poly_inner_legendre, poly_integrate_unit, sup_abs)
from sqhard.scalar import Arith

T = Poly([0, 1])


def brute_kravchuk(k, m, x):
    return sum((-1) ** j * comb(x, j) * comb(m - x, k - j) for j in range(k + 1))


def test_legendre_low_orders():
    assert legendre(0) == Poly([1])
    assert legendre(1) == T


def test_legendre_p3_at_half():
    assert legendre(3)(Fraction(1, 2)) == Fraction(-7, 16)


@pytest.mark.parametrize("i", range(21))
def test_recurrence_matches_explicit_sum(i):
    assert legendre(i) == legendre_explicit(i)


def test_legendre_orthogonality_exact():
    for i in range(21):
        for j in range(i, 21):
            val = (legendre(i) * legendre(j)).integrate(-1, 1)
            assert val == (Fraction(2, 2 * i + 1) if i == j else 0)


def test_legendre_parity_bound_and_derivative():
    grid = [Fraction(n - 1000, 1000) for n in range(2001)]
    for i in range(21):
        P = legendre(i)
        assert P.compose_affine(-1, 0) == P * ((-1) ** i)
        assert max(abs(P(x)) for x in grid[::10]) <= 1
        dP = P.derivative()
        assert max(abs(dP(x)) for x in grid[::10]) <= Fraction(i * (i + 1), 2)


def test_kravchuk_examples():
    assert kravchuk(1, 4)(0) == 4
    assert kravchuk(1, 4) == Poly([4, -2])
    assert [kravchuk(2, 4)(x) for x in range(5)] == [6, 0, -2, 0, 6]
    assert kravchuk(0, 7) == Poly([1])
    with pytest.raises(ValueError):
        kravchuk(5, 4)


@given(st.integers(1, 14).flatmap(lambda m: st.tuples(st.just(m), st.integers(0, m), st.integers(0, m))))
def test_kravchuk_matches_defining_sum(mkx):
    m, k, x = mkx
    assert kravchuk(k, m)(x) == brute_kravchuk(k, m, x) == kravchuk_value(k, m, x)


def test_kravchuk_orthogonality_m12():
    m = 12
    w = [Fraction(comb(m, x), 2 ** m) for x in range(m + 1)]
    K = [[kravchuk_value(k, m, x) for x in range(m + 1)] for k in range(m + 1)]
    for j in range(m + 1):
        for k in range(m + 1):
            assert sum(w[x] * K[j][x] * K[k][x] for x in range(m + 1)) == (comb(m, k) if j == k else 0)


def test_inner_legendre_examples():
    c, w = Fraction(5), Fraction(3)
    p2 = legendre(2).compose_affine(1 / w, -c / w)
    assert poly_inner_legendre(p2, 2, c, w) == 1
    assert poly_inner_legendre(Poly([1]), 1, c, w) == 0
    assert poly_inner_legendre(T, 1, 0, 1) == 1


def test_integrate_unit_examples():
    assert poly_integrate_unit(Poly([1]), 7) == 1
    assert poly_integrate_unit(T, 0) == Fraction(1, 2)
    assert poly_integrate_unit(Poly([0, 0, 3]), 2) == 19


def test_root_isolation_and_norms():
    p = Poly([-1, 0, 1])  # x^2 - 1
    roots = isolate_real_roots(p, -2, 2, bits=200)
    assert [round(float(r), 12) for r in roots] == [-1.0, 1.0]
    assert abs_integral(p, -2, 2) == 4
    f = Arith("float", 256)
    assert abs(abs_integral(p.convert(f), -2, 2, f) - 4) < f.tolerance(4)
    val, at = sup_abs(Poly([0, -3, 0, 1]), -2, 2)  # x^3 - 3x peaks at |x|=1 and x=+-2
    assert val == 2


def test_poly_algebra():
    p, q = Poly([1, 2]), Poly([0, 1, 1])
    assert (p * q).degree == p.degree + q.degree
    assert (p + q).degree <= max(p.degree, q.degree)
    quo, rem = (p * q + Poly([3])).divmod(q)
    assert quo == p and rem == Poly([3])
    assert Poly().degree == -1
