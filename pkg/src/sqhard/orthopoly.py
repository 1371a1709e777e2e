"""Polynomials in the monomial basis, Legendre and Kravchuk families, exact integration.

Coefficients may be ``Fraction`` (exact) or mpmath floats; :class:`Poly` itself
is agnostic and only relies on ring operations. Integrals are always taken
through antiderivatives.
"""
from __future__ import annotations

import functools
from fractions import Fraction
from math import comb
from typing import Iterable, List, Sequence, Tuple

from .scalar import EXACT_ARITH, Arith, to_fraction


class Poly:
    """Immutable univariate polynomial; ``coeffs[j]`` multiplies ``x**j``."""

    __slots__ = ("coeffs",)

    def __init__(self, coeffs: Iterable = ()):
        cs = list(coeffs)
        while cs and cs[-1] == 0:
            cs.pop()
        self.coeffs: Tuple = tuple(cs)

    @classmethod
    def constant(cls, c) -> "Poly":
        return cls([c])

    @classmethod
    def x(cls, one=Fraction(1)) -> "Poly":
        return cls([one * 0, one])

    @property
    def degree(self) -> int:
        """Degree, with ``-1`` for the zero polynomial."""
        return len(self.coeffs) - 1

    def is_zero(self) -> bool:
        return not self.coeffs

    def leading(self):
        return self.coeffs[-1] if self.coeffs else 0

    def __call__(self, x):
        acc = x * 0
        for c in reversed(self.coeffs):
            acc = acc * x + c
        return acc

    def __eq__(self, other) -> bool:
        if not isinstance(other, Poly):
            other = Poly([other])
        return self.coeffs == other.coeffs

    def __hash__(self):
        return hash(self.coeffs)

    def __repr__(self) -> str:
        return f"Poly({list(self.coeffs)!r})"

    def __add__(self, other) -> "Poly":
        if not isinstance(other, Poly):
            other = Poly([other])
        n = max(len(self.coeffs), len(other.coeffs))
        a = self.coeffs + (0,) * (n - len(self.coeffs))
        b = other.coeffs + (0,) * (n - len(other.coeffs))
        return Poly([x + y for x, y in zip(a, b)])

    __radd__ = __add__

    def __neg__(self) -> "Poly":
        return Poly([-c for c in self.coeffs])

    def __sub__(self, other) -> "Poly":
        return self + (-other if isinstance(other, Poly) else -other)

    def __rsub__(self, other) -> "Poly":
        return (-self) + other

    def __mul__(self, other) -> "Poly":
        if not isinstance(other, Poly):
            return Poly([c * other for c in self.coeffs])
        if self.is_zero() or other.is_zero():
            return Poly()
        out = [self.coeffs[0] * 0] * (len(self.coeffs) + len(other.coeffs) - 1)
        for i, a in enumerate(self.coeffs):
            for j, b in enumerate(other.coeffs):
                out[i + j] = out[i + j] + a * b
        return Poly(out)

    __rmul__ = __mul__

    def __pow__(self, n: int) -> "Poly":
        result = Poly([self.coeffs[0] * 0 + 1]) if self.coeffs else Poly([1])
        base = self
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result

    def map(self, f) -> "Poly":
        """Apply ``f`` to every coefficient (e.g. to change arithmetic mode)."""
        return Poly([f(c) for c in self.coeffs])

    def convert(self, arith: Arith) -> "Poly":
        return self.map(arith.num)

    def derivative(self) -> "Poly":
        return Poly([j * c for j, c in enumerate(self.coeffs)][1:])

    def antiderivative(self) -> "Poly":
        """Antiderivative with zero constant term."""
        if not self.coeffs:
            return Poly()
        zero = self.coeffs[0] * 0
        return Poly([zero] + [c / (j + 1) if not isinstance(c, int) else Fraction(c, j + 1)
                              for j, c in enumerate(self.coeffs)])

    def integrate(self, a, b):
        """Exact definite integral over ``[a, b]``."""
        big = self.antiderivative()
        return big(b) - big(a)

    def compose_affine(self, scale, shift) -> "Poly":
        """Return ``t -> self(scale * t + shift)``."""
        inner = Poly([shift, scale])
        out = Poly()
        for c in reversed(self.coeffs):
            out = out * inner + c
        return out

    def compose(self, inner: "Poly") -> "Poly":
        out = Poly()
        for c in reversed(self.coeffs):
            out = out * inner + c
        return out

    def divmod(self, other: "Poly") -> Tuple["Poly", "Poly"]:
        if other.is_zero():
            raise ZeroDivisionError("polynomial division by zero")
        rem = list(self.coeffs)
        dq = len(rem) - len(other.coeffs)
        if dq < 0:
            return Poly(), self
        quot = [0] * (dq + 1)
        lead = other.coeffs[-1]
        for i in range(dq, -1, -1):
            c = rem[i + len(other.coeffs) - 1] / lead
            quot[i] = c
            for j, b in enumerate(other.coeffs):
                rem[i + j] = rem[i + j] - c * b
        return Poly(quot), Poly(rem[: len(other.coeffs) - 1])


def poly_integrate_unit(p: Poly, x):
    """Exact value of the integral of ``p`` over ``[x, x + 1]``."""
    return p.integrate(x, x + 1)


# -- Legendre --------------------------------------------------------------------


@functools.lru_cache(maxsize=None)
def _legendre_exact(i: int) -> Poly:
    if i == 0:
        return Poly([Fraction(1)])
    if i == 1:
        return Poly([Fraction(0), Fraction(1)])
    prev, cur = _legendre_exact(i - 2), _legendre_exact(i - 1)
    x = Poly([Fraction(0), Fraction(1)])
    # (n+1) P_{n+1} = (2n+1) x P_n - n P_{n-1}, here with n = i - 1
    n = i - 1
    return (x * cur * Fraction(2 * n + 1, n + 1)) - prev * Fraction(n, n + 1)


def legendre(i: int, arith: Arith = EXACT_ARITH) -> Poly:
    """Legendre polynomial ``P_i`` built from the three-term recurrence."""
    if i < 0:
        raise ValueError("Legendre degree must be nonnegative")
    p = _legendre_exact(i)
    return p if arith.exact else p.convert(arith)


def legendre_explicit(i: int) -> Poly:
    """Closed-form sum ``2^-i sum_j (-1)^j C(i,j) C(2i-2j,i) x^(i-2j)``; used as a cross-check."""
    coeffs = [Fraction(0)] * (i + 1)
    for j in range(i // 2 + 1):
        coeffs[i - 2 * j] += Fraction((-1) ** j * comb(i, j) * comb(2 * i - 2 * j, i), 2 ** i)
    return Poly(coeffs)


def legendre_value(i: int, x):
    """Evaluate ``P_i(x)`` by the recurrence directly (no polynomial expansion)."""
    if i == 0:
        return x * 0 + 1
    prev, cur = x * 0 + 1, x
    for n in range(1, i):
        prev, cur = cur, ((2 * n + 1) * x * cur - n * prev) / (n + 1)
    return cur


# -- Kravchuk --------------------------------------------------------------------


@functools.lru_cache(maxsize=None)
def _stirling1_row(n: int) -> Tuple[int, ...]:
    """Signed Stirling numbers s(n, r), r = 0..n: x(x-1)...(x-n+1) = sum_r s(n,r) x^r."""
    row = [1]
    for j in range(n):
        # multiply by (x - j)
        nxt = [0] * (len(row) + 1)
        for r, c in enumerate(row):
            nxt[r + 1] += c
            nxt[r] -= j * c
        row = nxt
    return tuple(row)


def falling_binomial(j: int) -> Poly:
    """``C(x, j)`` as a polynomial in ``x``."""
    fact = 1
    for r in range(2, j + 1):
        fact *= r
    return Poly([Fraction(c, fact) for c in _stirling1_row(j)])


@functools.lru_cache(maxsize=None)
def _kravchuk_exact(k: int, m: int) -> Poly:
    reflect = (Fraction(-1), Fraction(m))  # x -> m - x
    total = Poly()
    for j in range(k + 1):
        term = falling_binomial(j) * falling_binomial(k - j).compose_affine(*reflect)
        total = total + (term if j % 2 == 0 else -term)
    return total


def kravchuk(k: int, m: int, arith: Arith = EXACT_ARITH) -> Poly:
    """Kravchuk polynomial ``K_k(x; m) = sum_j (-1)^j C(x,j) C(m-x,k-j)`` in the monomial basis."""
    if m < 1:
        raise ValueError("m must be a positive integer")
    if not 0 <= k <= m:
        raise ValueError(f"Kravchuk degree k={k} must lie in [0, m={m}]")
    p = _kravchuk_exact(k, m)
    return p if arith.exact else p.convert(arith)


def kravchuk_value(k: int, m: int, x: int) -> int:
    """Integer value of ``K_k(x; m)`` at an integer point by direct summation."""
    return sum((-1) ** j * comb(x, j) * comb(m - x, k - j) for j in range(k + 1))


# -- inner products --------------------------------------------------------------


def poly_inner_legendre(p: Poly, i: int, center, halfwidth):
    """Coefficient of ``P_i((t - center)/halfwidth)`` in ``p`` over the interval.

    Computes ``(2i+1)/(2w) * integral_{c-w}^{c+w} p(t) P_i((t-c)/w) dt`` exactly.
    """
    if halfwidth <= 0:
        raise ValueError("halfwidth must be positive")
    proto = p.coeffs[0] if p.coeffs else Fraction(0)
    leg = _legendre_exact(i).map(lambda c: _like(proto, c))
    inv = _like(proto, Fraction(1)) / halfwidth
    scaled = leg.compose_affine(inv, -center * inv)
    integral = (p * scaled).integrate(center - halfwidth, center + halfwidth)
    return integral * (2 * i + 1) / (2 * halfwidth)


def _like(template, c: Fraction):
    """Convert a Fraction to the numeric type of ``template``."""
    if isinstance(template, (Fraction, int)):
        return c
    return template * 0 + (template * 0 + c.numerator) / c.denominator


def legendre_expansion(p: Poly, center, halfwidth) -> List:
    """Coefficients ``a_0..a_deg`` with ``p(t) = sum_i a_i P_i((t - center)/halfwidth)``."""
    return [poly_inner_legendre(p, i, center, halfwidth) for i in range(max(p.degree, 0) + 1)]


# -- real roots, norms -----------------------------------------------------------


def _exact_poly(p: Poly) -> Poly:
    return p.map(to_fraction)


def _monic(p: Poly) -> Poly:
    return p * (1 / p.leading()) if not p.is_zero() else p


def poly_gcd(a: Poly, b: Poly) -> Poly:
    while not b.is_zero():
        a, b = b, a.divmod(b)[1]
    return _monic(a)


def sturm_sequence(p: Poly) -> List[Poly]:
    seq = [p, p.derivative()]
    while not seq[-1].is_zero():
        rem = seq[-2].divmod(seq[-1])[1]
        seq.append(-rem)
    return seq[:-1]


def _sign_changes(seq: Sequence[Poly], x: Fraction) -> int:
    signs = [s for s in ((q(x) > 0) - (q(x) < 0) for q in seq) if s != 0]
    return sum(1 for a, b in zip(signs, signs[1:]) if a != b)


def isolate_real_roots(p: Poly, lo, hi, bits: int = 256) -> List[Fraction]:
    """Distinct real roots of ``p`` in the open interval ``(lo, hi)``, to width ``2^-bits``.

    Coefficients are converted exactly to rationals (binary floats are dyadic
    rationals), so counting uses exact Sturm sequences in both modes.
    """
    p = _exact_poly(p)
    lo, hi = to_fraction(lo), to_fraction(hi)
    if p.degree <= 0 or lo >= hi:
        return []
    sqfree = p.divmod(poly_gcd(p, p.derivative()))[0]
    seq = sturm_sequence(sqfree)
    width = Fraction(1, 2 ** bits)

    def count(a: Fraction, b: Fraction) -> int:
        # roots in (a, b]
        return _sign_changes(seq, a) - _sign_changes(seq, b)

    roots: List[Fraction] = []
    stack = [(lo, hi)]
    while stack:
        a, b = stack.pop()
        n = count(a, b)
        if n == 0:
            continue
        if n == 1:
            if sqfree(b) == 0:
                if b < hi:
                    roots.append(b)
                continue
            # bisection on the sign change
            fa = sqfree(a)
            while b - a > width:
                mid = (a + b) / 2
                fm = sqfree(mid)
                if fm == 0:
                    a = b = mid
                    break
                if (fm > 0) == (fa > 0):
                    a, fa = mid, fm
                else:
                    b = mid
            roots.append((a + b) / 2)
            continue
        mid = (a + b) / 2
        stack.append((mid, b))
        stack.append((a, mid))
    return sorted(roots)


def abs_integral(p: Poly, lo, hi, arith: Arith = EXACT_ARITH):
    """``integral_lo^hi |p(t)| dt`` by splitting at the real roots of ``p``.

    Exact when ``p`` has no root inside (and the mode is exact); otherwise
    computed at ``arith.bits`` precision in float.
    """
    roots = isolate_real_roots(p, lo, hi, arith.bits + 16)
    big = _exact_poly(p).antiderivative()
    cuts = [to_fraction(lo)] + roots + [to_fraction(hi)]
    total = sum((abs(big(b) - big(a)) for a, b in zip(cuts, cuts[1:])), Fraction(0))
    if arith.exact and not roots:
        return total
    return arith.float_ctx().num(total)


def sup_abs(p: Poly, lo, hi, arith: Arith = EXACT_ARITH) -> Tuple:
    """``(max |p| on [lo, hi], argmax)`` via critical points of ``p``."""
    ex = _exact_poly(p)
    candidates = [to_fraction(lo), to_fraction(hi)] + isolate_real_roots(ex.derivative(), lo, hi, arith.bits + 16)
    best = max(candidates, key=lambda t: abs(ex(t)))
    val = abs(ex(best))
    if arith.exact and best in (to_fraction(lo), to_fraction(hi)):
        return val, best
    f = arith.float_ctx()
    return f.num(val), best
