"""Dual-mode scalar arithmetic: exact rationals or fixed-precision binary floats.

Every numeric routine in the package takes an :class:`Arith` and routes
constants through :meth:`Arith.num`, so the same code runs on
``fractions.Fraction`` (exact) or ``mpmath`` floats of a chosen mantissa width.
"""
from __future__ import annotations

import functools
import math
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Union

import mpmath

EXACT = "exact"
FLOAT = "float"
DEFAULT_BITS = 256

Number = Any  # Fraction or mpmath mpf


@functools.lru_cache(maxsize=None)
def _mp_context(bits: int) -> mpmath.MPContext:
    ctx = mpmath.MPContext()
    ctx.prec = bits
    return ctx


@dataclass(frozen=True)
class Arith:
    """Arithmetic mode: ``Arith()`` is exact, ``Arith("float", 256)`` is 256-bit."""

    mode: str = EXACT
    bits: int = DEFAULT_BITS

    def __post_init__(self):
        if self.mode not in (EXACT, FLOAT):
            raise ValueError(f"unknown arithmetic mode {self.mode!r}")
        if self.mode == FLOAT and self.bits < 64:
            raise ValueError("float mode needs at least 64 mantissa bits")

    @property
    def exact(self) -> bool:
        return self.mode == EXACT

    @property
    def mp(self) -> mpmath.MPContext:
        """mpmath context at this precision (used for transcendental work in either mode)."""
        return _mp_context(self.bits)

    def num(self, x) -> Number:
        """Coerce ``x`` (int, Fraction, str, float, mpf) into this mode's number type."""
        if self.exact:
            return to_fraction(x)
        if isinstance(x, Fraction):
            return self.mp.mpf(x.numerator) / x.denominator
        if isinstance(x, str):
            return self.mp.mpf(to_fraction(x)) if "/" in x else self.mp.mpf(x)
        return self.mp.mpf(x)

    def zero(self) -> Number:
        return self.num(0)

    def one(self) -> Number:
        return self.num(1)

    def exp(self, x) -> Number:
        if self.exact:
            if x == 0:
                return Fraction(1)
            raise ValueError("exp of a nonzero value is irrational; use float mode")
        return self.mp.exp(self.num(x))

    def sqrt(self, x) -> Number:
        if self.exact:
            f = to_fraction(x)
            n, d = math.isqrt(f.numerator), math.isqrt(f.denominator)
            if n * n == f.numerator and d * d == f.denominator:
                return Fraction(n, d)
            raise ValueError(f"sqrt({f}) is irrational; use float mode")
        return self.mp.sqrt(self.num(x))

    def log(self, x) -> Number:
        return self.float_ctx().mp.log(self.float_ctx().num(x))

    def float_ctx(self) -> "Arith":
        """Same precision in float mode (for quantities that are never rational)."""
        return self if not self.exact else Arith(FLOAT, self.bits)

    def tolerance(self, divisor: int = 2) -> Number:
        """``0`` in exact mode, else ``2^(-bits/divisor)``."""
        if self.exact:
            return Fraction(0)
        return self.mp.ldexp(self.mp.mpf(1), -(self.bits // divisor))

    def close(self, a, b, divisor: int = 2) -> bool:
        """Equality in exact mode; relative-or-absolute closeness at ``2^(-bits/divisor)`` otherwise."""
        if self.exact:
            return to_fraction(a) == to_fraction(b)
        a, b = self.num(a), self.num(b)
        tol = self.tolerance(divisor)
        return abs(a - b) <= tol * max(1, abs(a), abs(b))


EXACT_ARITH = Arith()


def to_fraction(x) -> Fraction:
    """Exact conversion to Fraction. Floats convert to their exact binary value."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, str):
        return Fraction(x.strip())
    if isinstance(x, float):
        return Fraction(x)
    if hasattr(x, "_mpf_"):
        sign, man, exp, _ = x._mpf_
        if not man:
            if exp:
                raise ValueError(f"cannot convert non-finite {x} to a rational")
            return Fraction(0)
        value = Fraction(int(man)) * (Fraction(2) ** int(exp))
        return -value if sign else value
    return Fraction(x)


def to_float(x) -> float:
    if isinstance(x, Fraction):
        return x.numerator / x.denominator
    return float(x)


_DECIMAL_RE = re.compile(r"^[+-]?(\d+(\.\d*)?|\.\d+)([eE][+-]?\d+)?$")


def parse_scalar(text: str, arith: Arith) -> Number:
    """Parse ``"num/den"``, an integer or a decimal literal into ``arith``'s number type."""
    text = text.strip()
    if "/" in text or not _DECIMAL_RE.match(text):
        return arith.num(Fraction(text))
    if arith.exact:
        return Fraction(text)
    return arith.mp.mpf(text)


def format_scalar(x, arith: Arith) -> str:
    """Serialize losslessly: ``"num/den"`` when exact, round-trippable decimal in float mode."""
    if arith.exact:
        f = to_fraction(x)
        return f"{f.numerator}/{f.denominator}"
    # bits * log10(2) digits plus guard digits reproduce the binary value exactly on parse
    digits = int(math.ceil(arith.bits * 0.30103)) + 3
    return arith.mp.nstr(arith.num(x), digits, strip_zeros=False)


ScalarLike = Union[int, Fraction, str, float]
