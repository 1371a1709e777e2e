"""Distributions on {0, ..., m}: binomials, the Ising coordinate-sum law, divergences.

The Ising-sum family IS(m, d) has pmf proportional to C(m, x) exp(h(m, x) d)
with h(m, x) = 2x^2 - 2mx + m(m-1)/2; it is the law of the number of ones in
the complete-graph Ising model on m spins with coupling d.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from math import comb
from typing import Callable, Dict, List, Sequence

from .orthopoly import kravchuk_value
from .report import AuditReport
from .scalar import EXACT_ARITH, Arith, to_float

BINOMIAL = "binomial"
ISING_SUM = "ising-sum"
MOMENT_MATCHED = "moment-matched"
CUSTOM = "custom"


class SupportError(ValueError):
    """Raised when a divergence is undefined because of a support mismatch."""


@dataclass(frozen=True)
class UnivariateDist:
    m: int
    pmf: tuple
    kind: str = CUSTOM
    params: Dict[str, object] = field(default_factory=dict, compare=False, hash=False)
    arith: Arith = EXACT_ARITH

    def __post_init__(self):
        if self.m < 1:
            raise ValueError("m must be a positive integer")
        if len(self.pmf) != self.m + 1:
            raise ValueError(f"pmf has {len(self.pmf)} entries, expected m+1={self.m + 1}")
        object.__setattr__(self, "pmf", tuple(self.pmf))

    def __getitem__(self, x: int):
        return self.pmf[x]

    def __len__(self):
        return len(self.pmf)

    def total(self):
        return sum(self.pmf, self.arith.zero())

    def is_normalized(self) -> bool:
        return self.arith.close(self.total(), 1)

    def is_nonnegative(self) -> bool:
        return all(p >= 0 for p in self.pmf)

    def validate(self) -> None:
        neg = [(x, p) for x, p in enumerate(self.pmf) if p < 0]
        if neg:
            raise ValueError(f"negative pmf entries: {neg[:3]}")
        if not self.is_normalized():
            raise ValueError(f"pmf sums to {self.total()}, not 1")

    def floats(self) -> List[float]:
        return [to_float(p) for p in self.pmf]


def custom(pmf: Sequence, arith: Arith = EXACT_ARITH, kind: str = CUSTOM, **params) -> UnivariateDist:
    return UnivariateDist(len(pmf) - 1, tuple(arith.num(p) for p in pmf), kind, dict(params), arith)


def point_mass(m: int, at: int, arith: Arith = EXACT_ARITH) -> UnivariateDist:
    pmf = [arith.zero()] * (m + 1)
    pmf[at] = arith.one()
    return UnivariateDist(m, tuple(pmf), CUSTOM, {"point": at}, arith)


def binomial(m: int, p, arith: Arith = EXACT_ARITH) -> UnivariateDist:
    p = arith.num(p)
    if not 0 <= p <= 1:
        raise ValueError(f"success probability {p} outside [0, 1]")
    q = 1 - p
    pmf = tuple(comb(m, x) * p ** x * q ** (m - x) for x in range(m + 1))
    return UnivariateDist(m, pmf, BINOMIAL, {"p": p}, arith)


def tilted_binomial(m: int, eps, arith: Arith = EXACT_ARITH) -> UnivariateDist:
    """``Bin(m, 1/2 + eps)``; pass ``eps = delta / sqrt(m)`` for the hard-instance projection."""
    eps = arith.num(eps)
    d = binomial(m, Fraction(1, 2) + eps if arith.exact else arith.num(Fraction(1, 2)) + eps, arith)
    return UnivariateDist(m, d.pmf, BINOMIAL, {"p": d.params["p"], "eps": eps}, arith)


def uniform_binomial(m: int, arith: Arith = EXACT_ARITH) -> UnivariateDist:
    """``Bin(m, 1/2)`` with exact dyadic masses."""
    return binomial(m, Fraction(1, 2), arith)


def ising_h(m: int, x: int) -> Fraction:
    """``h(m, x) = 2x^2 - 2mx + m(m-1)/2``."""
    return Fraction(2 * x * x - 2 * m * x) + Fraction(m * (m - 1), 2)


def _ising_weights(m: int, delta, arith: Arith):
    """Unnormalized ``C(m,x) exp((h(x) - h_max) delta)`` with the largest exponent factored out."""
    hs = [arith.num(ising_h(m, x)) for x in range(m + 1)]
    top = max(h * delta for h in hs)
    return [comb(m, x) * arith.mp.exp(h * delta - top) for x, h in enumerate(hs)], hs


def ising_sum(m: int, delta, arith: Arith = Arith("float")) -> UnivariateDist:
    """``IS(m, delta)``; always evaluated in float mode."""
    arith = arith.float_ctx()
    delta = arith.num(delta)
    if not abs(delta) < arith.num(Fraction(1, m)):
        raise ValueError(f"ising coupling {delta} outside (-1/m, 1/m) for m={m}")
    w, _ = _ising_weights(m, delta, arith)
    z = sum(w)
    return UnivariateDist(m, tuple(v / z for v in w), ISING_SUM, {"delta": delta}, arith)


def ising_expected_h(m: int, delta, arith: Arith = Arith("float")):
    d = ising_sum(m, delta, arith)
    return sum((p * ising_h(m, x).numerator / ising_h(m, x).denominator for x, p in enumerate(d.pmf)),
               d.arith.zero())


def _check_same(p: UnivariateDist, q: UnivariateDist) -> None:
    if p.m != q.m:
        raise ValueError(f"support mismatch: m={p.m} vs m={q.m}")


def _common_arith(p: UnivariateDist, q: UnivariateDist) -> Arith:
    return p.arith if not p.arith.exact else q.arith


def tv_distance(p: UnivariateDist, q: UnivariateDist):
    """Half the L1 distance between the two pmfs."""
    _check_same(p, q)
    a = _common_arith(p, q)
    return sum((abs(a.num(x) - a.num(y)) for x, y in zip(p.pmf, q.pmf)), a.zero()) / 2


def chi_squared(p: UnivariateDist, q: UnivariateDist):
    """``sum_x p(x)^2 / q(x) - 1``."""
    _check_same(p, q)
    a = _common_arith(p, q)
    total = a.zero()
    for x, (px, qx) in enumerate(zip(p.pmf, q.pmf)):
        if qx == 0:
            if px != 0:
                raise SupportError(f"q({x}) = 0 but p({x}) = {px}")
            continue
        total += a.num(px) ** 2 / a.num(qx)
    return total - 1


def raw_moment(p: UnivariateDist, i: int):
    return sum((px * x ** i for x, px in enumerate(p.pmf)), p.arith.zero())


def central_moment_about(p: UnivariateDist, i: int, center):
    return sum((px * (x - center) ** i for x, px in enumerate(p.pmf)), p.arith.zero())


def kravchuk_moment(p: UnivariateDist, t: int):
    """``E_p[K_t(X; m)]``."""
    if not 0 <= t <= p.m:
        raise ValueError(f"Kravchuk index t={t} outside [0, {p.m}]")
    return sum((px * kravchuk_value(t, p.m, x) for x, px in enumerate(p.pmf)), p.arith.zero())


def chi_squared_kravchuk(p: UnivariateDist):
    """``sum_{t>=1} E_p[K_t]^2 / C(m, t)``; equals ``chi_squared(p, Bin(m, 1/2))``."""
    return sum((kravchuk_moment(p, t) ** 2 / comb(p.m, t) for t in range(1, p.m + 1)), p.arith.zero())


# -- derivative facts ------------------------------------------------------------


def binom_mass(m: int, x: int, delta, arith: Arith = EXACT_ARITH):
    """``F_{m,x}(delta) = C(m,x) (1/2+delta)^x (1/2-delta)^(m-x)``."""
    delta = arith.num(delta)
    half = arith.num(Fraction(1, 2))
    return comb(m, x) * (half + delta) ** x * (half - delta) ** (m - x)


def binom_deriv(m: int, x: int, delta, order: int, arith: Arith = EXACT_ARITH):
    """Closed-form first or second derivative of ``F_{m,x}`` at ``delta``."""
    delta = arith.num(delta)
    half = arith.num(Fraction(1, 2))
    if not abs(delta) < half:
        raise ValueError("delta must lie in (-1/2, 1/2)")
    f = binom_mass(m, x, delta, arith)
    dev = x - (delta + half) * m
    denom = half * half - delta * delta
    if order == 1:
        return f * dev / denom
    if order == 2:
        return f * (dev * dev + 2 * delta * dev + m * (delta * delta - half * half)) / denom ** 2
    raise ValueError("order must be 1 or 2")


def ising_mass(m: int, x: int, delta, arith: Arith = Arith("float")):
    """``G_{m,x}(delta) = IS(m, delta)(x)``."""
    return ising_sum(m, delta, arith).pmf[x]


def ising_deriv(m: int, x: int, delta, order: int, arith: Arith = Arith("float")):
    """First or second derivative of ``G_{m,x}`` at ``delta``."""
    d = ising_sum(m, delta, arith)
    a = d.arith
    hs = [a.num(ising_h(m, y)) for y in range(m + 1)]
    mean = sum((p * h for p, h in zip(d.pmf, hs)), a.zero())
    dev = hs[x] - mean
    if order == 1:
        return d.pmf[x] * dev
    if order == 2:
        var = sum((p * (h - mean) ** 2 for p, h in zip(d.pmf, hs)), a.zero())
        return d.pmf[x] * (dev * dev - var)
    raise ValueError("order must be 1 or 2")


def finite_difference(f: Callable, at, step, order: int):
    """Central difference estimate of the first or second derivative of ``f``."""
    if order == 1:
        return (f(at + step) - f(at - step)) / (2 * step)
    if order == 2:
        return (f(at + step) - 2 * f(at) + f(at - step)) / (step * step)
    raise ValueError("order must be 1 or 2")


FD_STEP_EXP = -24


def derivative_audit(ms: Sequence[int] = range(1, 11), deltas=(0, "1e-3", "-1e-3", "1e-2", "-1e-2"),
                     arith: Arith = Arith("float", 256), rtol: float = 1e-8) -> AuditReport:
    """Compare both closed-form derivative families with central differences.

    Error is measured relative to ``max(|closed form|, F(delta))``, the
    function's own scale, so that vanishing derivatives stay well posed.
    """
    arith = arith.float_ctx()
    step = arith.mp.ldexp(arith.mp.mpf(1), FD_STEP_EXP)
    rep = AuditReport("derivatives")
    worst = {"binom": 0.0, "ising": 0.0}
    for m in ms:
        for dtext in deltas:
            delta = arith.num(dtext)
            for x in range(m + 1):
                for order in (1, 2):
                    cf = binom_deriv(m, x, delta, order, arith)
                    fd = finite_difference(lambda d: binom_mass(m, x, d, arith), delta, step, order)
                    scale = max(abs(cf), binom_mass(m, x, delta, arith))
                    worst["binom"] = max(worst["binom"], float(abs(cf - fd) / scale))
                    if abs(delta) + step < arith.num(Fraction(1, m)):
                        cf = ising_deriv(m, x, delta, order, arith)
                        fd = finite_difference(lambda d: ising_mass(m, x, d, arith), delta, step, order)
                        scale = max(abs(cf), ising_mass(m, x, delta, arith))
                        worst["ising"] = max(worst["ising"], float(abs(cf - fd) / scale))
    rep.check("binom_deriv_vs_fd", worst["binom"] <= rtol, worst["binom"], rtol)
    rep.check("ising_deriv_vs_fd", worst["ising"] <= rtol, worst["ising"], rtol)
    return rep


def ising_ratio_audit(m: int, delta, arith: Arith = Arith("float")) -> AuditReport:
    """Mass ratio ``G(delta/m)/G(0)`` against its constant-free upper bound ``exp(h delta / m)``."""
    arith = arith.float_ctx()
    delta = arith.num(delta)
    base = uniform_binomial(m, arith)
    tilted = ising_sum(m, delta / m, arith)
    rep = AuditReport(f"ising_ratio m={m}")
    worst = None
    for x in range(m + 1):
        ratio = tilted.pmf[x] / base.pmf[x]
        upper = arith.mp.exp(arith.num(ising_h(m, x)) * delta / m)
        slack = upper - ratio
        worst = slack if worst is None else min(worst, slack)
        rep.values[f"ratio[{x}]"] = ratio
        rep.values[f"lower_shape[{x}]"] = ratio / upper
    rep.check("ratio_upper_bound", worst >= -arith.tolerance(4), worst, 0, "min over x of upper - ratio")
    return rep


# -- TV slope audit --------------------------------------------------------------


def _tv_projection(kind: str, n: int, m: int, delta, arith: Arith):
    if kind == "binary":
        eps = delta / arith.mp.sqrt(m)
        return tv_distance(uniform_binomial(n, arith), tilted_binomial(n, eps, arith))
    if kind == "ising":
        return tv_distance(ising_sum(n, 0, arith), ising_sum(n, delta / m, arith))
    raise ValueError(f"unknown kind {kind!r}")


def loglog_slope(xs: Sequence, ys: Sequence) -> float:
    lx = [math.log(to_float(x)) for x in xs]
    ly = [math.log(to_float(y)) for y in ys]
    mx, my = sum(lx) / len(lx), sum(ly) / len(ly)
    sxx = sum((a - mx) ** 2 for a in lx)
    sxy = sum((a - mx) * (b - my) for a, b in zip(lx, ly))
    return sxy / sxx


def tv_slope_audit(kind: str, n: int, m: int, delta_grid: Sequence, arith: Arith = Arith("float"),
                   slope_band=(0.95, 1.05)) -> AuditReport:
    """Log-log slope of the projected TV distance against ``delta``.

    ``binary``: d_TV(Bin(n,1/2), Bin(n,1/2+delta/sqrt(m))).
    ``ising``:  d_TV(IS(n,0), IS(n,delta/m)).
    """
    arith = arith.float_ctx()
    grid = [arith.num(d) for d in delta_grid]
    if len(grid) < 4 or any(d <= 0 for d in grid):
        raise ValueError("delta grid needs at least 4 strictly positive points")
    if max(grid) / min(grid) < 100:
        raise ValueError("delta grid must span at least two decades")
    tvs = [_tv_projection(kind, n, m, d, arith) for d in grid]
    slope = loglog_slope(grid, tvs)
    rep = AuditReport(f"tv_slope {kind} n={n} m={m}")
    rep.values["slope"] = slope
    for d, tv in zip(grid, tvs):
        rep.values[f"tv/delta@{to_float(d):.3g}"] = tv / d
    lo, hi = slope_band
    rep.check("slope_in_band", lo <= slope <= hi, slope, f"[{lo}, {hi}]")
    return rep
