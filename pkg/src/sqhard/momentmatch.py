"""Moment-matched one-dimensional distributions.

Given a target pmf ``H_delta`` on {0..m} (a tilted binomial or an Ising-sum law),
build ``A = H_delta + q`` where ``q`` is supported on the central integer
interval ``[L, U-1]`` and is the unique polynomial of degree <= k with

    sum_{x=L}^{U-1} x^i q(x) = sum_{x=0}^{m} (H_0(x) - H_delta(x)) x^i,   0 <= i <= k,

so that ``A`` matches the first k raw moments of ``H_0 = Bin(m, 1/2)``. The
polynomial ``p`` with ``q(x) = integral_x^{x+1} p`` and its Legendre expansion
on ``[L, U]`` are recovered for the norm audits.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from math import comb
from typing import List, Optional, Sequence, Tuple

from .orthopoly import Poly, abs_integral, legendre_value, poly_inner_legendre, sup_abs
from .report import AuditReport
from .scalar import EXACT_ARITH, Arith, to_float
from .univariate import (
    MOMENT_MATCHED, UnivariateDist, chi_squared, ising_sum, kravchuk_moment, raw_moment, tilted_binomial,
    tv_distance, uniform_binomial,
)

log = logging.getLogger(__name__)

BINARY = "binary"
ISING = "ising"
DEFAULT_C_C = Fraction(1, 4)
MAX_DOUBLINGS = 4


class InfeasibleInterval(ValueError):
    pass


class NegativityError(ValueError):
    """Constructed pmf went negative; carries the offending point and value."""

    def __init__(self, x: int, value, config=None):
        super().__init__(f"A({x}) = {to_float(value):.6g} < 0")
        self.x = x
        self.value = value
        self.config = config


class SingularSystem(ArithmeticError):
    pass


@dataclass(frozen=True)
class MatchConfig:
    """``shift`` is eps (coordinate bias) for binary targets and delta for Ising targets.

    Binary target: ``Bin(m, 1/2 + eps)``; the reported delta is ``eps * sqrt(m)``.
    Ising target: ``IS(m, delta / m)``.
    ``C`` fixes the interval half-width fraction; ``None`` picks it from ``c_C``.
    """

    m: int
    k: int
    target: str = BINARY
    shift: object = Fraction(0)
    C: Optional[Fraction] = None
    c_C: Fraction = DEFAULT_C_C
    arith: Arith = EXACT_ARITH
    escape_hatch: bool = False

    def __post_init__(self):
        if self.m < 1 or self.k < 0:
            raise ValueError("need m >= 1 and k >= 0")
        if self.target not in (BINARY, ISING):
            raise ValueError(f"unknown target kind {self.target!r}")
        if self.target == ISING and self.arith.exact:
            object.__setattr__(self, "arith", self.arith.float_ctx())
        object.__setattr__(self, "shift", self.arith.num(self.shift))
        if self.C is not None:
            object.__setattr__(self, "C", Fraction(self.C))

    @property
    def delta(self):
        """The nominal delta of the instance (eps*sqrt(m) for binary)."""
        if self.target == BINARY:
            f = self.arith.float_ctx()
            return f.num(self.shift) * f.mp.sqrt(self.m)
        return self.shift


@dataclass
class MatchResult:
    config: MatchConfig
    A: UnivariateDist
    target: UnivariateDist
    reference: UnivariateDist
    p: Poly
    q: Poly
    q_values: List
    lower: int
    upper: int
    C: Fraction
    legendre_coeffs: List = field(default_factory=list)
    degraded: bool = False
    attempts: int = 1
    diagnostics: AuditReport = field(default_factory=lambda: AuditReport("construct"))

    @property
    def points(self) -> range:
        return range(self.lower, self.upper)


# -- interval --------------------------------------------------------------------


def choose_interval(m: int, delta, c_C=DEFAULT_C_C, k: Optional[int] = None) -> Tuple[Fraction, int, int]:
    """Return ``(C, L, U)`` with integer points ``L..U-1`` and ``U = m - L``.

    ``C0 = c_C sqrt(ln(1/delta)/m)``, ``L = round((1/2 - C0) m)`` (half rounds up),
    clamped at 0, and ``C = (m/2 - L)/m``.
    """
    delta = float(delta)
    if not 0 < delta < 1:
        raise InfeasibleInterval(f"delta={delta} must lie in (0, 1) to choose C automatically")
    c0 = float(c_C) * math.sqrt(math.log(1 / delta) / m)
    return interval_from_c0(m, c0, k)


def interval_from_c0(m: int, c0: float, k: Optional[int] = None) -> Tuple[Fraction, int, int]:
    lower = max(0, math.floor((0.5 - c0) * m + 0.5))
    upper = m - lower
    C = Fraction(m - 2 * lower, 2 * m)
    if C <= 0 or (k is not None and upper - lower <= k):
        raise InfeasibleInterval(
            f"interval [{lower}, {upper - 1}] has {upper - lower} points, need more than k={k} (C0={c0:.4g})")
    return C, lower, upper


def interval_from_C(m: int, C, k: Optional[int] = None) -> Tuple[Fraction, int, int]:
    C = Fraction(C)
    if not 0 < C <= Fraction(1, 2):
        raise InfeasibleInterval(f"C={C} must lie in (0, 1/2]")
    lo = (Fraction(1, 2) - C) * m
    if lo.denominator != 1:
        raise InfeasibleInterval(f"(1/2 - C) m = {lo} is not an integer")
    lower = int(lo)
    upper = m - lower
    if k is not None and upper - lower <= k:
        raise InfeasibleInterval(f"interval [{lower}, {upper - 1}] has {upper - lower} points, need more than k={k}")
    return C, lower, upper


# -- targets and linear algebra ------------------------------------------------


def target_pair(cfg: MatchConfig) -> Tuple[UnivariateDist, UnivariateDist]:
    """``(H_0, H_delta)``: the reference Bin(m, 1/2) and the perturbed target."""
    if cfg.target == BINARY:
        return uniform_binomial(cfg.m, cfg.arith), tilted_binomial(cfg.m, cfg.shift, cfg.arith)
    return uniform_binomial(cfg.m, cfg.arith), ising_sum(cfg.m, cfg.shift / cfg.m, cfg.arith)


def moment_targets(cfg: MatchConfig, center=0) -> List:
    """``b_i = sum_x (H_0(x) - H_delta(x)) (x - center)^i`` for ``0 <= i <= k``."""
    h0, hd = target_pair(cfg)
    diff = [a - b for a, b in zip(h0.pmf, hd.pmf)]
    c = cfg.arith.num(center)
    return [sum((d * (x - c) ** i for x, d in enumerate(diff)), cfg.arith.zero()) for i in range(cfg.k + 1)]


def solve_linear(matrix: Sequence[Sequence], rhs: Sequence) -> List:
    """Gaussian elimination with partial pivoting; exact on Fractions."""
    n = len(rhs)
    a = [list(row) + [rhs[i]] for i, row in enumerate(matrix)]
    for col in range(n):
        piv = max(range(col, n), key=lambda r: abs(a[r][col]))
        if a[piv][col] == 0:
            raise SingularSystem(f"singular system at column {col}")
        a[col], a[piv] = a[piv], a[col]
        for r in range(col + 1, n):
            f = a[r][col] / a[col][col]
            if f:
                for c in range(col, n + 1):
                    a[r][c] = a[r][c] - f * a[col][c]
    out = [None] * n
    for r in range(n - 1, -1, -1):
        s = a[r][n]
        for c in range(r + 1, n):
            s = s - a[r][c] * out[c]
        out[r] = s / a[r][r]
    return out


def solve_q(points: Sequence[int], b: Sequence, arith: Arith = EXACT_ARITH, center=0) -> Poly:
    """Unique ``q`` of degree ``len(b)-1`` with ``sum_{x in points} (x-center)^i q(x) = b_i``.

    ``b`` must be expressed in the same shifted basis. Returns ``q`` in the
    monomial basis of ``x``.
    """
    k = len(b) - 1
    if len(points) <= k:
        raise SingularSystem(f"{len(points)} points cannot determine a degree-{k} polynomial")
    c = arith.num(center)
    powers = [[arith.num(x) - c] for x in points]
    for row in powers:
        for _ in range(2 * k):
            row.append(row[-1] * row[0])
    sums = [sum((row[j - 1] if j else arith.one() for row in powers), arith.zero()) for j in range(2 * k + 1)]
    gram = [[sums[i + j] for j in range(k + 1)] for i in range(k + 1)]
    coef = solve_linear(gram, [arith.num(v) for v in b])
    shifted = Poly(coef)
    return shifted.compose_affine(arith.one(), -c) if center else shifted


def q_to_p(q: Poly) -> Poly:
    """Invert ``q(x) = integral_x^{x+1} p(t) dt`` by back substitution.

    ``q_j = sum_{i>=j} p_i C(i+1, j)/(i+1)``; the diagonal coefficient is 1.
    """
    qc = list(q.coeffs)
    k = len(qc) - 1
    p = [None] * (k + 1)
    for j in range(k, -1, -1):
        s = qc[j]
        for i in range(j + 1, k + 1):
            s = s - p[i] * comb(i + 1, j) / (i + 1)
        p[j] = s
    return Poly(p)


# -- construction ----------------------------------------------------------------


def _resolve_interval(cfg: MatchConfig, c_C) -> Tuple[Fraction, int, int]:
    if cfg.C is not None:
        return interval_from_C(cfg.m, cfg.C, cfg.k)
    return choose_interval(cfg.m, to_float(cfg.delta), c_C, cfg.k)


def regime_report(cfg: MatchConfig, rep: AuditReport, C) -> None:
    """Record the asymptotic-regime conditions (with unit constants); never fatal."""
    delta = to_float(cfg.delta)
    if not 0 < delta < 1:
        return
    lg = math.log(1 / delta)
    need = max(lg ** 3, cfg.k ** 2 / lg)
    rep.values["regime.m_required_unit_const"] = need
    rep.values["regime.k2_over_C_sqrt_m"] = cfg.k ** 2 / (float(C) * math.sqrt(cfg.m))
    if cfg.m < need:
        log.warning("m=%d below the asymptotic regime (%.3g with unit constants)", cfg.m, need)


def _build(cfg: MatchConfig, C, lower: int, upper: int) -> MatchResult:
    a = cfg.arith
    h0, hd = target_pair(cfg)
    points = list(range(lower, upper))
    center = Fraction(cfg.m, 2) if not a.exact else 0
    b = moment_targets(cfg, center)
    if all(v == 0 for v in b):
        q = Poly()
    else:
        q = solve_q(points, b, a, center)
    p = q_to_p(q) if not q.is_zero() else Poly()
    qv = [q(a.num(x)) if not q.is_zero() else a.zero() for x in points]
    pmf = list(hd.pmf)
    for x, v in zip(points, qv):
        pmf[x] = pmf[x] + v
    A = UnivariateDist(cfg.m, tuple(pmf), MOMENT_MATCHED,
                       {"target": cfg.target, "shift": cfg.shift, "k": cfg.k, "C": C}, a)
    res = MatchResult(cfg, A, hd, h0, p, q, qv, lower, upper, Fraction(C))
    half_width = a.num(Fraction(C) * cfg.m)
    res.legendre_coeffs = [poly_inner_legendre(p.convert(a) if not a.exact else p, i, a.num(Fraction(cfg.m, 2)),
                                               half_width) for i in range(cfg.k + 1)]
    return res


def construct_A(cfg: MatchConfig) -> MatchResult:
    """Build the moment-matched distribution, retrying wider intervals on negativity.

    With ``cfg.C`` unset the constant ``c_C`` is doubled up to four times when
    the interval is too short or the pmf goes negative.
    """
    if cfg.shift == 0 or cfg.k == 0:
        return _trivial(cfg)
    attempts = 0
    c_C = Fraction(cfg.c_C)
    last_error: Exception = InfeasibleInterval("no attempt made")
    for _ in range(MAX_DOUBLINGS + 1 if cfg.C is None else 1):
        attempts += 1
        try:
            C, lower, upper = _resolve_interval(cfg, c_C)
        except InfeasibleInterval as exc:
            last_error = exc
            c_C *= 2
            continue
        if cfg.escape_hatch and cfg.k ** 2 >= float(C) * math.sqrt(cfg.m):
            res = _trivial(cfg, degraded=True, C=C, lower=lower, upper=upper)
            res.attempts = attempts
            return res
        res = _build(cfg, C, lower, upper)
        res.attempts = attempts
        neg = [(x, v) for x, v in enumerate(res.A.pmf) if v < 0]
        if neg:
            x, v = min(neg, key=lambda t: t[1])
            last_error = NegativityError(x, v, cfg)
            log.info("attempt %d (C=%s): A(%d)=%.3g < 0", attempts, C, x, to_float(v))
            c_C *= 2
            continue
        res.diagnostics = _post_checks(res)
        regime_report(cfg, res.diagnostics, C)
        res.diagnostics.values["attempts"] = attempts
        res.diagnostics.values["c_C"] = c_C
        return res
    raise last_error


def _trivial(cfg: MatchConfig, degraded: bool = False, C=None, lower=None, upper=None) -> MatchResult:
    """No perturbation needed (shift 0 or k 0), or the small-m escape hatch returning Bin(m, 1/2)."""
    a = cfg.arith
    h0, hd = target_pair(cfg)
    if C is None:
        try:
            if cfg.C is not None:
                C, lower, upper = interval_from_C(cfg.m, cfg.C)
            else:
                C, lower, upper = choose_interval(cfg.m, to_float(cfg.delta), cfg.c_C)
        except InfeasibleInterval:
            C, lower, upper = Fraction(1, 2), 0, cfg.m
    base = h0 if degraded else hd
    A = UnivariateDist(cfg.m, base.pmf, MOMENT_MATCHED,
                       {"target": cfg.target, "shift": cfg.shift, "k": cfg.k, "C": C, "degraded": degraded}, a)
    res = MatchResult(cfg, A, hd, h0, Poly(), Poly(), [a.zero()] * (upper - lower), lower, upper, Fraction(C),
                      [a.zero()] * (cfg.k + 1), degraded=degraded)
    res.diagnostics = _post_checks(res)
    return res


def moment_tolerance(arith: Arith):
    return arith.tolerance(4)


def _post_checks(res: MatchResult) -> AuditReport:
    cfg, a = res.config, res.config.arith
    rep = AuditReport("construct")
    rep.check("normalized", a.close(res.A.total(), 1), res.A.total() - 1, a.tolerance(2))
    rep.check("nonnegative", res.A.is_nonnegative(), min(res.A.pmf), 0)
    worst = a.zero()
    ok = True
    for i in range(1, cfg.k + 1):
        mine, ref = raw_moment(res.A, i), raw_moment(res.reference, i)
        ok &= a.close(mine, ref, 4)
        worst = max(worst, abs(mine - ref) / max(abs(ref), a.one()))
    rep.check("moments_match", ok, worst, moment_tolerance(a))
    rep.values["nu"] = kravchuk_residual(res.A, cfg.k)
    if res.degraded:
        rep.values["degraded"] = True
    return rep


def kravchuk_residual(A: UnivariateDist, k: int):
    """``nu = max_{1<=t<=k} |E_A[K_t]|`` (Condition 3.7 slack)."""
    vals = [abs(kravchuk_moment(A, t)) for t in range(1, k + 1)]
    return max(vals) if vals else A.arith.zero()


# -- audits ----------------------------------------------------------------------


def beta_coeffs(res: MatchResult) -> List:
    """``beta_i = |sum_x (H_0(x) - H_delta(x)) P_i((x - m/2)/(Cm))|``."""
    a, m = res.config.arith, res.config.m
    half_width = a.num(res.C * m)
    mid = a.num(Fraction(m, 2))
    diff = [x0 - xd for x0, xd in zip(res.reference.pmf, res.target.pmf)]
    return [abs(sum((d * legendre_value(i, (a.num(x) - mid) / half_width) for x, d in enumerate(diff)), a.zero()))
            for i in range(res.config.k + 1)]


def envelopes(cfg: MatchConfig, C) -> dict:
    """Claimed orders of growth with all constants set to 1."""
    f = cfg.arith.float_ctx()
    delta, k, m, C = abs(f.num(cfg.delta)), cfg.k, cfg.m, f.num(C)
    if delta == 0 or delta >= 1:
        return {}
    lg = f.mp.log(1 / delta)
    if cfg.target == BINARY:
        return {
            "L1": delta * k ** 2 / (C * f.mp.sqrt(m)),
            "sup": delta * f.mp.mpf(k) ** 2.5 / (C ** 2 * f.mp.mpf(m) ** 1.5),
            "tv": delta * k ** 2 / f.mp.sqrt(lg),
            "chi2": delta,
        }
    return {
        "L1": delta * k ** 3 / (C ** 2 * m),
        "sup": delta * f.mp.mpf(k) ** 3.5 / (C ** 3 * m ** 2),
        "tv": delta * k ** 3 / lg,
        "chi2": delta,
    }


def audit_bounds(res: MatchResult, sample_points: int = 101) -> AuditReport:
    """Measure every quantity the norm and divergence bounds talk about.

    Hard checks are identities (TV equals half the L1 mass of q, a_0 = 0, the
    two representations of p agree, the constant-free Legendre-coefficient
    inequality); growth-rate claims are reported as ratios only.
    """
    cfg, a = res.config, res.config.arith
    m, k = cfg.m, cfg.k
    rep = AuditReport(f"bounds {cfg.target} m={m} k={k}")
    rep.extend(res.diagnostics)
    lo, hi = res.lower, res.upper
    f = a.float_ctx()

    l1 = abs_integral(res.p, lo, hi, a) if not res.p.is_zero() else a.zero()
    sup, argmax = sup_abs(res.p, lo, hi, a) if not res.p.is_zero() else (a.zero(), Fraction(m, 2))
    tv = tv_distance(res.A, res.target)
    chi2 = chi_squared(res.A, res.reference)
    rep.values.update({"C": res.C, "interval": f"[{lo}, {hi - 1}]", "delta": cfg.delta,
                       "L1": l1, "sup": sup, "tv": tv, "chi2": chi2})

    half_q = sum((abs(v) for v in res.q_values), a.zero()) / 2
    rep.check("tv_equals_half_q_mass", a.close(tv, half_q), tv - half_q, a.tolerance(2))

    coeffs = res.legendre_coeffs
    for i, ai in enumerate(coeffs):
        rep.values[f"a[{i}]"] = ai
    rep.check("a0_vanishes", a.close(coeffs[0], 0) or abs(coeffs[0]) <= a.tolerance(4), coeffs[0], 0)

    # p(t) == sum a_i P_i((t - m/2)/(Cm)) at sample points across the interval
    mid, half_width = a.num(Fraction(m, 2)), a.num(res.C * m)
    worst = a.zero()
    for s in range(sample_points):
        t = a.num(lo) + (a.num(hi) - a.num(lo)) * s / (sample_points - 1)
        via_legendre = sum((ai * legendre_value(i, (t - mid) / half_width) for i, ai in enumerate(coeffs)), a.zero())
        direct = res.p(t) if not res.p.is_zero() else a.zero()
        worst = max(worst, abs(direct - via_legendre))
    scale = max([abs(c) for c in res.p.coeffs] + [a.zero()]) if not res.p.is_zero() else a.zero()
    rep.check("legendre_representation", worst <= a.tolerance(2) * max(scale, a.one()), worst, a.tolerance(2))

    betas = beta_coeffs(res)
    ok = True
    fl1 = f.num(l1)
    for i in range(1, k + 1):
        rep.values[f"beta[{i}]"] = betas[i]
        # gamma_i <= (1/(Cm)) max|P_i'| L1, with max|P_i'| = i(i+1)/2 on [-1, 1]
        bound = f.num(2 * i + 1) / (2 * f.num(half_width)) * (
            f.num(betas[i]) + f.num(i * (i + 1)) / (2 * f.num(half_width)) * fl1)
        slack = bound - abs(f.num(coeffs[i]))
        ok &= slack >= -f.tolerance(4) * max(bound, f.one())
        rep.values[f"a_bound[{i}]"] = bound
    if k:
        rep.check("legendre_coeff_bound", ok, detail="|a_i| <= (2i+1)/(2Cm) (beta_i + i(i+1)/(2Cm) L1)")

    nu = kravchuk_residual(res.A, k)
    # K_t takes values up to C(m, t) in magnitude
    nu_tol = moment_tolerance(a) * comb(m, m // 2)
    rep.check("kravchuk_moments_vanish", nu <= nu_tol, nu, nu_tol)

    if cfg.target == ISING:
        t_asym = max(abs(res.target.pmf[x] - res.target.pmf[m - x]) for x in range(m + 1))
        rep.check("target_symmetric", t_asym <= a.tolerance(2), t_asym, a.tolerance(2))
        # The unit cells [x, x+1] of the interval are mirror images under x -> m-1-x,
        # not x -> m-x, so A itself is only approximately symmetric.
        rep.values["A_asymmetry"] = max(abs(res.A.pmf[x] - res.A.pmf[m - x]) for x in range(m + 1))
        odd = max([betas[i] for i in range(1, k + 1, 2)] + [a.zero()])
        rep.check("odd_beta_vanish", odd <= a.tolerance(4), odd, a.tolerance(4))

    env = envelopes(cfg, res.C)
    for key, measured in (("L1", l1), ("sup", sup), ("tv", tv), ("chi2", chi2)):
        if key in env:
            rep.ratio(key, f.num(measured), env[key], "measured / claim-without-constant")
    return rep


def _sweep_config(m: int, k: int, target: str, d: Fraction, arith: Optional[Arith], C=None, c_C=DEFAULT_C_C):
    if target == BINARY:
        cfg_arith = arith or EXACT_ARITH
        root = math.isqrt(m)
        if root * root == m:
            shift = d / root
        else:
            cfg_arith = cfg_arith.float_ctx()
            shift = cfg_arith.num(d) / cfg_arith.mp.sqrt(m)
    else:
        cfg_arith = (arith or Arith("float")).float_ctx()
        shift = d
    if C is None:
        C = choose_interval(m, float(d), c_C, k)[0]
    return MatchConfig(m, k, target, shift, C=C, arith=cfg_arith)


def ratio_sweep(m: int, k: int, target: str, deltas: Sequence, arith: Optional[Arith] = None,
                factor: float = 4.0) -> AuditReport:
    """chi^2/delta and TV/delta across a delta sweep; pass bar: every ratio within ``factor`` of the median.

    ``deltas`` are nominal (binary instances use eps = delta/sqrt(m)). The
    interval is held fixed across the sweep: ``C = c_C sqrt(ln(1/delta_g)/m)`` at
    the geometric mean ``delta_g`` of the grid, with ``c_C`` the smallest doubling
    of 1/4 for which every point of the sweep is nonnegative.
    """
    ds = [Fraction(str(d)) if isinstance(d, float) else Fraction(d) for d in deltas]
    rep = AuditReport(f"ratio_sweep {target} m={m} k={k}")
    c_C = DEFAULT_C_C
    results = None
    geo = math.exp(sum(math.log(float(d)) for d in ds) / len(ds))
    for _ in range(MAX_DOUBLINGS + 1):
        try:
            C = choose_interval(m, geo, c_C, k)[0]
            results = [construct_A(_sweep_config(m, k, target, d, arith, C=C)) for d in ds]
            break
        except (NegativityError, InfeasibleInterval):
            c_C *= 2
    if results is None:
        raise NegativityError(-1, 0, None)
    rep.values["c_C"] = c_C
    rep.values["C"] = results[0].C
    chi_r, tv_r = [], []
    for d, res in zip(ds, results):
        dd = to_float(d)
        chi_r.append(to_float(chi_squared(res.A, res.reference)) / dd)
        tv_r.append(to_float(tv_distance(res.A, res.target)) / dd)
        rep.values[f"chi2/delta@{dd:g}"] = chi_r[-1]
        rep.values[f"tv/delta@{dd:g}"] = tv_r[-1]
        rep.values[f"C@{dd:g}"] = res.C
    for name, rs in (("chi2_over_delta", chi_r), ("tv_over_delta", tv_r)):
        srt = sorted(rs)
        n = len(srt)
        med = srt[n // 2] if n % 2 else (srt[n // 2 - 1] + srt[n // 2]) / 2
        spread = max(max(r / med, med / r) for r in rs) if med > 0 and all(r > 0 for r in rs) else math.inf
        rep.values[f"{name}.median"] = med
        rep.check(f"{name}_within_factor", spread <= factor, spread, factor)
    return rep
