"""Statistical-query side: near-orthogonal subset families, a STAT(tau) oracle, decision harness, budgets."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.stats import binomtest

from .junta import character, correlation_formula, mask_of, tv_tables
from .report import AuditReport
from .scalar import EXACT_ARITH, Arith, to_float
from .univariate import UnivariateDist, chi_squared, uniform_binomial

GRID_ROUND = "grid-round"
TOWARD_REFERENCE = "toward-reference"
SEEDED_UNIFORM = "seeded-uniform"
MODES = (GRID_ROUND, TOWARD_REFERENCE, SEEDED_UNIFORM)

H0 = "H0"
H1 = "H1"


# -- subset families -------------------------------------------------------------


def intersection_ok(r: int, m: int, c: Fraction) -> bool:
    """``r < m^(1-c)`` decided in integers: with ``1 - c = a/b`` this is ``r^b < m^a``."""
    e = 1 - Fraction(c)
    return r ** e.denominator < m ** e.numerator


def theoretical_cap(m: int, c) -> int:
    """``floor(2^(m^(1-2c)/4))``, the existential family size."""
    return int(math.floor(2 ** (m ** (1 - 2 * float(c)) / 4)))


def hypothesis_holds(M: int, m: int, c) -> bool:
    return M > 2 * m ** (1 + float(c))


@dataclass
class SubsetFamily:
    M: int
    m: int
    c: Fraction
    subsets: List[Tuple[int, ...]]
    diagnostic: str = ""

    @property
    def threshold(self) -> float:
        return self.m ** (1 - float(self.c))

    @property
    def cap(self) -> int:
        return theoretical_cap(self.m, self.c)

    def max_intersection(self) -> int:
        return max((len(set(a) & set(b)) for a, b in itertools.combinations(self.subsets, 2)), default=0)

    def __len__(self) -> int:
        return len(self.subsets)


def family_validator(fam: SubsetFamily) -> AuditReport:
    rep = AuditReport(f"family M={fam.M} m={fam.m} c={fam.c}")
    rep.values.update({"size": len(fam), "theoretical_cap": fam.cap, "threshold": fam.threshold,
                       "max_intersection": fam.max_intersection()})
    sizes_ok = all(len(set(S)) == fam.m and all(0 <= i < fam.M for i in S) for S in fam.subsets)
    rep.check("subset_shape", sizes_ok)
    bad = [(a, b) for a, b in itertools.combinations(range(len(fam)), 2)
           if not intersection_ok(len(set(fam.subsets[a]) & set(fam.subsets[b])), fam.m, fam.c)]
    rep.check("pairwise_intersections", not bad, fam.max_intersection(), fam.threshold,
              f"violating pairs {bad[:5]}" if bad else "")
    return rep


def build_family(M: int, m: int, c, target_size: int, seed: int = 0, strategy: str = "rejection",
                 max_draws: int = 100_000, check_hypothesis: bool = True) -> SubsetFamily:
    """Collect ``m``-subsets of ``range(M)`` with pairwise intersections below ``m^(1-c)``.

    Falls short of ``target_size`` only after ``max_draws`` candidates; the returned
    family then carries a diagnostic.
    """
    c = Fraction(c)
    if not 0 < c < Fraction(1, 2):
        raise ValueError("c must lie in (0, 1/2)")
    if not 0 < m < M:
        raise ValueError("need 0 < m < M")
    if check_hypothesis and not hypothesis_holds(M, m, c):
        raise ValueError(f"M={M} does not exceed 2*m^(1+c)={2 * m ** (1 + float(c)):.4g}")
    if strategy == "rejection":
        rng = np.random.default_rng(seed)
        candidates = (tuple(sorted(int(i) for i in rng.choice(M, m, replace=False))) for _ in range(max_draws))
    elif strategy == "greedy":
        candidates = itertools.islice(itertools.combinations(range(M), m), max_draws)
    else:
        raise ValueError(f"unknown strategy {strategy!r}")

    chosen: List[Tuple[int, ...]] = []
    sets: List[set] = []
    for cand in candidates:
        if len(chosen) >= target_size:
            break
        cs = set(cand)
        if all(intersection_ok(len(cs & s), m, c) for s in sets):
            chosen.append(cand)
            sets.append(cs)
    diag = ""
    if len(chosen) < target_size:
        diag = f"reached {len(chosen)} of {target_size} after {max_draws} candidates"
    return SubsetFamily(M, m, c, chosen, diag)


# -- STAT(tau) oracle ------------------------------------------------------------


@dataclass
class QueryRecord:
    index: int
    expectation: object
    answer: object


@dataclass
class OracleSession:
    """STAT(tau) oracle over a pmf table; single owner, keeps a query log."""

    table: Sequence
    tau: object = 0
    mode: str = GRID_ROUND
    seed: int = 0
    reference: Optional[Sequence] = None
    arith: Arith = EXACT_ARITH
    log: List[QueryRecord] = field(default_factory=list)

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"unknown adversary mode {self.mode!r}")
        n = len(self.table)
        if n & (n - 1):
            raise ValueError("pmf table length must be a power of two")
        self.tau = self.arith.num(self.tau)
        if self.tau < 0:
            raise ValueError("tolerance must be nonnegative")
        if self.reference is None:
            self.reference = [self.arith.num(Fraction(1, n))] * n
        self._rng = np.random.default_rng(self.seed)

    @property
    def M(self) -> int:
        return len(self.table).bit_length() - 1


def expectation(table: Sequence, f: Sequence) -> object:
    return sum((p * v for p, v in zip(table, f) if p and v), table[0] * 0)


def _check_query(f: Sequence, n: int) -> None:
    if len(f) != n:
        raise ValueError(f"query table has {len(f)} entries, expected {n}")
    if any(v < -1 or v > 1 for v in f):
        raise ValueError("query values must lie in [-1, 1]")


def stat_query(session: OracleSession, f: Sequence) -> object:
    """Answer ``E_D[f]`` up to the session tolerance, perturbed per the adversary mode."""
    _check_query(f, len(session.table))
    a, tau = session.arith, session.tau
    if not a.exact:
        tau = tau * (1 - a.tolerance(2))  # headroom so rounding never pushes |v - E| past tau
    e = expectation(session.table, f)
    if tau == 0:
        v = e
    elif session.mode == GRID_ROUND:
        step = 2 * tau
        q = e / step
        v = step * (math.floor(q + Fraction(1, 2)) if a.exact else a.mp.floor(q + a.num(Fraction(1, 2))))
    elif session.mode == TOWARD_REFERENCE:
        gap = expectation(session.reference, f) - e
        v = e + max(-tau, min(tau, gap))
    else:
        k = int(session._rng.integers(0, 2 ** 53, endpoint=True))
        v = e + tau * (2 * a.num(Fraction(k, 2 ** 53)) - 1)
    session.log.append(QueryRecord(len(session.log), e, v))
    return v


def character_table(M: int, T) -> List[int]:
    mask = T if isinstance(T, int) else mask_of(T)
    return [character(mask, x) for x in range(1 << M)]


def indicator_table(M: int, pred: Callable[[int], bool]) -> List[int]:
    return [1 if pred(x) else 0 for x in range(1 << M)]


# -- decision harness ------------------------------------------------------------

Strategy = Callable[[List[QueryRecord]], Union[Sequence, str]]


def non_adaptive(queries: Sequence[Sequence], rule: Callable[[List], str]) -> Strategy:
    """Strategy issuing ``queries`` in order, then applying ``rule`` to the answers."""
    queries = list(queries)

    def strategy(log: List[QueryRecord]):
        if len(log) < len(queries):
            return queries[len(log)]
        return rule([r.answer for r in log])

    return strategy


def run_strategy(strategy: Strategy, session: OracleSession, max_queries: int = 10_000) -> str:
    for _ in range(max_queries):
        step = strategy(list(session.log))
        if isinstance(step, str):
            if step not in (H0, H1):
                raise ValueError(f"verdict must be {H0!r} or {H1!r}, got {step!r}")
            return step
        stat_query(session, step)
    raise RuntimeError("strategy exceeded the query limit without a verdict")


@dataclass
class HarnessResult:
    mode: str
    trials: int
    successes: int
    p_value: float

    @property
    def rate(self) -> Fraction:
        return Fraction(self.successes, self.trials)

    @property
    def beats_chance(self) -> bool:
        return self.successes * 2 > self.trials and self.p_value < 0.01


def decision_harness(strategy: Strategy, null: Sequence, alternatives: Sequence[Sequence], tau, trials: int,
                     seed: int = 0, modes: Sequence[str] = MODES, arith: Arith = EXACT_ARITH) -> AuditReport:
    """Balanced H0/H1 trials per adversary mode.

    Trials come in pairs sharing one oracle seed: trial ``2j`` hides ``null``, trial
    ``2j+1`` hides a seeded choice among ``alternatives``. Success rates are tested
    against 1/2 with a two-sided binomial test.
    """
    if not alternatives:
        raise ValueError("need at least one alternative")
    if (len(null) - 1).bit_length() > 20:
        raise ValueError("harness limited to M <= 20")
    rep = AuditReport(f"decision_harness trials={trials} tau={to_float(arith.num(tau)):.6g}")
    rng = np.random.default_rng(seed)
    picks = rng.integers(0, len(alternatives), size=trials)
    oracle_seeds = rng.integers(0, 2 ** 63, size=(trials + 1) // 2)
    results = []
    for mode in modes:
        wins = 0
        for t in range(trials):
            hidden, truth = (null, H0) if t % 2 == 0 else (alternatives[int(picks[t])], H1)
            session = OracleSession(hidden, tau, mode, int(oracle_seeds[t // 2]), reference=null, arith=arith)
            wins += run_strategy(strategy, session) == truth
        p = binomtest(wins, trials, 0.5).pvalue
        res = HarnessResult(mode, trials, wins, p)
        results.append(res)
        rep.values[f"{mode}.success_rate"] = res.rate
        rep.values[f"{mode}.p_value"] = p
        rep.values[f"{mode}.beats_chance"] = res.beats_chance
    rep.values["results"] = results
    return rep


# -- budgets and correlation certificates ----------------------------------------


def sq_budget(gamma, beta, s, arith: Arith = EXACT_ARITH) -> Tuple:
    """``(s * gamma / beta, sqrt(2 * gamma))``: query lower bound and oracle tolerance."""
    gamma, beta = arith.num(gamma), arith.num(beta)
    if gamma <= 0 or beta <= 0:
        raise ValueError("gamma and beta must be positive")
    if s < 1:
        raise ValueError("family size must be at least 1")
    two_gamma = 2 * gamma
    try:
        tol = arith.sqrt(two_gamma)
    except ValueError:
        tol = arith.float_ctx().sqrt(two_gamma)
    return s * gamma / beta, tol


def prop_3_10_budget(chi2, nu, m: int, k: int, s: int, arith: Arith = Arith("float")) -> dict:
    """Query budget at the smallest admissible tolerance ``tau = m^(-(k+1)/4) chi2 + k nu^2``."""
    f = arith.float_ctx()
    chi2, nu = f.num(chi2), f.num(nu)
    tau = f.mp.power(m, -f.num(Fraction(k + 1, 4))) * chi2 + k * nu ** 2
    budget, tol = sq_budget(tau, chi2, s, f)
    return {"tau": tau, "gamma": tau, "beta": chi2, "s": s, "budget": budget, "tolerance": tol}


@dataclass
class CorrelationCertificate:
    matrix: List[List]
    gamma: object
    beta: object

    @property
    def size(self) -> int:
        return len(self.matrix)


def family_correlation_matrix(A: UnivariateDist, family: SubsetFamily) -> CorrelationCertificate:
    """Pairwise ``|chi_{U_M}|`` over the family; ``gamma`` is the largest off-diagonal, ``beta`` the diagonal max."""
    subs = family.subsets
    n = len(subs)
    mat = [[None] * n for _ in range(n)]
    for i in range(n):
        for j in range(i, n):
            v = abs(correlation_formula(A, subs[i], subs[j]))
            mat[i][j] = mat[j][i] = v
    zero = A.arith.zero()
    gamma = max((mat[i][j] for i in range(n) for j in range(n) if i != j), default=zero)
    beta = max((mat[i][i] for i in range(n)), default=chi_squared(A, uniform_binomial(A.m, A.arith)))
    return CorrelationCertificate(mat, gamma, beta)


# -- testing from learning -------------------------------------------------------


class SeparationError(ValueError):
    """The separation hypothesis needed for the reduction does not hold."""


REFERENCE = "reference"
ALTERNATIVE = "alternative"


@dataclass
class LearningVerdict:
    verdict: str
    answer: object
    learned_mass: object
    threshold: object
    tv_reference_learned: object


def testing_from_learning(learned: Sequence, reference: Sequence, session: OracleSession, eps, tau=None,
                          alternatives: Sequence[Sequence] = ()) -> LearningVerdict:
    """Decide hidden = reference versus hidden = alternative from one query on ``{x : D'(x) > D(x)}``.

    ``learned`` is an ``eps``-accurate model of the hidden distribution whenever that
    distribution is an alternative.
    """
    a = session.arith
    eps = a.num(eps)
    tau = session.tau if tau is None else a.num(tau)
    gap = 2 * (tau + eps)
    for i, alt in enumerate(alternatives):
        d = tv_tables(reference, alt)
        if d <= gap:
            raise SeparationError(f"alternative {i}: d_TV={to_float(d):.6g} <= 2(tau+eps)={to_float(gap):.6g}")
    d_learned = tv_tables(reference, learned)
    if d_learned <= 2 * tau + eps:
        raise SeparationError(
            f"learned model within {to_float(d_learned):.6g} of the reference; "
            f"no alternative separated by more than 2(tau+eps) can be eps-close to it")
    f = [1 if p > q else 0 for p, q in zip(learned, reference)]
    v = stat_query(session, f)
    mass = expectation(learned, f)
    verdict = REFERENCE if abs(v - mass) > tau + eps else ALTERNATIVE
    return LearningVerdict(verdict, v, mass, tau + eps, d_learned)
