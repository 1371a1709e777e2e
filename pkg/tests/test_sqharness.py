from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from sqhard.junta import JuntaInstance, ProductInstance, fourier_coeff, junta_pmf_table, product_pmf_table, uniform_table
from sqhard.momentmatch import BINARY, MatchConfig, construct_A
from sqhard.scalar import Arith
from sqhard.sqharness import (H0, H1, MODES, SEEDED_UNIFORM, TOWARD_REFERENCE, OracleSession, SeparationError,
                              SubsetFamily, build_family, character_table, decision_harness, expectation,
                              family_correlation_matrix, family_validator, indicator_table, intersection_ok,
                              non_adaptive, prop_3_10_budget, sq_budget, stat_query, theoretical_cap)
from sqhard.sqharness import testing_from_learning as learn_then_test
from sqhard.univariate import chi_squared, tilted_binomial, uniform_binomial

F256 = Arith("float", 256)


@pytest.fixture(scope="module")
def matched4():
    return construct_A(MatchConfig(4, 2, BINARY, Fraction(1, 64))).A


@pytest.fixture(scope="module")
def matched8():
    return construct_A(MatchConfig(8, 4, BINARY, Fraction(1, 64), C=Fraction(3, 8))).A


# families


def test_intersection_rule_is_exact():
    assert intersection_ok(2, 4, Fraction(1, 4))   # 2 < 4^(3/4) ~ 2.83
    assert not intersection_ok(3, 4, Fraction(1, 4))
    assert not intersection_ok(8, 16, Fraction(1, 4))  # 16^(3/4) = 8 exactly
    assert intersection_ok(7, 16, Fraction(1, 4))
    assert theoretical_cap(16, Fraction(1, 4)) == 2


def test_family_examples():
    one = build_family(40, 4, Fraction(1, 4), 1, seed=3)
    assert len(one) == 1 and family_validator(one).passed
    fam = build_family(40, 4, Fraction(1, 4), 8, seed=7)
    assert len(fam) == 8 and fam.max_intersection() <= 2
    assert family_validator(fam).passed
    greedy = build_family(40, 4, Fraction(1, 4), 8, strategy="greedy")
    assert family_validator(greedy).passed and len(greedy) == 8
    assert greedy.subsets == build_family(40, 4, Fraction(1, 4), 8, strategy="greedy").subsets


def test_family_preconditions_and_partial_result():
    with pytest.raises(ValueError):
        build_family(12, 8, Fraction(1, 4), 3)
    partial = build_family(12, 8, Fraction(1, 4), 5, check_hypothesis=False, max_draws=2000)
    assert len(partial) == 3 and "reached 3 of 5" in partial.diagnostic  # complements must be disjoint 4-sets
    assert family_validator(partial).passed
    with pytest.raises(ValueError):
        build_family(40, 4, Fraction(1, 2), 2)


def test_validator_catches_bad_family():
    bad = SubsetFamily(10, 4, Fraction(1, 4), [(0, 1, 2, 3), (0, 1, 2, 4)])
    assert not family_validator(bad).passed


@pytest.mark.parametrize("m", [16, 25])
def test_rejection_reaches_claim_size(m):
    M = int(2 * m ** 1.25) + 1
    cap = theoretical_cap(m, Fraction(1, 4))
    ok = sum(len(build_family(M, m, Fraction(1, 4), cap, seed=s)) == cap for s in range(100))
    assert ok >= 99


# oracle


def test_stat_query_examples(matched4):
    J = JuntaInstance(matched4, (0, 2, 3, 5), 6)
    table = junta_pmf_table(J)
    for mode in MODES:
        v = stat_query(OracleSession(table, Fraction(1, 10), mode, seed=3), [1] * 64)
        assert v == 1 if mode != SEEDED_UNIFORM else abs(v - 1) <= Fraction(1, 10)
        s = OracleSession(table, 0, mode)
        chi = character_table(6, (0, 2))
        assert stat_query(s, chi) == fourier_coeff(J, (0, 2))
        assert len(s.log) == 1 and s.log[0].expectation == s.log[0].answer
    with pytest.raises(ValueError):
        stat_query(OracleSession(table, 0), [2] * 64)
    with pytest.raises(ValueError):
        stat_query(OracleSession(table, 0), [1] * 8)
    with pytest.raises(ValueError):
        OracleSession(table, 0, "lying")


@pytest.mark.parametrize("mode", MODES)
def test_answers_respect_tolerance(mode, matched4):
    M = 5
    table = junta_pmf_table(JuntaInstance(matched4, (0, 1, 3, 4), M))
    tau = Fraction(1, 37)
    s = OracleSession(table, tau, mode, seed=17)
    rng = np.random.default_rng(5)
    vals = rng.integers(-1024, 1024, size=(10 ** 4, 1 << M), endpoint=True)
    for row in vals:
        stat_query(s, [Fraction(int(v), 1024) for v in row])
    assert max(abs(r.answer - r.expectation) for r in s.log) <= tau


def test_float_session_tolerance():
    table = [F256.num(Fraction(1, 8))] * 8
    s = OracleSession(table, Fraction(1, 3), "grid-round", arith=F256)
    v = stat_query(s, [Fraction(1, 2)] * 8)
    assert abs(v - Fraction(1, 2)) <= F256.num(Fraction(1, 3))


def test_low_degree_queries_carry_no_signal(matched8):
    M, k = 10, 4
    rng = np.random.default_rng(0)
    J = junta_pmf_table(JuntaInstance(matched8, (0, 1, 2, 4, 5, 6, 8, 9), M))
    U = uniform_table(M)
    low = [T for T in range(1 << M) if bin(T).count("1") <= k]
    for _ in range(5):
        picks = rng.choice(len(low), 6, replace=False)
        weights = [Fraction(int(w), 6) for w in rng.integers(-1, 2, size=6)]
        f = [sum(w * c for w, c in zip(weights, cs)) for cs in zip(*(character_table(M, low[i]) for i in picks))]
        assert expectation(J, f) == expectation(U, f)


# harness


def test_low_degree_strategy_is_at_chance(matched4):
    M = 6
    fam = [(0, 1, 2, 3), (2, 3, 4, 5), (0, 1, 4, 5)]
    alts = [junta_pmf_table(JuntaInstance(matched4, S, M)) for S in fam]
    queries = [character_table(M, T) for T in range(1, 1 << M) if bin(T).count("1") <= 2]
    strategy = non_adaptive(queries, lambda ans: H1 if sum(ans) > 0 else H0)
    rep = decision_harness(strategy, uniform_table(M), alts, 0, trials=40, seed=1)
    for mode in MODES:
        assert rep.values[f"{mode}.success_rate"] == Fraction(1, 2)
        assert not rep.values[f"{mode}.beats_chance"]


def test_threshold_query_on_true_S_distinguishes():
    M, S = 6, (1, 2, 4, 5)
    alt = junta_pmf_table(JuntaInstance(tilted_binomial(4, Fraction(1, 4)), S, M))
    null = uniform_table(M)
    f = indicator_table(M, lambda x: sum((x >> i) & 1 for i in S) >= 3)
    mid = (expectation(null, f) + expectation(alt, f)) / 2
    strategy = non_adaptive([f], lambda ans: H1 if ans[0] > mid else H0)
    rep = decision_harness(strategy, null, [alt], Fraction(1, 100), trials=40, seed=2)
    for mode in MODES:
        assert rep.values[f"{mode}.success_rate"] == 1
        assert rep.values[f"{mode}.beats_chance"]


def test_huge_tolerance_defeats_everything():
    M, S = 6, (1, 2, 4, 5)
    alt = junta_pmf_table(JuntaInstance(tilted_binomial(4, Fraction(1, 10)), S, M))
    f = indicator_table(M, lambda x: sum((x >> i) & 1 for i in S) >= 3)
    strategy = non_adaptive([f], lambda ans: H1 if ans[0] > Fraction(5, 16) else H0)
    rep = decision_harness(strategy, uniform_table(M), [alt], 1, trials=40, seed=3, modes=[TOWARD_REFERENCE])
    assert rep.values[f"{TOWARD_REFERENCE}.success_rate"] == Fraction(1, 2)


# budgets


def test_sq_budget_examples():
    g = Fraction(1, 8)
    assert sq_budget(g, g, 1) == (1, Fraction(1, 2))
    assert sq_budget(2, 1, 10) == (20, 2)
    b, tol = sq_budget(Fraction(1, 3), Fraction(1, 2), 3)
    assert b == 2 and abs(tol ** 2 - Fraction(2, 3)) < 1e-60
    with pytest.raises(ValueError):
        sq_budget(1, 0, 1)


@given(st.fractions(min_value=Fraction(1, 1000), max_value=10), st.fractions(min_value=Fraction(1, 1000), max_value=10),
       st.integers(1, 10 ** 6), st.integers(0, 5))
def test_sq_budget_monotone(gamma, beta, s, bump):
    base = sq_budget(gamma, beta, s)[0]
    assert sq_budget(gamma, beta, s + bump)[0] >= base
    assert sq_budget(gamma * (1 + bump), beta, s)[0] >= base
    assert sq_budget(gamma, beta / (1 + bump), s)[0] >= base


def test_prop_3_10_arithmetic():
    out = prop_3_10_budget(Fraction(1, 10), Fraction(1, 1000), 16, 4, 100)
    tau = F256.num(Fraction(1, 10)) * F256.mp.power(16, F256.num(-1.25)) + 4 * F256.num(Fraction(1, 1000)) ** 2
    assert abs(out["tau"] - tau) < F256.tolerance(2)
    assert abs(out["budget"] - 100 * tau / F256.num(Fraction(1, 10))) < F256.tolerance(2)


def test_family_correlation_matrix_examples(matched8):
    one = SubsetFamily(20, 8, Fraction(1, 4), [tuple(range(8))])
    cert = family_correlation_matrix(matched8, one)
    assert cert.gamma == 0 and cert.beta == chi_squared(matched8, uniform_binomial(8))
    fam = build_family(40, 8, Fraction(1, 4), 6, seed=4, check_hypothesis=False)
    assert family_correlation_matrix(uniform_binomial(8), fam).beta == 0
    small = SubsetFamily(20, 8, Fraction(1, 4), [tuple(range(8)), (0, 1) + tuple(range(8, 14)),
                                                   (2, 3) + tuple(range(14, 20))])
    cert = family_correlation_matrix(matched8, small)
    bound = Fraction(2, 8) ** 5 * cert.beta
    assert all(cert.matrix[i][j] <= bound for i in range(3) for j in range(3) if i != j)


# reduction


def _learning_setup(seed):
    M = 6
    D = uniform_table(M)
    D0 = product_pmf_table(ProductInstance(M, (0, 1, 2), Fraction(1, 4)))
    rng = np.random.default_rng(seed)
    noise = [Fraction(int(v), 1000) for v in rng.integers(1, 1000, size=1 << M)]
    noise = [v / sum(noise) for v in noise]
    lam = Fraction(1, 50)
    learned = [(1 - lam) * a + lam * b for a, b in zip(D0, noise)]
    return D, D0, learned


def test_testing_from_learning_verdicts():
    D, D0, learned = _learning_setup(0)
    eps, tau = Fraction(1, 40), Fraction(1, 50)
    for mode in MODES:
        out = learn_then_test(learned, D, OracleSession(D, tau, mode, 1), eps, alternatives=[D0])
        assert out.verdict == "reference"
        out = learn_then_test(learned, D, OracleSession(D0, tau, mode, 1, reference=D), eps, alternatives=[D0])
        assert out.verdict == "alternative"


def test_testing_from_learning_refuses_without_separation():
    D, D0, _ = _learning_setup(0)
    with pytest.raises(SeparationError):
        learn_then_test(D, D, OracleSession(D, Fraction(1, 50)), Fraction(1, 40))
    with pytest.raises(SeparationError):
        learn_then_test(D0, D, OracleSession(D, Fraction(1, 4)), Fraction(1, 4), alternatives=[D0])
