import math
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import handles
from cosdyn.criteria import (
    BOUNDS_BRACKET,
    BOUNDS_INF,
    BOUNDS_SUP,
    Budget,
    CriterionReport,
    Verdict,
    certify_series,
    chaotic_series,
    check_bounds_necessary,
    check_necessary_decay_S,
    check_necessary_decay_T,
    check_sufficient_chaotic,
    check_sufficient_transitive,
    run_all_checks,
    split_partition,
    transitivity_quantities,
)
from cosdyn.dynamics import Constant, HalfLine, OperatorHandle, Shift, apply_S_pow, apply_T_pow
from cosdyn.space import CompactSet, ParameterError, SpaceNorm

L2 = SpaceNorm.lp(2)
HALF = Fraction(1, 2)


def op_const(c):
    return OperatorHandle(Shift(1), Constant(c))


# Bounds ---------------------------------------------------------------------

def test_bounds_examples(halfline_op):
    r = check_bounds_necessary(op_const(2))
    assert (r.condition_id, r.verdict) == (BOUNDS_INF, Verdict.REFUTED)
    r = check_bounds_necessary(op_const(HALF))
    assert (r.condition_id, r.verdict) == (BOUNDS_SUP, Verdict.REFUTED)
    r = check_bounds_necessary(halfline_op)
    assert (r.condition_id, r.verdict) == (BOUNDS_BRACKET, Verdict.INCONCLUSIVE)


def test_report_contract():
    with pytest.raises(ValueError):
        CriterionReport("x", Verdict.SATISFIED, "no witness")
    with pytest.raises(ValueError):
        CriterionReport("x", Verdict.REFUTED, "no certificate")


# Necessary decay ------------------------------------------------------------

def test_decay_S_halfline_single_site(halfline_op):
    r = check_necessary_decay_S(L2, halfline_op, [(0,)])
    assert r.verdict is Verdict.SATISFIED
    for term in r.witness.terms:
        assert term.D == [(0,)]
        assert term.values["value"] == Fraction(1, 2**term.n)


def test_decay_T_halfline_single_site(halfline_op):
    r = check_necessary_decay_T(L2, halfline_op, [(0,)])
    assert r.verdict is Verdict.SATISFIED
    for term in r.witness.terms:
        assert term.values["value"] == Fraction(4, 2**term.n)


@pytest.mark.parametrize("K", [[(0,)], CompactSet.interval(-2, 2), CompactSet.interval(3, 9)])
def test_decay_S_refuted_for_doubling(K):
    space = SpaceNorm.lp(2)
    r = check_necessary_decay_S(space, op_const(2), K)
    assert r.verdict is Verdict.REFUTED
    for row in r.certificate["rows"]:
        assert row["lower_bound"] == row["direct"]
        assert row["lower_bound"] == 2 ** row["n"] * space(CompactSet(K).indicator())


def test_decay_T_refuted_for_halving():
    r = check_necessary_decay_T(L2, op_const(HALF), CompactSet.interval(-2, 2))
    assert r.verdict is Verdict.REFUTED
    for row in r.certificate["rows"]:
        assert row["lower_bound"] == row["direct"]


@pytest.mark.parametrize("check", [check_necessary_decay_S, check_necessary_decay_T])
def test_unit_weight_is_inconclusive(check):
    r = check(L2, op_const(1), [(0,)], Budget(max_n=30))
    assert r.verdict is Verdict.INCONCLUSIVE
    assert r.budget_exhausted


def test_identity_map_does_not_apply():
    op = OperatorHandle(Shift(0), HalfLine(0, HALF, 2))
    r = check_necessary_decay_S(L2, op, [(0,)])
    assert r.verdict is Verdict.INCONCLUSIVE
    assert "reason" in r.diagnostics


def test_empty_K_rejected(halfline_op):
    for check in (check_necessary_decay_S, check_sufficient_transitive, check_sufficient_chaotic):
        with pytest.raises(ParameterError):
            check(L2, halfline_op, [])


@settings(max_examples=40, deadline=None)
@given(handles())
def test_bounds_and_decay_never_disagree(op):
    if op.weight.inf_bound > 1:
        r = check_necessary_decay_S(L2, op, CompactSet.interval(-1, 1), Budget(max_n=40))
        assert r.verdict is not Verdict.SATISFIED


# Sufficient transitivity ----------------------------------------------------

def test_transitive_quantities_decay(halfline_op):
    K = CompactSet.interval(-2, 2)
    for n in (10, 20, 30):
        q = transitivity_quantities(L2, halfline_op, K, n)
        assert q["E"] | q["F"] == K and not q["E"] & q["F"]
        for v in q["values"].values():
            assert v <= 256 * 2.0**-n


def test_transitive_halfline(halfline_op):
    r = check_sufficient_transitive(L2, halfline_op, CompactSet.interval(-2, 2))
    assert r.verdict is Verdict.SATISFIED
    assert r.witness.n_values == sorted(r.witness.n_values)


def test_transitive_refuted_for_doubling():
    r = check_sufficient_transitive(L2, op_const(2), CompactSet.interval(-2, 2))
    assert r.verdict is Verdict.REFUTED
    assert r.certificate["kind"] == "monotone-growth"


def test_split_partition_covers_D(halfline_op):
    D = CompactSet.interval(-4, 4)
    E, F = split_partition(halfline_op, D, 5)
    assert E | F == D and not E & F


# Series ---------------------------------------------------------------------

def test_certify_series_geometric():
    cert = certify_series(lambda l: Fraction(1, 3**l), 40)
    assert cert.status == "certified"
    assert cert.partial <= Fraction(1, 2) <= cert.upper


def test_certify_series_divergent_and_constant():
    assert certify_series(lambda l: 2**l, 40).status == "divergent"
    assert certify_series(lambda l: 1, 40).status == "divergent"


@pytest.mark.parametrize("n", [1, 5, 10, 20, 40])
def test_chaotic_series_closed_form(halfline_op, n):
    t_series, _ = chaotic_series(L2, halfline_op, CompactSet([(0,)]), n, Budget())
    true_sum = 2.0**-n / (1 - 2.0**-n)
    assert t_series.status == "certified"
    assert float(t_series.partial) <= true_sum * (1 + 1e-12)
    assert t_series.upper >= true_sum * (1 - 1e-12)
    assert math.isclose(t_series.upper, true_sum, rel_tol=1e-12) or n < 10


def test_chaotic_halfline(halfline_op):
    r = check_sufficient_chaotic(L2, halfline_op, CompactSet.interval(-2, 2))
    assert r.verdict is Verdict.SATISFIED
    for term in r.witness.terms:
        assert term.values["series_T_upper"] <= 1e-8
        assert term.values["series_S_upper"] <= 1e-8


@pytest.mark.parametrize("c", [2, HALF])
def test_chaotic_refuted_for_constant(c):
    assert check_sufficient_chaotic(L2, op_const(c), [(0,)]).verdict is Verdict.REFUTED


def test_chaotic_unit_weight_not_certifiable():
    r = check_sufficient_chaotic(L2, op_const(1), [(0,)], Budget(max_n=5))
    assert r.verdict is Verdict.INCONCLUSIVE
    assert r.diagnostics["not_certifiable"]


@settings(max_examples=25, deadline=None)
@given(handles(), st.sampled_from([SpaceNorm.lp(1), SpaceNorm.lp(2), SpaceNorm.morrey(2, 1)]))
def test_chaotic_implies_transitive(op, space):
    K = CompactSet.interval(-1, 1)
    budget = Budget(max_n=60, L_max=24)
    if check_sufficient_chaotic(space, op, K, budget).verdict is Verdict.SATISFIED:
        assert check_sufficient_transitive(space, op, K, budget).verdict is Verdict.SATISFIED


def test_series_bound_the_periodic_point_terms(halfline_op):
    # The T-series terms of the periodic point are bounded by the series terms.
    D = CompactSet.interval(-2, 2)
    f = D.indicator()
    t_series, s_series = chaotic_series(L2, halfline_op, D, 7, Budget())
    for l, (t, s) in enumerate(zip(t_series.terms, s_series.terms), start=1):
        assert L2(apply_T_pow(halfline_op, 7 * l, f)) <= float(t) * (1 + 1e-12)
        assert L2(apply_S_pow(halfline_op, 7 * l, f)) <= float(s) * (1 + 1e-12)


def test_run_all_checks_order(halfline_op):
    ids = [r.condition_id for r in run_all_checks(L2, halfline_op, CompactSet.interval(-2, 2))]
    assert ids == [BOUNDS_BRACKET, "periodic-decay-S", "periodic-decay-T",
                   "transitive-sufficient", "chaotic-sufficient"]
