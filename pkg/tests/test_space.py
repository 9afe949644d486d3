import itertools
import math
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import float_grid_functions, grid_functions, rationals
from cosdyn.space import (
    CompactSet,
    GridFunction,
    ParameterError,
    SpaceNorm,
    as_scalar,
    lp_norm,
    luxemburg_norm,
    morrey_norm,
    scale_restrict,
)

ALL_NORMS = [
    SpaceNorm.lp(1),
    SpaceNorm.lp(2),
    SpaceNorm.lp("inf"),
    SpaceNorm.orlicz("power", 2),
    SpaceNorm.orlicz("power_log", 2),
    SpaceNorm.morrey(2, 1),
    SpaceNorm.morrey(3, 2),
]
norm_ids = [n.label() for n in ALL_NORMS]


def close(a, b, rel=1e-9):
    return math.isclose(float(a), float(b), rel_tol=rel, abs_tol=1e-300)


# Grid functions -------------------------------------------------------------

def test_zero_entries_are_dropped():
    f = GridFunction({0: 1, 1: 0, 2: Fraction(0)})
    assert f.support == CompactSet([(0,)])
    assert (f - f) == GridFunction.zero()


def test_tiny_floats_are_dropped():
    f = GridFunction({0: 1e-301, 1: 0.5})
    assert list(f) == [(1,)]


def test_float_promotes_whole_vector():
    f = GridFunction({0: Fraction(1, 3), 1: 0.5})
    assert f.mode == "float"
    assert isinstance(f[(0,)], float)
    g = GridFunction.delta(0) + GridFunction.delta(1, 0.25)
    assert g.mode == "float"


def test_mixed_dimensions_rejected():
    with pytest.raises(ParameterError):
        GridFunction({(0,): 1, (0, 1): 2})


def test_as_scalar_parses_rationals():
    assert as_scalar("3/4") == Fraction(3, 4)
    assert as_scalar(2) == Fraction(2)
    assert as_scalar("inf") == math.inf
    with pytest.raises(ParameterError):
        as_scalar("banana")


@given(grid_functions(), grid_functions())
def test_addition_is_pointwise(f, g):
    h = f + g
    for s in f.support | g.support:
        assert h[s] == f[s] + g[s]


@given(grid_functions(dim=2))
def test_json_round_trip(f):
    assert GridFunction.from_json(f.to_json()) == f


@given(float_grid_functions())
def test_json_round_trip_float(f):
    assert GridFunction.from_json(f.to_json()) == f


@given(st.sampled_from(ALL_NORMS))
def test_space_norm_json_round_trip(space):
    assert SpaceNorm.from_json(space.to_json()) == space


# scale_restrict -------------------------------------------------------------

def test_restrict_examples():
    f = GridFunction({0: 1, 1: 2})
    assert scale_restrict(f, [(1,)]) == GridFunction({1: 2})
    assert scale_restrict(f, CompactSet.interval(-5, 5)) == f
    assert scale_restrict(f, [(7,)]) == GridFunction.zero()


@given(grid_functions(), st.sets(st.tuples(st.integers(-8, 8))))
def test_restrict_support(f, A):
    assert scale_restrict(f, A).support <= (f.support & A)


# Norm examples --------------------------------------------------------------

def test_lp_examples():
    assert SpaceNorm.lp(2)(GridFunction.delta(0)) == 1
    assert SpaceNorm.lp(1)(GridFunction({0: 3, 5: -4})) == 7


def test_luxemburg_examples():
    assert luxemburg_norm("power", GridFunction.delta(0), p=2) == pytest.approx(1, rel=1e-12)
    assert luxemburg_norm("power", GridFunction({0: 3, 1: 4}), p=2) == pytest.approx(5, rel=1e-12)
    assert luxemburg_norm("power", GridFunction.zero()) == 0


def test_luxemburg_never_below_true_value():
    f = GridFunction({0: 3, 1: 4})
    assert luxemburg_norm("power", f, p=2) >= 5


def test_morrey_examples():
    assert morrey_norm(2, 1, GridFunction.delta(0)) == pytest.approx(1, rel=1e-15)
    assert morrey_norm(2, 1, CompactSet.interval(0, 1).indicator()) == pytest.approx(math.sqrt(2), rel=1e-15)


def test_morrey_rejects_q_above_p():
    with pytest.raises(ParameterError):
        SpaceNorm.morrey(1, 2)
    with pytest.raises(ParameterError):
        morrey_norm(1, 2, GridFunction.delta(0))


def test_unknown_young_function():
    with pytest.raises(ParameterError):
        SpaceNorm.orlicz("exp", 2)


# Morrey brute-force oracle --------------------------------------------------

def brute_morrey(p, q, f, window):
    """Every box inside the window, no pruning."""
    best = 0.0
    ranges = [list(range(lo, hi + 1)) for lo, hi in window]
    for corners in itertools.product(*[list(itertools.combinations_with_replacement(r, 2)) for r in ranges]):
        card = 1
        for a, b in corners:
            card *= b - a + 1
        total = 0.0
        for s, v in f.items():
            if all(a <= c <= b for c, (a, b) in zip(s, corners)):
                total += abs(float(v)) ** q
        best = max(best, card ** (1 / p - 1 / q) * total ** (1 / q))
    return best


@settings(max_examples=60, deadline=None)
@given(grid_functions(radius=10, min_size=1, max_size=6),
       st.sampled_from([(2, 1), (3, 2), (4, 1), (2, 2)]))
def test_morrey_matches_brute_force_1d(f, pq):
    p, q = pq
    assert close(morrey_norm(p, q, f), brute_morrey(p, q, f, [(-10, 10)]), rel=1e-12)


@settings(max_examples=30, deadline=None)
@given(grid_functions(dim=2, radius=3, min_size=1, max_size=5), st.sampled_from([(2, 1), (3, 2)]))
def test_morrey_matches_brute_force_2d(f, pq):
    p, q = pq
    assert close(morrey_norm(p, q, f), brute_morrey(p, q, f, [(-3, 3), (-3, 3)]), rel=1e-12)


@given(grid_functions(min_size=1))
def test_morrey_pp_is_lp_exact(f):
    assert morrey_norm(2, 2, f) == lp_norm(2, f)
    assert morrey_norm(1, 1, f) == lp_norm(1, f)


@given(float_grid_functions(dim=2))
def test_morrey_pp_is_lp_float(f):
    assert morrey_norm(2, 2, f) == lp_norm(2, f)


# Norm axioms ----------------------------------------------------------------

@pytest.mark.parametrize("space", ALL_NORMS, ids=norm_ids)
@given(f=grid_functions(), g=grid_functions(), c=rationals())
@settings(max_examples=40, deadline=None)
def test_norm_axioms(space, f, g, c):
    nf, ng = space(f), space(g)
    assert (nf == 0) == (not f)
    assert close(space(f * c), abs(c) * nf) or (c == 0 and space(f * c) == 0)
    assert float(space(f + g)) <= (float(nf) + float(ng)) * (1 + 1e-9) + 1e-300


@st.composite
def dominated_pairs(draw):
    f = draw(grid_functions(min_size=1))
    scale = {s: draw(st.fractions(-1, 1, max_denominator=6)) for s in f}
    return f, GridFunction({s: v * scale[s] for s, v in f.items()})


@pytest.mark.parametrize("space", ALL_NORMS, ids=norm_ids)
@given(pair=dominated_pairs())
@settings(max_examples=40, deadline=None)
def test_solidity(space, pair):
    f, g = pair
    assert float(space(g)) <= float(space(f)) * (1 + 1e-12)


@pytest.mark.parametrize("space", ALL_NORMS, ids=norm_ids)
@given(f=grid_functions(dim=2), a=st.tuples(st.integers(-5, 5), st.integers(-5, 5)))
@settings(max_examples=40, deadline=None)
def test_translation_invariance(space, f, a):
    moved = f.relocate(lambda s: (s[0] + a[0], s[1] + a[1]))
    if space.kind == "orlicz":
        assert close(space(moved), space(f), rel=1e-12)
    else:
        assert space(moved) == space(f)


@pytest.mark.parametrize("space", ALL_NORMS, ids=norm_ids)
@given(E=st.sets(st.tuples(st.integers(-6, 6)), min_size=1, max_size=8))
def test_indicators_have_finite_positive_norm(space, E):
    v = float(space(CompactSet(E).indicator()))
    assert 0 < v < math.inf


@settings(max_examples=100, deadline=None)
@given(f=float_grid_functions(min_size=1), p=st.sampled_from([1, 1.5, 2, 3, 4.5]))
def test_luxemburg_power_matches_lp(f, p):
    assert close(luxemburg_norm("power", f, p=p), lp_norm(p, f), rel=1e-9)
