"""Shared hypothesis strategies."""

from fractions import Fraction

import pytest
from hypothesis import strategies as st

from cosdyn.dynamics import Constant, HalfLine, OperatorHandle, Shift, Table
from cosdyn.space import GridFunction


def rationals(max_num=20, max_den=8, nonzero=False):
    nums = st.integers(-max_num, max_num)
    if nonzero:
        nums = nums.filter(bool)
    return st.builds(Fraction, nums, st.integers(1, max_den))


def positive_rationals(max_num=8, max_den=4):
    return st.builds(Fraction, st.integers(1, max_num), st.integers(1, max_den))


def sites(dim=1, radius=8):
    return st.tuples(*[st.integers(-radius, radius)] * dim)


@st.composite
def grid_functions(draw, dim=1, radius=8, max_size=6, min_size=0, values=None):
    values = values or rationals()
    entries = draw(st.dictionaries(sites(dim, radius), values, min_size=min_size, max_size=max_size))
    return GridFunction(entries, dim=dim)


@st.composite
def float_grid_functions(draw, dim=1, radius=8, max_size=6, min_size=1):
    vals = st.floats(-100, 100, allow_nan=False).filter(lambda v: abs(v) > 1e-6)
    entries = draw(st.dictionaries(sites(dim, radius), vals, min_size=min_size, max_size=max_size))
    return GridFunction(entries, dim=dim)


@st.composite
def weights_1d(draw):
    kind = draw(st.sampled_from(["constant", "halfline", "table"]))
    if kind == "constant":
        return Constant(draw(positive_rationals()))
    if kind == "halfline":
        return HalfLine(draw(st.integers(-3, 3)), draw(positive_rationals()), draw(positive_rationals()))
    entries = draw(st.dictionaries(sites(1, 6), positive_rationals(), max_size=5))
    return Table(entries, draw(positive_rationals()))


@st.composite
def handles(draw):
    a = draw(st.integers(-3, 3).filter(bool))
    return OperatorHandle(Shift((a,)), draw(weights_1d()))


@st.composite
def handles_2d(draw):
    a = draw(st.tuples(st.integers(-2, 2), st.integers(-2, 2)).filter(any))
    entries = draw(st.dictionaries(sites(2, 3), positive_rationals(), max_size=4))
    return OperatorHandle(Shift(a), Table(entries, draw(positive_rationals())))


@pytest.fixture
def halfline_op():
    return OperatorHandle(Shift((1,)), HalfLine(0, Fraction(1, 2), Fraction(2)))


@pytest.fixture
def doubling_op():
    return OperatorHandle(Shift((1,)), Constant(2))


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if not RESULTS:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for criterion in sorted(RESULTS):
        parts = RESULTS[criterion]
        status = "PASS" if all(ok for _, ok, _ in parts) else "FAIL"
        failed = [f"{name} ({detail})" for name, ok, detail in parts if not ok]
        tr.write_line(f"criterion {criterion}: {status}" + (f" - {'; '.join(failed)}" if failed else ""))
