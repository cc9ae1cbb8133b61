import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from swbi.panel import (
    DEFAULT_REVERSED,
    FactorPanel,
    MissingCellError,
    MissingFactorError,
    NonNumericCellError,
    NonPositiveLevelError,
    PanelConfig,
    PanelError,
    ReturnPanel,
    YearGapError,
    levels_from_returns,
    load_panel,
    reverse,
    to_log_returns,
)
from swbi.errors import ValidationError

from conftest import write_csv


def panel(values, names=None, reversed_flags=None, first=2000):
    values = np.atleast_2d(np.asarray(values, dtype=float))
    names = names or tuple(f"F{i}" for i in range(values.shape[0]))
    flags = reversed_flags if reversed_flags is not None else [False] * values.shape[0]
    return FactorPanel(names, np.arange(first, first + values.shape[1]), values, flags)


# -- load_panel ----------------------------------------------------------------


def test_load_thirteen_factor_fixture():
    from importlib.resources import files

    src = files("swbi") / "data" / "panel.csv"
    p = load_panel(src)
    assert p.shape == (13, 31)
    assert p.years[0] == 1986 and p.years[-1] == 2016
    flagged = {n for n, f in zip(p.factor_names, p.reverse_sign) if f}
    assert flagged == set(DEFAULT_REVERSED)


def test_trivial_constant_panel(tmp_path):
    f = write_csv(tmp_path / "p.csv", ["year", "X"], [[1990, 1], [1991, 1], [1992, 1]])
    p = load_panel(f)
    assert p.shape == (1, 3)
    assert np.all(p.values == 1.0)


def test_year_gap_is_an_error(tmp_path):
    f = write_csv(tmp_path / "p.csv", ["year", "X"], [[1986, 1], [1988, 2]])
    with pytest.raises(YearGapError, match="1986"):
        load_panel(f)


def test_missing_factor_column(tmp_path):
    f = write_csv(tmp_path / "p.csv", ["year", "X"], [[1986, 1], [1987, 2]])
    with pytest.raises(MissingFactorError, match="Y"):
        load_panel(f, PanelConfig(factors=("X", "Y")))


def test_non_numeric_cell_names_factor_and_year(tmp_path):
    f = write_csv(tmp_path / "p.csv", ["year", "X"], [[1986, 1], [1987, "abc"]])
    with pytest.raises(NonNumericCellError, match=r"'X'.*1987"):
        load_panel(f)


def test_non_positive_level_names_cell(tmp_path):
    f = write_csv(tmp_path / "p.csv", ["year", "X", "Y"], [[1986, 1, 2], [1987, 1, 0]])
    with pytest.raises(NonPositiveLevelError, match=r"'Y'.*1987"):
        load_panel(f)


def test_interior_missing_cell_is_an_error(tmp_path):
    f = write_csv(tmp_path / "p.csv", ["year", "X", "Y"], [[1986, 1, 2], [1987, 1, ""], [1988, 1, 3]])
    with pytest.raises(MissingCellError, match=r"'Y'.*1987"):
        load_panel(f)


def test_distinct_error_types():
    kinds = {MissingFactorError, NonNumericCellError, YearGapError, NonPositiveLevelError, MissingCellError}
    assert len(kinds) == 5
    assert all(issubclass(k, PanelError) and issubclass(k, ValidationError) for k in kinds)


def test_year_ranges_are_intersected(tmp_path):
    rows = [[1985, 1, ""], [1986, 1, 5], [1987, 2, 6], [1988, 3, 7], [1989, "", 8]]
    f = write_csv(tmp_path / "p.csv", ["year", "X", "Y"], rows)
    p = load_panel(f)
    assert list(p.years) == [1986, 1987, 1988]
    np.testing.assert_array_equal(p.values, [[1, 2, 3], [5, 6, 7]])


def test_config_order_and_year_range(tmp_path):
    rows = [[y, y - 1980, 2 * (y - 1980)] for y in range(1986, 1996)]
    f = write_csv(tmp_path / "p.csv", ["year", "X", "Y"], rows)
    p = load_panel(f, PanelConfig(factors=("Y", "X"), reversed=("X",), first_year=1988, last_year=1990))
    assert p.factor_names == ("Y", "X")
    assert list(p.years) == [1988, 1989, 1990]
    assert list(p.reverse_sign) == [False, True]
    np.testing.assert_array_equal(p.values[0], [16, 18, 20])


def test_semicolon_delimiter_and_comments(tmp_path):
    f = tmp_path / "p.csv"
    f.write_text("# source: test\nyear;X\n1990;1.5\n1991;2.5\n")
    p = load_panel(f)
    np.testing.assert_array_equal(p.values, [[1.5, 2.5]])


def test_factor_panel_invariants():
    with pytest.raises(YearGapError):
        FactorPanel(("X",), [2000, 2002], [[1.0, 2.0]], [False])
    with pytest.raises(MissingCellError):
        FactorPanel(("X",), [2000, 2001], [[1.0, np.nan]], [False])
    with pytest.raises(PanelError):
        FactorPanel(("X",), [2000, 2001], [[1.0, 2.0]], [False, True])


# -- to_log_returns ------------------------------------------------------------


def test_exact_logs():
    rp = to_log_returns(panel([1.0, math.e, math.e ** 3]))
    np.testing.assert_allclose(rp.returns[0], [0, 1, 2], atol=1e-15)


def test_sign_reversal():
    rp = to_log_returns(panel([1.0, math.e], reversed_flags=[True]))
    np.testing.assert_allclose(rp.returns[0], [0, -1], atol=1e-15)
    assert rp.labels == ("NegF0",)


def test_fixed_2x3_against_hand_oracle():
    levels = np.array([[100.0, 110.0, 99.0], [2.0, 2.5, 3.0]])
    rp = to_log_returns(panel(levels, reversed_flags=[False, True]))
    # hand-computed: ln(1.1)=0.09531017980432493, ln(0.9)=-0.10536051565782628,
    #                ln(1.25)=0.22314355131420976, ln(1.2)=0.1823215567939546
    oracle = np.array([[0.0, 0.09531017980432493, -0.10536051565782628], [0.0, -0.22314355131420976, -0.1823215567939546]])
    np.testing.assert_allclose(rp.returns, oracle, rtol=0, atol=1e-15)


def test_base_year_column_kept():
    rp = to_log_returns(panel(np.ones((2, 4))))
    assert rp.returns.shape == (2, 4)
    assert np.all(rp.returns[:, 0] == 0)
    assert rp.active().shape == (2, 3)


def test_return_panel_rejects_nonzero_base_year():
    with pytest.raises(PanelError):
        ReturnPanel(("X",), [2000, 2001], [[0.1, 0.2]])


def test_non_positive_level_in_constructed_panel():
    with pytest.raises(NonPositiveLevelError, match="2001"):
        to_log_returns(panel([1.0, -1.0]))


levels_strategy = arrays(
    float, st.tuples(st.integers(1, 4), st.integers(2, 8)), elements=st.floats(1e-3, 1e6, allow_nan=False)
)


@settings(max_examples=60, deadline=None)
@given(levels_strategy, st.data())
def test_round_trip_levels(levels, data):
    flags = data.draw(st.lists(st.booleans(), min_size=levels.shape[0], max_size=levels.shape[0]))
    p = panel(levels, reversed_flags=flags)
    back = levels_from_returns(to_log_returns(p), levels[:, 0])
    np.testing.assert_allclose(back, levels, rtol=1e-12)


@settings(max_examples=60, deadline=None)
@given(levels_strategy, st.data())
def test_reversal_involution(levels, data):
    rp = to_log_returns(panel(levels))
    names = data.draw(st.lists(st.sampled_from(rp.factor_names), unique=True))
    twice = reverse(reverse(rp, names), names)
    np.testing.assert_array_equal(twice.returns, rp.returns)
    np.testing.assert_array_equal(twice.reverse_sign, rp.reverse_sign)


@settings(max_examples=40, deadline=None)
@given(levels_strategy)
def test_reverse_matches_flagged_construction(levels):
    names = tuple(f"F{i}" for i in range(levels.shape[0]))
    flagged = to_log_returns(panel(levels, names, [True] * len(names)))
    flipped = reverse(to_log_returns(panel(levels, names)), names)
    np.testing.assert_array_equal(flagged.returns, flipped.returns)
