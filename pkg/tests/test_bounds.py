import io
import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

import oracle
from conformal_bellman import bounds as bd
from conformal_bellman.bounds import (
    CSV_COLUMNS,
    BoundTableRow,
    asymptotic_constants,
    ba_bound_chain,
    ba_bound_theorem,
    bound_row,
    comparison_table,
    cos_moment,
    cos_moment_closed,
    legacy_1575,
    legacy_sqrt,
    read_csv,
    tau_p,
    tau_upper,
    wallis_mean,
    write_csv,
)

# frozen from mpmath at 40 digits
CHAIN_1000 = 1395.98
THM_1000 = 1396.34


def test_tau_small_even_orders():
    assert tau_p(2) == pytest.approx(math.sqrt(2), rel=1e-12)
    assert tau_p(4) == pytest.approx((8 / 3) ** 0.25, rel=1e-12)


@pytest.mark.parametrize("n", range(1, 21))
def test_tau_even_orders_match_wallis(n):
    assert abs(tau_p(2 * n) - wallis_mean(n) ** (-1 / (2 * n))) <= 1e-10


def test_wallis_product_values():
    assert wallis_mean(0) == 1.0
    assert wallis_mean(1) == 0.5
    assert wallis_mean(3) == pytest.approx(15 / 48)
    with pytest.raises(ValueError):
        wallis_mean(-1)
    with pytest.raises(ValueError):
        wallis_mean(1.5)


@given(p=st.floats(1.0, 200.0))
def test_cos_moment_two_routes(p):
    a, b = cos_moment(p), cos_moment_closed(p)
    assert a == pytest.approx(b, rel=1e-10)


@pytest.mark.parametrize("p", [1.0, 2.5, 7.3, 31.0, 400.0])
def test_cos_moment_against_mpmath(p):
    assert cos_moment(p) == pytest.approx(float(oracle.cos_moment(p)), rel=1e-11)


def test_cos_moment_survives_huge_orders():
    for p in (1e5, 1e6, 1e7):
        assert cos_moment(p) == pytest.approx(cos_moment_closed(p), rel=1e-10)
        # Laplace: mean of cos^p ~ sqrt(2/(pi p))
        assert cos_moment(p) == pytest.approx(math.sqrt(2 / (math.pi * p)), rel=2 / p + 1e-9)


def test_tau_rejects_small_orders():
    with pytest.raises(ValueError):
        tau_p(0.5)
    with pytest.raises(ValueError):
        cos_moment(-1.0)


@given(p=st.floats(1.0, 5000.0))
def test_tau_below_its_upper_estimate(p):
    assert tau_p(p) < tau_upper(p)


def test_tau_decreases_towards_one():
    vals = [tau_p(p) for p in (2, 3, 5, 10, 100, 1000)]
    assert all(a > b for a, b in zip(vals, vals[1:]))
    assert vals[-1] > 1


def test_tau_upper_values():
    assert tau_upper(2000) < 1.004
    assert tau_upper(2) == pytest.approx((2.5 * math.pi) ** 0.25, rel=1e-15)
    assert tau_upper(2) > math.sqrt(2)


def test_bounds_at_thousand():
    chain, thm = ba_bound_chain(1000), ba_bound_theorem(1000)
    assert chain < 1400 and thm < 1400
    assert chain == pytest.approx(CHAIN_1000, abs=0.01)
    assert thm == pytest.approx(THM_1000, abs=0.01)


def test_slope_at_large_p():
    inv_q = 1 / (math.e - 2)
    assert ba_bound_theorem(1e5) / 1e5 == pytest.approx(inv_q, rel=0.01)
    assert ba_bound_theorem(1e5) / 1e5 == pytest.approx(1.392284, abs=2e-6)
    assert ba_bound_chain(1e5) / 1e5 == pytest.approx(1.392281, abs=2e-6)
    assert ba_bound_theorem(1e6) / 1e6 == pytest.approx(1.39222, abs=1e-5)


@given(p=st.floats(2.05, 5e4))
def test_chain_never_above_closed_form(p):
    assert ba_bound_chain(p) <= ba_bound_theorem(p)


def test_closed_form_slope_decreases():
    ps = [10, 100, 1000, 1e4, 1e5, 1e6]
    slopes = [ba_bound_theorem(p) / p for p in ps]
    assert all(a > b for a, b in zip(slopes, slopes[1:]))


def test_small_p_relation_to_the_sqrt_estimate():
    # at p = 4 both new bounds sit above sqrt(2p(p-1)) = sqrt(24); they only
    # win for larger p
    r24 = math.sqrt(24)
    assert legacy_sqrt(4) == pytest.approx(r24)
    assert ba_bound_theorem(4) > r24
    assert ba_bound_chain(4) > r24
    assert ba_bound_theorem(4) == pytest.approx(6.165, abs=1e-3)
    assert ba_bound_chain(4) == pytest.approx(5.376, abs=1e-3)
    # the crossover with sqrt(2p(p-1)) ~ 1.414 p happens well below p = 1000
    assert ba_bound_theorem(1000) < legacy_sqrt(1000)
    assert ba_bound_theorem(200) < legacy_sqrt(200)


def test_bounds_need_p_above_two():
    for f in (ba_bound_chain, ba_bound_theorem):
        with pytest.raises(ValueError):
            f(2.0)


def test_legacy_forms():
    assert legacy_1575(3.0) == pytest.approx(1.575 * 2)
    assert legacy_1575(1.5) == pytest.approx(1.575 * 2)
    assert legacy_sqrt(3.0) == pytest.approx(math.sqrt(12))


# -- table ----------------------------------------------------------------------

def test_row_is_complete_for_regular_p():
    r = bound_row(10.0)
    assert r.error is None
    assert all(math.isfinite(getattr(r, c)) for c in CSV_COLUMNS)
    assert r.z_pprime < 1 - (math.e - 2) / 10


def test_row_keeps_partial_results():
    r = bound_row(1.5)
    assert math.isfinite(r.tau_p) and math.isfinite(r.legacy_sqrt)
    assert math.isnan(r.bound_chain) and math.isnan(r.bound_thm)
    assert "bound_chain" in r.error and "bound_thm" in r.error


def test_row_flags_broken_limit(monkeypatch):
    monkeypatch.setattr(bd, "constant_q", lambda: 5.0)
    r = bound_row(10.0)
    assert r.error and "1 - Q/p" in r.error


def test_table_order_independent_of_threads():
    ps = [2.5, 3, 10, 100, 1000, 4]
    one = comparison_table(ps, threads=1)
    four = comparison_table(ps, threads=4)
    assert [r.p for r in four] == [float(p) for p in ps]
    assert one == four


def test_csv_round_trip():
    rows = comparison_table([3, 10, 1e3], threads=1)
    buf = io.StringIO()
    write_csv(rows, buf, header_comment="bounds table\nseed n/a")
    text = buf.getvalue()
    assert text.startswith("# bounds table\n# seed n/a\n")
    back = read_csv(io.StringIO(text))
    for a, b in zip(rows, back):
        for c in CSV_COLUMNS:
            assert getattr(b, c) == pytest.approx(getattr(a, c), rel=1e-11)


def test_csv_rejects_unknown_columns():
    with pytest.raises(ValueError):
        read_csv(io.StringIO("a,b\n1,2\n"))


def test_csv_writes_nan_for_missing_columns():
    buf = io.StringIO()
    write_csv([BoundTableRow(1.5)], buf)
    back = read_csv(io.StringIO(buf.getvalue()))
    assert back[0].p == 1.5 and math.isnan(back[0].tau_p)


def test_asymptotic_constants_all_reproduced():
    consts = {c.name: c for c in asymptotic_constants()}
    assert all(c.ok for c in consts.values())
    assert consts["4*sqrt(2)/j0^2"].computed == pytest.approx(0.978155, abs=1e-6)
    assert consts["1/(Q*sqrt(2))"].computed == pytest.approx(0.984442, abs=1e-6)
    assert consts["j0^2/(8Q)"].computed == pytest.approx(1.006427, abs=1e-6)


def test_asymptotic_constant_flag():
    c = bd.AsymptoticConstant("x", 1.0, 1.1, 0.05)
    assert not c.ok
