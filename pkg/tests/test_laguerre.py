import math
import sys
import threading

import mpmath as mp
import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

import oracle
from conformal_bellman import laguerre as lag
from conformal_bellman import (
    NoSignChange,
    Order,
    bessel_j0,
    bessel_j0_first_zero,
    constant_q,
    laguerre_eval,
    laguerre_identity_residuals,
    laguerre_values,
    mehler_heine_gap,
    smallest_zero,
)

EPS = sys.float_info.epsilon

# frozen from tests/oracle.py at 40 digits
Z2 = 2 - math.sqrt(2)
Z3 = 0.4157745567834791
Z4 = 0.3225476896193923
L25_AT_04 = 0.14662397140562754


# -- Order ------------------------------------------------------------------

@pytest.mark.parametrize("p", [1.0, 0.5, -3.0, math.nan, math.inf])
def test_order_rejects_bad_p(p):
    with pytest.raises(ValueError):
        Order(p)


def test_order_dual_and_star():
    o = Order(3.0)
    assert o.dual == pytest.approx(1.5)
    assert o.star == 3.0
    assert Order(1.5).star == pytest.approx(3.0)


# -- series evaluation ----------------------------------------------------------

def test_polynomial_orders_are_exact():
    assert laguerre_eval(1.0, 0.3).value == pytest.approx(0.7, abs=1e-15)
    e = laguerre_eval(2.0, 0.5)
    assert e.value == pytest.approx(0.125, abs=1e-15)
    assert e.d1 == pytest.approx(-1.5, abs=1e-15)
    assert e.d2 == pytest.approx(1.0, abs=1e-14)
    # ODE at p = 2, s = 0.5: 0.5*1 + 0.5*(-1.5) + 2*0.125 = 0
    assert 0.5 * e.d2_series + 0.5 * e.d1 + 2 * e.value == 0.0


def test_non_integer_order_matches_high_precision():
    e = laguerre_eval(2.5, 0.4)
    assert abs(e.value - L25_AT_04) < 1e-10
    assert abs(e.value - float(oracle.laguerre(2.5, 0.4))) < 1e-10


@given(p=st.floats(1.01, 60.0), x=st.floats(0.0, 1.0))
def test_value_and_slope_match_hypergeometric_oracle(p, x):
    e = laguerre_eval(p, x)
    ref = float(oracle.laguerre(p, x))
    ref1 = float(oracle.laguerre_d1(p, x))
    tol = 1e-10 * max(1.0, e.max_term)
    assert abs(e.value - ref) <= tol
    assert abs(e.d1 - ref1) <= 1e-9 * max(1.0, e.max_term * p)


@given(p=st.floats(1.01, 40.0), x=st.floats(0.01, 1.0))
def test_second_derivative_two_routes_agree(p, x):
    e = laguerre_eval(p, x)
    assume(e.precision_ok)
    scale = x * abs(e.d2_series) + (1 - x) * abs(e.d1) + p * abs(e.value)
    assert abs(e.d2 - e.d2_series) * x <= 1e-8 * scale


@given(p=st.floats(1.01, 400.0), x=st.floats(0.0, 1.0), rel_tol=st.sampled_from([1e-6, 1e-10, 1e-12]))
def test_precision_flag_is_the_cancellation_invariant(p, x, rel_tol):
    e = laguerre_eval(p, x, rel_tol)
    assert e.precision_ok == (e.max_term * EPS <= rel_tol * abs(e.value))


def test_precision_flag_trips_under_heavy_cancellation():
    assert not laguerre_eval(400.0, 1.0).precision_ok
    assert laguerre_eval(3.0, 0.3).precision_ok


@given(p=st.floats(1.01, 100.0))
def test_vectorised_values_match_scalar(p):
    xs = np.linspace(0, min(1.0, 3.0 / p), 17)
    v, d1, d2 = laguerre_values(p, xs)
    for i, x in enumerate(xs):
        e = laguerre_eval(p, float(x))
        assert v[i] == pytest.approx(e.value, abs=1e-12 * max(1, e.max_term))
        assert d1[i] == pytest.approx(e.d1, abs=1e-11 * max(1, e.max_term * p))


@pytest.mark.parametrize("args", [(0.0, 0.5), (2.0, -0.1), (2.0, 1.5), (-1.0, 0.5)])
def test_eval_rejects_bad_input(args):
    with pytest.raises(ValueError):
        laguerre_eval(*args)


def test_eval_rejects_bad_tolerance():
    with pytest.raises(ValueError):
        laguerre_eval(2.0, 0.5, rel_tol=0.0)


# -- smallest zero ------------------------------------------------------------

def test_zero_p2_closed_form():
    assert abs(smallest_zero(2.0).z - Z2) < 1e-10


def test_zero_p3_p4_polynomial_root_oracle():
    r3 = oracle.poly_smallest_root([mp.mpf(-1) / 6, mp.mpf(3) / 2, -3, 1])
    r4 = oracle.poly_smallest_root([mp.mpf(1) / 24, mp.mpf(-2) / 3, 3, -4, 1])
    assert abs(smallest_zero(3.0).z - float(r3)) < 1e-10
    assert abs(smallest_zero(4.0).z - float(r4)) < 1e-10
    assert abs(smallest_zero(3.0).z - Z3) < 1e-10
    assert abs(smallest_zero(4.0).z - Z4) < 1e-10
    assert smallest_zero(4.0).z <= 0.4


@given(p=st.floats(1.05, 300.0))
def test_zero_properties(p):
    r = smallest_zero(p)
    assert 0 < r.z < 1
    assert r.z <= 2 / (p + 1) + 1e-12
    assert r.residual <= 1e-12
    assert r.bracket_width <= 1e-12 or r.residual <= 1e-15
    assert abs(laguerre_eval(p, r.z).value) == pytest.approx(r.residual, abs=1e-15)


@given(p=st.floats(1.05, 50.0))
def test_zero_matches_mpmath(p):
    assert abs(smallest_zero(p).z - float(oracle.smallest_zero(p))) < 1e-10


@given(p=st.floats(2.01, 200.0))
def test_zeros_decrease_with_order(p):
    assert smallest_zero(p).z < smallest_zero(p - 1.0).z


def test_zero_raises_without_sign_change(monkeypatch):
    monkeypatch.setattr(lag, "_value", lambda p, x: 1.0)
    lag.smallest_zero.cache_clear()
    try:
        with pytest.raises(NoSignChange):
            lag.smallest_zero(3.25)
    finally:
        lag.smallest_zero.cache_clear()


def test_zero_is_thread_safe():
    ps = [1.3 + 0.37 * k for k in range(40)]
    expect = [smallest_zero(p).z for p in ps]
    lag.smallest_zero.cache_clear()
    got = {}

    def work(chunk):
        for p in chunk:
            got[p] = smallest_zero(p).z

    threads = [threading.Thread(target=work, args=(ps[i::4],)) for i in range(4)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert [got[p] for p in ps] == expect


# -- shape of L_p on (0, z_p] ------------------------------------------------------

@pytest.mark.parametrize("p", [1.2, 1.5, 2.0, 2.5, 3.0, 7.0, 40.0])
def test_convex_on_first_arch(p):
    z = smallest_zero(p).z
    s = np.linspace(0, z, 400)[1:]
    _, _, d2 = laguerre_values(p, s)
    assert np.all(d2 > 0)


@pytest.mark.parametrize("p", [2.2, 3.0, 4.5, 10.0, 33.0])
def test_decreasing_and_ordered_up_to_previous_zero(p):
    zq = smallest_zero(p - 1).z
    s = np.linspace(0, zq, 400)[1:]
    L, d1, _ = laguerre_values(p, s)
    Lq, _, _ = laguerre_values(p - 1, s)
    assert np.all(d1 < 0)
    assert np.all(L < Lq)


# -- identities ---------------------------------------------------------------

@pytest.mark.parametrize("p", [3.0, 5.0, 2.7, 12.5])
def test_identity_residuals(p):
    grid = np.linspace(0.0, 0.9, 102)[1:-1]
    res = laguerre_identity_residuals(p, grid, scaled=True)
    assert max(res.values()) <= 1e-9


def test_identity_residuals_need_p_above_two():
    with pytest.raises(ValueError):
        laguerre_identity_residuals(2.0, [0.5])


@given(p=st.floats(1.01, 80.0), s=st.floats(1e-6, 1.0))
def test_ode_residual_series_route(p, s):
    e = laguerre_eval(p, s)
    assume(e.precision_ok)
    scale = abs(s * e.d2_series) + abs(e.d1) + p * abs(e.value)
    assert abs(s * e.d2_series + (1 - s) * e.d1 + p * e.value) <= 1e-8 * scale


# -- Bessel, Q ----------------------------------------------------------------

def test_j0_basics():
    assert bessel_j0(0.0) == 1.0
    j0 = bessel_j0_first_zero()
    assert abs(j0 - 2.404826) < 1e-6
    assert abs(j0 - float(oracle.j0_first_zero())) < 1e-12
    assert abs(bessel_j0(j0)) < 1e-11
    with pytest.raises(ValueError):
        bessel_j0(-1.0)


@given(x=st.floats(0.0, 10.0))
def test_j0_series_matches_mpmath(x):
    assert abs(bessel_j0(x) - float(mp.besselj(0, x))) < 1e-12


def test_q_value():
    q = constant_q()
    assert abs(q - 0.718282) < 5e-7
    # the series telescopes to e - 2
    assert abs(q - (math.e - 2)) < 1e-12
    assert q < 0.75
    ref = 1 - mp.nsum(lambda n: mp.factorial(n - 2) / mp.factorial(n) ** 2, [2, mp.inf])
    assert abs(q - float(ref)) < 1e-12


def test_q_partial_sums_decrease():
    vals = [constant_q(t) for t in (1e-2, 1e-4, 1e-6, 1e-9, 1e-12)]
    assert all(a >= b for a, b in zip(vals, vals[1:]))
    with pytest.raises(ValueError):
        constant_q(0.0)


# -- Mehler-Heine -------------------------------------------------------------

def test_mehler_heine_gap():
    g100, g1000, g10000 = (mehler_heine_gap(n) for n in (100, 1000, 10_000))
    assert g1000 <= 5e-3
    assert g10000 < g100
    # roughly first order in 1/n
    assert 5 < g100 / g1000 < 20
    assert 5 < g1000 / g10000 < 20


def test_mehler_heine_origin_contributes_nothing():
    v, _, _ = laguerre_values(1000.0, np.array([0.0]))
    assert v[0] == 1.0 and bessel_j0(0.0) == 1.0


@pytest.mark.parametrize("args", [(5,), (100.5,), (100, 5.0)])
def test_mehler_heine_rejects_bad_input(args):
    with pytest.raises(ValueError):
        mehler_heine_gap(*args)


# -- large p --------------------------------------------------------------------

def test_large_p_asymptotics():
    j0 = bessel_j0_first_zero()
    q = constant_q()
    p = 1e4
    assert abs(p * smallest_zero(p).z / (j0**2 / 4) - 1) < 0.01
    zq = smallest_zero(p / (p - 1)).z
    assert abs(p * (1 - zq) / q - 1) < 0.01
    for p in (10.0, 1e2, 1e3, 1e4):
        assert smallest_zero(p / (p - 1)).z < 1 - q / p
