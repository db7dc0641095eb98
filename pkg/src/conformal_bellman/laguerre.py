"""Laguerre functions of real order, their smallest zero, J0 and the constant Q.

L_p is the solution of  s y'' + (1 - s) y' + p y = 0  that is bounded at the
origin.  It is the power series

    L_p(x) = sum_n (-1)^n p(p-1)...(p-n+1) / (n!)^2 x^n

which terminates when p is a nonnegative integer.
"""

from __future__ import annotations

import math
import sys
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import NoSignChange

EPS = sys.float_info.epsilon
_MAX_TERMS = 100_000


@dataclass(frozen=True)
class Order:
    """An order p > 1 together with its dual exponent."""

    p: float

    def __post_init__(self):
        if not (self.p > 1.0) or not math.isfinite(self.p):
            raise ValueError(f"order must satisfy p > 1, got {self.p!r}")

    @property
    def dual(self) -> float:
        return self.p / (self.p - 1.0)

    @property
    def star(self) -> float:
        return max(self.p, self.dual)


@dataclass(frozen=True)
class LaguerreEval:
    value: float
    d1: float
    d2: float
    max_term: float
    terms_used: int
    precision_ok: bool
    d2_series: float


@dataclass(frozen=True)
class ZeroResult:
    z: float
    residual: float
    bracket_width: float


def _tail_ratio(p: float, n: int, x: float) -> float:
    # Bound on |term_{k+1}/term_k| for k >= n, valid for the value series and
    # both derivative series; it is decreasing in n.
    if n < 2:
        return math.inf
    return (p + n) * x / ((n - 1) * (n + 1))


def laguerre_eval(p: float, x: float, rel_tol: float = 1e-12) -> LaguerreEval:
    """Evaluate L_p, L_p' and L_p'' at ``x`` by summing the power series.

    Coefficients come from the running product c_{n+1} = -c_n (p - n)/(n+1)^2.
    Summation stops once two consecutive terms of every series are below
    ``rel_tol`` times the partial sum (or below rounding level of the largest
    term) and the ratio bound certifies the remaining tail.

    ``precision_ok`` is False when the largest term times machine epsilon
    exceeds ``rel_tol * |value|``, i.e. cancellation ate the requested
    relative accuracy.  The caller decides what to do about it.
    """
    if not p > 0:
        raise ValueError("p must be positive")
    if not 0.0 <= x <= 1.0:
        raise ValueError("x must lie in [0, 1]")
    if not rel_tol > 0:
        raise ValueError("rel_tol must be positive")

    s0 = s1 = s2 = 0.0
    m0 = m1 = m2 = 0.0
    coef = 1.0
    pw0, pw1, pw2 = 1.0, 0.0, 0.0  # x^n, x^(n-1), x^(n-2)
    small_run = 0
    n = 0
    while True:
        t0 = coef * pw0
        t1 = n * coef * pw1
        t2 = n * (n - 1) * coef * pw2
        s0 += t0
        s1 += t1
        s2 += t2
        m0 = max(m0, abs(t0))
        m1 = max(m1, abs(t1))
        m2 = max(m2, abs(t2))

        small = (
            abs(t0) <= rel_tol * abs(s0) + EPS * m0
            and abs(t1) <= rel_tol * abs(s1) + EPS * m1
            and abs(t2) <= rel_tol * abs(s2) + EPS * m2
        )
        small_run = small_run + 1 if small else 0

        coef *= -(p - n) / ((n + 1) ** 2)
        n += 1
        if coef == 0.0:
            break  # integer order: polynomial has terminated
        if small_run >= 2 and _tail_ratio(p, n, x) < 0.5:
            break
        if n >= _MAX_TERMS:
            raise RuntimeError(f"Laguerre series did not converge (p={p}, x={x})")
        pw2, pw1, pw0 = pw1, pw0, pw0 * x

    value, d1, d2_series = s0, s1, s2
    if x >= 0.01:
        d2 = ((x - 1.0) * d1 - p * value) / x
    else:
        d2 = d2_series
    precision_ok = m0 * EPS <= rel_tol * abs(value)
    return LaguerreEval(value, d1, d2, m0, n, precision_ok, d2_series)


@lru_cache(maxsize=256)
def _coefficients(p: float, x_max: float, rel_tol: float) -> np.ndarray:
    coefs = [1.0]
    coef = 1.0
    n = 0
    small_run = 0
    scale = 1.0
    while True:
        coef *= -(p - n) / ((n + 1) ** 2)
        n += 1
        if coef == 0.0:
            break
        coefs.append(coef)
        term = abs(coef) * x_max**n
        scale = max(scale, term)
        small_run = small_run + 1 if term <= min(rel_tol, EPS) * 1e-2 * scale else 0
        if small_run >= 2 and _tail_ratio(p, n, x_max) < 0.5:
            break
        if n >= _MAX_TERMS:
            raise RuntimeError(f"Laguerre series did not converge (p={p})")
    return np.asarray(coefs)


def laguerre_values(p: float, x, rel_tol: float = 1e-12):
    """Vectorised L_p, L_p', L_p'' on an array of points in [0, 1].

    The coefficient list is truncated for the largest point and reused, so
    this is the path to take for grids.  Second derivatives are term-wise.
    """
    x = np.asarray(x, dtype=float)
    if x.size and (x.min() < 0.0 or x.max() > 1.0):
        raise ValueError("x must lie in [0, 1]")
    x_max = float(x.max()) if x.size else 0.0
    c = _coefficients(float(p), max(x_max, 1e-300), rel_tol)
    P = np.polynomial.polynomial
    value = P.polyval(x, c)
    c1 = P.polyder(c) if len(c) > 1 else np.zeros(1)
    c2 = P.polyder(c1) if len(c1) > 1 else np.zeros(1)
    return value, P.polyval(x, c1), P.polyval(x, c2)


def _value(p: float, x: float) -> float:
    return laguerre_eval(p, x).value


@lru_cache(maxsize=1024)
def smallest_zero(p: float, abs_tol: float = 1e-12) -> ZeroResult:
    """Smallest zero of L_p in (0, 1) for p > 1.

    The bracket starts at [0, 2/(p+1)] (L_p(0) = 1 and z_p <= 2/(p+1)); if the
    right end is still positive it is pushed towards 1.  Bisection runs until
    both the bracket width and |L_p| are below ``abs_tol`` (or the bracket
    stops shrinking in floating point), then one secant step polishes.
    """
    Order(p)
    lo, hi = 0.0, 2.0 / (p + 1.0)
    f_lo, f_hi = 1.0, _value(p, hi)
    step = (1.0 - hi) / 16
    while f_hi > 0.0:
        lo, f_lo = hi, f_hi
        if hi >= 1.0:
            raise NoSignChange(f"L_p has no sign change in (0, 1) for p={p}")
        hi = min(1.0, hi + step)
        f_hi = _value(p, hi)
    if f_hi == 0.0:
        return ZeroResult(hi, 0.0, 0.0)

    while True:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        f_mid = _value(p, mid)
        if f_mid == 0.0:
            return ZeroResult(mid, 0.0, 0.0)
        if f_mid > 0.0:
            lo, f_lo = mid, f_mid
        else:
            hi, f_hi = mid, f_mid
        if hi - lo <= abs_tol and min(abs(f_lo), abs(f_hi)) <= abs_tol:
            break

    # secant polish inside the bracket
    z = lo - f_lo * (hi - lo) / (f_hi - f_lo)
    if not lo <= z <= hi:
        z = lo if abs(f_lo) < abs(f_hi) else hi
    residual = abs(_value(p, z))
    for cand, f in ((lo, f_lo), (hi, f_hi)):
        if abs(f) < residual:
            z, residual = cand, abs(f)
    return ZeroResult(z, residual, hi - lo)


def laguerre_identity_residuals(p: float, s_grid, scaled: bool = False) -> dict:
    """Worst residuals of three exact identities on ``s_grid``.

    ``a``: s L_p' - p (L_p - L_{p-1})
    ``b``: s L_p'' + (1 - s) L_p' + p L_p
    ``c``: (s L_p')' + p L_{p-1} = L_p' + s L_p'' + p L_{p-1}

    With ``scaled=True`` each residual is divided by the sum of absolute
    values of its terms.
    """
    if not p > 2:
        raise ValueError("identities need p > 2 so that p - 1 > 1")
    worst = {"a": 0.0, "b": 0.0, "c": 0.0}
    for s in np.asarray(s_grid, dtype=float):
        e = laguerre_eval(p, s)
        m = laguerre_eval(p - 1.0, s)
        d2 = e.d2_series
        terms = {
            "a": (s * e.d1, -p * e.value, p * m.value),
            "b": (s * d2, (1.0 - s) * e.d1, p * e.value),
            "c": (e.d1, s * d2, p * m.value),
        }
        for key, parts in terms.items():
            r = abs(math.fsum(parts))
            if scaled:
                r /= max(sum(abs(t) for t in parts), 1e-300)
            worst[key] = max(worst[key], r)
    return worst


def bessel_j0(x: float) -> float:
    """J0 from its even power series; intended for moderate x (say x < 10)."""
    if x < 0:
        raise ValueError("x must be nonnegative")
    q = 0.25 * x * x
    term, total, n = 1.0, 1.0, 0
    while True:
        n += 1
        term *= -q / (n * n)
        total += term
        if abs(term) <= EPS * 1e-2 * max(abs(total), 1.0) and n > q:
            return total


@lru_cache(maxsize=1)
def bessel_j0_first_zero() -> float:
    lo, hi = 2.0, 3.0
    while hi - lo > 1e-13:
        mid = 0.5 * (lo + hi)
        if bessel_j0(mid) > 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


@lru_cache(maxsize=16)
def constant_q(rel_tol: float = 1e-12) -> float:
    """Q = 1 - sum_{n>=2} (n-2)!/(n!)^2, summed with the term ratio (n-1)/(n+1)^2."""
    if not rel_tol > 0:
        raise ValueError("rel_tol must be positive")
    total = 0.0
    term = 0.25
    n = 2
    while term >= rel_tol:
        total += term
        term *= (n - 1) / (n + 1) ** 2
        n += 1
    total += term  # one more term is free and keeps the error below rel_tol
    return 1.0 - total


def mehler_heine_gap(n: int, x_max: float = 4.0, grid_count: int = 200) -> float:
    """max over a uniform grid on [0, x_max] of |L_n(x/n) - J0(2 sqrt x)|."""
    if n < 10 or int(n) != n:
        raise ValueError("n must be an integer >= 10")
    if x_max > 4.0:
        raise ValueError("x_max must not exceed 4")
    xs = np.linspace(0.0, x_max, grid_count)
    lag, _, _ = laguerre_values(float(n), xs / n)
    j0 = np.array([bessel_j0(2.0 * math.sqrt(x)) for x in xs])
    return float(np.max(np.abs(lag - j0)))
