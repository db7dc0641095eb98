"""Sharp constants, obstacles and the Bellman majorant built from L_p.

Two regimes are covered.  For p >= 2 (conformal martingale on the right,
d<X> <= d<Y_1>) the obstacle section is v_c(s) = (1-s)^p - c^p s^p with
c_p = (1 - z_p)/z_p.  For 1 < p < 2 (conformal martingale on the left,
d<Y_1> <= d<X>) it is v*_c(s) = s^p - c^p (1-s)^p with c_p = z_p/(1 - z_p).
In both cases the majorant section is

    g(s) = a_p L_p(s)   on [0, z_p],
    g(s) = obstacle(s)  on (z_p, 1],

with a_p fixed by matching first derivatives at z_p, and the two-variable
majorant is U(x, y) = (x + y)^p g(y / (x + y)).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateDerivative, OriginUndefined
from .laguerre import laguerre_eval, laguerre_values, smallest_zero

SQRT2 = math.sqrt(2.0)


class Side(str, enum.Enum):
    RIGHT = "right"  # p >= 2, X subordinate to the conformal Y
    LEFT = "left"  # 1 < p < 2, conformal Y subordinate to X


def side_for(p: float) -> Side:
    if not p > 1:
        raise ValueError(f"p must exceed 1, got {p}")
    return Side.RIGHT if p >= 2 else Side.LEFT


def _wrap(s):
    arr = np.asarray(s, dtype=float)
    return arr, arr.ndim == 0


def _unwrap(values, scalar):
    if scalar:
        return tuple(float(v) for v in values)
    return values


@dataclass(frozen=True)
class SharpConstants:
    p: float
    z_p: float
    c_p: float
    C_normalized: float
    C_theorem: float

    @property
    def side(self) -> Side:
        return side_for(self.p)


def sharp_constants(p: float) -> SharpConstants:
    """Best constants for order p.

    ``C_normalized`` is the constant under d<X> <= d<Y_1> (right) or
    d<Y_1> <= d<X> (left); ``C_theorem`` is the same constant stated for
    d<X> <= d<Y> (right) or d<Y> <= d<X> (left), which differs by sqrt(2).
    """
    z = smallest_zero(p).z
    if side_for(p) is Side.RIGHT:
        c = (1.0 - z) / z
        return SharpConstants(p, z, c, c, SQRT2 * c)
    c = z / (1.0 - z)
    return SharpConstants(p, z, c, c, c / SQRT2)


def dual_constant_ratio(p: float) -> float:
    """C_{p'} / C_p for p >= 2, with p' = p/(p-1) the dual exponent."""
    if not p >= 2:
        raise ValueError("dual_constant_ratio needs p >= 2")
    if p == 2:
        return 1.0
    q = p / (p - 1.0)
    return sharp_constants(q).C_theorem / sharp_constants(p).C_theorem


@dataclass(frozen=True)
class Obstacle:
    """One-variable section of V on the line x + y = 1."""

    p: float
    c: float
    side: Side

    def derivs(self, s):
        """(v, v', v'') at s.  v'' is NaN where it diverges (p < 2 at an end)."""
        s, scalar = _wrap(s)
        p, cp = self.p, self.c**self.p
        t = 1.0 - s
        with np.errstate(divide="ignore", invalid="ignore"):
            if self.side is Side.RIGHT:
                v = t**p - cp * s**p
                v1 = -p * t ** (p - 1) - p * cp * s ** (p - 1)
                v2 = p * (p - 1) * (t ** (p - 2) - cp * s ** (p - 2))
            else:
                v = s**p - cp * t**p
                v1 = p * s ** (p - 1) + p * cp * t ** (p - 1)
                v2 = p * (p - 1) * (s ** (p - 2) - cp * t ** (p - 2))
        if p < 2:
            v2 = np.where((t < 1e-9) | (s < 1e-9), np.nan, v2)
        v2 = np.where(np.isfinite(v2), v2, np.nan)
        return _unwrap((v, v1, v2), scalar)

    def __call__(self, s):
        return self.derivs(s)[0]


def touch_coefficient(p: float, z_p: float, c: float, side: Side | None = None) -> float:
    """a_p = v'(z_p) / L_p'(z_p): the scale at which a_p L_p meets the obstacle C^1."""
    side = side or side_for(p)
    d_lag = laguerre_eval(p, z_p).d1
    if abs(d_lag) < 1e-12:
        raise DegenerateDerivative(f"|L_p'(z_p)| = {abs(d_lag):.3g} for p={p}")
    return Obstacle(p, c, side).derivs(z_p)[1] / d_lag


@dataclass(frozen=True)
class OperatorValues:
    L_op: float
    H_op: float


@dataclass(frozen=True)
class ULift:
    """U and its partials at (x, y); arrays when the inputs are arrays."""

    U: np.ndarray
    U_x: np.ndarray
    U_y: np.ndarray
    U_xx: np.ndarray
    U_xy: np.ndarray
    U_yy: np.ndarray
    Ux_over_x: np.ndarray
    Uy_over_y: np.ndarray


def laguerre_operator(p, s, g, g1, g2):
    return s * g2 + (1.0 - s) * g1 + p * g


def h_operator(p, s, g, g1, g2):
    return -s * (1.0 - s) * g2 + (p - 1.0) * (1.0 - 2.0 * s) * g1 + p * (p - 1.0) * g


@dataclass(frozen=True)
class BellmanProfile:
    constants: SharpConstants
    a_p: float
    side: Side
    obstacle: Obstacle
    glue: float  # the point z_p where the branches meet

    @property
    def p(self) -> float:
        return self.constants.p

    @property
    def c(self) -> float:
        return self.obstacle.c

    def g(self, s):
        """(g, g', g'') at s; the Laguerre branch is used at s = z_p."""
        s, scalar = _wrap(s)
        flat = np.atleast_1d(s)
        out = np.empty((3, flat.size))
        lag = flat <= self.glue
        if lag.any():
            vals = laguerre_values(self.p, flat[lag])
            out[:, lag] = self.a_p * np.vstack(vals)
        if (~lag).any():
            out[:, ~lag] = np.vstack(self.obstacle.derivs(flat[~lag]))
        g, g1, g2 = (row.reshape(s.shape) for row in out)
        return _unwrap((g, g1, g2), scalar)

    def g_jump(self):
        """(g, g', g'') on the obstacle branch minus the Laguerre branch at z_p."""
        e = laguerre_eval(self.p, self.glue)
        left = self.a_p * np.array([e.value, e.d1, e.d2_series])
        right = np.array(self.obstacle.derivs(self.glue))
        return tuple(float(v) for v in right - left)


def build_profile(p: float, c: float | None = None) -> BellmanProfile:
    """Majorant profile for order p.

    Passing ``c`` replaces the sharp constant in the obstacle while keeping the
    glue at z_p; with c != c_p the result is not a valid majorant, which is how
    the verifier's failure-injection runs are produced.
    """
    consts = sharp_constants(p)
    side = consts.side
    c = consts.c_p if c is None else float(c)
    a = touch_coefficient(p, consts.z_p, c, side)
    return BellmanProfile(consts, a, side, Obstacle(p, c, side), consts.z_p)


def majorant_g(profile: BellmanProfile, s):
    return profile.g(s)


def operator_values(profile: BellmanProfile, s) -> OperatorValues:
    s_arr, scalar = _wrap(s)
    g, g1, g2 = profile.g(s_arr)
    p = profile.p
    L = laguerre_operator(p, s_arr, g, g1, g2)
    H = h_operator(p, s_arr, g, g1, g2)
    if scalar:
        return OperatorValues(float(L), float(H))
    return OperatorValues(L, H)


def section_partials(profile: BellmanProfile, s):
    """Partials of U at (1 - s, s), as a dict of arrays."""
    s = np.asarray(s, dtype=float)
    p = profile.p
    g, g1, g2 = profile.g(s)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = {
            "U": g,
            "U_x": p * g - s * g1,
            "U_y": p * g + (1.0 - s) * g1,
            "U_xx": p * (p - 1) * g - 2 * (p - 1) * s * g1 + s * s * g2,
            "U_xy": h_operator(p, s, g, g1, g2),
            "U_yy": p * (p - 1) * g + 2 * (p - 1) * (1 - s) * g1 + (1 - s) ** 2 * g2,
        }
        out["Ux_over_x"] = out["U_x"] / (1.0 - s)
        out["Uy_over_y"] = out["U_y"] / s
        obs = s > profile.glue
        if obs.any():
            # closed forms of V avoid the cancellation in p g - s g' near s = 1
            for k, v in _obstacle_partials(profile.obstacle, 1.0 - s[obs], s[obs]).items():
                out[k] = np.where(obs, 0.0, out[k])
                out[k][obs] = v
    return out


def _obstacle_partials(obstacle: Obstacle, x, y) -> dict:
    p, cp = obstacle.p, obstacle.c**obstacle.p
    if obstacle.side is Side.LEFT:
        # V = y^p - c^p x^p is the right-case form with the roles swapped
        a, b = -cp, 1.0
    else:
        a, b = 1.0, -cp
    with np.errstate(divide="ignore", invalid="ignore"):
        return {
            "U": a * x**p + b * y**p,
            "U_x": a * p * x ** (p - 1),
            "U_y": b * p * y ** (p - 1),
            "U_xx": a * p * (p - 1) * x ** (p - 2),
            "U_xy": np.zeros_like(x),
            "U_yy": b * p * (p - 1) * y ** (p - 2),
            "Ux_over_x": a * p * x ** (p - 2),
            "Uy_over_y": b * p * y ** (p - 2),
        }


def lift_U(profile: BellmanProfile, x, y) -> ULift:
    """U(x, y) = (x + y)^p g(y/(x + y)) and its partials, for x, y >= 0."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    r = x + y
    if np.any(r <= 0):
        raise OriginUndefined("U is not defined at x = y = 0")
    if np.any(x < 0) or np.any(y < 0):
        raise ValueError("lift_U takes x, y >= 0")
    s = y / r
    sec = section_partials(profile, s)
    p = profile.p
    r1, r2 = r ** (p - 1), r ** (p - 2)
    with np.errstate(divide="ignore", invalid="ignore"):
        lift = ULift(
            U=r**p * sec["U"],
            U_x=r1 * sec["U_x"],
            U_y=r1 * sec["U_y"],
            U_xx=r2 * sec["U_xx"],
            U_xy=r2 * sec["U_xy"],
            U_yy=r2 * sec["U_yy"],
            Ux_over_x=r2 * sec["Ux_over_x"],
            Uy_over_y=r2 * sec["Uy_over_y"],
        )
    if x.ndim == 0 and y.ndim == 0:
        return ULift(*(float(v) for v in lift.__dict__.values()))
    return lift


def s_p_threshold(p: float, c_p: float) -> float:
    """Root s_p of ((1-s)/s)^(p-2) = p/(p-1) c_p^p, where L_p v_{c_p} changes sign."""
    if not p > 2:
        raise ValueError("s_p is defined for p > 2")
    log_t = (math.log(p / (p - 1.0)) + p * math.log(c_p)) / (p - 2.0)
    if log_t > 700:
        return 0.0
    return 1.0 / (1.0 + math.exp(log_t))


def touching_curve_F(p: float, s: float):
    """F(s) from the touching system and F'(s) from its closed form.

    F(s) = ((1-s)^p L' + p(1-s)^(p-1) L) / (s^p L' - p s^(p-1) L),
    F'(s) = p (1-s)^(p-2) / s^p * L * H_p L / (s L' - p L)^2.
    """
    e = laguerre_eval(p, s)
    L, L1, L2 = e.value, e.d1, e.d2_series
    t = 1.0 - s
    F = (t**p * L1 + p * t ** (p - 1) * L) / (s**p * L1 - p * s ** (p - 1) * L)
    HL = h_operator(p, s, L, L1, L2)
    dF = p * t ** (p - 2) / s**p * L * HL / (s * L1 - p * L) ** 2
    return F, dF


def sharpness_witness(p: float, c: float, tol: float = 1e-12) -> bool:
    """True iff the obstacle built with constant c is strictly positive at z_p.

    A positive value there means no supersolution of the Laguerre equation can
    majorise it, so no constant c with this property can be admissible.
    """
    z = smallest_zero(p).z
    value = Obstacle(p, c, side_for(p))(z)
    return bool(value > tol)
