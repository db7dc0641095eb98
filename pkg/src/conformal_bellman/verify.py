"""Grid certification of the conditions that make U a valid majorant.

Every condition is written as ``quantity <= 0`` and certified as
``quantity <= REL_TOL * scale`` where ``scale`` is the sum of absolute values
of the terms that make up the quantity.  Reports keep the worst normalised
slack and the point where it occurs (lowest grid index on ties).
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .bellman import (
    BellmanProfile,
    Side,
    build_profile,
    h_operator,
    s_p_threshold,
    section_partials,
)
from .laguerre import laguerre_values, smallest_zero

REL_TOL = 1e-8
TINY = 1e-300


@dataclass
class VerificationReport:
    condition_id: str
    grid: str
    worst_slack: float
    worst_point: dict
    passed: bool
    worst_value: float = math.nan

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def make_grid(z: float, n: int = 10_000, window: float = 1e-3, exclude: float = 1e-6) -> np.ndarray:
    """Uniform grid on (0, 1) plus geometric refinement around 0, z and 1.

    Inside ``window`` of each landmark the density is ten times the uniform
    one; points closer than ``exclude`` to a landmark are dropped.
    """
    base = np.linspace(0.0, 1.0, n + 2)[1:-1]
    n_ref = max(int(10 * window * n), 10)
    offsets = np.geomspace(exclude, window, n_ref)
    extra = [offsets, z - offsets, z + offsets, 1.0 - offsets]
    s = np.unique(np.concatenate([base, *extra]))
    s = s[(s > 0) & (s < 1)]
    keep = np.ones_like(s, dtype=bool)
    for mark in (0.0, z, 1.0):
        keep &= np.abs(s - mark) >= exclude * (1 - 1e-9)
    return s[keep]


def _describe(s: np.ndarray) -> str:
    return f"{s.size} points in [{s.min():.3g}, {s.max():.3g}]" if s.size else "empty"


def _reduce(condition_id, grid, quantity, scale, points, extra=None) -> VerificationReport:
    quantity = np.atleast_1d(np.asarray(quantity, dtype=float))
    scale = np.atleast_1d(np.asarray(scale, dtype=float))
    rel = quantity / np.maximum(scale, TINY)
    rel = np.where(np.isnan(rel), np.inf, rel)
    i = int(np.argmax(rel))
    point = {k: float(np.atleast_1d(v)[i]) for k, v in points.items()}
    if extra:
        point.update({k: (v[i] if isinstance(v, (list, np.ndarray)) else v) for k, v in extra.items()})
    worst = float(rel[i])
    return VerificationReport(condition_id, grid, worst, point, bool(worst <= REL_TOL), float(quantity[i]))


def _merge(condition_id, parts) -> VerificationReport:
    """Combine sub-reports: keep the worst one, tagging which sub-check it was."""
    worst = max(parts, key=lambda r: r.worst_slack)
    point = dict(worst.worst_point, sub_check=worst.condition_id)
    grid = "; ".join(f"{r.condition_id}: {r.grid}" for r in parts)
    return VerificationReport(condition_id, grid, worst.worst_slack, point, all(r.passed for r in parts), worst.worst_value)


def _terms(profile, s):
    p = profile.p
    g, g1, g2 = profile.g(s)
    L_terms = (s * g2, (1 - s) * g1, p * g)
    H_terms = (-s * (1 - s) * g2, (p - 1) * (1 - 2 * s) * g1, p * (p - 1) * g)
    return L_terms, H_terms


def check_simple_conditions(profile: BellmanProfile, grid) -> tuple[VerificationReport, VerificationReport]:
    """U_xx +- 2U_xy + U_yy + U_y/y <= 0 through the one-variable forms.

    On the section these are  L_p g + 4 s H_p g <= 0  and  L_p g <= 0.
    """
    s = np.asarray(grid, dtype=float)
    L_t, H_t = _terms(profile, s)
    L = sum(L_t)
    H = sum(H_t)
    absL = sum(np.abs(t) for t in L_t)
    absH = sum(np.abs(t) for t in H_t)
    desc = _describe(s)
    plus = _reduce("simple_plus", desc, L + 4 * s * H, absL + 4 * s * absH, {"s": s})
    minus = _reduce("simple_minus", desc, L, absL, {"s": s})
    return plus, minus


def check_majorization(profile: BellmanProfile, grid) -> VerificationReport:
    s = np.asarray(grid, dtype=float)
    g = profile.g(s)[0]
    v = profile.obstacle(s)
    return _reduce("majorization", _describe(s), v - g, np.abs(v) + np.abs(g), {"s": s})


def check_c1_matching(profile: BellmanProfile, tol: float = 1e-9) -> VerificationReport:
    """Value and first-derivative jumps at the glue point, relative to |g'(z_p)|."""
    dg, dg1, dg2 = profile.g_jump()
    g1 = abs(profile.g(profile.glue)[1])
    rel = max(abs(dg), abs(dg1)) / max(g1, TINY)
    point = {"s": profile.glue, "jump_g": dg, "jump_dg": dg1, "jump_d2g": dg2}
    return VerificationReport("c1_matching", "glue point", rel, point, bool(rel <= tol), max(abs(dg), abs(dg1)))


def _split(profile, s):
    return s[s < profile.glue], s[s > profile.glue]


def check_general_right(profile: BellmanProfile, grid) -> VerificationReport:
    """U_x > 0, U_xy < 0 and U_x/x - U_xx + U_xy < 0 on the Laguerre region;
    V_x > 0, V_x/x - V_xx < 0 and V_xy = 0 on the obstacle region."""
    if profile.side is not Side.RIGHT:
        raise ValueError("check_general_right needs p >= 2")
    p = profile.p
    lag, obs = _split(profile, np.asarray(grid, dtype=float))
    parts = []
    for region, s in (("laguerre", lag), ("obstacle", obs)):
        if not s.size:
            continue
        d = section_partials(profile, s)
        g, g1, _ = profile.g(s)
        _, H_t = _terms(profile, s)
        absH = sum(np.abs(t) for t in H_t)
        ux_scale = np.abs(p * g) + np.abs(s * g1)
        desc = _describe(s)
        parts.append(_reduce(f"{region}:U_x>0", desc, -d["U_x"], ux_scale, {"s": s}))
        if region == "laguerre":
            q = d["Ux_over_x"] - d["U_xx"] + d["U_xy"]
            scale = np.abs(d["Ux_over_x"]) + np.abs(d["U_xx"]) + np.abs(d["U_xy"])
            parts.append(_reduce("laguerre:Ux/x-Uxx+Uxy<0", desc, q, scale, {"s": s}))
            parts.append(_reduce("laguerre:U_xy<0", desc, d["U_xy"], absH, {"s": s}))
        else:
            q = d["Ux_over_x"] - d["U_xx"]
            scale = np.abs(d["Ux_over_x"]) + np.abs(d["U_xx"])
            parts.append(_reduce("obstacle:Vx/x-Vxx<0", desc, q, scale, {"s": s}))
            # V_xy vanishes identically; certify it against the size of its terms
            parts.append(_reduce("obstacle:V_xy=0", desc, np.abs(d["U_xy"]), absH, {"s": s}))
    return _merge("general_right", parts)


def _left_form_max(d, beta):
    """max over a in [0, beta] of -D a^2 + 2|U_xy| a + (U_x/x) beta^2 + B, per point and beta."""
    D = (d["Ux_over_x"] - d["U_xx"])[:, None]
    uxy = np.abs(d["U_xy"])[:, None]
    uxx_ = d["Ux_over_x"][:, None]
    B = (d["U_yy"] + d["Uy_over_y"])[:, None]
    absB = (np.abs(d["U_yy"]) + np.abs(d["Uy_over_y"]))[:, None]
    beta = np.asarray(beta, dtype=float)[None, :]
    with np.errstate(divide="ignore", invalid="ignore"):
        a_star = np.where(D > 0, uxy / D, np.inf)
    a = np.clip(a_star, 0.0, beta)
    val = -D * a**2 + 2 * uxy * a + uxx_ * beta**2 + B
    scale = np.abs(D) * a**2 + 2 * uxy * a + np.abs(uxx_) * beta**2 + absB
    return val, scale, a


def check_general_left(profile: BellmanProfile, grid, beta_grid=None, beta_max: float = 10.0) -> VerificationReport:
    """Full control inequality for 1 < p < 2 over a in [0, beta], beta in beta_grid,
    plus U_x < 0, U_xy <= 0 and a* >= 1 on the Laguerre region."""
    if profile.side is not Side.LEFT:
        raise ValueError("check_general_left needs 1 < p < 2")
    s = np.asarray(grid, dtype=float)
    if beta_grid is None:
        beta_grid = np.concatenate([[1.0], np.geomspace(1.0, beta_max, 40)[1:]])
    beta_grid = np.asarray(beta_grid, dtype=float)
    d = section_partials(profile, s)
    val, scale, a = _left_form_max(d, beta_grid)
    flat = np.argmax(np.where(np.isnan(val / np.maximum(scale, TINY)), np.inf, val / np.maximum(scale, TINY)), axis=1)
    rows = np.arange(s.size)
    parts = [
        _reduce(
            "form<=0",
            f"{_describe(s)} x {beta_grid.size} betas in [{beta_grid.min():.3g}, {beta_grid.max():.3g}]",
            val[rows, flat],
            scale[rows, flat],
            {"s": s, "beta": beta_grid[flat], "a": a[rows, flat]},
        )
    ]
    lag, _ = _split(profile, s)
    if lag.size:
        dl = section_partials(profile, lag)
        g, g1, _ = profile.g(lag)
        _, H_t = _terms(profile, lag)
        desc = _describe(lag)
        p = profile.p
        parts.append(_reduce("laguerre:U_x<0", desc, dl["U_x"], np.abs(p * g) + np.abs(lag * g1), {"s": lag}))
        parts.append(_reduce("laguerre:U_xy<=0", desc, dl["U_xy"], sum(np.abs(t) for t in H_t), {"s": lag}))
        # a* >= 1  <=>  U_x/x - U_xx + U_xy <= 0 when U_xy <= 0
        q = dl["Ux_over_x"] - dl["U_xx"] + dl["U_xy"]
        sc = np.abs(dl["Ux_over_x"]) + np.abs(dl["U_xx"]) + np.abs(dl["U_xy"])
        parts.append(_reduce("laguerre:a*>=1", desc, q, sc, {"s": lag}))
    return _merge("general_left", parts)


def check_hl_sign(profile: BellmanProfile, n: int = 2000) -> VerificationReport:
    """Sign of H_p L_p: negative on (0, z_{p-1}] for p > 2, positive on (0, z_p] for 1 < p < 2."""
    p = profile.p
    if profile.side is Side.RIGHT:
        if p <= 2:
            return VerificationReport("hl_sign", "not applicable at p = 2", 0.0, {}, True, 0.0)
        upper, sign = smallest_zero(p - 1.0).z, 1.0
    else:
        upper, sign = profile.glue, -1.0
    s = np.linspace(0, upper, n + 1)[1:]
    L, L1, L2 = laguerre_values(p, s)
    terms = (-s * (1 - s) * L2, (p - 1) * (1 - 2 * s) * L1, p * (p - 1) * L)
    HL = h_operator(p, s, L, L1, L2)
    return _reduce("hl_sign", _describe(s), sign * HL, sum(np.abs(t) for t in terms), {"s": s})


def check_sp_below_zp(profile: BellmanProfile) -> VerificationReport:
    z = profile.glue
    sp = s_p_threshold(profile.p, profile.constants.c_p)
    return VerificationReport("s_p<z_p", "single point", (sp - z) / z, {"s_p": sp, "z_p": z}, bool(sp < z), sp - z)


@dataclass
class CaseSplitRecord:
    case: str  # "A<0,beta0<=1" | "A<0,beta0>1" | "A>=0"
    fired: list
    vacuous: list
    slacks: dict
    analytic_sup: float
    holds: bool
    partials: dict = field(default_factory=dict)


def _partials_at(profile: BellmanProfile, x: float, y: float) -> dict:
    if x == 0.0 and profile.side is Side.RIGHT and profile.p > 2:
        # U = V near x = 0; V_xx and V_x/x vanish there
        p, cp = profile.p, profile.c**profile.p
        return {
            "U_x": 0.0,
            "U_xx": 0.0,
            "Ux_over_x": 0.0,
            "U_xy": 0.0,
            "U_yy": -cp * p * (p - 1) * y ** (p - 2),
            "Uy_over_y": -cp * p * y ** (p - 2),
        }
    r = x + y
    d = section_partials(profile, np.array([y / r]))
    p = profile.p
    out = {k: float(v[0]) for k, v in d.items() if k != "U"}
    for k in ("U_xx", "U_xy", "U_yy", "Ux_over_x", "Uy_over_y"):
        out[k] *= r ** (p - 2)
    out["U_x"] *= r ** (p - 1)
    return out


@dataclass(frozen=True)
class FormCoefficients:
    A: float  # U_xx - U_x/x
    B: float  # U_yy + U_y/y
    Uxy: float
    Ux_over_x: float
    Uxx: float


def form_coefficients(profile: BellmanProfile, x: float, y: float) -> FormCoefficients:
    d = _partials_at(profile, float(x), float(y))
    return FormCoefficients(
        d["U_xx"] - d["Ux_over_x"], d["U_yy"] + d["Uy_over_y"], d["U_xy"], d["Ux_over_x"], d["U_xx"]
    )


def analytic_form_sup(d: dict, side: Side = Side.RIGHT, beta_max: float = 10.0) -> float:
    """Exact sup of the quadratic form over admissible controls with |k| = 1.

    Right case: |h1|^2 + |h2|^2 <= 1.  Left case: 1 <= |h1|^2 + |h2|^2 <= beta_max^2.
    """
    uxx, ux_x, uxy = d["U_xx"], d["Ux_over_x"], abs(d["U_xy"])
    B = d["U_yy"] + d["Uy_over_y"]
    if side is Side.RIGHT:
        w = max(ux_x, 0.0)
        alpha, gamma = uxx - w, B + w
        cands = [0.0, 1.0]
        if alpha < 0:
            cands.append(min(max(-uxy / alpha, 0.0), 1.0))
        return max(alpha * r * r + 2 * uxy * r + gamma for r in cands)
    betas = np.concatenate([[1.0], np.geomspace(1.0, beta_max, 400)[1:]])
    val, _, _ = _left_form_max({k: np.atleast_1d(v) for k, v in d.items()}, betas)
    return float(val.max())


def check_case_split(profile: BellmanProfile, point) -> CaseSplitRecord:
    """Classify a point by the sign of A and beta0 = |U_xy/A| and evaluate the
    three implications that together are equivalent to the form being <= 0.

    ``point`` is either s in (0, 1) (on the section x + y = 1) or a pair (x, y).
    """
    x, y = (1.0 - point, float(point)) if np.ndim(point) == 0 else map(float, point)
    d = _partials_at(profile, x, y)
    uxx, ux_x, uxy, ux = d["U_xx"], d["Ux_over_x"], d["U_xy"], d["U_x"]
    B = d["U_yy"] + d["Uy_over_y"]
    A = uxx - ux_x
    if A < 0:
        case = "A<0,beta0<=1" if abs(uxy / A) <= 1 else "A<0,beta0>1"
    else:
        case = "A>=0"

    prem_slope = ux > 0 and abs(uxy) <= ux_x - uxx
    prem_mild = uxx >= 0 or (-abs(uxy) < uxx < 0)
    prem_strong = uxx <= -abs(uxy)
    slacks = {}
    scale_B = abs(d["U_yy"]) + abs(d["Uy_over_y"])
    if prem_slope:
        D = ux_x - uxx
        slacks["slope_dominant"] = (uxy**2 / D + ux_x + B) / max(uxy**2 / D + abs(ux_x) + scale_B, TINY)
    if prem_mild:
        q = max(uxx + 2 * uxy + B, uxx - 2 * uxy + B)
        slacks["mild_curvature"] = q / max(abs(uxx) + 2 * abs(uxy) + scale_B, TINY)
    if prem_strong:
        slacks["strong_curvature"] = (uxy**2 - uxx * B) / max(uxy**2 + abs(uxx * B), TINY)
    fired = [k for k, f in (("slope_dominant", prem_slope), ("mild_curvature", prem_mild), ("strong_curvature", prem_strong)) if f]
    vacuous = [k for k in ("slope_dominant", "strong_curvature") if k not in fired]
    sup = analytic_form_sup(d, profile.side)
    holds = all(v <= REL_TOL for v in slacks.values())
    return CaseSplitRecord(case, fired, vacuous, slacks, sup, holds, d)


def brute_force_form(
    profile: BellmanProfile,
    point,
    n_controls: int = 1000,
    seed: int = 0,
    beta: float | None = None,
    beta_max: float = 10.0,
    k_norm: float = 1.0,
) -> float:
    """Largest sampled value of U_xx|h1|^2 + U_x/x|h2|^2 + 2U_xy (h1.k) + B|k|^2
    over admissible controls, with k = (k_norm, 0).

    Controls are random plus a small boundary lattice; no case analysis is
    used, so this is an independent check of ``check_case_split``.  For the
    left case ``beta`` pins |h| (otherwise |h| ranges over [1, beta_max]).
    """
    x, y = (1.0 - point, float(point)) if np.ndim(point) == 0 else map(float, point)
    d = _partials_at(profile, x, y)
    B = d["U_yy"] + d["Uy_over_y"]
    rng = np.random.default_rng(seed)

    u = rng.standard_normal((n_controls, 4))
    u /= np.linalg.norm(u, axis=1, keepdims=True)
    if profile.side is Side.RIGHT:
        radius = rng.random(n_controls) ** 0.25
    elif beta is not None:
        radius = np.full(n_controls, float(beta))
    else:
        radius = rng.uniform(1.0, beta_max, n_controls)
    h = u * (k_norm * radius)[:, None]
    h1, h2 = h[:, :2], h[:, 2:]

    # boundary lattice: h1 along +-k, h2 taking up the rest of the budget
    top = k_norm * (1.0 if profile.side is Side.RIGHT else (beta if beta is not None else 1.0))
    rho1 = np.linspace(0.0, top, 65)
    lat = []
    for sgn in (1.0, -1.0):
        for r in rho1:
            for r2 in {0.0, math.sqrt(max(top * top - r * r, 0.0))}:
                lat.append((sgn * r, 0.0, r2, 0.0))
    lat = np.array(lat)
    h1 = np.vstack([h1, lat[:, :2]])
    h2 = np.vstack([h2, lat[:, 2:]])
    k2 = k_norm * k_norm
    if profile.side is Side.RIGHT:
        keep = (h1**2).sum(1) + (h2**2).sum(1) <= k2 * (1.0 + 1e-15)
    else:
        keep = (h1**2).sum(1) + (h2**2).sum(1) >= k2 * (1.0 - 1e-15)
    h1, h2 = h1[keep], h2[keep]
    vals = d["U_xx"] * (h1**2).sum(1) + d["Ux_over_x"] * (h2**2).sum(1) + 2 * d["U_xy"] * k_norm * h1[:, 0] + B * k2
    return float(vals.max())


def run_suite(p: float, grid_n: int = 10_000, c: float | None = None, beta_max: float = 10.0) -> list[VerificationReport]:
    """Every condition for order p; ``c`` overrides the sharp constant (failure injection)."""
    profile = build_profile(p, c)
    grid = make_grid(profile.glue, grid_n)
    reports = list(check_simple_conditions(profile, grid))
    reports.append(check_majorization(profile, grid))
    reports.append(check_c1_matching(profile))
    if profile.side is Side.RIGHT:
        reports.append(check_general_right(profile, grid))
        if p > 2:
            reports.append(check_sp_below_zp(profile))
    else:
        reports.append(check_general_left(profile, grid, beta_max=beta_max))
    reports.append(check_hl_sign(profile))
    return reports
