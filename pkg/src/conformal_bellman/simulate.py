"""Monte Carlo for a conformal Y driving a subordinate (or dominating) X.

Y is planar Brownian motion, so d<Y1> = d<Y2> = dt and d<Y1, Y2> = 0.  X moves
by dX = G dW with a 2x2 control G chosen by a strategy.  On the right side
(p >= 2) we need |G|_F^2 <= 1, on the left side |G|_F^2 >= 1; every strategy
here uses |G|_F = 1 (or G = 0 on the right), which meets both.

Paths are split into fixed-size blocks with one Philox stream per block, so
the result does not depend on how many threads run the blocks.
"""

from __future__ import annotations

import csv
import enum
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .bellman import Side, build_profile, lift_U, sharp_constants, side_for
from .errors import NonFiniteState
from .laguerre import Order

CAP = 1e30
BLOCK = 4096
N_BATCHES = 100


class Strategy(str, enum.Enum):
    RANDOM = "random"
    ZERO_DRIFT = "zero_drift"
    GREEDY = "greedy"
    NULL = "null"  # G = 0, X frozen at x0


@dataclass(frozen=True)
class SimConfig:
    p: float
    n_paths: int = 10_000
    n_steps: int = 1000
    dt: float = 1e-3
    seed: int = 0
    strategy: Strategy = Strategy.RANDOM
    x0: tuple = (1.0, 0.0)
    y0: tuple = (1.0, 0.0)
    checkpoints: tuple | None = None
    side: Side | None = None
    greedy_c: float | None = None
    n_candidates: int = 4
    block_size: int = BLOCK

    def __post_init__(self):
        Order(self.p)
        object.__setattr__(self, "strategy", Strategy(self.strategy))
        object.__setattr__(self, "side", Side(self.side) if self.side is not None else side_for(self.p))
        object.__setattr__(self, "x0", tuple(float(v) for v in self.x0))
        object.__setattr__(self, "y0", tuple(float(v) for v in self.y0))
        if self.n_paths < 1:
            raise ValueError("n_paths must be >= 1")
        if self.n_steps < 0:
            raise ValueError("n_steps must be >= 0")
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if len(self.x0) != 2 or len(self.y0) != 2:
            raise ValueError("x0 and y0 are planar points")
        if math.hypot(*self.x0) == 0 and math.hypot(*self.y0) == 0:
            raise ValueError("x0 and y0 cannot both be 0")
        if self.strategy is Strategy.NULL and self.side is Side.LEFT:
            raise ValueError("G = 0 is not admissible on the left side")
        if self.checkpoints is None:
            k = min(10, self.n_steps) or 1
            cps = sorted({round(i * self.n_steps / k) for i in range(k + 1)})
        else:
            cps = sorted({int(c) for c in self.checkpoints})
        if cps and (cps[0] < 0 or cps[-1] > self.n_steps):
            raise ValueError("checkpoints must lie in [0, n_steps]")
        object.__setattr__(self, "checkpoints", tuple(cps))
        if self.block_size < 1 or self.n_candidates < 0:
            raise ValueError("bad block_size or n_candidates")

    @property
    def horizon(self) -> float:
        return self.n_steps * self.dt

    def to_dict(self) -> dict:
        d = asdict(self)
        d["strategy"] = self.strategy.value
        d["side"] = self.side.value
        return d


def section_start(p: float, s: float, y_norm: float = 1.0):
    """(x0, y0) on the positive axis with |y0|/(|x0| + |y0|) = s."""
    if not 0 < s <= 1:
        raise ValueError("s must lie in (0, 1]")
    return ((1 - s) / s * y_norm, 0.0), (y_norm, 0.0)


def laguerre_start(p: float):
    """Default start: s = z_p / 2, inside the region where g is a multiple of L_p."""
    return section_start(p, sharp_constants(p).z_p / 2)


def touching_start(p: float):
    """Start at s = z_p, where U = V = 0; from here E V(X_T, Y_T) <= 0."""
    return section_start(p, sharp_constants(p).z_p)


@dataclass
class SimResult:
    moment_X: float
    moment_Y: float
    ratio: float
    se_ratio: float
    U_trajectory: list  # (checkpoint, time, mean_U, se)
    conformality: dict
    config: dict = field(default_factory=dict)

    def respects(self, constant: float, k: float = 3.0) -> bool:
        se = self.se_ratio if math.isfinite(self.se_ratio) else 0.0
        return self.ratio <= constant + k * se

    def to_dict(self) -> dict:
        def clean(v):
            if isinstance(v, float) and not math.isfinite(v):
                return None
            if isinstance(v, (list, tuple)):
                return [clean(u) for u in v]
            if isinstance(v, dict):
                return {k: clean(u) for k, u in v.items()}
            return v

        return clean(asdict(self))

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, **kw)

    def write_trajectory_csv(self, fh) -> None:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["checkpoint_time", "mean_U", "se"])
        for _, t, m, se in self.U_trajectory:
            w.writerow([format(t, ".12g"), format(m, ".12g"), format(se, ".12g")])


def _unit(v):
    n = np.hypot(v[:, 0], v[:, 1])
    safe = np.where(n > 0, n, 1.0)
    out = v / safe[:, None]
    out[n == 0] = (1.0, 0.0)
    return out, n


def _zero_drift_control(X, Y):
    # dX = -xhat (yhat . dW): |X| moves against the radial part of Y
    xh, _ = _unit(X)
    yh, _ = _unit(Y)
    return -xh[:, :, None] * yh[:, None, :]


def _random_controls(rng, n, k=None):
    shape = (n, 2, 2) if k is None else (n, k, 2, 2)
    G = rng.standard_normal(shape)
    G /= np.sqrt(np.einsum("...ij,...ij->...", G, G))[..., None, None]
    return G


def _v_drift(p, side, c, X, Y, C):
    """Drift of V_c per unit time for candidate controls C of shape (n, k, 2, 2).

    The x-Hessian of |x|^p is p|x|^(p-2) (I + (p-2) xhat xhat^T); the Laplacian
    of |y|^p in the plane is p^2 |y|^(p-2); V has no mixed x-y terms.
    """
    xh, xn = _unit(X)
    yn = np.hypot(Y[:, 0], Y[:, 1])
    u0, u1 = xh[:, 0:1], xh[:, 1:2]
    fro = (C * C).sum(axis=(-1, -2))
    radial = (C[..., 0, 0] * u0 + C[..., 1, 0] * u1) ** 2 + (C[..., 0, 1] * u0 + C[..., 1, 1] * u1) ** 2
    with np.errstate(divide="ignore", invalid="ignore"):
        px = (p * xn ** (p - 2))[:, None]
        py = (p * p * yn ** (p - 2))[:, None]
    cp = c**p
    a_x, a_y = (1.0, -cp) if side is Side.RIGHT else (-cp, 1.0)
    return 0.5 * (a_x * px * (fro + (p - 2) * radial) + a_y * py)


def _greedy_control(rng, cfg, c, X, Y):
    n = X.shape[0]
    cands = [_zero_drift_control(X, Y)[:, None]]
    if cfg.n_candidates:
        cands.append(_random_controls(rng, n, cfg.n_candidates))
    C = np.concatenate(cands, axis=1)
    drift = _v_drift(cfg.p, cfg.side, c, X, Y, C)
    drift = np.where(np.isnan(drift), -np.inf, drift)
    best = np.argmax(drift, axis=1)  # first index wins ties, i.e. the zero-drift control
    return C[np.arange(n), best]


def _block(cfg: SimConfig, profile, c_greedy, block: int, start: int, n: int):
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(cfg.seed, spawn_key=(block,))))
    X = np.tile(np.asarray(cfg.x0), (n, 1))
    Y = np.tile(np.asarray(cfg.y0), (n, 1))
    sq = math.sqrt(cfg.dt)
    cps = cfg.checkpoints
    U = np.empty((n, len(cps)))
    qv_diff = np.zeros(n)
    qv_cov = np.zeros(n)
    right = cfg.side is Side.RIGHT

    def record(k_step):
        for j, cp in enumerate(cps):
            if cp == k_step:
                U[:, j] = lift_U(profile, np.hypot(X[:, 0], X[:, 1]), np.hypot(Y[:, 0], Y[:, 1])).U

    record(0)
    for k in range(1, cfg.n_steps + 1):
        dW = rng.standard_normal((n, 2)) * sq
        if cfg.strategy is Strategy.NULL:
            G = None
        elif cfg.strategy is Strategy.RANDOM:
            G = _random_controls(rng, n)
        elif cfg.strategy is Strategy.ZERO_DRIFT:
            G = _zero_drift_control(X, Y)
        else:
            G = _greedy_control(rng, cfg, c_greedy, X, Y)
        if G is not None:
            fro = np.einsum("nij,nij->n", G, G)
            bad = fro > 1 + 1e-12 if right else fro < 1 - 1e-12
            if bad.any():
                raise AssertionError(f"control norm constraint broken at step {k}")
            X += G[:, :, 0] * dW[:, :1] + G[:, :, 1] * dW[:, 1:]
        Y += dW
        qv_diff += dW[:, 0] ** 2 - dW[:, 1] ** 2
        qv_cov += dW[:, 0] * dW[:, 1]
        if not max(np.abs(X).max(), np.abs(Y).max()) <= CAP:  # NaN fails this test too
            big = np.maximum(np.abs(X).max(axis=1), np.abs(Y).max(axis=1))
            i = int(np.argmax(~(big <= CAP)))
            raise NonFiniteState(f"state left [-{CAP:g}, {CAP:g}] (|state|={big[i]:.3g})", path=start + i, step=k)
        record(k)

    mx = np.hypot(X[:, 0], X[:, 1]) ** cfg.p
    my = np.hypot(Y[:, 0], Y[:, 1]) ** cfg.p
    return mx, my, U, qv_diff, qv_cov


def _ratio_and_se(mx, my, p, side):
    A, B = mx.mean(), my.mean()
    num, den = (A, B) if side is Side.RIGHT else (B, A)
    ratio = (num / den) ** (1 / p) if den > 0 else math.inf
    nb = min(N_BATCHES, mx.size)
    if nb < 2 or not (den > 0 and num > 0):
        return ratio, math.nan
    a = np.array([b.mean() for b in np.array_split(mx, nb)])
    b = np.array([b.mean() for b in np.array_split(my, nb)])
    # delta method for (A/B)^(1/p) using batch means
    cov = np.cov(a, b) / nb
    va, vb, cab = cov[0, 0] / A**2, cov[1, 1] / B**2, cov[0, 1] / (A * B)
    var_log = max(va + vb - 2 * cab, 0.0) / p**2
    return ratio, ratio * math.sqrt(var_log)


def simulate(cfg: SimConfig, threads: int | None = None) -> SimResult:
    profile = build_profile(cfg.p)
    c_greedy = cfg.greedy_c if cfg.greedy_c is not None else profile.c
    starts = list(range(0, cfg.n_paths, cfg.block_size))
    jobs = [(b, s, min(cfg.block_size, cfg.n_paths - s)) for b, s in enumerate(starts)]

    def run(job):
        return _block(cfg, profile, c_greedy, *job)

    if threads == 1 or len(jobs) == 1:
        parts = [run(j) for j in jobs]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(run, jobs))  # ordered reduction

    mx, my, U, qd, qc = (np.concatenate(x) for x in zip(*parts))
    ratio, se = _ratio_and_se(mx, my, cfg.p, cfg.side)
    n = cfg.n_paths
    traj = []
    for j, cp in enumerate(cfg.checkpoints):
        col = U[:, j]
        sd = float(col.std(ddof=1)) / math.sqrt(n) if n > 1 else 0.0
        traj.append((cp, cp * cfg.dt, float(col.mean()), sd))

    conf = {"n_steps": cfg.n_steps}
    if cfg.n_steps:
        T = cfg.horizon
        d1, d2 = qd / T, qc / T
        s1, s2 = 2 / math.sqrt(cfg.n_steps), 1 / math.sqrt(cfg.n_steps)
        conf.update(
            qv_diff_rms=float(np.sqrt(np.mean(d1**2))),
            qv_diff_sigma=s1,
            qv_diff_within_3sigma=float(np.mean(np.abs(d1) <= 3 * s1)),
            cov_rms=float(np.sqrt(np.mean(d2**2))),
            cov_sigma=s2,
            cov_within_3sigma=float(np.mean(np.abs(d2) <= 3 * s2)),
        )
    return SimResult(float(mx.mean()), float(my.mean()), float(ratio), float(se), traj, conf, cfg.to_dict())


def is_nonincreasing(trajectory, k: float = 3.0) -> bool:
    """mean U never rises by more than k combined standard errors between checkpoints."""
    for (_, _, m0, s0), (_, _, m1, s1) in zip(trajectory, trajectory[1:]):
        if m1 - m0 > k * math.hypot(s0, s1):
            return False
    return True


def supermartingale_check(cfg: SimConfig, threads: int | None = None):
    res = simulate(cfg, threads=threads)
    return is_nonincreasing(res.U_trajectory), res.U_trajectory


@dataclass
class ProbeResult:
    best_ratio: float
    best_strategy: str
    ratios: dict
    se: dict


def extremal_probe(
    p: float,
    n_paths: int = 10_000,
    n_steps: int = 500,
    dt: float = 2e-3,
    seed: int = 0,
    n_candidates: int = 4,
    greedy_c: float | None = None,
    threads: int | None = None,
) -> ProbeResult:
    """Best terminal ratio of the zero-drift and greedy strategies from the touching start."""
    if not p > 2:
        raise ValueError("the probe is for p > 2")
    x0, y0 = touching_start(p)
    ratios, ses = {}, {}
    for strat in (Strategy.ZERO_DRIFT, Strategy.GREEDY):
        cfg = SimConfig(p, n_paths, n_steps, dt, seed, strat, x0, y0, checkpoints=(0, n_steps),
                        greedy_c=greedy_c, n_candidates=n_candidates)
        r = simulate(cfg, threads=threads)
        ratios[strat.value], ses[strat.value] = r.ratio, r.se_ratio
    best = max(ratios, key=ratios.get)
    return ProbeResult(ratios[best], best, ratios, ses)
