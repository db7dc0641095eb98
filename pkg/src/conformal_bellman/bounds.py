"""Beurling-Ahlfors norm estimates built from the Laguerre zeros.

tau_p is the rotation-averaging factor (mean of |cos|^p)^(-1/p).  The chained
bound multiplies it by the left-side constant z_{p'}/(1 - z_{p'}); the closed
form replaces both factors by explicit upper estimates.
"""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import astuple, dataclass, fields

from scipy import integrate, special

from .bellman import dual_constant_ratio
from .laguerre import bessel_j0_first_zero, constant_q, smallest_zero

TAU_REL_TOL = 1e-12
CSV_COLUMNS = ("p", "z_pprime", "tau_p", "tau_upper", "bound_chain", "bound_thm", "legacy_sqrt", "legacy_1575")


def cos_moment(p: float) -> float:
    """(1/2pi) int_0^{2pi} |cos t|^p dt by adaptive quadrature on a quarter period."""
    if not p >= 0:
        raise ValueError("p must be nonnegative")
    # the integrand concentrates near 0 for large p; tell quad where
    width = min(math.pi / 2, 8.0 / math.sqrt(p + 1.0))
    pts = [width] if width < math.pi / 2 else None
    # cos t = 1 - 2 sin^2(t/2); the log1p form keeps relative accuracy when p is huge
    def f(t):
        return math.exp(p * math.log1p(-2.0 * math.sin(0.5 * t) ** 2)) if t < math.pi / 2 else 0.0

    val, _ = integrate.quad(
        f, 0.0, math.pi / 2, epsabs=0.0, epsrel=TAU_REL_TOL, limit=400, points=pts
    )
    return 4.0 * val / (2.0 * math.pi)


def cos_moment_closed(p: float) -> float:
    """Gamma((p+1)/2) / (sqrt(pi) Gamma(p/2 + 1))."""
    # poch(a, -1/2) = Gamma(a - 1/2)/Gamma(a) without subtracting two large log-gammas
    return special.poch(p / 2 + 1, -0.5) / math.sqrt(math.pi)


def wallis_mean(n: int) -> float:
    """Mean of cos^(2n) over a period: (1*3*...*(2n-1)) / (2*4*...*(2n))."""
    if n < 0 or int(n) != n:
        raise ValueError("n must be a nonnegative integer")
    out = 1.0
    for k in range(1, n + 1):
        out *= (2 * k - 1) / (2 * k)
    return out


def tau_p(p: float) -> float:
    if not p >= 1:
        raise ValueError("tau_p needs p >= 1")
    m = cos_moment(p)
    m_closed = cos_moment_closed(p)
    assert abs(m - m_closed) <= 1e-10 * m_closed, (p, m, m_closed)
    return m ** (-1.0 / p)


def tau_upper(p: float) -> float:
    if not p > 0:
        raise ValueError("p must be positive")
    return ((p + 3) * math.pi / 2) ** (1.0 / (2 * p))


def ba_bound_chain(p: float) -> float:
    if not p > 2:
        raise ValueError("the chained bound needs p > 2")
    z = smallest_zero(p / (p - 1)).z
    return tau_p(p) * z / (1 - z)


def ba_bound_theorem(p: float) -> float:
    if not p > 2:
        raise ValueError("the closed-form bound needs p > 2")
    q = constant_q()
    return tau_upper(p) * (p - q) / q


def legacy_sqrt(p: float) -> float:
    return math.sqrt(2 * (p * p - p))


def legacy_1575(p: float) -> float:
    return 1.575 * (max(p, p / (p - 1)) - 1)


@dataclass
class BoundTableRow:
    p: float
    z_pprime: float = math.nan
    tau_p: float = math.nan
    tau_upper: float = math.nan
    bound_chain: float = math.nan
    bound_thm: float = math.nan
    legacy_sqrt: float = math.nan
    legacy_1575: float = math.nan
    error: str | None = None


def bound_row(p: float) -> BoundTableRow:
    """One table row; a failing column leaves NaN and records the first error."""
    row = BoundTableRow(float(p))
    errors = []

    def put(name, fn):
        try:
            setattr(row, name, fn())
        except Exception as exc:  # noqa: BLE001 - partial rows are allowed
            errors.append(f"{name}: {type(exc).__name__}: {exc}")

    put("z_pprime", lambda: smallest_zero(p / (p - 1)).z)
    put("tau_p", lambda: tau_p(p))
    put("tau_upper", lambda: tau_upper(p))
    put("bound_chain", lambda: ba_bound_chain(p))
    put("bound_thm", lambda: ba_bound_theorem(p))
    put("legacy_sqrt", lambda: legacy_sqrt(p))
    put("legacy_1575", lambda: legacy_1575(p))

    if math.isfinite(row.z_pprime) and p > 2:
        limit = 1 - constant_q() / p
        if not row.z_pprime < limit:
            errors.append(f"z_pprime={row.z_pprime!r} is not below 1 - Q/p = {limit!r}")
    if errors:
        row.error = "; ".join(errors)
    return row


def comparison_table(p_list, threads: int | None = None) -> list[BoundTableRow]:
    p_list = [float(p) for p in p_list]
    if threads == 1 or len(p_list) < 2:
        return [bound_row(p) for p in p_list]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(bound_row, p_list))


def _fmt(x: float) -> str:
    return format(x, ".12g")


def write_csv(rows, fh, header_comment: str | None = None) -> None:
    if header_comment:
        for line in header_comment.splitlines():
            fh.write(f"# {line}\n")
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in rows:
        w.writerow([_fmt(v) for v in astuple(r)[: len(CSV_COLUMNS)]])


def read_csv(fh) -> list[BoundTableRow]:
    lines = [ln for ln in fh if not ln.startswith("#")]
    reader = csv.DictReader(io.StringIO("".join(lines)))
    if tuple(reader.fieldnames or ()) != CSV_COLUMNS:
        raise ValueError(f"unexpected columns {reader.fieldnames}")
    return [BoundTableRow(**{k: float(v) for k, v in rec.items()}) for rec in reader]


def row_fields() -> list[str]:
    return [f.name for f in fields(BoundTableRow)]


@dataclass(frozen=True)
class AsymptoticConstant:
    name: str
    computed: float
    reference: float
    tolerance: float

    @property
    def ok(self) -> bool:
        return abs(self.computed - self.reference) <= self.tolerance


def asymptotic_constants(ratio_p: float = 1e4) -> list[AsymptoticConstant]:
    """Limits governing large p, next to the rounded reference values."""
    q = constant_q()
    j0 = bessel_j0_first_zero()
    return [
        AsymptoticConstant("Q", q, 0.718282, 5e-7),
        AsymptoticConstant("j0", j0, 2.404826, 1e-6),
        AsymptoticConstant("4*sqrt(2)/j0^2", 4 * math.sqrt(2) / j0**2, 0.97815, 1e-5),
        AsymptoticConstant("1/(Q*sqrt(2))", 1 / (q * math.sqrt(2)), 0.98444, 1e-5),
        AsymptoticConstant("j0^2/(8Q)", j0**2 / (8 * q), 1.006, 2e-3),
        AsymptoticConstant(f"dual_ratio(p={ratio_p:g})", dual_constant_ratio(ratio_p), 1.006, 2e-3),
        AsymptoticConstant("1/Q", 1 / q, 1.3922, 5e-5),
        AsymptoticConstant("j0^2/4", j0**2 / 4, 1.4458, 5e-5),
    ]
