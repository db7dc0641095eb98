"""Command line front end: ``conformal-bellman <command> [flags]``.

Exit codes: 0 ok, 1 a verification or simulation check failed, 2 bad input.
Errors go to stderr as one JSON object.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from dataclasses import asdict
from importlib import resources

import numpy as np

from . import __version__
from .bellman import build_profile, lift_U, sharp_constants
from .bounds import asymptotic_constants, comparison_table, write_csv
from .errors import NonFiniteState
from .laguerre import smallest_zero
from .simulate import SimConfig, Strategy, is_nonincreasing, laguerre_start, simulate, touching_start
from .verify import run_suite

DEFAULT_REL_TOL = 1e-12
DEFAULT_GRID = 10_000
DEFAULT_SEED = 0
GOLDEN_P = (1.2, 1.5, 1.8, 2.0, 2.1, 2.5, 3.0, 4.0, 5.0, 10.0)
GOLDEN_COLUMNS = ("p", "z_p", "c_p", "a_p", "C_theorem")


class UsageError(Exception):
    pass


class Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def parse_p_range(text: str) -> list[float]:
    """start:stop:count[:geom|lin]; geometric spacing by default."""
    parts = text.split(":")
    if len(parts) not in (3, 4):
        raise ValueError(f"p-range must be start:stop:count[:geom|lin], got {text!r}")
    a, b, n = float(parts[0]), float(parts[1]), int(parts[2])
    mode = parts[3] if len(parts) == 4 else "geom"
    if n < 1 or mode not in ("geom", "lin"):
        raise ValueError(f"bad p-range {text!r}")
    if mode == "geom":
        if a <= 0 or b <= 0:
            raise ValueError("geometric p-range needs positive ends")
        return [float(v) for v in np.geomspace(a, b, n)]
    return [float(v) for v in np.linspace(a, b, n)]


def _fmt(v):
    if isinstance(v, float):
        return format(v, ".12g")
    return str(v)


def _pretty(v):
    if isinstance(v, float) and math.isfinite(v) and (v == 0 or 1e-4 <= abs(v) < 1e6):
        return f"{v:.12f}"
    return _fmt(v)


def _header(args) -> list[str]:
    return [
        f"conformal_bellman {__version__} command={args.command}",
        f"rel_tol={args.rel_tol:g} grid={getattr(args, 'grid', DEFAULT_GRID)} seed={getattr(args, 'seed', DEFAULT_SEED)}",
    ]


def _emit(args, records: list[dict], columns=None, extra: dict | None = None) -> str:
    """Render records in the requested format, with the provenance header."""
    columns = columns or (list(records[0]) if records else [])
    head = _header(args)
    if args.format == "json":
        payload = {"meta": head, "result": records}
        if extra:
            payload.update(extra)
        return json.dumps(_jsonable(payload), sort_keys=True, indent=2) + "\n"
    out = io.StringIO()
    for line in head:
        out.write(f"# {line}\n")
    if args.format == "csv":
        w = csv.writer(out, lineterminator="\n")
        w.writerow(columns)
        for r in records:
            w.writerow([_fmt(r.get(c)) for c in columns])
    else:
        for r in records:
            width = max(len(c) for c in columns)
            for c in columns:
                out.write(f"{c:<{width}}  {_pretty(r.get(c))}\n")
            out.write("\n")
        for k, v in (extra or {}).items():
            out.write(f"{k}: {json.dumps(_jsonable(v), sort_keys=True)}\n")
    return out.getvalue()


def _jsonable(v):
    if isinstance(v, float):
        return v if math.isfinite(v) else None
    if isinstance(v, dict):
        return {str(k): _jsonable(u) for k, u in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(u) for u in v]
    if isinstance(v, (np.floating, np.integer)):
        return _jsonable(v.item())
    return v


def _write(args, text: str) -> None:
    if args.output:
        with open(args.output, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def cmd_zp(args) -> int:
    z = smallest_zero(args.p, abs_tol=args.rel_tol)
    _write(args, _emit(args, [{"p": args.p, "z_p": z.z, "residual": z.residual, "bracket_width": z.bracket_width}]))
    return 0


def cmd_constants(args) -> int:
    rec = asdict(sharp_constants(args.p))
    rec["side"] = build_profile(args.p).side.value
    rec["a_p"] = build_profile(args.p).a_p
    _write(args, _emit(args, [rec]))
    return 0


def cmd_bellman(args) -> int:
    prof = build_profile(args.p)
    s = np.linspace(0.0, 1.0, args.points + 2)[1:-1]
    g, g1, g2 = prof.g(s)
    v = prof.obstacle(s)
    recs = [
        {"s": float(a), "g": float(b), "dg": float(c), "d2g": float(d), "obstacle": float(e)}
        for a, b, c, d, e in zip(s, g, g1, g2, v)
    ]
    extra = {"profile": {"p": prof.p, "z_p": prof.glue, "c_p": prof.c, "a_p": prof.a_p, "side": prof.side.value}}
    _write(args, _emit(args, recs, extra=extra))
    return 0


def cmd_verify(args) -> int:
    reports = run_suite(args.p, grid_n=args.grid, c=args.c)
    recs = []
    for r in reports:
        recs.append({
            "condition_id": r.condition_id,
            "passed": r.passed,
            "worst_slack": r.worst_slack,
            "worst_point": json.dumps(_jsonable(r.worst_point), sort_keys=True),
            "grid": r.grid,
        })
    ok = all(r.passed for r in reports)
    _write(args, _emit(args, recs, extra={"all_passed": ok}))
    return 0 if ok else 1


def cmd_simulate(args) -> int:
    x0, y0 = (touching_start if args.start == "touching" else laguerre_start)(args.p)
    cfg = SimConfig(
        p=args.p, n_paths=args.paths, n_steps=args.steps, dt=args.dt, seed=args.seed,
        strategy=Strategy(args.strategy), x0=x0, y0=y0, n_candidates=args.candidates,
    )
    res = simulate(cfg, threads=args.threads)
    C = sharp_constants(args.p).C_normalized
    u0 = lift_U(build_profile(args.p), math.hypot(*x0), math.hypot(*y0)).U
    checks = {"supermartingale": is_nonincreasing(res.U_trajectory)}
    if u0 <= 1e-12 * max(1.0, abs(u0)):
        # the moment bound follows only from starts with U(x0, y0) <= 0
        checks["moment_bound"] = res.respects(C)
    if args.trajectory_csv:
        with open(args.trajectory_csv, "w", newline="") as fh:
            res.write_trajectory_csv(fh)
    if args.format == "csv":
        recs = [{"checkpoint": c, "checkpoint_time": t, "mean_U": m, "se": s} for c, t, m, s in res.U_trajectory]
        text = _emit(args, recs)
    else:
        d = res.to_dict()
        d["checks"] = checks
        d["C_normalized"] = C
        text = _emit(args, [d]) if args.format == "json" else _emit(
            args, [{k: d[k] for k in ("moment_X", "moment_Y", "ratio", "se_ratio", "C_normalized")}],
            extra={"checks": checks, "U_trajectory": d["U_trajectory"], "conformality": d["conformality"]},
        )
    _write(args, text)
    return 0 if all(checks.values()) else 1


def cmd_bounds(args) -> int:
    ps = parse_p_range(args.p_range) if args.p_range else [args.p]
    rows = comparison_table(ps, threads=args.threads)
    for r in rows:
        if r.error:
            sys.stderr.write(json.dumps({"p": r.p, "row_error": r.error}) + "\n")
    if args.format == "csv":
        out = io.StringIO()
        write_csv(rows, out, header_comment="\n".join(_header(args)))
        _write(args, out.getvalue())
    else:
        _write(args, _emit(args, [asdict(r) for r in rows]))
    return 0


def cmd_asymptotics(args) -> int:
    consts = asymptotic_constants()
    recs = [{"name": c.name, "computed": c.computed, "reference": c.reference, "tolerance": c.tolerance, "ok": c.ok}
            for c in consts]
    _write(args, _emit(args, recs))
    return 0 if all(c.ok for c in consts) else 1


def golden_rows() -> list[dict]:
    rows = []
    for p in GOLDEN_P:
        k = sharp_constants(p)
        rows.append({"p": p, "z_p": k.z_p, "c_p": k.c_p, "a_p": build_profile(p).a_p, "C_theorem": k.C_theorem})
    return rows


def golden_csv_text() -> str:
    out = io.StringIO()
    out.write("# sharp constants; regenerate with: conformal-bellman goldens --write\n")
    w = csv.writer(out, lineterminator="\n")
    w.writerow(GOLDEN_COLUMNS)
    for r in golden_rows():
        w.writerow([format(r[c], ".15g") for c in GOLDEN_COLUMNS])
    return out.getvalue()


def read_goldens(text: str | None = None) -> list[dict]:
    if text is None:
        text = resources.files("conformal_bellman").joinpath("data/goldens.csv").read_text()
    lines = [ln for ln in text.splitlines() if ln and not ln.startswith("#")]
    return [{k: float(v) for k, v in rec.items()} for rec in csv.DictReader(lines)]


def cmd_goldens(args) -> int:
    text = golden_csv_text()
    if args.write:
        path = args.output or str(resources.files("conformal_bellman").joinpath("data/goldens.csv"))
        with open(path, "w", newline="") as fh:
            fh.write(text)
        sys.stdout.write(f"wrote {path}\n")
        return 0
    stored = read_goldens()
    fresh = read_goldens(text)
    bad = []
    for a, b in zip(stored, fresh):
        for c in GOLDEN_COLUMNS:
            if not math.isclose(a[c], b[c], rel_tol=1e-10, abs_tol=1e-12):
                bad.append({"p": a["p"], "column": c, "stored": a[c], "computed": b[c]})
    if len(stored) != len(fresh):
        bad.append({"rows": [len(stored), len(fresh)]})
    _write(args, _emit(args, fresh, columns=list(GOLDEN_COLUMNS), extra={"mismatches": bad}))
    return 0 if not bad else 1


def build_parser() -> Parser:
    common = Parser(add_help=False)
    common.add_argument("--format", choices=("csv", "json", "pretty"), default="pretty")
    common.add_argument("--output", default=None, help="write here instead of stdout")
    common.add_argument("--threads", type=int, default=os.cpu_count() or 1)
    common.add_argument("--rel-tol", type=float, default=DEFAULT_REL_TOL)

    ap = Parser(prog="conformal-bellman", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True, parser_class=Parser)

    sp = sub.add_parser("zp", parents=[common], help="smallest zero of L_p")
    sp.add_argument("--p", type=float, required=True)
    sp.set_defaults(func=cmd_zp)

    sp = sub.add_parser("constants", parents=[common], help="sharp constants for one p")
    sp.add_argument("--p", type=float, required=True)
    sp.set_defaults(func=cmd_constants)

    sp = sub.add_parser("bellman", parents=[common], help="profile g and obstacle on a grid")
    sp.add_argument("--p", type=float, required=True)
    sp.add_argument("--points", type=int, default=200)
    sp.set_defaults(func=cmd_bellman)

    sp = sub.add_parser("verify", parents=[common], help="grid certification of the majorant conditions")
    sp.add_argument("--p", type=float, required=True)
    sp.add_argument("--grid", type=int, default=DEFAULT_GRID)
    sp.add_argument("--c", type=float, default=None, help="use this constant instead of c_p (failure injection)")
    sp.set_defaults(func=cmd_verify)

    sp = sub.add_parser("simulate", parents=[common], help="Monte Carlo run")
    sp.add_argument("--p", type=float, required=True)
    sp.add_argument("--paths", type=int, default=10_000)
    sp.add_argument("--steps", type=int, default=1000)
    sp.add_argument("--dt", type=float, default=1e-3)
    sp.add_argument("--seed", type=int, default=DEFAULT_SEED)
    sp.add_argument("--strategy", choices=[s.value for s in Strategy], default="random")
    sp.add_argument("--candidates", type=int, default=4, help="random candidates per step for greedy")
    sp.add_argument("--start", choices=("laguerre", "touching"), default="laguerre")
    sp.add_argument("--trajectory-csv", default=None)
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("bounds", parents=[common], help="Beurling-Ahlfors bound table")
    g = sp.add_mutually_exclusive_group(required=True)
    g.add_argument("--p", type=float)
    g.add_argument("--p-range", help="start:stop:count[:geom|lin]")
    sp.set_defaults(func=cmd_bounds)

    sp = sub.add_parser("asymptotics", parents=[common], help="large-p constants vs reference values")
    sp.set_defaults(func=cmd_asymptotics)

    sp = sub.add_parser("goldens", parents=[common], help="check (or --write) the golden constants file")
    sp.add_argument("--write", action="store_true")
    sp.set_defaults(func=cmd_goldens)
    return ap


def _fail(code: int, exc: BaseException) -> int:
    sys.stderr.write(json.dumps({"error": type(exc).__name__, "message": str(exc), "exit_code": code}) + "\n")
    return code


def run(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        return _fail(2, exc)
    try:
        return args.func(args)
    except NonFiniteState as exc:
        return _fail(1, exc)
    except (ValueError, ArithmeticError) as exc:
        return _fail(2, exc)


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
