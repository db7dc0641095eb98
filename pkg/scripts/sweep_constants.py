"""Sharp constants, touching coefficients and certification slack over a range of p."""

import argparse
import csv
import sys
import time
from dataclasses import dataclass, fields

import numpy as np

from conformal_bellman import build_profile, sharp_constants
from conformal_bellman.verify import run_suite


@dataclass
class SweepConfig:
    p_min: float = 1.1
    p_max: float = 50.0
    n_points: int = 40
    grid_n: int = 4000
    verify: bool = True


def sweep(cfg: SweepConfig):
    ps = np.unique(np.concatenate([np.geomspace(cfg.p_min, cfg.p_max, cfg.n_points), [2.0]]))
    for p in ps:
        p = float(p)
        k = sharp_constants(p)
        row = {"p": p, "side": k.side.value, "z_p": k.z_p, "c_p": k.c_p,
               "C_theorem": k.C_theorem, "a_p": build_profile(p).a_p}
        if cfg.verify:
            reports = run_suite(p, grid_n=cfg.grid_n)
            row["worst_slack"] = max(r.worst_slack for r in reports)
            row["all_passed"] = all(r.passed for r in reports)
        yield row


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    for f in fields(SweepConfig):
        if f.type in ("bool", bool):
            ap.add_argument(f"--no-{f.name}", dest=f.name, action="store_false")
        else:
            ap.add_argument(f"--{f.name.replace('_', '-')}", type=type(f.default), default=f.default)
    cfg = SweepConfig(**vars(ap.parse_args(argv)))
    t = time.perf_counter()
    rows = list(sweep(cfg))
    w = csv.DictWriter(sys.stdout, fieldnames=list(rows[0]), lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: format(v, ".12g") if isinstance(v, float) else v for k, v in r.items()})
    print(f"# {len(rows)} orders in {time.perf_counter() - t:.1f}s", file=sys.stderr)


if __name__ == "__main__":
    main()
