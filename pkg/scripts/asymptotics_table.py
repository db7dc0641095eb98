"""Large-p behaviour: zeros against their limits and the norm-bound table."""

import argparse
import sys
from dataclasses import dataclass

import numpy as np

from conformal_bellman import bessel_j0_first_zero, constant_q, smallest_zero
from conformal_bellman.bounds import asymptotic_constants, comparison_table, write_csv


@dataclass
class AsymptoticsConfig:
    p_min: float = 3.0
    p_max: float = 1e6
    n_points: int = 13
    threads: int | None = None


def zero_limits(ps):
    j0 = bessel_j0_first_zero()
    q = constant_q()
    print("p, p*z_p/(j0^2/4), p*(1-z_p')/Q")
    for p in ps:
        a = p * smallest_zero(p).z / (j0**2 / 4)
        b = p * (1 - smallest_zero(p / (p - 1)).z) / q
        print(f"{p:.6g}, {a:.8f}, {b:.8f}")


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--p-min", type=float, default=AsymptoticsConfig.p_min)
    ap.add_argument("--p-max", type=float, default=AsymptoticsConfig.p_max)
    ap.add_argument("--n-points", type=int, default=AsymptoticsConfig.n_points)
    ap.add_argument("--threads", type=int, default=None)
    cfg = AsymptoticsConfig(**vars(ap.parse_args(argv)))
    ps = [float(p) for p in np.geomspace(cfg.p_min, cfg.p_max, cfg.n_points)]

    for c in asymptotic_constants():
        print(f"{c.name:>22}  {c.computed:.9f}  ref {c.reference}  {'ok' if c.ok else 'OFF'}")
    print()
    zero_limits(ps)
    print()
    write_csv(comparison_table(ps, threads=cfg.threads), sys.stdout)


if __name__ == "__main__":
    main()
