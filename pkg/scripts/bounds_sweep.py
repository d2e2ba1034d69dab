"""Two-sided eigenvector bounds for the decaying model across a z grid.

Inside (-2, 2) the ratio sup/inf stays bounded with a flat trend; outside
the trend slope is large. Writes one CSV row per (z, initial condition).
"""

import argparse
import csv
import sys
from dataclasses import dataclass

import numpy as np

from cjacobi import AsymptoticallyPeriodic, PeriodicPair
from cjacobi.eigen import bound_ratio
from cjacobi.expr import alt, imag, power


@dataclass
class SweepConfig:
    z_min: float = -3.0
    z_max: float = 3.0
    points: int = 25
    n_max: int = 10**4


def decaying_model():
    return AsymptoticallyPeriodic(PeriodicPair((1.0,), (0.0,)), power(-1), imag(alt() * power(-1)))


def run(cfg: SweepConfig, out):
    m = decaying_model()
    writer = csv.writer(out)
    writer.writerow(["z", "alpha", "inf", "sup", "ratio", "slope"])
    for z in np.linspace(cfg.z_min, cfg.z_max, cfg.points):
        br = bound_ratio(m, 0, 1, z, cfg.n_max, n_min=10)
        for s in br.per_alpha:
            label = "e1" if s.alpha[0] != 0 else "e2"
            writer.writerow([f"{z:.17g}", label, f"{s.inf:.17g}", f"{s.sup:.17g}",
                             f"{s.ratio:.17g}", f"{s.slope:.17g}"])


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--points", type=int, default=25)
    p.add_argument("--nmax", type=int, default=10**4)
    p.add_argument("--out", help="CSV path (default stdout)")
    args = p.parse_args()
    cfg = SweepConfig(points=args.points, n_max=args.nmax)
    if args.out:
        with open(args.out, "w", newline="") as fh:
            run(cfg, fh)
    else:
        run(cfg, sys.stdout)


if __name__ == "__main__":
    main()
