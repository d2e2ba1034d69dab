"""Finite-section eigenvalues of the decaying model at growing truncation sizes."""

import argparse
from dataclasses import dataclass, field

import numpy as np

from cjacobi import AsymptoticallyPeriodic, PeriodicPair
from cjacobi.expr import alt, imag, power
from cjacobi.spectrum import Box, finite_section


@dataclass
class SectionConfig:
    dims: list = field(default_factory=lambda: [50, 100, 200, 400])
    box: str = "-2.6,2.6,-0.6,0.61"
    tol: float = 1e-9


def run(cfg: SectionConfig, out_dir=None):
    m = AsymptoticallyPeriodic(PeriodicPair((1.0,), (0.0,)), power(-1), imag(alt() * power(-1)))
    box = Box.parse(cfg.box)
    for dim in cfg.dims:
        est = finite_section(m, dim, box, cfg.tol)
        v = est.values()
        print(f"dim={dim:4d} roots={est.count:4d} complete={est.complete} "
              f"re in [{v.real.min():.4f}, {v.real.max():.4f}] max|im|={np.abs(v.imag).max():.3e}")
        if out_dir:
            with open(f"{out_dir}/fs_{dim}.csv", "w") as fh:
                fh.write(est.to_csv())


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--dims", type=int, nargs="+")
    p.add_argument("--out-dir")
    args = p.parse_args()
    cfg = SectionConfig()
    if args.dims:
        cfg.dims = args.dims
    run(cfg, args.out_dir)


if __name__ == "__main__":
    main()
