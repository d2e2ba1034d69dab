"""Proper/improper verdicts for the power-law family across growth exponents."""

import argparse
from dataclasses import dataclass, field

from cjacobi import PeriodicPair, PowerLawExample
from cjacobi.eigen import classify


@dataclass
class ClassifyConfig:
    exponents: list = field(default_factory=lambda: [0.5, 0.7, 0.9, 1.0, 1.1, 1.5, 2.0])
    mu: float = 0.2
    n_max: int = 10**4


def run(cfg: ClassifyConfig):
    base = PeriodicPair((1.0,), (0.0,))
    for lam in cfg.exponents:
        rep = classify(PowerLawExample(base, lam, cfg.mu), n_max=cfg.n_max)
        flag = " (boundary exponent)" if rep.evidence.get("carleman_boundary") else ""
        print(f"lambda={lam:<4g} {rep.verdict:<12s}{flag}: " + "; ".join(rep.statements()))


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--exponents", type=float, nargs="+")
    p.add_argument("--mu", type=float, default=0.2)
    args = p.parse_args()
    cfg = ClassifyConfig(mu=args.mu)
    if args.exponents:
        cfg.exponents = args.exponents
    run(cfg)


if __name__ == "__main__":
    main()
