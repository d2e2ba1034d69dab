"""Scan the Lambda set of every bundled model that has a limit family."""

import argparse
from dataclasses import dataclass
from pathlib import Path

from cjacobi import load_model
from cjacobi.transfer import default_scan_radius, estimate_gamma, limit_family, scan_family

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


@dataclass
class ScanConfig:
    step: float = 1e-3
    out: Path | None = None


def run(cfg: ScanConfig):
    for path in sorted(CONFIGS.glob("*.json")):
        model = load_model(path)
        fam = limit_family(model)
        if fam is None:
            continue
        for i in fam.offsets:
            g, _ = estimate_gamma(model, i, fam.period)
            r = default_scan_radius(model)
            scan = scan_family(fam, i, -r, r, cfg.step, g)
            ivs = " ∪ ".join(f"({lo:.4f}, {hi:.4f})" for lo, hi in scan.intervals) or "empty"
            print(f"{path.stem:18s} offset {i}: gamma={g:.4g} Lambda={ivs}")
            if cfg.out is not None:
                cfg.out.mkdir(parents=True, exist_ok=True)
                (cfg.out / f"{path.stem}_offset{i}.csv").write_text(scan.to_csv())


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--step", type=float, default=1e-3)
    p.add_argument("--out", type=Path, help="directory for per-scan CSV files")
    args = p.parse_args()
    run(ScanConfig(args.step, args.out))


if __name__ == "__main__":
    main()
