"""Acceptance versus per-qubit noise strength, one CSV per noise kind."""
import argparse
import csv

from qibs.noise import HARDWARE_ACCEPTANCE, KINDS, calibration_sweep
from qibs.protocol import toy_config


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--trials", type=int, default=2000)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--step", type=float, default=0.02)
    ap.add_argument("--points", type=int, default=11)
    ap.add_argument("--prefix", default="noise_sweep")
    args = ap.parse_args()

    grid = [round(args.step * i, 6) for i in range(args.points)]
    for kind in KINDS:
        rows, crossing = calibration_sweep(toy_config(), grid, args.trials, args.seed, kind=kind)
        path = f"{args.prefix}_{kind}.csv"
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["p", "acceptance", "ci_low", "ci_high"])
            for r in rows:
                w.writerow([r.model.p, r.acceptance, r.ci[0], r.ci[1]])
        print(f"{kind}: first p below {HARDWARE_ACCEPTANCE} is {crossing} -> {path}")


if __name__ == "__main__":
    main()
