"""Noiseless and noisy acceptance on the toy configuration, written as JSON."""
import argparse
import json

from qibs.noise import NoiseModel, success_experiment
from qibs.protocol import toy_config


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--trials", type=int, default=10_000)
    ap.add_argument("--p", type=float, default=0.0)
    ap.add_argument("--kind", default="depolarizing")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", default="success_experiment.json")
    args = ap.parse_args()

    result = success_experiment(toy_config(), args.trials, NoiseModel(args.kind, args.p), args.seed)
    with open(args.out, "w", encoding="utf-8") as fh:
        json.dump({"seed": args.seed, **result.to_dict()}, fh, indent=2, sort_keys=True)
    print(f"acceptance {result.acceptance:.4f} (95% CI {result.ci[0]:.4f}..{result.ci[1]:.4f}) -> {args.out}")


if __name__ == "__main__":
    main()
