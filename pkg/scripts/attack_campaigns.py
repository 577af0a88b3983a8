"""Forgery and Pauli-tamper campaigns at the toy phase and at random phases."""
import argparse
import json

from qibs.adversary import attack_suite
from qibs.protocol import RunConfig, toy_config

BASES = {
    "toy": toy_config,
    "random_classical": lambda: RunConfig(m=3, message_kind="classical"),
    "random_quantum": lambda: RunConfig(m=3, message_kind="quantum"),
}


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--trials", type=int, default=200)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", default="attack_campaigns.json")
    args = ap.parse_args()

    summary = {}
    for name, make in BASES.items():
        report = attack_suite(make(), args.trials, args.seed)
        summary[name] = {k: v.to_dict() for k, v in report.items()}
        for kind, res in report.items():
            print(f"{name:>16} {kind:<8} rejection {res.rejection_rate:.3f} "
                  f"oracle mismatches {res.oracle_mismatches}")
    with open(args.out, "w", encoding="utf-8") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)


if __name__ == "__main__":
    main()
