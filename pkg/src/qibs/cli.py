"""Command-line entry point: ``qibs {toy,run,attack,experiment,email-demo,costs}``.

Exit codes: 0 when the outcome is the expected one, 1 on a verification
mismatch, 2 on usage errors.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from math import sqrt

import numpy as np

from . import adversary, noise
from .email_demo import email_demo
from .keyestab import PhaseSecret
from .protocol import RunConfig, check_costs, run_protocol, toy_config
from .qotp import OtpKey, encrypt
from .statevector import StateVector, basis_state, format_state, from_terms

EXIT_OK, EXIT_MISMATCH, EXIT_USAGE = 0, 1, 2
GOLDEN_TOL = 1e-9

_R = 1 / (2 * sqrt(2))

# Transcribed from the worked three-qubit example; never recomputed.
TOY_GOLDEN = {
    "otp_example": {"scale": 1.0, "terms": {"100": 1}},
    "signature": {
        "scale": _R,
        "terms": {"110": 1, "010": -1, "100": 1, "000": -1, "111": 1, "011": -1, "101": 1, "001": -1},
    },
    "encrypted_signature": {
        "scale": -_R,
        "terms": {"110": 1, "010": 1, "100": 1, "000": 1, "111": 1, "011": 1, "101": 1, "001": 1},
    },
    "encrypted_identity": {"scale": 1.0, "terms": {"000": 1}},
    "skg_recovery": {"scale": 1.0, "terms": {"010": 1}},
    "reply": {"scale": 1.0, "terms": {"001": 1}},
    "outcome": "accept",
}

# checkpoint -> the golden states it compares
TOY_CHECKPOINTS = {
    "otp_example": ("otp_example",),
    "signature": ("signature",),
    "encrypted_request": ("encrypted_signature", "encrypted_identity"),
    "skg_recovery": ("skg_recovery",),
    "reply": ("reply",),
    "outcome": ("outcome",),
}


class UsageError(Exception):
    pass


def _golden_state(entry: dict) -> StateVector:
    terms = {}
    for label, coeff in entry["terms"].items():
        terms[label] = complex(*coeff) if isinstance(coeff, list) else complex(coeff)
    return from_terms(terms, entry.get("scale", 1.0))


def phase_aligned_deviation(observed: StateVector, expected: StateVector) -> float:
    """Max amplitude difference after removing the best global phase."""
    if observed.num_qubits != expected.num_qubits:
        return float("inf")
    overlap = np.vdot(expected.amplitudes, observed.amplitudes)
    phase = overlap / abs(overlap) if abs(overlap) > 0 else 1.0
    return float(np.max(np.abs(observed.amplitudes - phase * expected.amplitudes)))


def toy_checkpoints(golden: dict | None = None) -> list:
    golden = golden or TOY_GOLDEN
    transcript = run_protocol(toy_config())
    observed = {
        "otp_example": encrypt(basis_state("010"), OtpKey("010110")),
        "signature": transcript.states["signature"],
        "encrypted_signature": transcript.states["encrypted_signature"],
        "encrypted_identity": transcript.states["encrypted_identity"],
        "skg_recovery": transcript.states["recovered"],
        "reply": transcript.states["reply"],
    }
    results = []
    for name, parts in TOY_CHECKPOINTS.items():
        if name == "outcome":
            ok = transcript.outcome == golden["outcome"]
            results.append({"name": name, "passed": ok, "observed": transcript.outcome,
                            "expected": golden["outcome"], "deviation": 0.0 if ok else 1.0})
            continue
        worst, shown = 0.0, []
        for part in parts:
            try:
                expected = _golden_state(golden[part])
                dev = phase_aligned_deviation(observed[part], expected)
                exp_text = format_state(expected)
            except (KeyError, ValueError) as exc:
                dev, exp_text = float("inf"), f"invalid golden entry: {exc}"
            worst = max(worst, dev)
            shown.append({"part": part, "observed": format_state(observed[part]), "expected": exp_text})
        results.append({"name": name, "passed": worst <= GOLDEN_TOL, "parts": shown, "deviation": worst})
    return results


def _dump(payload, args) -> None:
    text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    _write(text, args)


def _write(text: str, args) -> None:
    if getattr(args, "out", None):
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def cmd_toy(args) -> int:
    golden = None
    if args.golden:
        with open(args.golden, encoding="utf-8") as fh:
            golden = json.load(fh)
    results = toy_checkpoints(golden)
    failed = [r for r in results if not r["passed"]]
    if args.json:
        _dump({"checkpoints": results, "passed": not failed,
               "first_failure": failed[0]["name"] if failed else None}, args)
    else:
        lines = []
        for r in results:
            status = "PASS" if r["passed"] else "FAIL"
            if r["name"] == "outcome":
                lines.append(f"[{status}] outcome: {r['observed']} (expected {r['expected']})")
                continue
            for part in r["parts"]:
                lines.append(f"[{status}] {part['part']}: {part['observed']}")
                if not r["passed"]:
                    lines.append(f"         expected: {part['expected']}")
        lines.append("all checkpoints match" if not failed else f"mismatch at stage: {failed[0]['name']}")
        _write("\n".join(lines) + "\n", args)
    if failed:
        print(f"toy example mismatch at stage {failed[0]['name']}", file=sys.stderr)
        return EXIT_MISMATCH
    return EXIT_OK


def _seed(args) -> int:
    if args.seed is not None:
        return args.seed
    env = os.environ.get("QIBS_SEED")
    if env is None:
        return 0
    try:
        return int(env)
    except ValueError:
        raise UsageError(f"QIBS_SEED must be an integer, got {env!r}") from None


def _phase(text: str | None) -> PhaseSecret | None:
    if text is None:
        return None
    try:
        return PhaseSecret.parse(text)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def build_config(args, base: RunConfig | None = None) -> RunConfig:
    cfg = base or RunConfig()
    updates = {
        "m": args.m, "n": args.n, "identity": args.identity, "message": args.message,
        "signer_key": args.inject_ti, "verifier_key": args.inject_tu,
        "phase": _phase(args.inject_phi), "forge_key": args.forge_key,
        "forge_phase": _phase(args.forge_phi), "pauli": args.pauli,
        "comparator": args.comparator, "shots": args.shots, "message_kind": args.message_kind,
    }
    for key, value in updates.items():
        if value is not None:
            setattr(cfg, key, value)
    cfg.seed = _seed(args)
    if args.p is not None and args.p > 0:
        cfg.noise = noise.NoiseModel(args.noise_kind, args.p)
    elif args.p is not None:
        cfg.noise = noise.NoiseModel(args.noise_kind, 0.0)
    try:
        return cfg.validate()
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def cmd_run(args) -> int:
    cfg = build_config(args, toy_config() if args.toy else None)
    transcript = run_protocol(cfg)
    payload = transcript.to_dict()
    payload["seed"] = cfg.seed
    if args.json or args.out:
        _dump(payload, args)
    else:
        for msg in transcript.messages:
            print(f"{msg.sender:>14} -> {msg.receiver:<14} {msg.kind:<22} {msg.qubits:>4} qubits")
        print(f"outcome: {transcript.outcome}" + (f" ({transcript.reason})" if transcript.reason else ""))
        print(f"total qubits: {transcript.total_qubits}")
    attacked = any(v is not None for v in (cfg.forge_key, cfg.forge_phase)) or (
        cfg.pauli is not None and set(cfg.pauli) != {"I"}
    )
    if cfg.noise is not None and cfg.noise.p > 0:
        return EXIT_OK
    expected = "reject" if attacked else "accept"
    return EXIT_OK if transcript.outcome == expected else EXIT_MISMATCH


def cmd_attack(args) -> int:
    if args.trials < 1:
        raise UsageError("--trials must be >= 1")
    toy = args.base == "toy" or (args.base is None and args.kind == "pauli")
    base = toy_config() if toy else RunConfig(message_kind="quantum")
    cfg = build_config(args, base)
    report = adversary.attack_suite(cfg, args.trials, cfg.seed, attacks=(args.kind,))
    result = report[args.kind]
    payload = {"base": "toy" if toy else "random", "seed": cfg.seed, **result.to_dict()}
    if args.json or args.out:
        _dump(payload, args)
    else:
        print(f"{args.kind}: {result.rejected}/{result.trials} rejected "
              f"(rate {result.rejection_rate:.4f}, mean recovered fidelity {result.mean_fidelity:.4f}, "
              f"oracle mismatches {result.oracle_mismatches})")
    trivial = args.kind == "pauli" and cfg.pauli is not None and set(cfg.pauli) == {"I"}
    expected_rejected = 0 if trivial else result.trials
    ok = result.rejected == expected_rejected and result.oracle_mismatches == 0
    return EXIT_OK if ok else EXIT_MISMATCH


def _grid(text: str) -> list:
    items = [t for t in text.split(",") if t.strip()]
    if not items:
        raise UsageError("--grid must list at least one probability")
    try:
        return [float(t) for t in items]
    except ValueError:
        raise UsageError(f"bad --grid value {text!r}") from None


def cmd_experiment(args) -> int:
    grid = _grid(args.grid)
    base = toy_config() if args.base == "toy" else None
    cfg = build_config(args, base)
    try:
        rows, crossing = noise.calibration_sweep(cfg, grid, args.trials, cfg.seed, kind=args.noise_kind)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    if args.json:
        _dump({"seed": cfg.seed, "rows": [r.to_dict() for r in rows],
               "first_p_below_hardware_acceptance": crossing,
               "hardware_acceptance": noise.HARDWARE_ACCEPTANCE}, args)
    else:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["noise_kind", "p", "trials", "accepted", "acceptance", "ci_low", "ci_high"])
        for r in rows:
            writer.writerow([r.model.kind, r.model.p, r.trials, r.accepted,
                             f"{r.acceptance:.6f}", f"{r.ci[0]:.6f}", f"{r.ci[1]:.6f}"])
        _write(buf.getvalue(), args)
        print(f"# first p with acceptance < {noise.HARDWARE_ACCEPTANCE}: {crossing}", file=sys.stderr)
    return EXIT_OK


def cmd_email_demo(args) -> int:
    if not args.message:
        raise UsageError("message must be non-empty")
    report = email_demo(args.message, args.sender, m=args.m or 8, n=args.n or 8,
                        seed=_seed(args), tamper=args.tamper)
    if args.json or args.out:
        _dump(report.to_dict(), args)
    else:
        print(f"sender {report.sender} (id {report.sender_id}) signed digest {report.digest}")
        if report.tampered:
            print(f"recipient received digest {report.received_digest} (body altered in transit)")
        print(f"verification: {report.outcome}")
    expected = "reject" if args.tamper else "accept"
    return EXIT_OK if report.outcome == expected else EXIT_MISMATCH


def cmd_costs(args) -> int:
    m, n = args.m or 3, args.n or 8
    cfg = RunConfig(m=m, n=n, seed=_seed(args))
    transcript = run_protocol(cfg)
    report = check_costs(transcript)
    payload = {**report.to_dict(), "ledger": transcript.ledger}
    if args.json or args.out:
        _dump(payload, args)
    else:
        for c in report.checks:
            print(f"[{'PASS' if c.passed else 'FAIL'}] {c.name}: expected {c.expected}, observed {c.observed}")
    return EXIT_OK if report.passed else EXIT_MISMATCH


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--m", type=int, help="message size in qubits")
    p.add_argument("--n", type=int, help="phase secret bit length")
    p.add_argument("--seed", type=int, help="random seed (falls back to $QIBS_SEED, then 0)")
    p.add_argument("--identity", help="signer identity bits")
    p.add_argument("--message", help="classical message bits")
    p.add_argument("--message-kind", choices=("classical", "quantum"))
    p.add_argument("--inject-ti", metavar="BITS", help="signer key T_i (2m bits)")
    p.add_argument("--inject-tu", metavar="BITS", help="verifier key T_u (2m or 4m bits)")
    p.add_argument("--inject-phi", metavar="K/N", help="phase index K over an N-bit encoding")
    p.add_argument("--noise-kind", default="depolarizing", choices=noise.KINDS)
    p.add_argument("--p", type=float, help="noise probability per transmitted qubit")
    p.add_argument("--comparator", choices=("exact", "swap"))
    p.add_argument("--shots", type=int)
    p.add_argument("--forge-key", metavar="BITS")
    p.add_argument("--forge-phi", metavar="K/N")
    p.add_argument("--pauli", metavar="STRING")
    p.add_argument("--json", action="store_true")
    p.add_argument("--out", metavar="PATH")


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qibs", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("toy", help="replay the worked three-qubit example")
    p.add_argument("--json", action="store_true")
    p.add_argument("--out", metavar="PATH")
    p.add_argument("--golden", metavar="PATH", help="JSON file overriding the embedded golden values")
    p.set_defaults(func=cmd_toy)

    p = sub.add_parser("run", help="one protocol run, printing the transcript")
    _add_common(p)
    p.add_argument("--toy", action="store_true", help="start from the worked example's parameters")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("attack", help="forgery or Pauli-tamper campaign")
    p.add_argument("kind", choices=sorted(adversary.TRIALS))
    _add_common(p)
    p.add_argument("--trials", type=int, default=200)
    p.add_argument("--base", choices=("toy", "random"))
    p.set_defaults(func=cmd_attack)

    p = sub.add_parser("experiment", help="acceptance versus noise strength")
    _add_common(p)
    p.add_argument("--trials", type=int, default=1024)
    p.add_argument("--grid", default="0", help="comma-separated noise probabilities")
    p.add_argument("--base", choices=("toy", "random"), default="toy")
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("email-demo", help="sign and verify an email body")
    p.add_argument("message")
    p.add_argument("--sender", default="alice@example.com")
    p.add_argument("--m", type=int)
    p.add_argument("--n", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--tamper", action="store_true")
    p.add_argument("--json", action="store_true")
    p.add_argument("--out", metavar="PATH")
    p.set_defaults(func=cmd_email_demo)

    p = sub.add_parser("costs", help="check the closed-form cost formulas on an honest run")
    p.add_argument("--m", type=int)
    p.add_argument("--n", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--json", action="store_true")
    p.add_argument("--out", metavar="PATH")
    p.set_defaults(func=cmd_costs)
    return parser


def main(argv=None) -> int:
    parser = make_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"qibs {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
