"""Acceptance suite: one pass/fail line per criterion, at the stated tolerances.

Run with ``pytest -s tests/test_acceptance.py`` to see the lines, or
``python tests/test_acceptance.py`` for the bare report.
"""
import json
import time
from itertools import product

import numpy as np

from qibs.adversary import attack_suite
from qibs.cli import toy_checkpoints
from qibs.costs import expected_conversions, expected_measurements, expected_qubits
from qibs.noise import NoiseModel, calibration_sweep, success_experiment
from qibs.protocol import RunConfig, check_costs, run_protocol, toy_config
from qibs.qotp import OtpKey, decrypt, encrypt, keygen, secrecy_oracle
from qibs.statevector import I2, X, Y, Z, StateVector, fidelity, random_state

NOISE_GRID = [round(0.02 * i, 2) for i in range(11)]


def report(number, title, passed, detail, elapsed, limit):
    in_time = elapsed < limit
    status = "PASS" if passed and in_time else "FAIL"
    print(f"[{status}] {number}. {title}: {detail} ({elapsed:.2f}s, limit {limit}s)")
    return passed and in_time


def timed(fn):
    start = time.perf_counter()
    out = fn()
    return out, time.perf_counter() - start


def criterion_1():
    results, dt = timed(toy_checkpoints)
    failed = [r["name"] for r in results if not r["passed"]]
    worst = max(r["deviation"] for r in results)
    detail = f"{len(results) - len(failed)}/{len(results)} checkpoints, max deviation {worst:.1e}"
    if failed:
        detail += f", first mismatch {failed[0]}"
    return report(1, "golden toy example", not failed, detail, dt, 1)


def criterion_2():
    def body():
        rng = np.random.default_rng(2)
        worst = 1.0
        for _ in range(1000):
            m = int(rng.integers(1, 5))
            psi = random_state(m, rng)
            key = keygen(m, rng)
            worst = min(worst, fidelity(decrypt(encrypt(psi, key), key), psi))
        return worst

    worst, dt = timed(body)
    return report(2, "QOTP round trip", worst >= 1 - 1e-9, f"min fidelity {worst:.12f} over 1000 pairs", dt, 5)


def criterion_3():
    def body():
        rng = np.random.default_rng(3)
        worst = 0.0
        for m in (1, 2, 3):
            for _ in range(10):
                rho = secrecy_oracle(random_state(m, rng))
                worst = max(worst, float(np.max(np.abs(rho - np.eye(2**m) / 2**m))))
        return worst

    worst, dt = timed(body)
    return report(3, "QOTP perfect secrecy", worst <= 1e-9, f"max entry deviation {worst:.1e}", dt, 10)


def criterion_4():
    result, dt = timed(lambda: success_experiment(toy_config(), 10_000, NoiseModel("depolarizing", 0.0), seed=4))
    detail = f"{result.accepted}/{result.trials} accepted"
    return report(4, "completeness", result.acceptance == 1.0, detail, dt, 60)


def criterion_5():
    cfg = RunConfig(m=3, n=8, message_kind="quantum")
    result, dt = timed(lambda: attack_suite(cfg, 200, seed=5, attacks=("forgery",))["forgery"])
    ok = result.rejection_rate == 1.0 and result.oracle_mismatches == 0
    detail = f"rejection {result.rejection_rate:.3f}, oracle mismatches {result.oracle_mismatches}"
    return report(5, "unforgeability", ok, detail, dt, 30)


def pauli_identity_deviation():
    paulis = {"I": I2, "X": X, "Y": Y, "Z": Z}
    worst = 0.0
    for (label, v), (z, x) in product(paulis.items(), product("01", repeat=2)):
        key = OtpKey(z + x)
        cols = [decrypt(StateVector(v @ encrypt(StateVector(c), key).amplitudes), key).amplitudes
                for c in np.eye(2)]
        op = np.column_stack(cols)
        worst = max(worst, min(np.max(np.abs(op - v)), np.max(np.abs(op + v))))
    return worst


def criterion_6():
    def body():
        dev = pauli_identity_deviation()
        result = attack_suite(toy_config(), 200, seed=6, attacks=("pauli",))["pauli"]
        return dev, result

    (dev, result), dt = timed(body)
    ok = dev <= 1e-10 and result.rejection_rate == 1.0 and result.oracle_mismatches == 0
    detail = f"operator identity deviation {dev:.1e}, tamper rejection {result.rejection_rate:.3f}"
    if result.accepted_cases:
        missed = sorted({c["pauli"] for c in result.accepted_cases})
        detail += f", undetected tampers {','.join(missed)}"
    return report(6, "Pauli-attack resistance", ok, detail, dt, 30)


def criterion_7():
    def body():
        checks = []
        t = run_protocol(RunConfig(m=3, n=8, seed=7))
        by_step = t.ledger["qubits_by_step"]
        breakdown = [by_step.get(s, 0) for s in
                     ("key_establishment", "phase_authentication", "tuple_delivery", "verify_request", "skg_reply")]
        checks.append(t.total_qubits == 46 and breakdown == [12, 16, 9, 6, 3])
        for m, n in ((1, 1), (3, 8), (5, 16)):
            t = run_protocol(RunConfig(m=m, n=n, seed=m + n))
            rep = check_costs(t)
            led = t.ledger
            checks.append(rep.passed and led["measurements"] == expected_measurements(m, n)
                          and led["conversions"] == expected_conversions(m, n)
                          and t.total_qubits == expected_qubits(m, n))
        return checks, breakdown

    (checks, breakdown), dt = timed(body)
    detail = f"(3,8) breakdown {breakdown}, {sum(checks)}/{len(checks)} reconciliations"
    return report(7, "cost formulas", all(checks), detail, dt, 1)


def criterion_8():
    def body():
        rows, _ = calibration_sweep(toy_config(), NOISE_GRID, 2000, seed=8)
        again, _ = calibration_sweep(toy_config(), NOISE_GRID, 2000, seed=8)
        return rows, again

    (rows, again), dt = timed(body)
    acc = [r.acceptance for r in rows]
    monotone = all(b <= a + 0.03 for a, b in zip(acc, acc[1:]))
    same = json.dumps([r.to_dict() for r in rows]) == json.dumps([r.to_dict() for r in again])
    ok = acc[0] == 1.0 and monotone and same
    detail = f"acceptance {acc[0]:.3f} -> {acc[-1]:.3f}, non-increasing {monotone}, reproducible {same}"
    return report(8, "noise monotonicity", ok, detail, dt, 120)


def test_criterion_1_golden_toy():
    assert criterion_1()


def test_criterion_2_qotp_round_trip():
    assert criterion_2()


def test_criterion_3_perfect_secrecy():
    assert criterion_3()


def test_criterion_4_completeness():
    assert criterion_4()


def test_criterion_5_unforgeability():
    assert criterion_5()


def test_criterion_6_pauli_attack_resistance():
    assert criterion_6()


def test_criterion_7_cost_formulas():
    assert criterion_7()


def test_criterion_8_noise_monotonicity():
    assert criterion_8()


if __name__ == "__main__":
    outcomes = [c() for c in (criterion_1, criterion_2, criterion_3, criterion_4,
                              criterion_5, criterion_6, criterion_7, criterion_8)]
    print(f"{sum(outcomes)}/{len(outcomes)} criteria passed")
