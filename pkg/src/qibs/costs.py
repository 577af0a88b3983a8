"""Per-run accounting of transmitted qubits, measurements and conversions.

Closed forms for message size m and phase length n:

    qubits        10m + 2n   (4m keys, 2n phase auth, 3m tuple, 2m request, m reply)
    measurements  23m + 3n   (4m + 3n initializing, 19m signing + verification)
    conversions    3m + n    (only when the message is given classically)

The closed-form totals are not itemized below the phase level, so the
per-step measurement billing in ``MEASUREMENT_MAP`` is a convention: one unit
per key-selected Pauli mask decision, one per U or U-dagger layer qubit, one
per qubit of the identity readout.
"""
from __future__ import annotations

import threading
from dataclasses import dataclass, field

INITIALIZING = "initializing"
SIGNING = "signing"
VERIFICATION = "verification"
PHASES = (INITIALIZING, SIGNING, VERIFICATION)

# step -> (m coefficient, n coefficient)
QUBIT_MAP = {
    "key_establishment": (4, 0),
    "phase_authentication": (0, 2),
    "tuple_delivery": (3, 0),
    "verify_request": (2, 0),
    "skg_reply": (1, 0),
}

MEASUREMENT_MAP = {
    "key_establishment": (4, 0),  # one per key bit, two 2m-bit keys
    "phase_authentication": (0, 3),
    "sign_u_layer": (1, 0),
    "sign_otp_encrypt": (2, 0),
    "request_otp_encrypt": (4, 0),  # S and ID blocks
    "skg_otp_decrypt_request": (4, 0),
    "skg_id_readout": (1, 0),
    "skg_otp_decrypt_signature": (2, 0),
    "skg_u_dagger_layer": (1, 0),
    "skg_otp_encrypt_reply": (2, 0),
    "verifier_otp_decrypt_reply": (2, 0),
}

CONVERSION_MAP = {
    "identity_encoding": (1, 0),
    "message_copies": (2, 0),
    "phase_bits": (0, 1),
}


@dataclass
class CostLedger:
    qubits_by_phase: dict = field(default_factory=lambda: dict.fromkeys(PHASES, 0))
    qubits_by_step: dict = field(default_factory=dict)
    measurements: int = 0
    measurements_by_step: dict = field(default_factory=dict)
    conversions: int = 0
    conversions_by_step: dict = field(default_factory=dict)
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False, compare=False)

    @staticmethod
    def _check(count: int) -> None:
        if count < 0:
            raise ValueError(f"count must be nonnegative, got {count}")

    def send(self, count: int, phase: str, step: str) -> None:
        self._check(count)
        if phase not in self.qubits_by_phase:
            raise ValueError(f"unknown phase {phase!r}")
        with self._lock:
            self.qubits_by_phase[phase] += count
            self.qubits_by_step[step] = self.qubits_by_step.get(step, 0) + count

    def measure(self, count: int, step: str) -> None:
        self._check(count)
        with self._lock:
            self.measurements += count
            self.measurements_by_step[step] = self.measurements_by_step.get(step, 0) + count

    def convert(self, count: int, step: str) -> None:
        self._check(count)
        with self._lock:
            self.conversions += count
            self.conversions_by_step[step] = self.conversions_by_step.get(step, 0) + count

    @property
    def total_qubits(self) -> int:
        return sum(self.qubits_by_phase.values())

    def merge(self, other: CostLedger) -> CostLedger:
        out = CostLedger()
        for src in (self, other):
            for phase, c in src.qubits_by_phase.items():
                out.qubits_by_phase[phase] += c
            for attr in ("qubits_by_step", "measurements_by_step", "conversions_by_step"):
                target = getattr(out, attr)
                for step, c in getattr(src, attr).items():
                    target[step] = target.get(step, 0) + c
            out.measurements += src.measurements
            out.conversions += src.conversions
        return out

    def snapshot(self) -> dict:
        with self._lock:
            return {
                "qubits_by_phase": dict(self.qubits_by_phase),
                "qubits_by_step": dict(self.qubits_by_step),
                "total_qubits": self.total_qubits,
                "measurements": self.measurements,
                "measurements_by_step": dict(self.measurements_by_step),
                "conversions": self.conversions,
                "conversions_by_step": dict(self.conversions_by_step),
            }


def record(ledger: CostLedger, kind: str, count: int, *, step: str, phase: str | None = None) -> CostLedger:
    """Record one event: ``kind`` is ``"qubits"``, ``"measurement"`` or ``"conversion"``."""
    if kind == "qubits":
        if phase is None:
            raise ValueError("qubit events need a phase")
        ledger.send(count, phase, step)
    elif kind == "measurement":
        ledger.measure(count, step)
    elif kind == "conversion":
        ledger.convert(count, step)
    else:
        raise ValueError(f"unknown event kind {kind!r}")
    return ledger


def expected_qubits(m: int, n: int) -> int:
    return 10 * m + 2 * n


def expected_measurements(m: int, n: int) -> int:
    return 23 * m + 3 * n


def expected_conversions(m: int, n: int) -> int:
    return 3 * m + n


@dataclass
class FormulaCheck:
    name: str
    expected: int
    observed: int | None

    @property
    def passed(self) -> bool:
        return self.observed == self.expected

    def to_dict(self) -> dict:
        return {"name": self.name, "expected": self.expected, "observed": self.observed, "passed": self.passed}


@dataclass
class FormulaReport:
    m: int
    n: int
    checks: list
    conversions_applicable: bool = True

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def failures(self) -> list:
        return [c for c in self.checks if not c.passed]

    def to_dict(self) -> dict:
        return {
            "m": self.m,
            "n": self.n,
            "passed": self.passed,
            "conversions_applicable": self.conversions_applicable,
            "checks": [c.to_dict() for c in self.checks],
        }


def _by_map(table: dict, m: int, n: int) -> dict:
    return {step: a * m + b * n for step, (a, b) in table.items()}


def check_formulas(ledger: CostLedger, m: int, n: int, classical_message: bool = True) -> FormulaReport:
    """Compare an honest run's ledger against the closed forms and mapping tables."""
    snap = ledger.snapshot()
    phases = snap["qubits_by_phase"]
    checks = [
        FormulaCheck("qubits.initializing", 4 * m + 2 * n, phases[INITIALIZING]),
        FormulaCheck("qubits.signing+verification", 6 * m, phases[SIGNING] + phases[VERIFICATION]),
        FormulaCheck("qubits.total", expected_qubits(m, n), snap["total_qubits"]),
        FormulaCheck("measurements.initializing", 4 * m + 3 * n,
                     snap["measurements_by_step"].get("key_establishment", 0)
                     + snap["measurements_by_step"].get("phase_authentication", 0)),
        FormulaCheck("measurements.total", expected_measurements(m, n), snap["measurements"]),
    ]
    for step, want in _by_map(QUBIT_MAP, m, n).items():
        checks.append(FormulaCheck(f"qubits.{step}", want, snap["qubits_by_step"].get(step, 0)))
    for step, want in _by_map(MEASUREMENT_MAP, m, n).items():
        checks.append(FormulaCheck(f"measurements.{step}", want, snap["measurements_by_step"].get(step, 0)))
    if classical_message:
        checks.append(FormulaCheck("conversions.total", expected_conversions(m, n), snap["conversions"]))
        for step, want in _by_map(CONVERSION_MAP, m, n).items():
            checks.append(FormulaCheck(f"conversions.{step}", want, snap["conversions_by_step"].get(step, 0)))
    return FormulaReport(m, n, checks, conversions_applicable=classical_message)
