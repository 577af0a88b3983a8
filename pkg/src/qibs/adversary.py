"""Forgery, Pauli tampering and undeniability checks.

Every campaign trial is cross-checked against a dense-matrix oracle that
builds the full 2^m x 2^m operators with ``np.kron`` instead of going through
the per-qubit statevector path.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from functools import reduce

import numpy as np

from .keyestab import PhaseSecret
from .noise import trial_seeds
from .protocol import (
    EPSILON,
    Identity,
    ProtocolError,
    RunConfig,
    SignatureTuple,
    SkgRegistry,
    Transcript,
    run_protocol,
    signature_gate,
)
from .qotp import OtpKey, decrypt, encrypt
from .statevector import (
    I2,
    X,
    Y,
    Z,
    StateVector,
    apply_all,
    apply_each,
    basis_state,
    fidelity,
    random_product_state,
)

PAULIS = {"I": I2, "X": X, "Y": Y, "Z": Z}
ORACLE_TOL = 1e-9


@dataclass(frozen=True)
class PauliString:
    labels: str

    def __post_init__(self):
        if not self.labels or set(self.labels) - set(PAULIS):
            raise ValueError(f"Pauli string must use I/X/Y/Z, got {self.labels!r}")

    def __len__(self) -> int:
        return len(self.labels)

    def __str__(self) -> str:
        return self.labels

    @property
    def non_trivial(self) -> bool:
        return any(c != "I" for c in self.labels)

    def gates(self) -> list:
        return [PAULIS[c] for c in self.labels]

    def matrix(self) -> np.ndarray:
        return kron_all(self.gates())

    @classmethod
    def random_non_trivial(cls, m: int, rng: np.random.Generator) -> PauliString:
        while True:
            labels = "".join("IXYZ"[i] for i in rng.integers(0, 4, m))
            if labels != "I" * m:
                return cls(labels)


def forge(forger_key: OtpKey, forger_phase: PhaseSecret, target: Identity | str, message: StateVector) -> SignatureTuple:
    """Sign ``message`` with the forger's own material but claim ``target``."""
    target = target if isinstance(target, Identity) else Identity(target)
    if len(target) != message.num_qubits:
        raise ValueError("target identity and message sizes differ")
    sig = encrypt(apply_all(message, signature_gate(forger_phase)), forger_key)
    return SignatureTuple(message, sig, target.encode())


def pauli_tamper(tup: SignatureTuple, pauli: PauliString) -> SignatureTuple:
    """(P, S, ID) -> (V P, V S, ID)."""
    if len(pauli) != tup.m:
        raise ValueError(f"Pauli string has {len(pauli)} labels, tuple has {tup.m} qubits")
    gates = pauli.gates()
    return SignatureTuple(apply_each(tup.message, gates), apply_each(tup.signature, gates), tup.identity)


# -- dense-matrix oracle --


def kron_all(mats) -> np.ndarray:
    return reduce(np.kron, mats)


def otp_matrix(key: OtpKey, m: int, inverse: bool = False) -> np.ndarray:
    factors = []
    for q in range(m):
        z, x = key.bits[2 * q] == "1", key.bits[2 * q + 1] == "1"
        zq = Z if z else I2
        xq = X if x else I2
        factors.append(zq @ xq if inverse else xq @ zq)
    return kron_all(factors)


def oracle_fidelity(
    message: StateVector,
    sign_key: OtpKey,
    sign_phase: PhaseSecret,
    skg_key: OtpKey,
    skg_phase: PhaseSecret,
    pauli: PauliString | None = None,
) -> float:
    """Fidelity between the verifier's held message and the SKG's recovery."""
    m = message.num_qubits
    u_sign = kron_all([signature_gate(sign_phase)] * m)
    u_skg = kron_all([signature_gate(skg_phase)] * m)
    v = pauli.matrix() if pauli is not None else np.eye(2**m)
    p = message.amplitudes
    recovered = u_skg.conj().T @ otp_matrix(skg_key, m, inverse=True) @ v @ otp_matrix(sign_key, m) @ u_sign @ p
    held = v @ p
    return float(abs(np.vdot(held, recovered)) ** 2)


# -- undeniability --


@dataclass(frozen=True)
class Evidence:
    identity: str
    key: str
    phase: str
    fidelity: float
    candidates_checked: int

    def to_dict(self) -> dict:
        return {
            "identity": self.identity,
            "key": self.key,
            "phase": self.phase,
            "fidelity": self.fidelity,
            "candidates_checked": self.candidates_checked,
        }


def undeniability_trace(transcript: Transcript, registry: SkgRegistry) -> Evidence:
    """Bind an accepted run to the one registered record whose material opens S to P."""
    if not transcript.accepted or transcript.delivered is None:
        raise ProtocolError("undeniability evidence needs an accepted run")
    held, sig = transcript.delivered.message, transcript.delivered.signature
    matches = []
    for label, (key, phase) in registry.signers.items():
        recovered = apply_all(decrypt(sig, key), signature_gate(phase).conj().T)
        f = fidelity(recovered, held)
        if f >= 1 - EPSILON:
            matches.append(Evidence(label, key.bits, str(phase), f, len(registry.signers)))
    if len(matches) != 1:
        raise ProtocolError(f"expected exactly one binding record, found {len(matches)}")
    return matches[0]


# -- campaigns --


@dataclass
class CampaignResult:
    attack: str
    trials: int = 0
    rejected: int = 0
    fidelities: list = field(default_factory=list, repr=False)
    oracle_mismatches: int = 0
    accepted_cases: list = field(default_factory=list)

    @property
    def rejection_rate(self) -> float | None:
        return self.rejected / self.trials if self.trials else None

    @property
    def mean_fidelity(self) -> float | None:
        return float(np.mean(self.fidelities)) if self.fidelities else None

    def to_dict(self) -> dict:
        return {
            "attack": self.attack,
            "trials": self.trials,
            "rejected": self.rejected,
            "rejection_rate": self.rejection_rate,
            "mean_recovered_fidelity": self.mean_fidelity,
            "oracle_mismatches": self.oracle_mismatches,
            "accepted_cases": self.accepted_cases,
        }


def _random_bits(k: int, rng: np.random.Generator) -> str:
    return "".join(str(b) for b in rng.integers(0, 2, k))


def _trial_material(config: RunConfig, rng: np.random.Generator):
    m, n = config.m, config.n
    identity = config.identity or _random_bits(m, rng)
    key = OtpKey(config.signer_key) if config.signer_key else OtpKey(_random_bits(2 * m, rng))
    phase = config.phase or PhaseSecret.random(n, rng)
    if config.message is not None:
        message: str | StateVector = config.message
    elif config.message_kind == "classical":
        message = _random_bits(m, rng)
    else:
        message = random_product_state(m, rng)
    return identity, key, phase, message


def _forger_material(key: OtpKey, phase: PhaseSecret, config: RunConfig, rng: np.random.Generator):
    """Random (T_j, phi') differing from (T_i, phi) in the key, the phase, or both."""
    m, n = config.m, config.n
    mode = ("key", "phase", "both")[int(rng.integers(3))]
    f_key, f_phase = key, phase
    if config.forge_key is not None:
        f_key = OtpKey(config.forge_key)
    elif mode in ("key", "both"):
        while f_key == key:
            f_key = OtpKey(_random_bits(2 * m, rng))
    if config.forge_phase is not None:
        f_phase = config.forge_phase
    elif mode in ("phase", "both"):
        while f_phase == phase:
            f_phase = PhaseSecret.random(n, rng)
    return f_key, f_phase


def _as_state(message) -> StateVector:
    return basis_state(message) if isinstance(message, str) else message


def forgery_trial(config: RunConfig, rng: np.random.Generator) -> tuple[Transcript, float, dict]:
    identity, key, phase, message = _trial_material(config, rng)
    f_key, f_phase = _forger_material(key, phase, config, rng)
    trial_cfg = replace(config, identity=identity, signer_key=key.bits, phase=phase,
                        forge_key=f_key.bits, forge_phase=f_phase, pauli=None)
    transcript = run_protocol(trial_cfg, rng=rng, message=message)
    oracle = oracle_fidelity(_as_state(message), f_key, f_phase, key, phase)
    case = {"identity": identity, "key": key.bits, "phase": str(phase),
            "forge_key": f_key.bits, "forge_phase": str(f_phase)}
    return transcript, oracle, case


def pauli_trial(config: RunConfig, rng: np.random.Generator) -> tuple[Transcript, float, dict]:
    identity, key, phase, message = _trial_material(config, rng)
    pauli = PauliString(config.pauli) if config.pauli else PauliString.random_non_trivial(config.m, rng)
    trial_cfg = replace(config, identity=identity, signer_key=key.bits, phase=phase,
                        forge_key=None, forge_phase=None, pauli=pauli.labels)
    transcript = run_protocol(trial_cfg, rng=rng, message=message)
    oracle = oracle_fidelity(_as_state(message), key, phase, key, phase, pauli)
    case = {"identity": identity, "key": key.bits, "phase": str(phase), "pauli": pauli.labels}
    return transcript, oracle, case


TRIALS = {"forgery": forgery_trial, "pauli": pauli_trial}


def attack_suite(config: RunConfig, trials: int, seed: int, attacks=("forgery", "pauli")) -> dict:
    """Run each attack ``trials`` times; trial ``i`` uses child seed ``i``.

    A trial counts as rejected when the protocol rejects. The protocol's
    fidelity must agree with the dense-matrix oracle to ``ORACLE_TOL``;
    disagreements are counted in ``oracle_mismatches``.
    """
    if trials < 0:
        raise ValueError("trials must be >= 0")
    report = {}
    for attack in attacks:
        try:
            run_trial = TRIALS[attack]
        except KeyError:
            raise ValueError(f"unknown attack {attack!r}; expected one of {sorted(TRIALS)}") from None
        result = CampaignResult(attack)
        for child in trial_seeds(seed, trials) if trials else []:
            transcript, oracle, case = run_trial(config, np.random.default_rng(child))
            result.trials += 1
            result.rejected += not transcript.accepted
            observed = transcript.fidelity if transcript.fidelity is not None else 0.0
            result.fidelities.append(observed)
            if transcript.fidelity is not None and abs(observed - oracle) > ORACLE_TOL:
                result.oracle_mismatches += 1
            if transcript.accepted:
                result.accepted_cases.append(case)
        report[attack] = result
    return report
