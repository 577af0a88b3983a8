"""Signer / verifier / key-generator message flow.

Honest run for an m-qubit message P, signer key T_i, phase phi, verifier key T_u
(``U = U(pi/2, phi, 0)``)::

    signer    S = E_{T_i}(U^m P), tuple (P, S, |ID>)      -> verifier   3m qubits
    verifier  keeps P, sends E_{T_u}(S), E_{T_u}(|ID>)    -> SKG        2m qubits
    SKG       reads ID, P' = (U^dag)^m D_{T_i}(S),
              R = E_{T_u}(P')                             -> verifier    m qubits
    verifier  accepts iff D_{T_u}(R) matches P

A 2m-bit verifier key is reused for each m-qubit block (S, ID and R). A 4m-bit
verifier key is consumed positionally: bits 1..2m mask S and R, bits
2m+1..4m mask the identity register.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from math import pi
from typing import Callable

import numpy as np

from . import costs
from .costs import SIGNING, VERIFICATION, CostLedger
from .keyestab import KeyChannel, PhaseSecret, dealer_share, share_phase
from .noise import NoiseModel, transmit
from .qotp import OtpKey, decrypt, encrypt
from .statevector import (
    H,
    StateVector,
    apply_all,
    apply_single,
    basis_state,
    fidelity,
    measure_all,
    random_product_state,
    tensor,
    u_gate,
)

EPSILON = 1e-6
SKG = "SKG"
COMPARATORS = ("exact", "swap")


class ProtocolError(RuntimeError):
    pass


class UnknownIdentityError(ProtocolError, LookupError):
    """SKG reject signal: the decrypted identity is not registered."""

    def __init__(self, label: str):
        super().__init__(f"identity {label} is not registered with the SKG")
        self.label = label


class DuplicateIdentityError(ProtocolError, ValueError):
    pass


class NotInitializedError(ProtocolError):
    pass


class NoPendingVerificationError(ProtocolError):
    pass


@dataclass(frozen=True)
class Identity:
    bits: str

    def __post_init__(self):
        if not self.bits or set(self.bits) - {"0", "1"}:
            raise ValueError(f"identity must be a non-empty bit string, got {self.bits!r}")

    def __len__(self) -> int:
        return len(self.bits)

    def __str__(self) -> str:
        return self.bits

    def encode(self) -> StateVector:
        return basis_state(self.bits)


@dataclass(frozen=True)
class SignatureTuple:
    message: StateVector
    signature: StateVector
    identity: StateVector

    def __post_init__(self):
        sizes = {self.message.num_qubits, self.signature.num_qubits, self.identity.num_qubits}
        if len(sizes) != 1:
            raise ValueError(f"tuple registers disagree in size: {sorted(sizes)}")

    @property
    def m(self) -> int:
        return self.message.num_qubits


@dataclass(frozen=True)
class VerifyRequest:
    verifier: str
    signature: StateVector
    identity: StateVector


def signature_gate(phase: PhaseSecret) -> np.ndarray:
    return u_gate(pi / 2, phase.phi, 0.0)


def block_key(key: OtpKey, block: int, m: int) -> OtpKey:
    """Key for the ``block``-th m-qubit register; short keys are reused."""
    if len(key) >= 2 * m * (block + 1):
        return key.block(block, m)
    return key.block(0, m)


@dataclass
class Signer:
    identity: Identity
    m: int
    key: OtpKey | None = None
    phase: PhaseSecret | None = None
    ledger: CostLedger = field(default_factory=CostLedger)

    @property
    def name(self) -> str:
        return f"Alice[{self.identity}]"


@dataclass
class Verifier:
    name: str
    m: int
    key: OtpKey | None = None
    ledger: CostLedger = field(default_factory=CostLedger)
    pending: StateVector | None = None


@dataclass
class SkgRegistry:
    m: int
    signers: dict = field(default_factory=dict)
    verifiers: dict = field(default_factory=dict)
    ledger: CostLedger = field(default_factory=CostLedger)

    def register_signer(self, identity: Identity, key: OtpKey, phase: PhaseSecret) -> None:
        if identity.bits in self.signers:
            raise DuplicateIdentityError(f"identity {identity} already registered")
        if len(identity) != self.m:
            raise ValueError(f"identity {identity} does not have {self.m} bits")
        key.require(self.m)
        self.signers[identity.bits] = (key, phase)

    def register_verifier(self, name: str, key: OtpKey) -> None:
        key.require(self.m)
        self.verifiers[name] = key

    def lookup(self, label: str) -> tuple[OtpKey, PhaseSecret]:
        try:
            return self.signers[label]
        except KeyError:
            raise UnknownIdentityError(label) from None


def initialize(
    signer_ids,
    m: int,
    n: int = 8,
    *,
    rng: np.random.Generator | None = None,
    ledger: CostLedger | None = None,
    signer_keys: dict | None = None,
    signer_phases: dict | None = None,
    verifier: str = "Bob",
    verifier_key: str | None = None,
) -> tuple[SkgRegistry, dict, Verifier]:
    """Share (T_i, phi_i) with every signer and T_u with the verifier.

    ``signer_keys`` / ``signer_phases`` map identity bits to injected test
    vectors; anything not injected is drawn from ``rng``.
    """
    ledger = ledger if ledger is not None else CostLedger()
    signer_keys = signer_keys or {}
    signer_phases = signer_phases or {}
    ids = [i if isinstance(i, Identity) else Identity(i) for i in signer_ids]
    if len({i.bits for i in ids}) != len(ids):
        raise DuplicateIdentityError("signer identities must be distinct")

    registry = SkgRegistry(m=m, ledger=ledger)
    signers = {}
    for ident in ids:
        if len(ident) != m:
            raise ValueError(f"identity {ident} does not have {m} bits")
        channel = KeyChannel(SKG, f"Alice[{ident}]", rng=rng, ledger=ledger)
        key = dealer_share(channel, m, signer_keys.get(ident.bits))
        phase = signer_phases.get(ident.bits)
        if phase is None:
            if rng is None:
                raise ValueError("a random source is needed for phases that are not injected")
            phase = PhaseSecret.random(n, rng)
        if phase.bits != n:
            raise ValueError(f"phase {phase} is not an {n}-bit encoding")
        share_phase(channel, phase)
        registry.register_signer(ident, key, phase)
        signers[ident.bits] = Signer(ident, m, key, phase, ledger)

    channel = KeyChannel(verifier, SKG, rng=rng, ledger=ledger)
    t_u = dealer_share(channel, m, verifier_key)
    registry.register_verifier(verifier, t_u)
    return registry, signers, Verifier(verifier, m, t_u, ledger)


def sign(signer: Signer, message: str | StateVector) -> SignatureTuple:
    """Produce ``(P, E_{T_i}(U^m P), |ID>)``.

    A bit-string ``message`` is prepared as a basis state, which is billed as
    a classical-to-qubit conversion for both copies of P.
    """
    if signer.key is None or signer.phase is None:
        raise NotInitializedError(f"{signer.name} has no key material")
    if isinstance(message, str):
        state = basis_state(message)
        signer.ledger.convert(2 * len(message), "message_copies")
    else:
        state = message
    if state.num_qubits != signer.m:
        raise ValueError(f"message has {state.num_qubits} qubits, signer expects {signer.m}")
    m = signer.m
    rotated = apply_all(state, signature_gate(signer.phase))
    signer.ledger.measure(m, "sign_u_layer")
    sig = encrypt(rotated, signer.key)
    signer.ledger.measure(2 * m, "sign_otp_encrypt")
    ident = signer.identity.encode()
    signer.ledger.convert(m, "identity_encoding")
    return SignatureTuple(state, sig, ident)


def verify_request(verifier: Verifier, tup: SignatureTuple) -> VerifyRequest:
    """Keep P; encrypt the signature and identity registers under T_u."""
    if verifier.key is None:
        raise NotInitializedError(f"{verifier.name} has no key")
    if tup.m != verifier.m:
        raise ValueError(f"tuple has {tup.m} qubits, verifier expects {verifier.m}")
    m = verifier.m
    verifier.pending = tup.message
    req = VerifyRequest(
        verifier.name,
        encrypt(tup.signature, block_key(verifier.key, 0, m)),
        encrypt(tup.identity, block_key(verifier.key, 1, m)),
    )
    verifier.ledger.measure(4 * m, "request_otp_encrypt")
    return req


@dataclass(frozen=True)
class SkgResult:
    identity: str
    signature: StateVector
    recovered: StateVector
    reply: StateVector


def skg_process(registry: SkgRegistry, request: VerifyRequest, rng: np.random.Generator | None = None) -> SkgResult:
    """Full SKG step with intermediates; raises :class:`UnknownIdentityError`."""
    m = registry.m
    ledger = registry.ledger
    try:
        t_u = registry.verifiers[request.verifier]
    except KeyError:
        raise ProtocolError(f"verifier {request.verifier} is not registered") from None
    if request.signature.num_qubits != m or request.identity.num_qubits != m:
        raise ValueError(f"request registers must have {m} qubits")

    sig = decrypt(request.signature, block_key(t_u, 0, m))
    ident_state = decrypt(request.identity, block_key(t_u, 1, m))
    ledger.measure(4 * m, "skg_otp_decrypt_request")
    if ident_state.is_basis_state():
        label = ident_state.basis_label()
    else:
        label = measure_all(ident_state, rng if rng is not None else np.random.default_rng())
    ledger.measure(m, "skg_id_readout")
    t_i, phase = registry.lookup(label)

    rotated = decrypt(sig, t_i)
    ledger.measure(2 * m, "skg_otp_decrypt_signature")
    recovered = apply_all(rotated, signature_gate(phase).conj().T)
    ledger.measure(m, "skg_u_dagger_layer")
    reply = encrypt(recovered, block_key(t_u, 0, m))
    ledger.measure(2 * m, "skg_otp_encrypt_reply")
    return SkgResult(label, sig, recovered, reply)


def skg_respond(registry: SkgRegistry, request: VerifyRequest, rng: np.random.Generator | None = None) -> StateVector:
    return skg_process(registry, request, rng).reply


@dataclass(frozen=True)
class Verdict:
    accepted: bool
    fidelity: float
    decrypted: StateVector

    def __bool__(self) -> bool:
        return self.accepted


def finalize(
    verifier: Verifier,
    reply: StateVector,
    comparator: str = "exact",
    shots: int = 1024,
    rng: np.random.Generator | None = None,
) -> Verdict:
    """Decrypt the reply and compare it with the held message."""
    if verifier.pending is None:
        raise NoPendingVerificationError(f"{verifier.name} has no verification in progress")
    if comparator not in COMPARATORS:
        raise ValueError(f"unknown comparator {comparator!r}")
    held, verifier.pending = verifier.pending, None
    decrypted = decrypt(reply, block_key(verifier.key, 0, verifier.m))
    verifier.ledger.measure(2 * verifier.m, "verifier_otp_decrypt_reply")
    if comparator == "exact":
        score = fidelity(decrypted, held)
    else:
        score = swap_test(decrypted, held, shots, rng if rng is not None else np.random.default_rng())
    return Verdict(score >= 1 - EPSILON, score, decrypted)


def _controlled_swap_permutation(m: int) -> np.ndarray:
    """Index map for CSWAP(ancilla=qubit 1; registers 2..m+1 <-> m+2..2m+1)."""
    dim = 2 ** (2 * m + 1)
    idx = np.arange(dim)
    half = 2 ** (2 * m)
    low = idx % half
    a, b = low >> m, low & (2**m - 1)
    swapped = (b << m) | a
    return np.where(idx >= half, half + swapped, idx)


def swap_test(a: StateVector, b: StateVector, shots: int, rng: np.random.Generator) -> float:
    """Estimate |<a|b>|^2 from ``shots`` runs of the controlled-swap circuit."""
    if a.num_qubits != b.num_qubits:
        raise ValueError("swap test needs equal-size registers")
    if shots < 1:
        raise ValueError("shots must be >= 1")
    m = a.num_qubits
    psi = tensor(basis_state("0"), a, b)
    psi = apply_single(psi, H, 1)
    perm = _controlled_swap_permutation(m)
    amps = np.empty_like(psi.amplitudes)
    amps[perm] = psi.amplitudes
    psi = apply_single(StateVector(amps), H, 1)
    p0 = float(np.sum(psi.probabilities()[: 2 ** (2 * m)]))
    zeros = rng.binomial(shots, min(1.0, max(0.0, p0)))
    return min(1.0, max(0.0, 2 * zeros / shots - 1))


# -- end-to-end runs --


@dataclass
class RunConfig:
    """Everything needed for one reproducible protocol run.

    ``message=None`` draws a random message: random bits when
    ``message_kind`` is ``"classical"``, a random product state otherwise.
    ``forge_key`` / ``forge_phase`` make the sender a forger using its own
    material under the target identity; ``pauli`` tampers with the tuple in
    transit.
    """

    m: int = 3
    n: int = 8
    identity: str | None = None
    message: str | None = None
    message_kind: str = "classical"
    signer_key: str | None = None
    verifier_key: str | None = None
    phase: PhaseSecret | None = None
    seed: int = 0
    noise: NoiseModel | None = None
    comparator: str = "exact"
    shots: int = 1024
    forge_key: str | None = None
    forge_phase: PhaseSecret | None = None
    pauli: str | None = None

    def validate(self) -> RunConfig:
        if self.m < 1 or self.n < 1:
            raise ValueError("m and n must be >= 1")
        if self.identity is not None and len(self.identity) != self.m:
            raise ValueError(f"--identity must have m={self.m} bits")
        if self.message is not None and len(self.message) != self.m:
            raise ValueError(f"message must have m={self.m} bits")
        if self.message_kind not in ("classical", "quantum"):
            raise ValueError("message kind must be 'classical' or 'quantum'")
        if self.signer_key is not None and len(self.signer_key) != 2 * self.m:
            raise ValueError(f"signer key T_i must have 2m={2 * self.m} bits")
        if self.verifier_key is not None and len(self.verifier_key) not in (2 * self.m, 4 * self.m):
            raise ValueError(f"verifier key T_u must have 2m={2 * self.m} or 4m={4 * self.m} bits")
        if self.forge_key is not None and len(self.forge_key) != 2 * self.m:
            raise ValueError(f"forged key must have 2m={2 * self.m} bits")
        for phase in (self.phase, self.forge_phase):
            if phase is not None and phase.bits != self.n:
                raise ValueError(f"phase {phase} must use n={self.n} bits")
        if self.comparator not in COMPARATORS:
            raise ValueError(f"comparator must be one of {COMPARATORS}")
        if self.shots < 1:
            raise ValueError("shots must be >= 1")
        if self.pauli is not None and len(self.pauli) != self.m:
            raise ValueError(f"Pauli string must have m={self.m} labels")
        return self


def toy_config(**overrides) -> RunConfig:
    """The worked three-qubit instance: ID 011, P = |010>, phi = pi."""
    base = dict(
        m=3,
        n=8,
        identity="011",
        message="010",
        signer_key="010110",
        verifier_key="100101",
        phase=PhaseSecret(128, 8),
    )
    base.update(overrides)
    return RunConfig(**base)


@dataclass(frozen=True)
class Message:
    sender: str
    receiver: str
    kind: str
    qubits: int

    def to_dict(self) -> dict:
        return {"sender": self.sender, "receiver": self.receiver, "kind": self.kind, "qubits": self.qubits}


@dataclass
class Transcript:
    m: int
    n: int
    messages: list = field(default_factory=list)
    outcome: str | None = None
    reason: str | None = None
    fidelity: float | None = None
    readout: str | None = None
    ledger: dict = field(default_factory=dict)
    classical_message: bool = True
    states: dict = field(default_factory=dict, repr=False)
    delivered: SignatureTuple | None = field(default=None, repr=False)
    signer: str | None = None
    skg_identity: str | None = None

    @property
    def accepted(self) -> bool:
        return self.outcome == "accept"

    @property
    def total_qubits(self) -> int:
        return sum(msg.qubits for msg in self.messages)

    def to_dict(self) -> dict:
        return {
            "m": self.m,
            "n": self.n,
            "signer": self.signer,
            "skg_identity": self.skg_identity,
            "messages": [msg.to_dict() for msg in self.messages],
            "total_qubits": self.total_qubits,
            "outcome": self.outcome,
            "reason": self.reason,
            "fidelity": self.fidelity,
            "readout": self.readout,
            "classical_message": self.classical_message,
            "ledger": self.ledger,
        }


def _build_intercept(config: RunConfig, signer: Signer) -> Callable | None:
    if config.forge_key is None and config.forge_phase is None and config.pauli is None:
        return None
    from .adversary import PauliString, forge, pauli_tamper

    def intercept(tup: SignatureTuple) -> SignatureTuple:
        if config.forge_key is not None or config.forge_phase is not None:
            key = OtpKey(config.forge_key) if config.forge_key is not None else signer.key
            phase = config.forge_phase if config.forge_phase is not None else signer.phase
            tup = forge(key, phase, signer.identity, tup.message)
        if config.pauli is not None:
            tup = pauli_tamper(tup, PauliString(config.pauli))
        return tup

    return intercept


def run_protocol(
    config: RunConfig,
    rng: np.random.Generator | None = None,
    intercept: Callable[[SignatureTuple], SignatureTuple] | None = None,
    message: str | StateVector | None = None,
) -> Transcript:
    """initialize -> sign -> verify_request -> skg_respond -> finalize.

    ``rng`` defaults to ``default_rng(config.seed)``. ``intercept`` replaces
    the tuple between signer and verifier; when omitted it is built from the
    config's forgery and Pauli options. ``message`` overrides the config's
    message (and may be a quantum state).
    """
    config.validate()
    rng = rng if rng is not None else np.random.default_rng(config.seed)
    m, n = config.m, config.n
    ledger = CostLedger()
    transcript = Transcript(m, n)

    identity = config.identity or "".join(str(b) for b in rng.integers(0, 2, m))
    registry, signers, verifier = initialize(
        [identity],
        m,
        n,
        rng=rng,
        ledger=ledger,
        signer_keys={identity: config.signer_key} if config.signer_key else None,
        signer_phases={identity: config.phase} if config.phase else None,
        verifier_key=config.verifier_key,
    )
    signer = signers[identity]
    transcript.signer = identity
    transcript.messages += [
        Message(SKG, signer.name, "key T_i", len(signer.key)),
        Message(signer.name, SKG, "phase authentication", 2 * n),
        Message(SKG, verifier.name, "key T_u", len(verifier.key)),
    ]

    if message is not None:
        pass
    elif config.message is not None:
        message = config.message
    elif config.message_kind == "classical":
        message = "".join(str(b) for b in rng.integers(0, 2, m))
    else:
        message = random_product_state(m, rng)
    transcript.classical_message = isinstance(message, str)

    tup = sign(signer, message)
    transcript.states["message"] = tup.message
    transcript.states["signature"] = tup.signature
    transcript.states["identity"] = tup.identity
    intercept = intercept if intercept is not None else _build_intercept(config, signer)
    if intercept is not None:
        tup = intercept(tup)

    noise = config.noise
    tup = SignatureTuple(
        transmit(tup.message, noise, rng),
        transmit(tup.signature, noise, rng),
        transmit(tup.identity, noise, rng),
    )
    transcript.delivered = tup
    ledger.send(3 * m, SIGNING, "tuple_delivery")
    transcript.messages.append(Message(signer.name, verifier.name, "signature tuple", 3 * m))

    request = verify_request(verifier, tup)
    request = VerifyRequest(request.verifier, transmit(request.signature, noise, rng), transmit(request.identity, noise, rng))
    transcript.states["encrypted_signature"] = request.signature
    transcript.states["encrypted_identity"] = request.identity
    ledger.send(2 * m, VERIFICATION, "verify_request")
    transcript.messages.append(Message(verifier.name, SKG, "verify request", 2 * m))

    try:
        result = skg_process(registry, request, rng)
    except UnknownIdentityError as exc:
        transcript.messages.append(Message(SKG, verifier.name, "reject signal", 0))
        transcript.outcome, transcript.reason = "reject", str(exc)
        verifier.pending = None
        transcript.ledger = ledger.snapshot()
        return transcript
    transcript.skg_identity = result.identity
    transcript.states["skg_signature"] = result.signature
    transcript.states["recovered"] = result.recovered
    reply = transmit(result.reply, noise, rng)
    transcript.states["reply"] = reply
    ledger.send(m, VERIFICATION, "skg_reply")
    transcript.messages.append(Message(SKG, verifier.name, "reply", m))

    verdict = finalize(verifier, reply, config.comparator, config.shots, rng)
    transcript.states["decrypted_reply"] = verdict.decrypted
    transcript.fidelity = verdict.fidelity
    transcript.readout = measure_all(verdict.decrypted, rng)
    transcript.outcome = "accept" if verdict.accepted else "reject"
    if not verdict.accepted:
        transcript.reason = f"reply does not match held message (score {verdict.fidelity:.6f})"
    transcript.ledger = ledger.snapshot()
    return transcript


def check_costs(transcript: Transcript) -> costs.FormulaReport:
    """Rebuild the ledger from a transcript snapshot and check the closed forms."""
    ledger = CostLedger()
    snap = transcript.ledger
    ledger.qubits_by_phase.update(snap["qubits_by_phase"])
    ledger.qubits_by_step.update(snap["qubits_by_step"])
    ledger.measurements = snap["measurements"]
    ledger.measurements_by_step.update(snap["measurements_by_step"])
    ledger.conversions = snap["conversions"]
    ledger.conversions_by_step.update(snap["conversions_by_step"])
    return costs.check_formulas(ledger, transcript.m, transcript.n, transcript.classical_message)
