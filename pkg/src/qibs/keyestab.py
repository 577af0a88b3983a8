"""Key establishment between two parties.

The default is an ideal dealer that hands both endpoints the same uniformly
random bits and bills one qubit and one measurement per bit. ``bb84_share``
is an opt-in sift-and-sample simulation. The phase secret transfer is modeled
as an authenticated classical hand-over charged at 2n qubits and 3n
measurements for an n-bit phase.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from math import isclose, pi

import numpy as np

from .costs import INITIALIZING, CostLedger
from .qotp import OtpKey, keygen

QBER_THRESHOLD = 0.11
BB84_OVERSAMPLING = 8


class InsufficientKeyError(RuntimeError):
    pass


class QKDAbort(RuntimeError):
    def __init__(self, qber: float, threshold: float = QBER_THRESHOLD):
        super().__init__(f"observed QBER {qber:.4f} exceeds threshold {threshold}")
        self.qber = qber
        self.threshold = threshold


class MissingKeyError(RuntimeError):
    pass


@dataclass(frozen=True)
class PhaseSecret:
    """Phase angle quantized as ``phi = 2*pi*k / 2**bits`` with ``k != 0``."""

    k: int
    bits: int = 8

    def __post_init__(self):
        if self.bits < 1:
            raise ValueError("phase bit length must be >= 1")
        if not 1 <= self.k <= 2**self.bits - 1:
            raise ValueError(f"phase index k={self.k} outside 1..{2**self.bits - 1}")

    @property
    def phi(self) -> float:
        return 2 * pi * self.k / 2**self.bits

    @classmethod
    def from_angle(cls, phi: float, bits: int = 8) -> PhaseSecret:
        k = round(phi / (2 * pi) * 2**bits)
        if not isclose(2 * pi * k / 2**bits, phi, rel_tol=0, abs_tol=1e-12):
            raise ValueError(f"phi={phi!r} is not representable with {bits} bits")
        return cls(k, bits)

    @classmethod
    def parse(cls, text: str) -> PhaseSecret:
        """Parse ``"K/N"``: index K over an N-bit encoding (``"128/8"`` is pi)."""
        try:
            k, n = (int(part) for part in text.split("/"))
        except ValueError as exc:
            raise ValueError(f"phase must look like K/N, got {text!r}") from exc
        return cls(k, n)

    @classmethod
    def random(cls, bits: int, rng: np.random.Generator) -> PhaseSecret:
        return cls(int(rng.integers(1, 2**bits)), bits)

    def encode(self) -> str:
        return format(self.k, f"0{self.bits}b")

    @classmethod
    def decode(cls, bits: str) -> PhaseSecret:
        return cls(int(bits, 2), len(bits))

    def as_fraction_of_pi(self) -> Fraction:
        return Fraction(2 * self.k, 2**self.bits)

    def __str__(self) -> str:
        return f"{self.k}/{self.bits}"


@dataclass
class KeyChannel:
    """Point-to-point key channel between two named endpoints."""

    a: str
    b: str
    rng: np.random.Generator | None = None
    ledger: CostLedger = field(default_factory=CostLedger)
    held: dict = field(default_factory=dict)
    phases: dict = field(default_factory=dict)

    def key_of(self, endpoint: str) -> OtpKey:
        try:
            return self.held[endpoint]
        except KeyError:
            raise MissingKeyError(f"{endpoint} holds no key on this channel") from None


def dealer_share(channel: KeyChannel, n: int, bits: str | None = None) -> OtpKey:
    """Give both endpoints one identical 2n-bit key (or the injected ``bits``)."""
    key = keygen(n, channel.rng, bits)
    channel.held[channel.a] = key
    channel.held[channel.b] = key
    channel.ledger.send(len(key), INITIALIZING, "key_establishment")
    channel.ledger.measure(len(key), "key_establishment")
    return key


def bb84_share(
    channel: KeyChannel,
    n: int,
    raw_rounds: int,
    eavesdropper: bool = False,
    threshold: float = QBER_THRESHOLD,
) -> tuple[OtpKey, float]:
    """BB84 sift-and-sample for a 2n-bit key.

    Raises :class:`QKDAbort` (carrying the estimate) when the sampled error
    rate exceeds ``threshold``. Endpoints keep their own sifted copies, which
    agree exactly when the estimate is zero on a noiseless channel.
    """
    target = 2 * n
    if raw_rounds < BB84_OVERSAMPLING * target:
        raise InsufficientKeyError(
            f"{raw_rounds} raw rounds cannot yield a {target}-bit key"
            f" (need >= {BB84_OVERSAMPLING * target})"
        )
    if channel.rng is None:
        raise InsufficientKeyError("BB84 needs a random source")
    rng = channel.rng
    alice_bits = rng.integers(0, 2, raw_rounds)
    alice_bases = rng.integers(0, 2, raw_rounds)
    bob_bases = rng.integers(0, 2, raw_rounds)

    in_flight_bits, in_flight_bases = alice_bits, alice_bases
    if eavesdropper:
        eve_bases = rng.integers(0, 2, raw_rounds)
        eve_bits = np.where(eve_bases == alice_bases, alice_bits, rng.integers(0, 2, raw_rounds))
        in_flight_bits, in_flight_bases = eve_bits, eve_bases
    bob_bits = np.where(bob_bases == in_flight_bases, in_flight_bits, rng.integers(0, 2, raw_rounds))

    channel.ledger.send(raw_rounds, INITIALIZING, "key_establishment")
    channel.ledger.measure(raw_rounds, "key_establishment")

    sifted = np.flatnonzero(alice_bases == bob_bases)
    order = rng.permutation(sifted.size)
    half = sifted.size // 2
    sample, keep = sifted[order[:half]], np.sort(sifted[order[half:]])
    if sample.size == 0 or keep.size < target:
        raise InsufficientKeyError(f"only {keep.size} sifted key bits for a {target}-bit key")
    qber = float(np.mean(alice_bits[sample] != bob_bits[sample]))
    if qber > threshold:
        raise QKDAbort(qber, threshold)

    keep = keep[:target]
    to_bits = lambda arr: "".join(str(int(b)) for b in arr)  # noqa: E731
    alice_key, bob_key = OtpKey(to_bits(alice_bits[keep])), OtpKey(to_bits(bob_bits[keep]))
    channel.held[channel.a] = alice_key
    channel.held[channel.b] = bob_key
    return alice_key, qber


def share_phase(channel: KeyChannel, phase: PhaseSecret) -> PhaseSecret:
    """Authenticated transfer of the phase secret to endpoint ``b``."""
    if channel.a not in channel.held:
        raise MissingKeyError("phase sharing needs a key already established on the channel")
    n = phase.bits
    received = PhaseSecret.decode(phase.encode())
    channel.phases[channel.a] = phase
    channel.phases[channel.b] = received
    channel.ledger.send(2 * n, INITIALIZING, "phase_authentication")
    channel.ledger.measure(3 * n, "phase_authentication")
    channel.ledger.convert(n, "phase_bits")
    return received
