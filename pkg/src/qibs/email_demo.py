"""Signed-email scenario: the sender signs a short digest of the mail body.

The digest is an XOR fold of the body's bits into m positions (bit k of the
byte stream lands in position k mod m). It is demo plumbing, not a hash: its
only useful property here is that flipping one body bit flips exactly one
digest bit.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .protocol import RunConfig, SignatureTuple, run_protocol
from .statevector import basis_state


def fold_digest(data: bytes | str, m: int) -> str:
    if isinstance(data, str):
        data = data.encode("utf-8")
    if not data:
        raise ValueError("cannot digest an empty message")
    out = [0] * m
    for k, bit in enumerate(np.unpackbits(np.frombuffer(data, dtype=np.uint8))):
        out[k % m] ^= int(bit)
    return "".join(map(str, out))


def flip_last_bit(data: bytes) -> bytes:
    return data[:-1] + bytes([data[-1] ^ 1])


@dataclass
class EmailReport:
    sender: str
    sender_id: str
    digest: str
    received_digest: str
    tampered: bool
    outcome: str
    fidelity: float | None

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def email_demo(message: str, sender: str = "alice@example.com", m: int = 8, n: int = 8,
               seed: int = 0, tamper: bool = False) -> EmailReport:
    """Sign ``message`` as ``sender`` and verify it at the recipient.

    With ``tamper`` the body's last bit is flipped after signing, so the
    recipient holds the digest of the altered body.
    """
    if not message:
        raise ValueError("message must be non-empty")
    body = message.encode("utf-8")
    digest = fold_digest(body, m)
    received = fold_digest(flip_last_bit(body), m) if tamper else digest
    config = RunConfig(m=m, n=n, identity=fold_digest(sender, m), message=digest, seed=seed)

    def intercept(tup: SignatureTuple) -> SignatureTuple:
        return SignatureTuple(basis_state(received), tup.signature, tup.identity)

    transcript = run_protocol(replace(config), intercept=intercept if tamper else None)
    return EmailReport(sender, config.identity, digest, received, tamper, transcript.outcome, transcript.fidelity)
