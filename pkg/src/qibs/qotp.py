"""Quantum one-time pad with Pauli X/Z masks.

Qubit ``i`` (1-based) is masked by key bits ``K_{2i-1}`` (Z) and ``K_{2i}`` (X).
Encryption applies Z then X; decryption undoes X then Z.
"""
from __future__ import annotations

from dataclasses import dataclass
from itertools import product

import numpy as np

from .statevector import X, Z, StateVector, apply_single, density_of, mix

MAX_SECRECY_QUBITS = 4


class KeyTooShortError(ValueError):
    pass


class KeySourceError(RuntimeError):
    """Key material could not be drawn."""


@dataclass(frozen=True)
class OtpKey:
    bits: str

    def __post_init__(self):
        if not self.bits:
            raise ValueError("key must be non-empty")
        if set(self.bits) - {"0", "1"}:
            raise ValueError(f"key may only contain 0/1, got {self.bits!r}")

    def __len__(self) -> int:
        return len(self.bits)

    def __str__(self) -> str:
        return self.bits

    def masks(self, qubit: int) -> tuple[bool, bool]:
        """(z, x) mask bits for 1-based ``qubit``: bits K_{2i-1} and K_{2i}."""
        # the only place 1-based key positions become 0-based string offsets
        z = self.bits[2 * qubit - 2]
        x = self.bits[2 * qubit - 1]
        return z == "1", x == "1"

    def require(self, num_qubits: int) -> None:
        if len(self.bits) < 2 * num_qubits:
            raise KeyTooShortError(
                f"key of {len(self.bits)} bits cannot mask {num_qubits} qubits"
                f" (needs {2 * num_qubits})"
            )

    def block(self, index: int, num_qubits: int) -> OtpKey:
        """The ``index``-th consecutive 2*num_qubits-bit block."""
        width = 2 * num_qubits
        chunk = self.bits[index * width : (index + 1) * width]
        if len(chunk) < width:
            raise KeyTooShortError(f"key has no block {index} of width {width}")
        return OtpKey(chunk)


def keygen(n: int, rng: np.random.Generator | None = None, bits: str | None = None) -> OtpKey:
    """2n-bit key, either injected (``bits``) or drawn uniformly from ``rng``."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if bits is not None:
        key = OtpKey(bits)
        if len(key) < 2 * n:
            raise KeySourceError(f"injected key {bits!r} is shorter than {2 * n} bits")
        return key
    if rng is None:
        raise KeySourceError("no key source available")
    return OtpKey("".join("1" if b else "0" for b in rng.integers(0, 2, size=2 * n)))


def encrypt(state: StateVector, key: OtpKey) -> StateVector:
    key.require(state.num_qubits)
    for q in range(1, state.num_qubits + 1):
        z, x = key.masks(q)
        if z:
            state = apply_single(state, Z, q)
        if x:
            state = apply_single(state, X, q)
    return state


def decrypt(state: StateVector, key: OtpKey) -> StateVector:
    key.require(state.num_qubits)
    for q in range(1, state.num_qubits + 1):
        z, x = key.masks(q)
        if x:
            state = apply_single(state, X, q)
        if z:
            state = apply_single(state, Z, q)
    return state


def all_keys(num_qubits: int):
    for bits in product("01", repeat=2 * num_qubits):
        yield OtpKey("".join(bits))


def secrecy_oracle(state: StateVector) -> np.ndarray:
    """Density matrix of the ciphertext averaged over every key."""
    n = state.num_qubits
    if n > MAX_SECRECY_QUBITS:
        raise ValueError(f"enumeration limited to {MAX_SECRECY_QUBITS} qubits, got {n}")
    dms = [density_of(encrypt(state, k)) for k in all_keys(n)]
    return mix(dms, [1.0 / len(dms)] * len(dms))
