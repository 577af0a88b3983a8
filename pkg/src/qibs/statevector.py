"""Dense statevector core.

Qubit 1 is the leftmost (most significant) character of a basis label, so the
state ``|010>`` has its single nonzero amplitude at index 2. Gates are plain
2x2 complex numpy arrays. States are immutable: every operation returns a new
:class:`StateVector`.
"""
from __future__ import annotations

from dataclasses import dataclass
from math import cos, sin, sqrt
from typing import Mapping, Sequence

import numpy as np

NORM_TOL = 1e-9
UNITARY_TOL = 1e-10

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
H = np.array([[1, 1], [1, -1]], dtype=complex) / sqrt(2)

for _g in (I2, X, Y, Z, H):
    _g.setflags(write=False)


@dataclass(frozen=True, eq=False)
class StateVector:
    """Normalized pure state over ``num_qubits`` qubits."""

    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.array(self.amplitudes, dtype=complex).reshape(-1)
        dim = amps.shape[0]
        if dim < 2 or dim & (dim - 1):
            raise ValueError(f"amplitude count {dim} is not a power of two >= 2")
        if not np.all(np.isfinite(amps)):
            raise ValueError("amplitudes must be finite")
        norm = float(np.vdot(amps, amps).real)
        if abs(norm - 1.0) > NORM_TOL:
            raise ValueError(f"state is not normalized (norm^2 = {norm!r})")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @property
    def num_qubits(self) -> int:
        return self.amplitudes.shape[0].bit_length() - 1

    @property
    def dim(self) -> int:
        return self.amplitudes.shape[0]

    def __neg__(self) -> StateVector:
        return StateVector(-self.amplitudes)

    def __repr__(self) -> str:
        return f"StateVector({format_state(self)})"

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def is_basis_state(self, tol: float = NORM_TOL) -> bool:
        return bool(np.isclose(self.probabilities().max(), 1.0, atol=tol))

    def basis_label(self, tol: float = NORM_TOL) -> str:
        """Label of a computational-basis state (ignores global phase)."""
        probs = self.probabilities()
        idx = int(np.argmax(probs))
        if abs(probs[idx] - 1.0) > tol:
            raise ValueError("state is not a computational-basis state")
        return format(idx, f"0{self.num_qubits}b")

    def to_dict(self) -> dict:
        return {
            "num_qubits": self.num_qubits,
            "amplitudes": [[float(a.real), float(a.imag)] for a in self.amplitudes],
        }


def _check_bits(bits: str) -> None:
    if not bits:
        raise ValueError("bit string must be non-empty")
    if set(bits) - {"0", "1"}:
        raise ValueError(f"bit string may only contain 0/1, got {bits!r}")


def basis_state(bits: str) -> StateVector:
    """Computational-basis state for ``bits`` (qubit 1 first)."""
    _check_bits(bits)
    amps = np.zeros(2 ** len(bits), dtype=complex)
    amps[int(bits, 2)] = 1.0
    return StateVector(amps)


def from_terms(terms: Mapping[str, complex], scale: complex = 1.0) -> StateVector:
    """Build ``scale * sum(coeff |label>)`` from a label -> coefficient map."""
    if not terms:
        raise ValueError("at least one term is required")
    widths = {len(label) for label in terms}
    if len(widths) != 1:
        raise ValueError("all labels must have the same length")
    (width,) = widths
    amps = np.zeros(2**width, dtype=complex)
    for label, coeff in terms.items():
        _check_bits(label)
        amps[int(label, 2)] += coeff
    return StateVector(scale * amps)


def product_state(qubits: Sequence[Sequence[complex]]) -> StateVector:
    """Tensor product of single-qubit amplitude pairs ``(a, b)``."""
    amps = np.ones(1, dtype=complex)
    for pair in qubits:
        amps = np.kron(amps, np.asarray(pair, dtype=complex))
    return StateVector(amps)


def random_product_state(num_qubits: int, rng: np.random.Generator) -> StateVector:
    """Product of Haar-random single-qubit states."""
    vecs = rng.normal(size=(num_qubits, 2)) + 1j * rng.normal(size=(num_qubits, 2))
    vecs /= np.linalg.norm(vecs, axis=1, keepdims=True)
    return product_state(vecs)


def random_state(num_qubits: int, rng: np.random.Generator) -> StateVector:
    amps = rng.normal(size=2**num_qubits) + 1j * rng.normal(size=2**num_qubits)
    return StateVector(amps / np.linalg.norm(amps))


def u_gate(theta: float, phi: float, lam: float) -> np.ndarray:
    """General single-qubit rotation U(theta, phi, lambda)."""
    c, s = cos(theta / 2), sin(theta / 2)
    return np.array(
        [
            [c, -np.exp(1j * lam) * s],
            [np.exp(1j * phi) * s, np.exp(1j * (phi + lam)) * c],
        ],
        dtype=complex,
    )


def is_unitary(gate: np.ndarray, tol: float = UNITARY_TOL) -> bool:
    gate = np.asarray(gate)
    return gate.ndim == 2 and gate.shape[0] == gate.shape[1] and np.allclose(
        gate.conj().T @ gate, np.eye(gate.shape[0]), atol=tol, rtol=0
    )


def apply_single(state: StateVector, gate: np.ndarray, qubit: int) -> StateVector:
    """Apply a 2x2 ``gate`` to qubit ``qubit`` (1-based)."""
    n = state.num_qubits
    if not 1 <= qubit <= n:
        raise IndexError(f"qubit index {qubit} out of range 1..{n}")
    psi = state.amplitudes.reshape(2 ** (qubit - 1), 2, 2 ** (n - qubit))
    out = np.einsum("ab,ibj->iaj", gate, psi)
    return StateVector(out.reshape(-1))


def apply_each(state: StateVector, gates: Sequence[np.ndarray | None]) -> StateVector:
    """Apply ``gates[k]`` to qubit ``k + 1``; ``None`` entries are skipped."""
    if len(gates) != state.num_qubits:
        raise ValueError(f"need {state.num_qubits} gates, got {len(gates)}")
    for k, gate in enumerate(gates, start=1):
        if gate is not None:
            state = apply_single(state, gate, k)
    return state


def apply_all(state: StateVector, gate: np.ndarray) -> StateVector:
    """Apply ``gate`` to every qubit (``gate`` tensored m times)."""
    return apply_each(state, [gate] * state.num_qubits)


def tensor(a: StateVector, b: StateVector, *rest: StateVector) -> StateVector:
    amps = np.kron(a.amplitudes, b.amplitudes)
    for s in rest:
        amps = np.kron(amps, s.amplitudes)
    return StateVector(amps)


def split_product(state: StateVector, first: int) -> tuple[StateVector, StateVector]:
    """Inverse of :func:`tensor` for an exact product state split after ``first`` qubits."""
    n = state.num_qubits
    if not 1 <= first < n:
        raise ValueError(f"split point {first} out of range for {n} qubits")
    mat = state.amplitudes.reshape(2**first, 2 ** (n - first))
    u, s, vh = np.linalg.svd(mat)
    if s[1:].max(initial=0.0) > 1e-9:
        raise ValueError("state is entangled across the split")
    return StateVector(u[:, 0] * s[0]), StateVector(vh[0])


def fidelity(a: StateVector, b: StateVector) -> float:
    """|<a|b>|^2, clipped to [0, 1]."""
    if a.num_qubits != b.num_qubits:
        raise ValueError(f"dimension mismatch: {a.num_qubits} vs {b.num_qubits} qubits")
    return float(min(1.0, abs(np.vdot(a.amplitudes, b.amplitudes)) ** 2))


def measure_all(state: StateVector, rng: np.random.Generator) -> str:
    """Sample a computational-basis label with Born-rule probabilities."""
    probs = state.probabilities()
    idx = int(rng.choice(state.dim, p=probs / probs.sum()))
    return format(idx, f"0{state.num_qubits}b")


def sample_counts(state: StateVector, shots: int, rng: np.random.Generator) -> dict[str, int]:
    probs = state.probabilities()
    counts = rng.multinomial(shots, probs / probs.sum())
    n = state.num_qubits
    return {format(i, f"0{n}b"): int(c) for i, c in enumerate(counts) if c}


# -- density matrices (used only as oracles) --


def validate_density(rho: np.ndarray, tol: float = NORM_TOL) -> np.ndarray:
    rho = np.asarray(rho, dtype=complex)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise ValueError("density matrix must be square")
    if not np.allclose(rho, rho.conj().T, atol=tol, rtol=0):
        raise ValueError("density matrix is not Hermitian")
    if abs(np.trace(rho).real - 1.0) > tol:
        raise ValueError("density matrix trace is not 1")
    if np.linalg.eigvalsh(rho).min() < -tol:
        raise ValueError("density matrix has a negative eigenvalue")
    return rho


def density_of(state: StateVector) -> np.ndarray:
    return np.outer(state.amplitudes, state.amplitudes.conj())


def mix(dms: Sequence[np.ndarray], weights: Sequence[float]) -> np.ndarray:
    """Convex combination of density matrices."""
    w = np.asarray(weights, dtype=float)
    if len(dms) != len(w) or len(w) == 0:
        raise ValueError("need one weight per density matrix")
    if np.any(w < 0) or abs(w.sum() - 1.0) > NORM_TOL:
        raise ValueError("weights must be nonnegative and sum to 1")
    rho = sum(wk * np.asarray(d, dtype=complex) for wk, d in zip(w, dms))
    return validate_density(rho)


def format_state(state: StateVector, tol: float = 1e-12, digits: int = 4) -> str:
    """Human-readable ket expansion, e.g. ``0.7071|0> - 0.7071|1>``."""
    n = state.num_qubits
    parts = []
    for idx, amp in enumerate(state.amplitudes):
        if abs(amp) < tol:
            continue
        if abs(amp.imag) < tol:
            coeff = f"{amp.real:+.{digits}f}"
        else:
            coeff = f"+({amp.real:.{digits}f}{amp.imag:+.{digits}f}j)"
        parts.append(f"{coeff}|{idx:0{n}b}>")
    text = " ".join(parts)
    return text[1:] if text.startswith("+") else text
