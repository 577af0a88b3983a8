"""Pauli channel noise (trajectory sampling) and Monte Carlo acceptance runs."""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import TYPE_CHECKING, Sequence

import numpy as np

from .statevector import X, Y, Z, StateVector, apply_single

if TYPE_CHECKING:
    from .protocol import RunConfig

KINDS = ("depolarizing", "bit-flip", "phase-flip")
HARDWARE_ACCEPTANCE = 0.892


@dataclass(frozen=True)
class NoiseModel:
    kind: str = "depolarizing"
    p: float = 0.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown noise kind {self.kind!r}; expected one of {KINDS}")
        if not 0.0 <= self.p <= 1.0:
            raise ValueError(f"noise probability must be in [0, 1], got {self.p}")


def apply_noise(state: StateVector, qubit: int, model: NoiseModel, rng: np.random.Generator) -> StateVector:
    """Sample one trajectory of ``model`` on ``qubit`` (1-based)."""
    if not 1 <= qubit <= state.num_qubits:
        raise IndexError(f"qubit index {qubit} out of range 1..{state.num_qubits}")
    if model.p == 0.0:
        return state
    if rng.random() >= model.p:
        return state
    if model.kind == "bit-flip":
        error = X
    elif model.kind == "phase-flip":
        error = Z
    else:
        error = (X, Y, Z)[int(rng.integers(3))]
    return apply_single(state, error, qubit)


def transmit(state: StateVector, model: NoiseModel | None, rng: np.random.Generator | None) -> StateVector:
    """Send every qubit of ``state`` through ``model`` independently."""
    if model is None or model.p == 0.0:
        return state
    for q in range(1, state.num_qubits + 1):
        state = apply_noise(state, q, model, rng)
    return state


def trial_seeds(seed: int, trials: int) -> list:
    """Per-trial seed sequences: child ``i`` of ``SeedSequence(seed)``."""
    return np.random.SeedSequence(seed).spawn(trials)


def wilson_interval(successes: int, trials: int, confidence: float = 0.95) -> tuple[float, float]:
    from scipy.stats import binomtest

    ci = binomtest(successes, trials).proportion_ci(confidence_level=confidence, method="wilson")
    return float(ci.low), float(ci.high)


@dataclass
class ExperimentResult:
    trials: int
    accepted: int
    model: NoiseModel
    histogram: dict = field(default_factory=dict)
    ci: tuple = (0.0, 1.0)

    @property
    def acceptance(self) -> float:
        return self.accepted / self.trials

    def to_dict(self) -> dict:
        return {
            "noise_kind": self.model.kind,
            "p": self.model.p,
            "trials": self.trials,
            "accepted": self.accepted,
            "acceptance": self.acceptance,
            "ci95": list(self.ci),
            "histogram": dict(sorted(self.histogram.items())),
        }


def success_experiment(config: RunConfig, trials: int, model: NoiseModel, seed: int) -> ExperimentResult:
    """Run the whole protocol ``trials`` times with noise on every sent qubit.

    Trial ``i`` uses child ``i`` of ``SeedSequence(seed)`` for all of its
    randomness, so results do not depend on execution order. The histogram
    counts the verifier's computational-basis readout of its decrypted reply.
    """
    from .protocol import run_protocol

    if trials < 1:
        raise ValueError("trials must be >= 1")
    accepted = 0
    histogram: dict[str, int] = {}
    base = replace(config, noise=model)
    for child in trial_seeds(seed, trials):
        transcript = run_protocol(base, rng=np.random.default_rng(child))
        accepted += transcript.accepted
        label = transcript.readout
        if label is not None:
            histogram[label] = histogram.get(label, 0) + 1
    return ExperimentResult(trials, accepted, model, histogram, wilson_interval(accepted, trials))


def calibration_sweep(
    config: RunConfig,
    grid: Sequence[float],
    trials: int,
    seed: int,
    kind: str = "depolarizing",
    target: float = HARDWARE_ACCEPTANCE,
) -> tuple[list, float | None]:
    """Acceptance over a grid of noise strengths, plus the first p below ``target``."""
    if len(grid) == 0:
        raise ValueError("noise grid must be non-empty")
    rows = [success_experiment(config, trials, NoiseModel(kind, float(p)), seed) for p in grid]
    crossing = next((r.model.p for r in rows if r.acceptance < target), None)
    return rows, crossing
