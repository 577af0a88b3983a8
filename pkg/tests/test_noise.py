import numpy as np
import pytest

from qibs.noise import (
    NoiseModel,
    apply_noise,
    calibration_sweep,
    success_experiment,
    transmit,
    trial_seeds,
    wilson_interval,
)
from qibs.protocol import toy_config
from qibs.statevector import basis_state, random_state


def test_noise_model_validation():
    with pytest.raises(ValueError):
        NoiseModel("amplitude-damping", 0.1)
    with pytest.raises(ValueError):
        NoiseModel("bit-flip", 1.5)


def test_zero_noise_is_identity():
    rng = np.random.default_rng(0)
    psi = random_state(3, rng)
    for kind in ("depolarizing", "bit-flip", "phase-flip"):
        assert apply_noise(psi, 2, NoiseModel(kind, 0.0), rng) is psi
        assert transmit(psi, NoiseModel(kind, 0.0), rng) is psi


def test_certain_bit_flip():
    out = apply_noise(basis_state("0"), 1, NoiseModel("bit-flip", 1.0), np.random.default_rng(0))
    assert out.basis_label() == "1"


def test_certain_phase_flip_on_one():
    out = apply_noise(basis_state("1"), 1, NoiseModel("phase-flip", 1.0), np.random.default_rng(0))
    np.testing.assert_allclose(out.amplitudes, [0, -1])


def test_bad_qubit_index():
    with pytest.raises(IndexError):
        apply_noise(basis_state("00"), 3, NoiseModel("bit-flip", 0.5), np.random.default_rng(0))


def test_depolarizing_flip_frequency():
    # X or Y fire with probability 2p/3
    rng = np.random.default_rng(42)
    model = NoiseModel("depolarizing", 0.3)
    zero = basis_state("0")
    flips = sum(apply_noise(zero, 1, model, rng).probabilities()[1] > 0.5 for _ in range(100_000))
    assert abs(flips / 100_000 - 0.2) <= 0.01


def test_trial_seeds_are_order_independent():
    a = trial_seeds(9, 5)
    b = trial_seeds(9, 8)
    assert [s.generate_state(2).tolist() for s in a] == [s.generate_state(2).tolist() for s in b[:5]]


def test_wilson_interval_brackets_estimate():
    lo, hi = wilson_interval(90, 100)
    assert lo < 0.9 < hi
    lo, hi = wilson_interval(100, 100)
    assert hi == pytest.approx(1.0) and lo > 0.95


def test_noiseless_acceptance_is_exact():
    result = success_experiment(toy_config(), 300, NoiseModel("depolarizing", 0.0), seed=1)
    assert result.acceptance == 1.0
    assert result.histogram == {"010": 300}


def test_maximal_noise_degrades():
    result = success_experiment(toy_config(), 256, NoiseModel("depolarizing", 1.0), seed=2)
    assert result.acceptance < 0.9


def test_trials_must_be_positive():
    with pytest.raises(ValueError):
        success_experiment(toy_config(), 0, NoiseModel(), seed=0)


def test_experiment_is_deterministic():
    model = NoiseModel("depolarizing", 0.05)
    a = success_experiment(toy_config(), 200, model, seed=11).to_dict()
    b = success_experiment(toy_config(), 200, model, seed=11).to_dict()
    assert a == b


def test_acceptance_non_increasing_in_p():
    rows, _ = calibration_sweep(toy_config(), [0.0, 0.05, 0.1, 0.2], 400, seed=3)
    acc = [r.acceptance for r in rows]
    assert acc[0] == 1.0
    assert all(b <= a + 0.03 for a, b in zip(acc, acc[1:]))


def test_calibration_reports_crossing():
    rows, crossing = calibration_sweep(toy_config(), [0.0, 0.01, 0.05], 300, seed=4, target=0.892)
    assert len(rows) == 3
    expected = next((r.model.p for r in rows if r.acceptance < 0.892), None)
    assert crossing == expected


def test_calibration_empty_grid():
    with pytest.raises(ValueError):
        calibration_sweep(toy_config(), [], 10, seed=0)
