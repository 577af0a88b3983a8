from functools import reduce
from math import pi, sqrt

import numpy as np
import pytest

from qibs.keyestab import PhaseSecret
from qibs.protocol import (
    DuplicateIdentityError,
    NoPendingVerificationError,
    NotInitializedError,
    RunConfig,
    Signer,
    Identity,
    UnknownIdentityError,
    Verifier,
    VerifyRequest,
    finalize,
    initialize,
    run_protocol,
    sign,
    signature_gate,
    skg_process,
    skg_respond,
    swap_test,
    toy_config,
    verify_request,
)
from qibs.qotp import OtpKey, all_keys, decrypt, encrypt
from qibs.statevector import StateVector, basis_state, fidelity, from_terms, random_product_state, u_gate

R = 1 / (2 * sqrt(2))
TOY_S = from_terms({"110": 1, "010": -1, "100": 1, "000": -1, "111": 1, "011": -1, "101": 1, "001": -1}, R)
TOY_ES = from_terms({lab: 1 for lab in ("110", "010", "100", "000", "111", "011", "101", "001")}, -R)
PI = PhaseSecret(128, 8)


@pytest.fixture
def toy():
    registry, signers, verifier = initialize(
        ["011"], 3, 8, signer_keys={"011": "010110"}, signer_phases={"011": PI}, verifier_key="100101"
    )
    return registry, signers["011"], verifier


def test_initialize_toy(toy):
    registry, signer, verifier = toy
    key, phase = registry.signers["011"]
    assert key.bits == "010110" and phase.phi == pi
    assert registry.verifiers["Bob"].bits == "100101"
    assert signer.key == key and verifier.key.bits == "100101"


def test_initialize_without_signers():
    registry, signers, verifier = initialize([], 3, 8, rng=np.random.default_rng(0))
    assert signers == {} and registry.signers == {}
    assert len(registry.verifiers["Bob"]) == 6


def test_initialize_duplicate_identity():
    with pytest.raises(DuplicateIdentityError):
        initialize(["011", "011"], 3, 8, rng=np.random.default_rng(0))


def test_sign_toy(toy):
    _, signer, _ = toy
    tup = sign(signer, "010")
    assert fidelity(tup.signature, TOY_S) == pytest.approx(1, abs=1e-12)
    assert fidelity(tup.identity, basis_state("011")) == 1
    assert fidelity(tup.message, basis_state("010")) == 1


@pytest.mark.parametrize(
    "key, expected",
    [("00", [1 / sqrt(2), -1 / sqrt(2)]), ("01", [-1 / sqrt(2), 1 / sqrt(2)])],
)
def test_sign_single_qubit(key, expected):
    signer = Signer(Identity("1"), 1, OtpKey(key), PI)
    tup = sign(signer, "0")
    np.testing.assert_allclose(tup.signature.amplitudes, expected, atol=1e-12)


def test_sign_errors():
    with pytest.raises(NotInitializedError):
        sign(Signer(Identity("1"), 1), "0")
    with pytest.raises(ValueError):
        sign(Signer(Identity("1"), 1, OtpKey("00"), PI), "01")


def test_verify_request_toy(toy):
    _, signer, verifier = toy
    req = verify_request(verifier, sign(signer, "010"))
    assert fidelity(req.identity, basis_state("000")) == 1
    assert fidelity(req.signature, TOY_ES) == pytest.approx(1, abs=1e-12)
    assert verifier.pending is not None


def test_verify_request_zero_key():
    signer = Signer(Identity("10"), 2, OtpKey("0110"), PhaseSecret(3, 4))
    verifier = Verifier("Bob", 2, OtpKey("0000"))
    tup = sign(signer, "11")
    req = verify_request(verifier, tup)
    np.testing.assert_array_equal(req.signature.amplitudes, tup.signature.amplitudes)
    np.testing.assert_array_equal(req.identity.amplitudes, tup.identity.amplitudes)


def test_verify_request_size_mismatch(toy):
    _, _, verifier = toy
    small = sign(Signer(Identity("1"), 1, OtpKey("00"), PI), "0")
    with pytest.raises(ValueError):
        verify_request(verifier, small)


def test_skg_respond_toy(toy):
    registry, signer, verifier = toy
    result = skg_process(registry, verify_request(verifier, sign(signer, "010")))
    assert result.identity == "011"
    assert fidelity(result.recovered, basis_state("010")) == pytest.approx(1, abs=1e-12)
    assert fidelity(result.reply, basis_state("001")) == pytest.approx(1, abs=1e-12)


def test_skg_unknown_identity(toy):
    registry, signer, verifier = toy
    tup = sign(signer, "010")
    # |111> after T_u decryption: encrypt it under T_u's X masks (011 -> 000 pattern)
    forged_id = encrypt(basis_state("111"), OtpKey("100101"))
    req = VerifyRequest("Bob", encrypt(tup.signature, OtpKey("100101")), forged_id)
    with pytest.raises(UnknownIdentityError) as info:
        skg_respond(registry, req)
    assert info.value.label == "111"


def test_finalize_examples(toy):
    _, _, verifier = toy
    t_u = verifier.key
    verifier.pending = basis_state("010")
    assert finalize(verifier, basis_state("001")).accepted
    verifier.pending = basis_state("010")
    assert not finalize(verifier, encrypt(basis_state("101"), t_u)).accepted
    verifier.pending = basis_state("010")
    assert finalize(verifier, encrypt(-basis_state("010"), t_u)).accepted


def test_finalize_without_pending(toy):
    _, _, verifier = toy
    with pytest.raises(NoPendingVerificationError):
        finalize(verifier, basis_state("001"))


def test_finalize_global_phase_invariance():
    rng = np.random.default_rng(4)
    for _ in range(20):
        verifier = Verifier("Bob", 2, OtpKey("1011"))
        held = random_product_state(2, rng)
        reply = encrypt(held, verifier.key)
        outcomes = []
        for r in (reply, -reply, StateVector(1j * reply.amplitudes)):
            verifier.pending = held
            outcomes.append(finalize(verifier, r).accepted)
        assert outcomes == [True, True, True]


def test_swap_test_examples():
    rng = np.random.default_rng(0)
    assert swap_test(basis_state("01"), basis_state("01"), 17, rng) == 1.0
    assert abs(swap_test(basis_state("0"), basis_state("1"), 10_000, rng)) <= 0.03
    plus = StateVector([1 / sqrt(2), 1 / sqrt(2)])
    # |<0|+>|^2 = 1/2
    assert abs(swap_test(basis_state("0"), plus, 10_000, rng) - 0.5) <= 0.03


def test_swap_comparator_run():
    t = run_protocol(toy_config(comparator="swap", shots=256))
    assert t.accepted
    t = run_protocol(toy_config(comparator="swap", shots=256, forge_key="101001"))
    assert not t.accepted


def test_run_protocol_toy_walkthrough():
    t = run_protocol(toy_config())
    assert t.accepted
    s = t.states
    assert fidelity(s["signature"], TOY_S) == pytest.approx(1, abs=1e-12)
    assert fidelity(s["encrypted_signature"], TOY_ES) == pytest.approx(1, abs=1e-12)
    assert fidelity(s["encrypted_identity"], basis_state("000")) == 1
    assert fidelity(s["skg_signature"], TOY_S) == pytest.approx(1, abs=1e-12)
    assert fidelity(s["recovered"], basis_state("010")) == pytest.approx(1, abs=1e-12)
    assert fidelity(s["reply"], basis_state("001")) == pytest.approx(1, abs=1e-12)
    assert [m.qubits for m in t.messages] == [6, 16, 6, 9, 6, 3]


def test_run_protocol_random_honest():
    assert run_protocol(RunConfig(m=4, seed=11)).accepted
    assert run_protocol(RunConfig(m=4, seed=11, message_kind="quantum")).accepted


def test_run_protocol_forged_key_rejects():
    assert not run_protocol(toy_config(forge_key="101001")).accepted


def test_run_protocol_long_verifier_key():
    t = run_protocol(toy_config(verifier_key="100101" + "011011"))
    assert t.accepted
    assert fidelity(t.states["encrypted_identity"], encrypt(basis_state("011"), OtpKey("011011"))) == 1


def test_run_protocol_deterministic():
    a = run_protocol(RunConfig(m=3, seed=5)).to_dict()
    b = run_protocol(RunConfig(m=3, seed=5)).to_dict()
    assert a == b


def test_run_config_validation():
    with pytest.raises(ValueError):
        RunConfig(m=3, signer_key="0101").validate()
    with pytest.raises(ValueError):
        RunConfig(m=3, verifier_key="0" * 8).validate()
    with pytest.raises(ValueError):
        RunConfig(m=3, comparator="psychic").validate()
    with pytest.raises(ValueError):
        RunConfig(m=3, phase=PhaseSecret(3, 4)).validate()


def test_completeness_random_honest_runs():
    rng = np.random.default_rng(500)
    for trial in range(500):
        m = int(rng.integers(1, 6))
        kind = "quantum" if trial % 2 else "classical"
        t = run_protocol(RunConfig(m=m, n=8, seed=trial, message_kind=kind), rng=rng)
        assert t.accepted
        assert t.fidelity >= 1 - 1e-9
        assert t.skg_identity == t.signer


@pytest.mark.parametrize("m", [1, 2, 3])
def test_skg_recovery_is_identity_operator(m):
    # (U^dag)^m D_K E_K U^m == I for every key and several phases, as dense matrices
    for k in (1, 64, 128, 200):
        u = reduce(np.kron, [signature_gate(PhaseSecret(k, 8))] * m)
        for key in all_keys(m):
            enc = np.column_stack([encrypt(StateVector(col), key).amplitudes for col in np.eye(2**m)])
            dec = np.column_stack([decrypt(StateVector(col), key).amplitudes for col in np.eye(2**m)])
            np.testing.assert_allclose(u.conj().T @ dec @ enc @ u, np.eye(2**m), atol=1e-10)


def test_toy_gate_is_signature_gate():
    np.testing.assert_allclose(signature_gate(PI), u_gate(pi / 2, pi, 0))
