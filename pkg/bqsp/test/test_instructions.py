import math
import pytest
import numpy as np

from .. import ZeroProbability
from ..hilbert import FockBasisConfig, HybridState, KET_E, KET_G, KET_PLUS, coherent_state, fidelity, fock_state
from ..instructions import (
    ConditionalDisplacement, ControlledPhase, DurationModel, Instruction, MeasureZ, PulseSequence, QubitRotation,
    Reset, RotationZ, UnconditionalDisplacement, apply, classical_qubit_unitary, conditional_rotation_from_vector,
    measure, p_rotation, sequence_unitary, x_rotation,
)

CFG = FockBasisConfig(40)


def vacuum_with(qubit: np.ndarray) -> HybridState:
    return HybridState.product([fock_state(0, CFG)], [qubit])


def test_conditional_displacement_on_sigma_x_eigenstate():
    state = apply(vacuum_with(KET_PLUS), ConditionalDisplacement(0.5), CFG)
    expected = HybridState.product([coherent_state(0.5, CFG)], [KET_PLUS])
    assert fidelity(state, expected) == pytest.approx(1.0, abs=1e-10)


def test_conditional_displacement_splits_ground_state():
    state = apply(vacuum_with(KET_G), ConditionalDisplacement(1.5j), CFG)
    # |g> = (|+> + |->)/sqrt(2): two coherent states at +/-1.5j, the qubit is nearly maximally mixed
    assert state.qubit_probability(0) == pytest.approx(0.5, abs=1e-2)


def test_unconditional_displacement():
    state = apply(vacuum_with(KET_G), UnconditionalDisplacement(0.3 + 0.2j), CFG)
    expected = HybridState.product([coherent_state(0.3 + 0.2j, CFG)], [KET_G])
    assert fidelity(state, expected) == pytest.approx(1.0, abs=1e-10)


def test_qubit_rotation_flips_ground_state():
    state = apply(vacuum_with(KET_G), QubitRotation(0.0, math.pi), CFG)
    assert state.qubit_probability(1) == pytest.approx(1.0)


def test_rotation_z_relative_phase():
    u = RotationZ(math.pi / 3).matrix()
    assert u[1, 1] / u[0, 0] == pytest.approx(np.exp(1j * math.pi / 3))


def test_controlled_phase_only_on_ee():
    state = HybridState.product([fock_state(0, FockBasisConfig(4))], [KET_E, KET_E])
    out = apply(state, ControlledPhase(math.pi / 2), FockBasisConfig(4))
    assert np.vdot(state.amplitudes, out.amplitudes) == pytest.approx(1j)
    state = HybridState.product([fock_state(0, FockBasisConfig(4))], [KET_G, KET_E])
    out = apply(state, ControlledPhase(math.pi / 2), FockBasisConfig(4))
    assert np.vdot(state.amplitudes, out.amplitudes) == pytest.approx(1.0)


def test_x_and_p_rotation_classical_angles():
    # exp(i c x sigma) and exp(i c p sigma) at the classical points (x, 0) and (0, p)
    u = classical_qubit_unitary([x_rotation(0.8)], x=0.5)
    assert np.allclose(u, math.cos(0.4) * np.eye(2) + 1j * math.sin(0.4) * np.array([[0, 1], [1, 0]]))
    u = classical_qubit_unitary([p_rotation(0.8)], x=0.0, p=0.5)
    assert np.allclose(u, math.cos(0.4) * np.eye(2) + 1j * math.sin(0.4) * np.array([[0, 1], [1, 0]]))


def test_sequence_followed_by_its_inverse_is_identity():
    cfg = FockBasisConfig(24)
    seq = PulseSequence((
        ConditionalDisplacement(0.4j, phi=0.3),
        QubitRotation(1.1, 0.7),
        RotationZ(0.2),
        ConditionalDisplacement(-0.3, phi=2.0),
    ))
    u = sequence_unitary(seq + seq.inverse(), cfg)
    assert np.allclose(u, np.eye(2 * cfg.dim), atol=1e-9)


def test_sequence_unitary_rejects_measurements():
    with pytest.raises(ValueError):
        sequence_unitary([MeasureZ()], CFG)


def test_pulse_sequence_json(tmp_path):
    seq = PulseSequence((ConditionalDisplacement(0.5 - 0.25j, phi=1.0), QubitRotation(0.5, 2.0), Reset()))
    path = tmp_path / 'seq.json'
    seq.save(path)
    assert PulseSequence.load(path) == seq


def test_instruction_from_dict_unknown_op():
    with pytest.raises(ValueError):
        Instruction.from_dict({'op': 'teleport'})


def test_durations():
    model = DurationModel(tau_per_unit_amplitude=1e-6, rotation_time=24e-9)
    seq = PulseSequence((ConditionalDisplacement(2.0), ConditionalDisplacement(0.01), QubitRotation(0.0, 1.0)))
    assert seq.duration(model) == pytest.approx(2e-6 + 48e-9 + 24e-9)
    assert seq.total_cd_amplitude() == pytest.approx(2.01)
    with pytest.raises(ValueError):
        DurationModel(rotation_time=-1.0)


def test_forced_measurement_of_impossible_outcome(rng):
    with pytest.raises(ZeroProbability):
        measure(vacuum_with(KET_G), 0, rng, forced=-1)


def test_reset_returns_to_ground(rng):
    state = apply(vacuum_with(KET_E), Reset(), CFG, rng=rng)
    assert state.qubit_probability(0) == pytest.approx(1.0)


def test_non_unitary_needs_rng():
    with pytest.raises(ValueError):
        apply(vacuum_with(KET_G), MeasureZ(), CFG)


def test_conditional_rotation_from_vector():
    cd = conditional_rotation_from_vector(0.5 + 0.25j, math.pi / 2)
    assert cd.beta == 0.5 + 0.25j
    assert cd.phi == pytest.approx(math.pi / 2)
    with pytest.raises(ValueError):
        conditional_rotation_from_vector(0)
