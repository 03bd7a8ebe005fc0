import math
import pytest
import numpy as np

from .. import DimensionMismatch, RateTooLarge, ZeroProbability, QubitLevel
from ..hilbert import (
    FockBasisConfig, HybridState, KET_E, KET_G, KET_PLUS, SIGMA_X, coherent_state, fock_state, number_operator,
    expectation, partial_qubit_bloch,
)
from ..instructions import ConditionalDisplacement, DurationModel, MeasureZ, PulseSequence, QubitRotation, RotationZ, apply
from ..noise import DensityState, NoiseModel, NoisySimulator, apply_noisy, apply_noisy_trajectory, idle, postselect

CFG = FockBasisConfig(20)


def density(osc: np.ndarray, qubit: np.ndarray) -> DensityState:
    return DensityState.from_pure(HybridState.product([osc], [qubit]))


def test_substep_too_long_for_rate():
    with pytest.raises(RateTooLarge):
        NoiseModel(kappa_over_2pi=2.0, substep_dt=0.01)
    with pytest.raises(ValueError):
        NoiseModel(gamma_over_2pi=-1.0)


def test_noise_from_dict():
    noise = NoiseModel.from_dict({'kappa_over_2pi': '0.001', 'gamma_over_2pi': 0.005})
    assert noise.kappa_over_2pi == pytest.approx(0.001)
    assert not noise.noiseless
    with pytest.raises(TypeError):
        NoiseModel.from_dict({'kappa': 0.001})


def test_qubit_decay_during_idle():
    noise = NoiseModel(gamma_over_2pi=0.01)
    rho = idle(density(fock_state(0, CFG), KET_E), 10.0, noise)
    assert rho.reduced_qubit()[1, 1].real == pytest.approx(math.exp(-2 * math.pi * 0.1), rel=1e-3)
    assert rho.is_physical()


def test_qubit_dephasing_during_idle():
    noise = NoiseModel(gamma_phi_over_2pi=0.01)
    rho = idle(density(fock_state(0, CFG), KET_PLUS), 10.0, noise)
    x, _, z = partial_qubit_bloch(rho)
    assert x == pytest.approx(math.exp(-2 * math.pi * 0.1), rel=1e-3)
    assert z == pytest.approx(0.0, abs=1e-12)


def test_photon_loss_during_idle():
    noise = NoiseModel(kappa_over_2pi=0.01)
    rho = idle(density(coherent_state(1.0, CFG), KET_G), 10.0, noise)
    n = np.trace(rho.reduced_oscillator() @ number_operator(CFG)).real
    assert n == pytest.approx(math.exp(-2 * math.pi * 0.1), rel=1e-2)


def test_noiseless_evolution_matches_pure():
    seq = PulseSequence((ConditionalDisplacement(0.5j), QubitRotation(0.3, 1.0)))
    pure = apply(HybridState.product([fock_state(0, CFG)], [KET_G]), seq, CFG)
    rho = apply_noisy(density(fock_state(0, CFG), KET_G), seq, NoiseModel(), DurationModel(), CFG)
    assert rho.fidelity(pure) == pytest.approx(1.0, abs=1e-10)


def test_noisy_gate_stays_physical():
    noise = NoiseModel(kappa_over_2pi=0.001, gamma_over_2pi=0.005, gamma_phi_over_2pi=0.005)
    rho = apply_noisy(density(fock_state(0, CFG), KET_G), ConditionalDisplacement(1.0j), noise, DurationModel(), CFG)
    assert rho.is_physical()


def test_unread_measurement_dephases():
    rho = apply_noisy(density(fock_state(0, CFG), KET_PLUS), MeasureZ(), NoiseModel(), DurationModel(), CFG)
    assert np.allclose(rho.reduced_qubit(), np.eye(2) / 2)


def test_postselect_probabilities():
    rho = density(fock_state(0, CFG), KET_PLUS)
    post, p = postselect(rho, 0, QubitLevel.e)
    assert p == pytest.approx(0.5)
    assert post.reduced_qubit()[1, 1].real == pytest.approx(1.0)
    with pytest.raises(ZeroProbability):
        postselect(HybridState.product([fock_state(0, CFG)], [KET_G]), 0, QubitLevel.e)


def test_density_state_shape_is_checked():
    with pytest.raises(DimensionMismatch):
        DensityState(np.eye(3), CFG.dim)


def test_simulator_rejects_unknown_method():
    with pytest.raises(ValueError):
        NoisySimulator(CFG, NoiseModel(), DurationModel(), method='mcwf')


def test_trajectories_are_seeded():
    noise = NoiseModel(gamma_over_2pi=0.05, substep_dt=0.05)
    durations = DurationModel(rotation_time=5e-6)
    cfg = FockBasisConfig(4)
    results = []
    for _ in range(2):
        sim = NoisySimulator(cfg, noise, durations, method='trajectory', seed=11)
        state = sim.prepare(HybridState.product([fock_state(0, cfg)], [KET_E]))
        results.append(sim.run(state, RotationZ(0.0)).amplitudes)
    assert np.allclose(results[0], results[1])


def test_trajectory_average_matches_density():
    noise = NoiseModel(gamma_over_2pi=0.01, substep_dt=0.05)
    durations = DurationModel(rotation_time=10e-6)
    cfg = FockBasisConfig(4)
    initial = HybridState.product([fock_state(0, cfg)], [KET_E])
    sim = NoisySimulator(cfg, noise, durations, method='trajectory', seed=3)
    p_e = np.mean([sim.run(sim.prepare(initial), RotationZ(0.0)).qubit_probability(1) for _ in range(300)])
    exact = NoisySimulator(cfg, noise, durations).run(DensityState.from_pure(initial), RotationZ(0.0))
    assert p_e == pytest.approx(exact.reduced_qubit()[1, 1].real, abs=0.1)


def test_detect_on_density_matrix():
    sim = NoisySimulator(CFG, NoiseModel(), DurationModel())
    rho = sim.prepare(HybridState.product([fock_state(0, CFG)], [KET_PLUS]))
    post, p_g, passed = sim.detect(rho)
    assert passed
    assert p_g == pytest.approx(0.5)
    assert expectation(post, np.kron(SIGMA_X, np.eye(CFG.dim))).real == pytest.approx(0.0)


def test_noiseless_trajectory_matches_pure(rng):
    state = HybridState.product([coherent_state(0.5, CFG)], [KET_PLUS])
    seq = PulseSequence((ConditionalDisplacement(0.3), QubitRotation(0.0, math.pi / 3)))
    out = apply_noisy_trajectory(state, seq, NoiseModel(), DurationModel(), CFG, rng)
    assert np.allclose(out.amplitudes, apply(state, seq, CFG).amplitudes)
