import math
import pytest
import numpy as np

from .. import TruncationError, DimensionMismatch
from ..hilbert import (
    FockBasisConfig, HybridState, KET_G, KET_PLUS, auto_fock_dim, block_decompose, coherent_state,
    displacement_operator, expectation, fidelity, fock_state, ladder_operators, momentum_operator,
    momentum_wavefunction, overlap, partial_qubit_bloch, position_operator, position_wavefunction, squeezed_vacuum,
    wigner,
)

CFG = FockBasisConfig(40)


def test_fock_config_rejects_bad_dimension():
    with pytest.raises(ValueError):
        FockBasisConfig(1)
    with pytest.raises(ValueError):
        FockBasisConfig(10, leakage_tol=0)


def test_displacement_is_unitary():
    d = displacement_operator(1.0 + 0.5j, CFG)
    assert np.allclose(d @ d.conj().T, np.eye(CFG.dim), atol=1e-10)


def test_displacement_inverse():
    d = displacement_operator(0.7 - 0.3j, CFG)
    d_inv = displacement_operator(-0.7 + 0.3j, CFG)
    assert np.allclose(d @ d_inv, np.eye(CFG.dim), atol=1e-10)


def test_displacement_too_large_for_truncation():
    with pytest.raises(TruncationError):
        displacement_operator(10.0, CFG)


def test_coherent_state_quadratures():
    # Wigner units: <x> = Re(alpha), <p> = Im(alpha)
    alpha = 1.2 - 0.4j
    psi = coherent_state(alpha, CFG)
    assert expectation(psi, position_operator(CFG)).real == pytest.approx(alpha.real, abs=1e-8)
    assert expectation(psi, momentum_operator(CFG)).real == pytest.approx(alpha.imag, abs=1e-8)


def test_squeezed_vacuum_variance():
    delta = 0.5
    psi = squeezed_vacuum(delta, FockBasisConfig(80))
    x = position_operator(FockBasisConfig(80))
    var = expectation(psi, x @ x).real
    assert var == pytest.approx(delta ** 2 / 4, rel=1e-3)


def test_squeezed_vacuum_with_unit_width_is_vacuum():
    assert fidelity(squeezed_vacuum(1.0, CFG), fock_state(0, CFG)) == pytest.approx(1.0)


def test_fock_state_out_of_range():
    with pytest.raises(IndexError):
        fock_state(CFG.dim, CFG)


def test_hybrid_state_shape_is_checked():
    with pytest.raises(DimensionMismatch):
        HybridState(np.zeros(10, dtype=complex), CFG.dim)


def test_hybrid_state_branches():
    state = HybridState.product([coherent_state(0.5, CFG)], [KET_PLUS])
    assert state.qubit_probability(0) == pytest.approx(0.5)
    assert state.qubit_probability(1) == pytest.approx(0.5)
    assert partial_qubit_bloch(state) == pytest.approx((1.0, 0.0, 0.0), abs=1e-12)


def test_two_mode_vacuum_dims():
    state = HybridState.vacuum(FockBasisConfig(8), num_qubits=2, num_modes=2)
    assert state.dims == (2, 2, 8, 8)
    assert state.norm() == pytest.approx(1.0)


def test_vacuum_wavefunction_is_normalized():
    grid = np.linspace(-6, 6, 1201)
    psi = position_wavefunction(fock_state(0, CFG), grid)
    assert np.trapezoid(np.abs(psi) ** 2, grid) == pytest.approx(1.0, abs=1e-6)


def test_wigner_normalization_and_negativity():
    grid = np.linspace(-4, 4, 161)
    dx = grid[1] - grid[0]
    w_vac = wigner(fock_state(0, FockBasisConfig(6)), grid)
    assert w_vac.sum() * dx * dx == pytest.approx(1.0, abs=1e-4)
    w_one = wigner(fock_state(1, FockBasisConfig(6)), np.array([0.0]))
    assert w_one[0, 0] == pytest.approx(-2 / math.pi)


def test_wigner_traces_out_the_qubit():
    grid = np.array([0.0])
    state = HybridState.product([fock_state(0, CFG)], [KET_G])
    assert wigner(state, grid)[0, 0] == pytest.approx(2 / math.pi)


def test_block_decompose_reassembles():
    u = np.kron(np.array([[0, 1], [1, 0]]), np.eye(4))
    blocks = block_decompose(u)
    assert np.allclose(blocks.reassemble(), u)
    assert blocks.failure_probability(np.eye(4)[0]) == pytest.approx(1.0)
    with pytest.raises(DimensionMismatch):
        block_decompose(np.eye(3))


def test_block_decompose_on_second_ancilla():
    flip = np.array([[0, 1], [1, 0]])
    u = np.kron(np.eye(2), np.kron(flip, np.eye(4)))
    second = block_decompose(u, qubit_index=1, num_qubits=2)
    assert np.allclose(second.W_gg, 0)
    assert np.allclose(second.W_eg, np.eye(8))
    first = block_decompose(u, qubit_index=0, num_qubits=2)
    assert np.allclose(first.W_gg, np.kron(flip, np.eye(4)))
    assert np.allclose(first.W_ge, 0)
    with pytest.raises(IndexError):
        block_decompose(u, qubit_index=2, num_qubits=2)


def test_ladder_commutator_below_the_cutoff(fock_cfg: FockBasisConfig):
    a, a_dag = ladder_operators(fock_cfg)
    commutator = a @ a_dag - a_dag @ a
    assert np.allclose(np.diag(commutator)[:-1], 1.0)
    assert np.diag(commutator)[-1] == pytest.approx(1 - fock_cfg.dim)


def test_overlap():
    assert overlap(fock_state(1, CFG), fock_state(2, CFG)) == pytest.approx(0.0)
    assert overlap(coherent_state(1j, CFG), coherent_state(1j, CFG)) == pytest.approx(1.0)
    with pytest.raises(DimensionMismatch):
        overlap(fock_state(0, CFG), fock_state(0, FockBasisConfig(10)))


def test_auto_fock_dim():
    assert auto_fock_dim(0.0) == 32
    assert auto_fock_dim(-14.0) == 324


def test_momentum_wavefunction_of_coherent_state():
    grid = np.linspace(-6, 6, 1201)
    psi = momentum_wavefunction(coherent_state(1.5j, CFG), grid)
    density = np.abs(psi) ** 2
    assert np.trapezoid(density, grid) == pytest.approx(1.0, abs=1e-6)
    assert np.trapezoid(grid * density, grid) == pytest.approx(1.5, abs=1e-4)
