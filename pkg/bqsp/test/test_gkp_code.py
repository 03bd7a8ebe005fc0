import math
import pytest
import numpy as np

from .. import SQUARE_GKP_SPACING, QubitLevel
from ..hilbert import FockBasisConfig, HybridState, KET_G, fidelity, gaussian_state
from ..instructions import apply
from ..gkp_code import (
    GkpCode, entangling_gadget, quadrature_geometry, readout_quadrature, sbs_pauli, sbs_sequence, track_pauli,
)
from ..gkp import (
    ReadoutScheme, readout, readout_sequence, readout_sweep, sbs_backaction, sbs_outcome_probabilities, sbs_round,
    voronoi_half_width,
)

CFG = FockBasisConfig(100, leakage_tol=1e-6, strict=False)


@pytest.fixture(scope='module')
def code() -> GkpCode:
    return GkpCode(0.34, cfg=CFG)


def test_code_validation():
    with pytest.raises(ValueError):
        GkpCode(1.0)
    with pytest.raises(ValueError):
        GkpCode(0.3, lattice_spacing=0.0)
    with pytest.raises(ValueError):
        quadrature_geometry('y')


def test_codewords(code: GkpCode):
    for label in ('0', '1', '+', '-', '+i', '-i'):
        assert np.linalg.norm(code.codeword(label)) == pytest.approx(1.0)
    assert np.allclose(code.encode(1, 0), code.codeword('0'))
    assert code.helstrom_error() < 1e-3
    with pytest.raises(ValueError):
        code.codeword('2')


def test_logical_eigenstates_pairs(code: GkpCode):
    g, e = code.logical_eigenstates('Y')
    assert np.allclose(g, code.codeword('-i'))
    assert np.allclose(e, code.codeword('+i'))
    assert readout_quadrature('X') == 'p'


def test_codeword_is_stabilized(code: GkpCode):
    s_x, s_p = code.stabilizer_expectations(code.codeword('0'))
    assert s_x > 0.9
    assert s_p > 0.9


def test_binomial_target_with_one_peak_is_squeezed_vacuum(code: GkpCode):
    assert fidelity(code.binomial_target(0), gaussian_state(0.34, 0, CFG)) == pytest.approx(1.0)


def test_mean_photon_number(code: GkpCode):
    assert 2.0 < code.mean_photon_number() < 6.0


def test_sbs_layout(code: GkpCode):
    assert len(entangling_gadget(code)) == 2
    assert len(sbs_sequence(code, 'p')) == 4


def test_track_pauli():
    assert track_pauli((1, 0), 'X') == (0, 1)
    assert track_pauli((0.6, 0.8), 'Z') == (0.6, -0.8)
    assert track_pauli((1, 0), 'Y') == (0, 1j)
    assert [sbs_pauli(q) for q in ('x', 'p', 'x+p')] == ['Z', 'X', 'Y']
    with pytest.raises(ValueError):
        sbs_pauli('q')
    with pytest.raises(ValueError):
        track_pauli((1, 0), 'W')


def test_binomial_logical(code: GkpCode):
    assert np.allclose(code.binomial_logical(3, (0, 1)), code.binomial_target(3))
    assert np.allclose(code.binomial_logical(2, (1, 0)), code.binomial_target(2))
    assert abs(np.vdot(code.binomial_logical(3, (1, 0)), code.binomial_target(3))) ** 2 < 1e-3


FRAMES = {'0': (1, 0), '1': (0, 1), '+': (1, 1)}


@pytest.mark.parametrize('label, quadrature', [('0', 'x'), ('1', 'x'), ('+', 'p'), ('+', 'x')])
def test_sbs_round_applies_the_tracked_pauli(code: GkpCode, label, quadrature):
    state = HybridState.product([code.codeword(label)], [KET_G])
    post, probs = sbs_round(state, code, quadrature, forced='g')
    assert probs['g'] > 0.999
    assert probs['g'] + probs['e'] == pytest.approx(1.0)
    assert post.qubit_probability(QubitLevel.g) == pytest.approx(1.0)
    target = code.encode(*track_pauli(FRAMES[label], sbs_pauli(quadrature)))
    assert abs(np.vdot(target, post.branch(QubitLevel.g))) ** 2 > 0.999


def test_sbs_outcome_probabilities(code: GkpCode):
    p_g, p_e = sbs_outcome_probabilities(code.codeword('0'), 0.0, code.delta)
    assert p_e == pytest.approx(0.0)
    p_g, p_e = sbs_outcome_probabilities(code.codeword('0'), 0.2, code.delta)
    assert 0 < p_e < math.sin(0.1 * SQUARE_GKP_SPACING) ** 2 + 1e-12
    assert p_g + p_e == pytest.approx(1.0)


def test_sbs_backaction_needs_displacement(code: GkpCode):
    with pytest.raises(ValueError):
        sbs_backaction(code, 0.0)


def test_readout_scheme_validation():
    with pytest.raises(ValueError):
        ReadoutScheme('heterodyne')
    with pytest.raises(ValueError):
        ReadoutScheme('bb1', basis='W')
    assert ReadoutScheme('bb1', basis='X').quadrature == 'p'


def test_readout_sequence_layouts():
    assert len(readout_sequence(ReadoutScheme('infinite_energy'), CFG)) == 3
    assert len(readout_sequence(ReadoutScheme('bb1'), CFG)) == 4
    assert len(readout_sequence(ReadoutScheme('gcr_bb1', precorrection=0.01), CFG)) == 5
    assert len(readout_sequence(ReadoutScheme('bb1_of_gcr'), CFG)) == 8


def test_finite_energy_readout_of_both_codewords(code: GkpCode):
    scheme = ReadoutScheme('gcr_finite')
    zero, one = code.logical_eigenstates('Z')
    assert readout(zero, scheme, CFG, QubitLevel.g).error < 0.05
    assert readout(one, scheme, CFG, QubitLevel.e).error < 0.05


def test_voronoi_half_width():
    assert voronoi_half_width() == pytest.approx(math.sqrt(2 * math.pi) / 4)


def test_readout_sweep():
    points = readout_sweep(ReadoutScheme('gcr_finite'), [0.0, 0.2], CFG)
    assert [p.epsilon for p in points] == [0.0, 0.2]
    assert points[0].error < 0.05
    assert all(0 <= p.error <= 1 for p in points)


@pytest.mark.parametrize('variant, basis', [
    ('infinite_energy', 'Z'), ('gcr_finite', 'Z'), ('bb1', 'Z'), ('gcr_bb1', 'Z'), ('bb1_of_gcr', 'Z'),
    ('gcr_finite', 'X'),
])
def test_readout_error_is_even_in_the_displacement(variant, basis):
    scheme = ReadoutScheme(variant, basis, precorrection=0.01 if variant == 'gcr_bb1' else None)
    right, left = readout_sweep(scheme, [0.2, -0.2], CFG)
    assert right.error == pytest.approx(left.error, abs=1e-6)
