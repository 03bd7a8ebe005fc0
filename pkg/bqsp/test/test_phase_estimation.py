import math
import pytest
import numpy as np

from ..instructions import classical_qubit_unitary
from ..phase_estimation import (
    PhaseEstSpec, build_cxu, expected_momentum_moments, phase_estimation_quaternion, probe_fock_dim,
    quaternion_cos_angle, run_phase_estimation,
)


def test_spec_validation():
    with pytest.raises(ValueError):
        PhaseEstSpec(0.1, squeeze_r=-1.0)
    with pytest.raises(ValueError):
        PhaseEstSpec(0.1, shots=-5)


def test_cxu_layout():
    assert len(build_cxu(PhaseEstSpec(math.pi / 4))) == 8


def test_probe_truncation_grows_with_squeezing():
    assert probe_fock_dim(0.0) == 64
    assert probe_fock_dim(1.0) == 160


def test_quaternion_angle_matches_closed_form():
    spec = PhaseEstSpec(math.pi / 5, alpha=0.7)
    x = np.linspace(-2, 2, 41)
    q = phase_estimation_quaternion(x, spec)
    assert np.allclose(np.cos(q.angle), quaternion_cos_angle(x, spec), atol=1e-10)
    # off the identity the rotation axis is a unit vector
    moving = np.abs(np.sin(q.angle)) > 1e-6
    assert np.allclose(q.axis_norm()[moving], 1.0, atol=1e-8)
    assert np.allclose(q.matrices()[moving], _unitaries(x[moving], spec), atol=1e-8)


def _unitaries(x: np.ndarray, spec: PhaseEstSpec) -> np.ndarray:
    return np.stack([classical_qubit_unitary(build_cxu(spec), float(v)) for v in x])


def test_identity_unitary_leaves_vacuum_momentum():
    res = run_phase_estimation(PhaseEstSpec(0.0))
    assert res.mean_p == pytest.approx(0.0, abs=1e-8)
    assert res.std_p == pytest.approx(1 / math.sqrt(2), rel=1e-6)


@pytest.mark.parametrize('theta', [math.pi / 8, math.pi / 4, 3 * math.pi / 8])
def test_weak_coupling_mean(theta):
    res = run_phase_estimation(PhaseEstSpec(theta, alpha=0.1))
    assert res.mean_p == pytest.approx(0.1 * math.sin(2 * theta), rel=0.02)


def test_moments_match_closed_form():
    spec = PhaseEstSpec(math.pi / 8, alpha=0.5, squeeze_r=0.5)
    res = run_phase_estimation(spec)
    mean, std = expected_momentum_moments(spec)
    assert res.mean_p == pytest.approx(mean, rel=1e-2)
    assert res.std_p == pytest.approx(std, rel=1e-2)


def test_sampled_homodyne(rng):
    spec = PhaseEstSpec(math.pi / 4, alpha=1.0, shots=20000)
    res = run_phase_estimation(spec, rng=rng)
    mean, std = expected_momentum_moments(spec)
    assert res.shots == 20000
    assert res.mean_p == pytest.approx(mean, abs=0.05)
    assert res.std_p == pytest.approx(std, rel=0.05)
