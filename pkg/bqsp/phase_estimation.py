"""Oscillator-assisted phase estimation.

The hidden phase theta of U = exp(i theta sigma_y) is written on the oscillator momentum by the
controlled unitary C_xU = e^{i alpha x sigma_z} S^dag U S e^{-i alpha x sigma_z} S U S^dag, built from
conditional momentum boosts and qubit gates. Couplings and reported momenta use standard units,
x_std = sqrt(2) x, where vacuum has variance 1/2.
"""
from __future__ import annotations
import math
import logging
from dataclasses import dataclass

import numpy as np

from .hilbert import (
    FockBasisConfig, HybridState, SIGMA_X, SIGMA_Y, SIGMA_Z, expectation, momentum_operator, momentum_wavefunction,
    squeezed_vacuum,
)
from .instructions import PulseSequence, QubitRotation, RotationZ, apply, classical_qubit_unitary, x_rotation

_logger = logging.getLogger(__name__)

STANDARD_UNITS = math.sqrt(2)

# sigma_y eigenstate with eigenvalue -1; it turns the sigma_y generator into a +alpha sin(2 theta) kick
KET_MINUS_Y = np.array([1, -1j], dtype=complex) / math.sqrt(2)


@dataclass(frozen=True)
class PhaseEstSpec:
    theta: float # hidden phase of U = exp(i theta sigma_phi)
    alpha: float = 1.0 # coupling of e^{i alpha x_std sigma_z}
    squeeze_r: float = 0.0 # momentum squeezing of the probe
    shots: int = 0 # 0 for exact moments, otherwise sampled homodyne
    axis_phi: float = math.pi / 2 # equatorial axis of U, sigma_y by default

    def __post_init__(self):
        if self.squeeze_r < 0:
            raise ValueError(f"Invalid squeezing parameter: {self.squeeze_r}")
        if self.shots < 0:
            raise ValueError(f"Invalid number of shots: {self.shots}")

    def unitary_gate(self, qubit: int = 0) -> QubitRotation:
        return QubitRotation(self.axis_phi, -2 * self.theta, qubit)


def build_cxu(spec: PhaseEstSpec, mode: int = 0, qubit: int = 0) -> PulseSequence:
    """C_xU in application order; S = diag(1, i) is realized as R_z(pi/2) up to a global phase."""
    coupling = STANDARD_UNITS * spec.alpha
    s, s_dag = RotationZ(math.pi / 2, qubit), RotationZ(-math.pi / 2, qubit)
    u = spec.unitary_gate(qubit)
    return PulseSequence((
        s_dag, u, s,
        x_rotation(-coupling, 0.0, polar=0.0, mode=mode, qubit=qubit),
        s, u, s_dag,
        x_rotation(coupling, 0.0, polar=0.0, mode=mode, qubit=qubit),
    ))


@dataclass(frozen=True)
class QuaternionRotation:
    """C_xU = cos g + i sin g (n . sigma) evaluated pointwise on a position grid."""
    x: np.ndarray
    angle: np.ndarray
    axis: np.ndarray # shape (3, len(x))

    def axis_norm(self) -> np.ndarray:
        return np.linalg.norm(self.axis, axis=0)

    def matrices(self) -> np.ndarray:
        """The 2x2 unitaries, shape (len(x), 2, 2)."""
        paulis = np.stack([SIGMA_X, SIGMA_Y, SIGMA_Z])
        generator = np.einsum('kn,kij->nij', self.axis, paulis)
        return (np.cos(self.angle)[:, None, None] * np.eye(2)
                + 1j * np.sin(self.angle)[:, None, None] * generator)

    @staticmethod
    def from_unitaries(x: np.ndarray, unitaries: np.ndarray) -> QuaternionRotation:
        cos_g = np.clip(np.einsum('nii->n', unitaries).real / 2, -1, 1)
        g = np.arccos(cos_g)
        sin_g = np.sin(g)
        n = np.zeros((3, len(x)))
        for k, sigma in enumerate((SIGMA_X, SIGMA_Y, SIGMA_Z)):
            projection = np.einsum('nij,ji->n', unitaries, sigma) / 2j
            safe = np.abs(sin_g) > 1e-12
            n[k, safe] = projection[safe].real / sin_g[safe]
        return QuaternionRotation(np.asarray(x, dtype=float), g, n)


def phase_estimation_quaternion(x: np.ndarray, spec: PhaseEstSpec) -> QuaternionRotation:
    """Angle and axis of C_xU at each position x (Wigner units)."""
    seq = build_cxu(spec)
    x = np.atleast_1d(np.asarray(x, dtype=float))
    unitaries = np.stack([classical_qubit_unitary(seq, float(v)) for v in x])
    return QuaternionRotation.from_unitaries(x, unitaries)


def quaternion_cos_angle(x: np.ndarray, spec: PhaseEstSpec) -> np.ndarray:
    """cos g = 1 - 2 sin^2(alpha x_std) sin^2(theta)."""
    a = spec.alpha * STANDARD_UNITS * np.asarray(x, dtype=float)
    return 1 - 2 * np.sin(a) ** 2 * math.sin(spec.theta) ** 2


def expected_momentum_moments(spec: PhaseEstSpec) -> tuple[float, float]:
    """Exact (mean, std) of p_std after C_xU on a momentum-squeezed probe.

    mean = alpha sin 2theta [1 - cos 2theta (1 - <cos 2 alpha x_std>)]; it reduces to alpha sin 2theta
    at theta = pi/4 for any probe, and for alpha x_std << 1 otherwise.
    """
    alpha, theta, r = spec.alpha, spec.theta, spec.squeeze_r
    mean_cos = math.exp(-alpha ** 2 * math.exp(2 * r))
    mean = alpha * math.sin(2 * theta) * (1 - math.cos(2 * theta) * (1 - mean_cos))
    variance = math.exp(-2 * r) / 2 + 4 * alpha ** 2 * math.sin(theta) ** 2 - mean ** 2
    return mean, math.sqrt(max(0.0, variance))


def probe_fock_dim(squeeze_r: float) -> int:
    # tanh(r)^n tail of the squeezed vacuum
    return max(64, int(math.ceil(60 + 100 * squeeze_r)))


@dataclass(frozen=True)
class PhaseEstResult:
    theta: float
    r: float
    mean_p: float
    std_p: float
    shots: int


def run_phase_estimation(spec: PhaseEstSpec, cfg: FockBasisConfig | None = None,
                         rng: np.random.Generator | None = None) -> PhaseEstResult:
    """Applies C_xU to (momentum-squeezed vacuum) x |-y> and reads the momentum.

    With spec.shots > 0 the moments are estimated from homodyne samples drawn from the
    exact momentum distribution.
    """
    cfg = cfg or FockBasisConfig(probe_fock_dim(spec.squeeze_r), leakage_tol=1e-6, strict=False)
    probe = squeezed_vacuum(math.exp(spec.squeeze_r), cfg)
    state = apply(HybridState.product([probe], [KET_MINUS_Y]), build_cxu(spec), cfg)

    if spec.shots == 0:
        p = momentum_operator(cfg)
        mean = expectation(state, p).real
        second = expectation(state, p @ p).real
        mean_p, std_p = STANDARD_UNITS * mean, STANDARD_UNITS * math.sqrt(max(0.0, second - mean ** 2))
    else:
        rng = rng if rng is not None else np.random.default_rng()
        samples = sample_momentum(state, spec.shots, rng)
        mean_p = STANDARD_UNITS * float(samples.mean())
        std_p = STANDARD_UNITS * float(samples.std(ddof=1)) if spec.shots > 1 else 0.0
    _logger.debug(f"phase estimation theta={spec.theta:.4f} r={spec.squeeze_r}: <p>={mean_p:.5f} std={std_p:.5f}")
    return PhaseEstResult(spec.theta, spec.squeeze_r, mean_p, std_p, spec.shots)


def sample_momentum(state: HybridState, shots: int, rng: np.random.Generator, points: int = 4001) -> np.ndarray:
    """Homodyne outcomes (Wigner units) drawn from the momentum distribution, traced over the ancilla."""
    reach = math.sqrt(2 * state.fock_dim) + 2
    grid = np.linspace(-reach, reach, points)
    density = np.sum(np.abs(momentum_wavefunction(state, grid)) ** 2, axis=0)
    weights = density / density.sum()
    step = grid[1] - grid[0]
    return rng.choice(grid, size=shots, p=weights) + rng.uniform(-step / 2, step / 2, size=shots)
