"""Non-Abelian composite pulses: GCR, BB1, BB1(GCR) and GCR-BB1.

Every rotation here is conditioned on an oscillator quadrature v, i.e. it is a
conditional displacement exp(i c v sigma_n). On a Gaussian of width delta the
angle picks up an operator-valued error; the GCR correction exp(i c delta^2 v_perp sigma_gamma)
removes it to first order.
"""
from __future__ import annotations
import cmath
import math
import logging
from dataclasses import dataclass, field, fields
from typing import Callable, Literal, NamedTuple

import numpy as np
from scipy import optimize

from .definitions import QubitLevel, DimensionMismatch
from .hilbert import (
    FockBasisConfig, HybridState, KET_G, KET_E, bloch_vector_of, gaussian_state, qubit_rotation_matrix, squeezed_vacuum,
)
from .instructions import ConditionalDisplacement, PulseSequence, QubitRotation, apply, classical_qubit_unitary

_logger = logging.getLogger(__name__)

type BlochVector = np.ndarray

QuadratureChoice = Literal['x', 'p', 'auto']


def chi(theta: float, delta: float, alpha_mag: float) -> float:
    """Dimensionless error parameter theta delta / (2 |alpha|)."""
    return abs(theta) * delta / (2 * alpha_mag)


def level_ket(level: QubitLevel | int) -> np.ndarray:
    return KET_G if int(level) == QubitLevel.g else KET_E


def _equatorial(phi: float) -> BlochVector:
    return np.array([math.cos(phi), math.sin(phi), 0.0])


def _axis_angles(axis: BlochVector) -> tuple[float, float]:
    x, y, z = np.asarray(axis, dtype=float) / np.linalg.norm(axis)
    return math.atan2(y, x), math.acos(max(-1.0, min(1.0, z)))


def quadrature_rotation(coefficient: float, axis: BlochVector, quadrature_angle: float = 0.0,
                        mode: int = 0, qubit: int = 0) -> ConditionalDisplacement:
    """exp(i c v sigma_axis) with v = cos(angle) x + sin(angle) p."""
    azimuth, polar = _axis_angles(axis)
    beta = 0.5j * coefficient * cmath.exp(1j * quadrature_angle)
    return ConditionalDisplacement(beta, azimuth, mode, qubit, polar)


def gcr_gadget(coefficient: float, delta: float, axis: BlochVector, reference: BlochVector,
               quadrature_angle: float = 0.0, correction_first: bool = True,
               mode: int = 0, qubit: int = 0) -> PulseSequence:
    """Conditional rotation exp(i c v sigma_n) with its Gaussian correction.

    The correction is exp(i c delta^2 v_perp sigma_gamma) with gamma = m x n, m being the
    Bloch vector of the reference qubit state: the input state of an entangling gadget
    (correction_first) or the output state of an unentangling one. This solves
    sigma_gamma|m> = i sigma_n|m> on the part of sigma_n|m> orthogonal to |m>.

    :param delta: Gaussian width along v
    """
    n = np.asarray(axis, dtype=float)
    n = n / np.linalg.norm(n)
    main = quadrature_rotation(coefficient, n, quadrature_angle, mode, qubit)
    gamma = np.cross(np.asarray(reference, dtype=float), n)
    weight = float(np.linalg.norm(gamma))
    if weight < 1e-12 or coefficient == 0:
        return PulseSequence((main,))
    correction = quadrature_rotation(coefficient * delta ** 2 * weight, gamma / weight,
                                     quadrature_angle + math.pi / 2, mode, qubit)
    return PulseSequence((correction, main) if correction_first else (main, correction))


@dataclass(frozen=True)
class GcrSpec:
    theta: float
    alpha_mag: float
    delta: float
    phi: float = 0.0 # equatorial rotation axis
    initial: QubitLevel = QubitLevel.g # qubit state the sequence is corrected for
    quadrature: QuadratureChoice = 'auto' # 'auto' conditions on p when delta > 1
    lam: float = field(init=False) # pre-correction amplitude theta delta^2 / |alpha|
    chi: float = field(init=False)

    def __post_init__(self):
        if not self.theta > 0:
            raise ValueError(f"Invalid GCR angle: {self.theta}")
        if not self.alpha_mag > 0:
            raise ValueError(f"Invalid GCR amplitude: {self.alpha_mag}")
        if not self.delta > 0:
            raise ValueError(f"Invalid GCR width: {self.delta}")
        if self.quadrature not in ('x', 'p', 'auto'):
            raise ValueError(f"Invalid quadrature: {self.quadrature}")
        object.__setattr__(self, 'initial', QubitLevel(int(self.initial)))
        object.__setattr__(self, 'lam', self.theta * self.delta ** 2 / self.alpha_mag)
        object.__setattr__(self, 'chi', chi(self.theta, self.delta, self.alpha_mag))

    def conditioned_quadrature(self) -> tuple[float, float]:
        """(quadrature angle, Gaussian width along it)."""
        use_p = self.quadrature == 'p' or (self.quadrature == 'auto' and self.delta > 1)
        if use_p:
            return math.pi / 2, 1 / self.delta
        return 0.0, self.delta


@dataclass(frozen=True)
class Bb1Spec:
    theta: float
    alpha_mag: float
    phi: float = 0.0
    phi1: float = field(init=False)

    def __post_init__(self):
        if abs(self.theta) > 4 * math.pi:
            raise ValueError(f"Invalid BB1 angle: {self.theta}, |theta| must not exceed 4 pi")
        if not self.alpha_mag > 0:
            raise ValueError(f"Invalid BB1 amplitude: {self.alpha_mag}")
        object.__setattr__(self, 'phi1', math.acos(-self.theta / (4 * math.pi)))


@dataclass(frozen=True)
class PulseMetrics:
    p_e: float
    f_hybrid: float
    f_postselected: float

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if not 0 <= v <= 1:
                raise ValueError(f"Invalid metric: {f.name}={v}")

    @property
    def infidelity_hybrid(self) -> float:
        return 1 - self.f_hybrid

    @property
    def infidelity_postselected(self) -> float:
        return 1 - self.f_postselected


def build_gcr(spec: GcrSpec, mode: int = 0, qubit: int = 0) -> PulseSequence:
    """Pre-correction exp(i theta delta^2/(2|alpha|) v_perp sigma_gamma), then exp(i theta/(2|alpha|) v sigma_phi)."""
    angle, width = spec.conditioned_quadrature()
    if angle:
        _logger.debug(f"GCR with delta={spec.delta} > 1 conditions on the momentum quadrature")
    reference = bloch_vector_of(level_ket(spec.initial))
    return gcr_gadget(spec.theta / (2 * spec.alpha_mag), width, _equatorial(spec.phi), reference,
                      angle, True, mode, qubit)


def _bb1_rotations(theta: float, phi: float, reversed_order: bool) -> list[tuple[float, float]]:
    # (rotation angle, equatorial axis) in application order
    phi1 = math.acos(-theta / (4 * math.pi))
    correction = [(math.pi, phi + phi1), (2 * math.pi, phi + 3 * phi1), (math.pi, phi + phi1)]
    if reversed_order:
        return correction + [(theta, phi)]
    return [(theta, phi)] + correction


def build_bb1(spec: Bb1Spec, reversed_order: bool = False, quadrature_angle: float = 0.0,
              mode: int = 0, qubit: int = 0) -> PulseSequence:
    """Four conditional momentum boosts realizing R_phi1(pi) R_3phi1(2pi) R_phi1(pi) R_0(theta x/|alpha|)."""
    return PulseSequence(tuple(
        quadrature_rotation(-angle / (2 * spec.alpha_mag), _equatorial(axis), quadrature_angle, mode, qubit)
        for angle, axis in _bb1_rotations(spec.theta, spec.phi, reversed_order)
    ))


def build_bb1_of_gcr(theta: float, alpha_mag: float, delta: float, phi: float = 0.0,
                     reversed_order: bool = True, initial: QubitLevel = QubitLevel.g,
                     quadrature_angle: float = 0.0, mode: int = 0, qubit: int = 0) -> PulseSequence:
    """BB1 with every rotation replaced by a GCR gadget.

    The correction axis of each gadget follows the ideal intermediate qubit state,
    obtained by propagating the error-free rotations from `initial` at x = +|alpha|.
    """
    Bb1Spec(theta, alpha_mag, phi)  # validates theta
    ket = level_ket(initial)
    seq = PulseSequence()
    for angle, axis in _bb1_rotations(theta, phi, reversed_order):
        seq = seq + gcr_gadget(-angle / (2 * alpha_mag), delta, _equatorial(axis), bloch_vector_of(ket),
                               quadrature_angle, True, mode, qubit)
        ket = qubit_rotation_matrix(axis, angle) @ ket
    return seq


def gcr_bb1_precorrection(amplitude: float, phi: float = 0.0, quadrature_angle: float = 0.0,
                          mode: int = 0, qubit: int = 0) -> ConditionalDisplacement:
    """exp(i amplitude v_perp sigma_{phi + pi/2}), v_perp = p for an x-conditioned BB1."""
    return quadrature_rotation(amplitude, _equatorial(phi + math.pi / 2), quadrature_angle + math.pi / 2, mode, qubit)


def optimize_gcr_bb1_amplitude(theta: float, alpha_mag: float, delta: float, phi: float = 0.0,
                               cfg: FockBasisConfig | None = None,
                               cost: Callable[[float], float] | None = None) -> float:
    """Bounded 1-D search of the single CD prepended to BB1.

    The default cost is P_e of the sequence on |g> (x) |alpha_delta>; a caller can supply
    its own cost as a function of the amplitude.
    """
    bb1 = build_bb1(Bb1Spec(theta, alpha_mag, phi))
    if cost is None:
        cfg = cfg or FockBasisConfig(32)

        def cost(amplitude: float) -> float:
            seq = PulseSequence((gcr_bb1_precorrection(amplitude, phi),)) + bb1
            return evaluate_rotation(seq, alpha_mag, delta, cfg).p_e

    bound = abs(theta) * delta ** 2 / alpha_mag
    res = optimize.minimize_scalar(cost, bounds=(-bound, bound), method='bounded',
                                   options={'xatol': bound * 1e-5})
    _logger.debug(f"GCR-BB1 pre-correction {res.x:.6g} (cost {res.fun:.3g})")
    return float(res.x)


def build_gcr_bb1(theta: float, alpha_mag: float, delta: float, phi: float = 0.0,
                  amplitude: float | None = None, cfg: FockBasisConfig | None = None) -> PulseSequence:
    if amplitude is None:
        amplitude = optimize_gcr_bb1_amplitude(theta, alpha_mag, delta, phi, cfg)
    return PulseSequence((gcr_bb1_precorrection(amplitude, phi),)) + build_bb1(Bb1Spec(theta, alpha_mag, phi))


def displaced_state_precorrection(alpha: complex, theta: float = math.pi / 2, delta: float = 1.0,
                                  phi: float = 0.0, qubit: int = 0) -> QubitRotation:
    """Qubit rotation prepended to GCR for a Gaussian centered at alpha = a + ib with b != 0.

    The pre-correction exp(i lam p sigma_{phi+pi/2}) turns the mean momentum b into a fixed
    rotation exp(i theta delta^2 b/(2|a|) sigma_{phi+pi/2}); this undoes it.
    """
    alpha = complex(alpha)
    if alpha.real == 0:
        raise ValueError("the Gaussian must be displaced along x, got Re(alpha) = 0")
    coefficient = theta * delta ** 2 * alpha.imag / (2 * abs(alpha.real))
    return QubitRotation(phi + math.pi / 2, 2 * coefficient, qubit)


def displaced_gaussian(center: complex, delta: float, cfg: FockBasisConfig, qubit_state: np.ndarray = KET_G,
                       co_moving: bool = True) -> tuple[HybridState, tuple[complex, ...]]:
    """|qubit> (x) D(center)|0_delta>, by default simulated in the frame co-moving with center.

    Returns the state and the frame displacements to pass to apply.
    """
    if co_moving:
        return HybridState.product([squeezed_vacuum(delta, cfg)], [qubit_state]), (complex(center),)
    return HybridState.product([gaussian_state(delta, center, cfg)], [qubit_state]), ()


def measure_metrics(seq: PulseSequence, input_state: HybridState, target_osc_state: np.ndarray,
                    target_qubit_state: np.ndarray, cfg: FockBasisConfig | None = None,
                    frames=()) -> PulseMetrics:
    """P_e, F_H and F_ps of a sequence.

    P_e is the probability of finding the qubit orthogonal to target_qubit_state,
    F_H = |<target_osc, target_qubit| U |input>|^2 and F_ps = F_H / (1 - P_e).

    :raises DimensionMismatch: if the targets do not match the input register
    """
    if input_state.num_qubits != 1 or input_state.num_modes != 1:
        raise DimensionMismatch("metrics are defined for one qubit and one oscillator")
    target_osc = np.asarray(target_osc_state, dtype=complex)
    target_q = np.asarray(target_qubit_state, dtype=complex)
    if target_osc.shape != (input_state.fock_dim,) or target_q.shape != (2,):
        raise DimensionMismatch(f"targets of shapes {target_osc.shape} and {target_q.shape} "
                                f"for Fock dimension {input_state.fock_dim}")
    cfg = cfg or FockBasisConfig(input_state.fock_dim)
    out = apply(input_state, seq, cfg, frames)
    branch = np.tensordot(target_q.conj() / np.linalg.norm(target_q), out.tensor(), axes=(0, 0))
    p_success = min(1.0, float(np.sum(np.abs(branch) ** 2)))
    f_h = min(1.0, abs(np.vdot(target_osc / np.linalg.norm(target_osc), branch)) ** 2)
    f_ps = min(1.0, f_h / p_success) if p_success > 0 else 0.0
    return PulseMetrics(max(0.0, 1 - p_success), f_h, f_ps)


def evaluate_rotation(seq: PulseSequence, alpha_mag: float, delta: float, cfg: FockBasisConfig,
                      initial: np.ndarray = KET_G, center: complex | None = None,
                      target_qubit: np.ndarray | None = None) -> PulseMetrics:
    """Metrics of a conditional rotation acting on initial (x) |center_delta>.

    The ideal qubit target defaults to the sequence's action at the classical point `center`
    (default +alpha_mag); the oscillator target is the unchanged Gaussian.
    """
    center = complex(alpha_mag) if center is None else complex(center)
    state, frames = displaced_gaussian(center, delta, cfg, initial)
    if target_qubit is None:
        target_qubit = classical_qubit_unitary(seq, center.real, center.imag) @ initial
    target_osc = np.tensordot(np.asarray(initial).conj(), state.tensor(), axes=(0, 0))
    return measure_metrics(seq, state, target_osc, target_qubit, cfg, frames)


class ErrorLaws(NamedTuple):
    p_e: float
    infidelity_hybrid: float
    infidelity_postselected: float


def gcr_error_laws(chi_value: float) -> ErrorLaws:
    """Closed-form GCR failure probability and infidelities to next-to-leading order in chi."""
    c = chi_value
    p_e = (5 * c ** 6 / 48 - 5 * c ** 8 / 96) / (1 - 29 * c ** 8 / 768)
    f_h = c ** 4 / 8 - c ** 6 / 48
    f_ps = (c ** 4 / 8 - c ** 6 / 8 + c ** 8 / 64) / (1 - 5 * c ** 6 / 48 + 11 * c ** 8 / 768)
    return ErrorLaws(p_e, f_h, f_ps)


def bb1_error_prefactor(theta: float) -> float:
    """Coefficient of chi^6 in the BB1 failure probability."""
    half = theta / 2
    z = complex(-math.pi ** 2 / (6 * half ** 2) + 1 / 24,
                math.pi / (4 * half) * math.sqrt(1 - half ** 2 / (4 * math.pi ** 2)))
    return abs(z) ** 2 * 15 / 64


def no_qsp_failure(chi_value: float) -> float:
    """P_e of a bare conditional rotation, chi^2 / 4."""
    return chi_value ** 2 / 4


def no_qsp_cat_fidelity(alpha_mag: float, delta: float = 1.0) -> float:
    return math.exp(-math.pi ** 2 * delta ** 2 / (64 * alpha_mag ** 2))


def fit_power_law(x, y) -> tuple[float, float]:
    """Least-squares fit of log y = slope log x + log prefactor: (slope, prefactor)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.size < 2:
        raise ValueError(f"need at least two matching points, got {x.shape} and {y.shape}")
    if np.any(x <= 0) or np.any(y <= 0):
        raise ValueError("power-law fit needs positive data")
    slope, intercept = np.polyfit(np.log(x), np.log(y), 1)
    return float(slope), float(math.exp(intercept))
