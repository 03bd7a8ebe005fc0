"""GKP control: stabilization, logical readout and error-corrected gate teleportation."""
from __future__ import annotations
import cmath
import math
import logging
from dataclasses import dataclass
from typing import Literal, Sequence

import numpy as np

from .definitions import (
    LogicalBasis, NoiseMethod, Quadrature, QubitLevel, ReadoutVariant, TeleportMode, BASIS_QUADRATURE,
    SQUARE_GKP_SPACING,
)
from .hilbert import (
    FockBasisConfig, HybridState, KET_G, ladder_operators, displacement_operator,
    momentum_operator, momentum_wavefunction, position_operator, squeezed_vacuum,
)
from .instructions import (
    ConditionalDisplacement, ControlledPhase, DurationModel, PulseSequence, QubitRotation, RotationZ,
    UnconditionalDisplacement, apply,
)
from .composite_pulses import (
    Bb1Spec, build_bb1, build_bb1_of_gcr, gcr_bb1_precorrection, optimize_gcr_bb1_amplitude, quadrature_rotation,
)
from .gkp_code import (
    Z_AXIS, GkpCode, entangling_gadget, quadrature_geometry, sbs_pauli, sbs_sequence, track_pauli, unentangling_gadget,
)
from .noise import NoiseModel, NoisySimulator, postselect
from .state_prep import GkpPrepPlan, gkp_stage, position_squeezing_sequence, prepare_gkp

_logger = logging.getLogger(__name__)


def _level(value: QubitLevel | int | str) -> QubitLevel:
    if isinstance(value, str):
        return QubitLevel[value]
    return QubitLevel(int(value))


def _reset(state: HybridState, level: QubitLevel, qubit: int, cfg: FockBasisConfig) -> tuple[HybridState, float]:
    # projects the ancilla on `level` and brings it back to g
    post, prob = postselect(state, qubit, level)
    if level == QubitLevel.e:
        post = apply(post, QubitRotation(0.0, math.pi, qubit), cfg)
    return post, prob


def _dominant(state: HybridState, qubit: int) -> QubitLevel:
    return QubitLevel.g if state.qubit_probability(QubitLevel.g, qubit) >= 0.5 else QubitLevel.e


# Stabilization

def sbs_round(state: HybridState, code: GkpCode, quadrature: Quadrature = 'x', cfg: FockBasisConfig | None = None,
              rng: np.random.Generator | None = None, forced: QubitLevel | str | None = None,
              mode: int = 0, qubit: int = 0) -> tuple[HybridState, dict[str, float]]:
    """One SBS round followed by an ancilla reset.

    The outcome is `forced` if given, sampled from rng otherwise, and post-selected on g
    when neither is provided. Returns the reset state and the outcome distribution.
    """
    cfg = cfg or code.cfg
    out = apply(state, sbs_sequence(code, quadrature, mode, qubit), cfg)
    p_g = out.qubit_probability(QubitLevel.g, qubit)
    probs = {'g': p_g, 'e': max(0.0, 1 - p_g)}
    if forced is not None:
        level = _level(forced)
    elif rng is not None:
        level = QubitLevel.g if rng.random() < p_g else QubitLevel.e
    else:
        level = QubitLevel.g
    post, _ = _reset(out, level, qubit, cfg)
    return post, probs


def sbs_outcome_probabilities(oscillator: np.ndarray, epsilon: float, delta: float,
                              lattice_spacing: float = SQUARE_GKP_SPACING) -> tuple[float, float]:
    """(P_g, P_e) of an SBS round on a codeword displaced by epsilon along the stabilized quadrature.

    P_e = int dp sin^2(epsilon l/2) cos^2(4 lam p) |psi(p)|^2 with lam = l delta^2 / 4.
    """
    lam = lattice_spacing * delta ** 2 / 4
    s = math.sin(epsilon * lattice_spacing / 2) ** 2
    reach = 4 / delta + 2
    grid = np.linspace(-reach, reach, 4001)
    density = np.abs(momentum_wavefunction(np.asarray(oscillator, dtype=complex), grid)) ** 2
    density = density / np.trapezoid(density, grid)
    p_e = float(np.trapezoid(s * np.cos(4 * lam * grid) ** 2 * density, grid))
    return 1 - p_e, p_e


@dataclass(frozen=True)
class SbsBackAction:
    epsilon: float
    p_g: float
    p_e: float
    shift_g: float # change of <x> on the g branch
    momentum_std_ratio_e: float # std(p) on the e branch over the input std(p)

    @property
    def shift_slope(self) -> float:
        return self.shift_g / self.epsilon


def sbs_backaction(code: GkpCode, epsilon: float, cfg: FockBasisConfig | None = None) -> SbsBackAction:
    """Applies SBS_x to |0> displaced by epsilon and measures the back action on each outcome branch."""
    if epsilon == 0:
        raise ValueError("the back action is measured for a non zero displacement")
    cfg = cfg or code.cfg
    x = position_operator(cfg)
    p = momentum_operator(cfg)
    displaced = displacement_operator(epsilon, cfg) @ code.codeword('0')
    out = apply(HybridState.product([displaced], [KET_G]), sbs_sequence(code, 'x'), cfg)

    def std_p(v: np.ndarray) -> float:
        mean = np.vdot(v, p @ v).real
        return math.sqrt(max(0.0, np.vdot(v, p @ (p @ v)).real - mean ** 2))

    branches = {}
    for level in QubitLevel:
        b = out.branch(level)
        branches[level] = b / np.linalg.norm(b)
    p_g = out.qubit_probability(QubitLevel.g)
    shift = np.vdot(branches[QubitLevel.g], x @ branches[QubitLevel.g]).real - np.vdot(displaced, x @ displaced).real
    result = SbsBackAction(epsilon, p_g, 1 - p_g, float(shift), std_p(branches[QubitLevel.e]) / std_p(displaced))
    _logger.debug(f"SBS back action eps={epsilon}: shift {result.shift_g:.4g}, P_e {result.p_e:.3g}, "
                  f"momentum std ratio {result.momentum_std_ratio_e:.3f}")
    return result


# Logical readout

@dataclass(frozen=True)
class ReadoutScheme:
    variant: ReadoutVariant
    basis: LogicalBasis = 'Z'
    delta: float = 0.34
    lattice_spacing: float = SQUARE_GKP_SPACING
    precorrection: float | None = None # gcr_bb1 amplitude, optimized on first use when None

    def __post_init__(self):
        if self.variant not in ('infinite_energy', 'gcr_finite', 'bb1', 'gcr_bb1', 'bb1_of_gcr'):
            raise ValueError(f"Invalid readout variant: {self.variant}")
        if self.basis not in BASIS_QUADRATURE:
            raise ValueError(f"Invalid logical basis: {self.basis}")

    @property
    def quadrature(self) -> Quadrature:
        return BASIS_QUADRATURE[self.basis]

    def code(self, cfg: FockBasisConfig) -> GkpCode:
        return GkpCode(self.delta, self.lattice_spacing, cfg)


@dataclass(frozen=True)
class ReadoutResult:
    p_correct: float
    post_state: np.ndarray
    back_action_fidelity: float

    @property
    def error(self) -> float:
        return 1 - self.p_correct


def _bb1_amplitude(scheme: ReadoutScheme) -> float:
    _, scale = quadrature_geometry(scheme.quadrature)
    return math.pi / (scale * scheme.lattice_spacing)


def readout_sequence(scheme: ReadoutScheme, cfg: FockBasisConfig) -> PulseSequence:
    angle, scale = quadrature_geometry(scheme.quadrature)
    c = scale * scheme.lattice_spacing / 2
    if scheme.variant == 'infinite_energy':
        return PulseSequence((QubitRotation(math.pi / 2, math.pi / 2),
                              quadrature_rotation(c, Z_AXIS, angle),
                              QubitRotation(math.pi / 2, -math.pi / 2)))
    if scheme.variant == 'gcr_finite':
        return entangling_gadget(scheme.code(cfg), scheme.quadrature)
    amplitude = _bb1_amplitude(scheme)
    bb1 = build_bb1(Bb1Spec(math.pi, amplitude), quadrature_angle=angle)
    if scheme.variant == 'bb1':
        return bb1
    if scheme.variant == 'gcr_bb1':
        pre = scheme.precorrection
        if pre is None:
            pre = optimize_gcr_bb1_readout(scheme, cfg)
        return PulseSequence((gcr_bb1_precorrection(pre, 0.0, angle),)) + bb1
    return build_bb1_of_gcr(math.pi, amplitude, scheme.delta, reversed_order=True, quadrature_angle=angle)


def _mean_field(v: np.ndarray, cfg: FockBasisConfig) -> complex:
    a, _ = ladder_operators(cfg)
    return complex(np.vdot(v, a @ v))


def readout(oscillator: np.ndarray, scheme: ReadoutScheme, cfg: FockBasisConfig,
            expected: QubitLevel = QubitLevel.g, reference: np.ndarray | None = None,
            seq: PulseSequence | None = None) -> ReadoutResult:
    """Maps the logical state on the ancilla and scores the expected outcome.

    The back-action fidelity compares the post-measurement oscillator with `reference`
    (the input by default) once the mean displacement between them has been undone.
    """
    seq = seq or readout_sequence(scheme, cfg)
    oscillator = np.asarray(oscillator, dtype=complex)
    out = apply(HybridState.product([oscillator], [KET_G]), seq, cfg)
    p_correct = out.qubit_probability(expected)
    branch = out.branch(expected)
    post = branch / np.linalg.norm(branch)
    reference = oscillator if reference is None else np.asarray(reference, dtype=complex)
    d = _mean_field(post, cfg) - _mean_field(reference, cfg)
    undone = displacement_operator(-d, cfg) @ post
    return ReadoutResult(p_correct, post, abs(np.vdot(reference, undone)) ** 2)


def optimize_gcr_bb1_readout(scheme: ReadoutScheme, cfg: FockBasisConfig) -> float:
    """Pre-correction amplitude of the gcr_bb1 scheme minimizing the readout error at epsilon = 0."""
    angle, _ = quadrature_geometry(scheme.quadrature)
    amplitude = _bb1_amplitude(scheme)
    bb1 = build_bb1(Bb1Spec(math.pi, amplitude), quadrature_angle=angle)
    target, _ = scheme.code(cfg).logical_eigenstates(scheme.basis)

    def cost(pre: float) -> float:
        seq = PulseSequence((gcr_bb1_precorrection(pre, 0.0, angle),)) + bb1
        return readout(target, scheme, cfg, seq=seq).error

    return optimize_gcr_bb1_amplitude(math.pi, amplitude, scheme.delta, cost=cost)


@dataclass(frozen=True)
class ReadoutPoint:
    epsilon: float
    error: float
    back_action_fidelity: float


def readout_sweep(scheme: ReadoutScheme, epsilons: Sequence[float], cfg: FockBasisConfig,
                  level: QubitLevel = QubitLevel.g) -> list[ReadoutPoint]:
    """Readout error of the codeword mapped to `level`, displaced by epsilon along the readout quadrature."""
    angle, _ = quadrature_geometry(scheme.quadrature)
    if scheme.variant == 'gcr_bb1' and scheme.precorrection is None:
        scheme = ReadoutScheme(scheme.variant, scheme.basis, scheme.delta, scheme.lattice_spacing,
                               optimize_gcr_bb1_readout(scheme, cfg))
    seq = readout_sequence(scheme, cfg)
    pair = scheme.code(cfg).logical_eigenstates(scheme.basis)
    codeword = pair[int(level)]
    points = []
    for eps in epsilons:
        displaced = displacement_operator(eps * cmath.exp(1j * angle), cfg) @ codeword
        res = readout(displaced, scheme, cfg, level, seq=seq)
        points.append(ReadoutPoint(float(eps), res.error, res.back_action_fidelity))
    return points


def voronoi_half_width(lattice_spacing: float = SQUARE_GKP_SPACING) -> float:
    """Largest displacement still decoded to the right codeword, l / 4."""
    return lattice_spacing / 4


# Gate teleportation

@dataclass(frozen=True)
class TeleportPlan:
    axis: LogicalBasis = 'Z'
    theta: float = math.pi / 4
    pieces: int = 1
    ancilla_error_rate: float = 0.0 # probability p_x of a sigma_x flip before each piece
    mode: TeleportMode = 'error_corrected'
    compensate: bool = False # use theta / (1 - 2 p_x) to remove the mean angle bias
    stabilization_rounds: int = 0 # SBS rounds along the axis quadrature after the last piece
    delta: float = 0.34
    lattice_spacing: float = SQUARE_GKP_SPACING

    def __post_init__(self):
        if self.pieces < 1:
            raise ValueError(f"Invalid number of pieces: {self.pieces}")
        if self.stabilization_rounds < 0:
            raise ValueError(f"Invalid number of stabilization rounds: {self.stabilization_rounds}")
        if not 0 <= self.ancilla_error_rate < 0.5:
            raise ValueError(f"Invalid ancilla error rate: {self.ancilla_error_rate}")
        if self.mode not in ('error_corrected', 'trivial'):
            raise ValueError(f"Invalid teleportation mode: {self.mode}")
        if self.axis not in BASIS_QUADRATURE:
            raise ValueError(f"Invalid logical axis: {self.axis}")

    @property
    def piece_angle(self) -> float:
        theta = self.theta / (1 - 2 * self.ancilla_error_rate) if self.compensate else self.theta
        return theta / self.pieces

    @property
    def reference_angle(self) -> float:
        """Mean teleported angle, the one the fidelity is measured against."""
        return self.pieces * self.piece_angle * (1 - 2 * self.ancilla_error_rate)


@dataclass(frozen=True)
class TeleportResult:
    state: HybridState
    success_prob: float
    fidelity: float
    flips: int = 0

    @property
    def root_fidelity(self) -> float:
        return math.sqrt(self.fidelity)

    @property
    def hybrid_fidelity(self) -> float:
        """Fidelity without post-selection on the reset outcomes."""
        return self.success_prob * self.fidelity


def teleport_piece(code: GkpCode, plan: TeleportPlan, angle: float, flip: bool = False,
                   mode: int = 0, qubit: int = 0) -> PulseSequence:
    """Entangler, ancilla rotation by `angle`, closing gadget.

    A sigma_x flip of the ancilla before the piece is applied in its propagated form: the
    rotation runs backwards and the piece leaves the ancilla on e, where the reset finds it.
    """
    quadrature = BASIS_QUADRATURE[plan.axis]
    entangle = entangling_gadget(code, quadrature, mode, qubit)
    closing = unentangling_gadget(code, quadrature, mode, qubit) if plan.mode == 'error_corrected' else entangle.inverse()
    if flip:
        return entangle + RotationZ(-angle, qubit) + closing + QubitRotation(0.0, math.pi, qubit)
    return entangle + RotationZ(angle, qubit) + closing


def teleport_gate(oscillator: np.ndarray, plan: TeleportPlan, cfg: FockBasisConfig | None = None,
                  rng: np.random.Generator | None = None, flips: Sequence[bool] | None = None) -> TeleportResult:
    """Teleports the logical rotation exp(-i theta P/2) in m pieces through one ancilla.

    Each piece entangles, rotates the ancilla by theta/m, unentangles and resets the ancilla on
    its dominant level. An ancilla flip before a piece reverses that piece's angle; flips are
    sampled from rng with probability plan.ancilla_error_rate unless `flips` fixes them per piece.
    The plan's stabilization rounds follow the last piece, and the Paulis they apply are folded
    into the target.
    """
    cfg = cfg or FockBasisConfig(100, leakage_tol=1e-6, strict=False)
    if flips is None:
        if plan.ancilla_error_rate > 0 and rng is None:
            raise ValueError("a random generator is needed to sample ancilla flips")
        flips = [plan.ancilla_error_rate > 0 and rng.random() < plan.ancilla_error_rate for _ in range(plan.pieces)]
    elif len(flips) != plan.pieces:
        raise ValueError(f"Invalid flip pattern: {len(flips)} entries for {plan.pieces} pieces")
    code = GkpCode(plan.delta, plan.lattice_spacing, cfg)
    psi_g, psi_e = code.logical_eigenstates(plan.axis)
    oscillator = np.asarray(oscillator, dtype=complex)
    a, b = np.vdot(psi_g, oscillator), np.vdot(psi_e, oscillator)

    state = HybridState.product([oscillator], [KET_G])
    success = 1.0
    for flip in flips:
        state = apply(state, teleport_piece(code, plan, plan.piece_angle, bool(flip)), cfg)
        state, prob = _reset(state, _dominant(state, 0), 0, cfg)
        success *= prob
    stabilizer = sbs_sequence(code, BASIS_QUADRATURE[plan.axis])
    for _ in range(plan.stabilization_rounds):
        state = apply(state, stabilizer, cfg)
        state, prob = _reset(state, _dominant(state, 0), 0, cfg)
        success *= prob

    # every unentangler and every SBS round applies the axis Pauli
    paulis = plan.stabilization_rounds + (plan.pieces if plan.mode == 'error_corrected' else 0)
    phase = cmath.exp(1j * plan.reference_angle) * (-1) ** paulis
    target = a * psi_g + phase * b * psi_e
    target = target / np.linalg.norm(target)
    fid = abs(np.vdot(target, state.branch(QubitLevel.g))) ** 2
    n_flips = sum(bool(f) for f in flips)
    _logger.debug(f"teleport {plan.axis}({plan.theta:.4g}) in {plan.pieces} pieces, {n_flips} flips: "
                  f"success {success:.5f}, fidelity {fid:.5f}")
    return TeleportResult(state, success, fid, n_flips)


def flip_averaged_fidelity(oscillator: np.ndarray, plan: TeleportPlan, cfg: FockBasisConfig | None = None) -> float:
    """Teleportation fidelity averaged exactly over the number k of flipped pieces.

    Each k is simulated once with the flips on the first k pieces and weighted by
    C(m, k) p^k (1-p)^(m-k).
    """
    m, p = plan.pieces, plan.ancilla_error_rate
    total = 0.0
    for k in range(m + 1):
        weight = math.comb(m, k) * p ** k * (1 - p) ** (m - k)
        if weight == 0:
            continue
        total += weight * teleport_gate(oscillator, plan, cfg, flips=[i < k for i in range(m)]).fidelity
    return total


def pcgt_fidelity(pieces: int, p_x: float, theta: float, compensate: bool = False) -> float:
    """sum_k C(m,k) (1-p)^(m-k) p^k cos^2(theta' (p - k/m)), theta' = theta/(1-2p) when compensating."""
    if pieces < 1:
        raise ValueError(f"Invalid number of pieces: {pieces}")
    theta = theta / (1 - 2 * p_x) if compensate else theta
    return float(sum(
        math.comb(pieces, k) * (1 - p_x) ** (pieces - k) * p_x ** k * math.cos(theta * (p_x - k / pieces)) ** 2
        for k in range(pieces + 1)
    ))


_CX = np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex)


def pcgt_toy_model(pieces: int, p_x: float, theta: float, rounds: int, rng: np.random.Generator,
                   compensate: bool = False) -> tuple[float, float]:
    """Monte Carlo of the two-qubit circuit CX, R_z(theta/m) on the ancilla, CX, with the ancilla
    flipped with probability p_x before the first CX. Returns (mean fidelity, standard error)."""
    piece = (theta / (1 - 2 * p_x) if compensate else theta) / pieces
    rz = np.kron(np.eye(2), np.diag([cmath.exp(-0.5j * piece), cmath.exp(0.5j * piece)]))
    flip = np.kron(np.eye(2), np.array([[0, 1], [1, 0]], dtype=complex))
    reference = pieces * piece * (1 - 2 * p_x)
    plus = np.array([1, 1], dtype=complex) / math.sqrt(2)
    target = np.array([cmath.exp(-0.5j * reference), cmath.exp(0.5j * reference)]) / math.sqrt(2)
    samples = np.empty(rounds)
    for r in range(rounds):
        data = plus
        for _ in range(pieces):
            ancilla = np.array([1, 0], dtype=complex)
            joint = np.kron(data, ancilla)
            if rng.random() < p_x:
                joint = flip @ joint
            joint = _CX @ rz @ _CX @ joint
            # the ancilla ends in a basis state, the data qubit factors out
            t = joint.reshape(2, 2)
            col = int(np.argmax(np.sum(np.abs(t) ** 2, axis=0)))
            data = t[:, col] / np.linalg.norm(t[:, col])
        samples[r] = abs(np.vdot(target, data)) ** 2
    return float(samples.mean()), float(samples.std(ddof=1) / math.sqrt(rounds)) if rounds > 1 else 0.0


TwoQubitVariant = Literal['zz', 'cx']


@dataclass(frozen=True)
class TwoQubitResult:
    state: HybridState
    success_prob: float
    fidelity: float

    @property
    def root_fidelity(self) -> float:
        return math.sqrt(self.fidelity)


def two_qubit_piece(code: GkpCode, variant: TwoQubitVariant, angle: float) -> PulseSequence:
    """Both entanglers, the ancilla interaction, both unentanglers; mode m is read by qubit m."""
    if variant == 'zz':
        quads = ('x', 'x')
        # exp(-i angle Z Z) up to a global phase
        interaction = PulseSequence((RotationZ(2 * angle, 0), RotationZ(2 * angle, 1), ControlledPhase(-4 * angle, 0, 1)))
    elif variant == 'cx':
        quads = ('x', 'p')
        interaction = PulseSequence((ControlledPhase(math.pi, 0, 1),))
    else:
        raise ValueError(f"Invalid two-qubit variant: {variant}")
    seq = entangling_gadget(code, quads[0], 0, 0) + entangling_gadget(code, quads[1], 1, 1) + interaction
    return seq + unentangling_gadget(code, quads[0], 0, 0) + unentangling_gadget(code, quads[1], 1, 1)


def two_qubit_target(code: GkpCode, variant: TwoQubitVariant, inputs: tuple[np.ndarray, np.ndarray],
                     theta: float, pieces: int) -> np.ndarray:
    # logical basis of each mode is the one its entangler reads out
    bases = (code.logical_eigenstates('Z'), code.logical_eigenstates('Z' if variant == 'zz' else 'X'))
    out = np.zeros((code.cfg.dim, code.cfg.dim), dtype=complex)
    for i in (0, 1):
        for j in (0, 1):
            c = np.vdot(bases[0][i], inputs[0]) * np.vdot(bases[1][j], inputs[1])
            if variant == 'zz':
                zz = (-1) ** (i + j)
                phase = ((-1) ** (i + j)) ** pieces * cmath.exp(-1j * theta * zz)
            else:
                phase = (-1) ** (i + j + i * j)
            out += c * phase * np.multiply.outer(bases[0][i], bases[1][j])
    return out / np.linalg.norm(out)


def teleport_two_qubit(inputs: tuple[str, str] = ('+', '+'), theta: float = math.pi / 4, pieces: int = 1,
                       variant: TwoQubitVariant = 'zz', delta: float = 0.34,
                       cfg: FockBasisConfig | None = None) -> TwoQubitResult:
    """Two-mode logical ZZ(theta) rotation (or the CX of the 'cx' variant) through two ancillae."""
    if pieces < 1:
        raise ValueError(f"Invalid number of pieces: {pieces}")
    cfg = cfg or FockBasisConfig(40, leakage_tol=1e-3, strict=False)
    code = GkpCode(delta, cfg=cfg)
    kets = (code.codeword(inputs[0]), code.codeword(inputs[1]))
    state = HybridState.product(list(kets), [KET_G, KET_G])
    success = 1.0
    angle = theta / pieces
    for _ in range(pieces):
        state = apply(state, two_qubit_piece(code, variant, angle), cfg)
        for q in (0, 1):
            state, prob = _reset(state, _dominant(state, q), q, cfg)
            success *= prob
    target = two_qubit_target(code, variant, kets, theta, pieces if variant == 'zz' else 1)
    fid = abs(np.vdot(target.reshape(-1), state.tensor()[0, 0].reshape(-1))) ** 2
    _logger.info(f"two-qubit {variant} teleportation: success {success:.5f}, fidelity {fid:.5f}")
    return TwoQubitResult(state, success, fid)


# State transfer and noisy preparation

@dataclass(frozen=True)
class TransferResult:
    state: HybridState
    success_prob: float
    fidelity: float
    logical: tuple[complex, complex] # (a, b) after the tracked Pauli frame


def arbitrary_state_transfer(a: complex, b: complex, code: GkpCode | None = None,
                             rounds: Sequence[Quadrature] = ('p', 'x', 'p', 'x'),
                             from_vacuum: bool = False) -> TransferResult:
    """Transfers a|g> + b|e> of ancilla 0 onto a|0> + b|1> of the oscillator.

    A sigma_z-conditioned half-spacing displacement and an unconditional one give a|0 g> + b|1 e>
    with un-centered envelopes, SBS rounds on ancilla 1 re-center them while the logical Paulis
    they apply are tracked, and the GCR unentangler returns ancilla 0 to g. With from_vacuum the
    starting codeword is prepared by the C_k circuits instead of being injected; when they end on
    |1> the conditional displacement is reversed so that |1> stays with e.
    """
    code = code or GkpCode(0.34, cfg=FockBasisConfig(100, leakage_tol=1e-6, strict=False))
    cfg = code.cfg
    norm = math.sqrt(abs(a) ** 2 + abs(b) ** 2)
    if norm == 0:
        raise ValueError("the qubit state must be non zero")
    a, b = complex(a) / norm, complex(b) / norm
    x0 = code.half_spacing
    sign = 1
    if from_vacuum:
        plan = GkpPrepPlan(code.delta, code.lattice_spacing)
        prepared, _ = prepare_gkp(plan, cfg)
        start = prepared.branch(QubitLevel.g)
        start = start / np.linalg.norm(start)
        sign = -1 if plan.logical_frame[1] else 1
    else:
        start = code.codeword('0')
    state = HybridState.product([start], [np.array([a, b]), KET_G])
    state = apply(state, PulseSequence((ConditionalDisplacement(sign * x0 / 2, 0.0, 0, 0, polar=0.0),
                                        UnconditionalDisplacement(-x0 / 2))), cfg)
    success = 1.0
    frame = (a, b)
    for quadrature in rounds:
        state, probs = sbs_round(state, code, quadrature, cfg, qubit=1)
        success *= probs['g']
        frame = track_pauli(frame, sbs_pauli(quadrature))
        if sbs_pauli(quadrature) in ('X', 'Y'):
            # logical X and Y swap which codeword rides with e
            state = apply(state, QubitRotation(0.0, math.pi, 0), cfg)
    state = apply(state, unentangling_gadget(code, 'x', 0, 0) + UnconditionalDisplacement(-0.5j * x0), cfg)
    state, prob = postselect(state, 0, QubitLevel.g)
    success *= prob
    target = code.encode(*frame)
    fid = abs(np.vdot(target, state.tensor()[0, 0])) ** 2
    _logger.debug(f"state transfer ({a:.3g}, {b:.3g}): fidelity {fid:.5f}, success {success:.5f}")
    return TransferResult(state, success, fid, frame)


@dataclass(frozen=True)
class NoisyPrepReport:
    rounds: int
    successes: int
    success_fraction: float
    mean_fidelity: float
    stage_pass_probabilities: tuple[float, ...]


def sample_prep_rounds(pass_probabilities: Sequence[float], rounds: int, seed: int) -> int:
    """Number of rounds passing every mid-circuit Z check, one child stream per round."""
    passed = 0
    for child in np.random.SeedSequence(seed).spawn(rounds):
        rng = np.random.default_rng(child)
        if all(rng.random() < p for p in pass_probabilities):
            passed += 1
    return passed


def _noisy_prep_stages(plan: GkpPrepPlan, code: GkpCode, include_sbs: bool, squeeze: bool) -> list[PulseSequence]:
    stages = [gkp_stage(k, plan) for k in range(1, plan.n_circuits + 1)]
    if squeeze:
        stages.insert(0, position_squeezing_sequence(plan.delta, cfg=code.cfg))
    if include_sbs:
        stages.append(sbs_sequence(code, 'x'))
    return stages


def noisy_gkp_prep_experiment(rounds: int = 2000, noise: NoiseModel | None = None, delta: float = 0.34,
                              cfg: FockBasisConfig | None = None, durations: DurationModel | None = None,
                              seed: int = 0, include_sbs: bool = True,
                              method: NoiseMethod = 'density', squeeze: bool = True) -> NoisyPrepReport:
    """S - C_1 - ... - C_N - SBS under noise, with a Z check of the ancilla after every stage.

    S is the squeezing gadget train run from vacuum; without `squeeze` the ideal squeezed
    vacuum is injected instead. The fidelity target is the binomial codeword the C_k circuits
    aim at, carried through the logical Pauli of the SBS round.

    In density mode the pass probability of each check and the post-selected fidelity are exact,
    and rounds are Bernoulli-sampled from them; in trajectory mode each round is its own
    seeded trajectory and the fidelity is averaged over the accepted rounds.
    """
    if rounds < 1:
        raise ValueError(f"Invalid number of rounds: {rounds}")
    noise = noise or NoiseModel(1 / 1000, 1 / 200, 1 / 200)
    cfg = cfg or FockBasisConfig(60, leakage_tol=1e-5, strict=False)
    durations = durations or DurationModel()
    plan = GkpPrepPlan(delta)
    code = GkpCode(delta, cfg=cfg)
    stages = _noisy_prep_stages(plan, code, include_sbs, squeeze)
    frame = track_pauli(plan.logical_frame, sbs_pauli('x')) if include_sbs else plan.logical_frame
    target = HybridState.product([code.binomial_logical(plan.n_circuits, frame)], [KET_G])
    initial = HybridState.vacuum(cfg) if squeeze else HybridState.product([squeezed_vacuum(delta, cfg)], [KET_G])

    if method == 'density':
        sim = NoisySimulator(cfg, noise, durations, 'density', seed, name="gkp-prep")
        state = sim.prepare(initial)
        passes = []
        for stage in stages:
            state, p_g, _ = sim.detect(sim.run(state, stage))
            passes.append(p_g)
        fid = sim.fidelity(state, target)
        successes = sample_prep_rounds(passes, rounds, seed)
        report = NoisyPrepReport(rounds, successes, successes / rounds, fid, tuple(passes))
    else:
        successes, fidelities = 0, []
        for child in np.random.SeedSequence(seed).spawn(rounds):
            sim = NoisySimulator(cfg, noise, durations, 'trajectory', int(child.generate_state(1)[0]), name="gkp-prep")
            state = sim.prepare(initial)
            for stage in stages:
                state, _, passed = sim.detect(sim.run(state, stage))
                if not passed:
                    break
            else:
                successes += 1
                fidelities.append(sim.fidelity(state, target))
        mean = float(np.mean(fidelities)) if fidelities else float('nan')
        report = NoisyPrepReport(rounds, successes, successes / rounds, mean, ())
    _logger.info(f"noisy GKP preparation: success {report.success_fraction:.4f}, fidelity {report.mean_fidelity:.4f}")
    return report
