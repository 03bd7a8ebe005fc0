"""Deterministic preparation protocols built from conditional displacements.

Squeezing by repeated gadgets, two- and four-legged cats, GKP codewords through the
cat-splitting circuits C_k, and Fock states.
"""
from __future__ import annotations
import cmath
import math
import logging
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import optimize

from .definitions import (
    CatParity, Corrector, DeltaExtraction, QubitLevel, EntanglementResidual, NoConvergence, AspectRatioError,
    SQUARE_GKP_SPACING, MICROSECOND,
)
from .hilbert import (
    FockBasisConfig, HybridState, KET_G, KET_E, auto_fock_dim, displacement_operator, expectation, fock_state,
    gaussian_state, momentum_operator, partial_qubit_bloch, position_operator, position_wavefunction,
    squeezed_vacuum,
)
from .instructions import (
    ConditionalDisplacement, DurationModel, PulseSequence, QubitRotation, apply, classical_qubit_unitary,
    p_rotation, x_rotation,
)
from .composite_pulses import Bb1Spec, PulseMetrics, build_bb1, gcr_gadget, measure_metrics, quadrature_rotation
from .gkp_code import GkpCode, sbs_pauli, sbs_sequence, track_pauli
from .noise import postselect

_logger = logging.getLogger(__name__)

X_AXIS = np.array([1.0, 0.0, 0.0])
Y_AXIS = np.array([0.0, 1.0, 0.0])
Z_AXIS = np.array([0.0, 0.0, 1.0])

VACUUM_VARIANCE = 0.25


# Squeezing

@dataclass(frozen=True)
class SqueezeSchedule:
    a: float = 0.06 # step rule |alpha|_{k+1} = a delta_k^c
    c: float = 2.0
    target_db: float = 8.5 # momentum squeezing at which the protocol stops
    accelerated_fit: bool = False # fit the correction slope instead of using alpha / delta^2
    max_steps: int = 400
    delta_extraction: DeltaExtraction = 'variance'
    min_sigma_z: float = 0.99 # smallest <sigma_z> accepted after a gadget
    initial_delta: float = 1.0
    initial_amplitude: float | None = 0.13 # first gadget, the step rule is used when None
    amplitude_scale: float = math.sqrt(2) # CD amplitude per unit of a and initial_amplitude

    def __post_init__(self):
        if not self.a > 0:
            raise ValueError(f"Invalid squeezing rate: a={self.a}")
        if self.initial_amplitude is not None and not self.initial_amplitude > 0:
            raise ValueError(f"Invalid first gadget amplitude: {self.initial_amplitude}")
        if not self.amplitude_scale > 0:
            raise ValueError(f"Invalid amplitude scale: {self.amplitude_scale}")
        if self.max_steps < 0:
            raise ValueError(f"Invalid step cap: {self.max_steps}")
        if self.delta_extraction not in ('variance', 'fit'):
            raise ValueError(f"Invalid width extraction: {self.delta_extraction}")
        if not 0 < self.min_sigma_z <= 1:
            raise ValueError(f"Invalid sigma_z threshold: {self.min_sigma_z}")
        if not self.initial_delta > 0:
            raise ValueError(f"Invalid initial width: {self.initial_delta}")

    def step_amplitude(self, delta: float, step: int = 1) -> float:
        """CD amplitude of gadget `step` (from 0) at width delta, shortened so the target is not overshot."""
        if step == 0 and self.initial_amplitude is not None:
            alpha = self.amplitude_scale * self.initial_amplitude
        else:
            alpha = self.amplitude_scale * self.a * delta ** self.c
        u = delta ** 2
        u_target = 10 ** ((self.target_db + 0.02) / 10)
        if u < u_target:
            alpha = min(alpha, u / 2 * math.sqrt(1 / u - 1 / u_target))
        return alpha

    @staticmethod
    def from_dict(values: dict) -> SqueezeSchedule:
        return SqueezeSchedule(**values)


@dataclass(frozen=True)
class SqueezeReport:
    steps: int
    deltas: tuple[float, ...]
    db_x: float
    db_p: float
    fisher: float
    infidelity: float # to the closest squeezed vacuum
    duration_us: float # entangling displacements only
    p_e: float # accumulated probability of discarding on e
    sequence: PulseSequence
    state: HybridState
    total_duration_us: float = 0.0 # entanglers and corrections


def _quadrature_variances(state: HybridState, cfg: FockBasisConfig) -> tuple[float, float]:
    x = position_operator(cfg)
    p = momentum_operator(cfg)
    out = []
    for op in (x, p):
        mean = expectation(state, op).real
        out.append(expectation(state, op @ op).real - mean ** 2)
    return out[0], out[1]


def squeezing_db(variance: float) -> float:
    """10 log10 of the vacuum-to-state variance ratio; positive when squeezed."""
    return 10 * math.log10(VACUUM_VARIANCE / variance)


def _fwhm_slope(state: HybridState, delta: float) -> float:
    # least-squares line through the origin of the conditional <sigma_x>(x) over the FWHM
    half_width = delta * math.sqrt(math.log(2) / 2)
    grid = np.linspace(-half_width, half_width, 201)
    psi = position_wavefunction(state, grid)
    weight = np.abs(psi[0]) ** 2 + np.abs(psi[1]) ** 2
    s = 2 * np.real(psi[0].conj() * psi[1]) / weight
    return float(np.sum(grid * s) / np.sum(grid ** 2))


def extract_delta(state: HybridState, cfg: FockBasisConfig, method: DeltaExtraction = 'variance') -> float:
    """Position width delta of the state, psi(x) ~ exp(-x^2 / delta^2)."""
    var_x, _ = _quadrature_variances(state, cfg)
    guess = 2 * math.sqrt(var_x)
    if method == 'variance':
        return guess
    grid = np.linspace(-4 * guess, 4 * guess, 401)
    psi = position_wavefunction(state, grid)
    density = np.sum(np.abs(np.atleast_2d(psi)) ** 2, axis=0)

    def model(x, amp, center, width):
        return amp * np.exp(-2 * (x - center) ** 2 / width ** 2)

    (_, _, width), _ = optimize.curve_fit(model, grid, density, p0=(density.max(), 0.0, guess))
    return abs(float(width))


def squeezing_gadget(state: HybridState, alpha: float, delta: float, cfg: FockBasisConfig,
                     accelerated: bool = False, extraction: DeltaExtraction = 'variance',
                     min_sigma_z: float = 0.99) -> tuple[HybridState, float, float, PulseSequence]:
    """CD(alpha, sigma_x) then the disentangling CD(i alpha/delta^2, sigma_y), post-selected on g.

    Returns (state, fitted delta, probability of e, applied sequence).

    :raises EntanglementResidual: if <sigma_z> after the gadget is below min_sigma_z
    """
    entangler = ConditionalDisplacement(alpha, 0.0)
    state = apply(state, entangler, cfg)
    if accelerated:
        correction = ConditionalDisplacement(0.25j * _fwhm_slope(state, delta), math.pi / 2)
    else:
        correction = ConditionalDisplacement(1j * alpha / delta ** 2, math.pi / 2)
    state = apply(state, correction, cfg)
    _, _, sigma_z = partial_qubit_bloch(state)
    if sigma_z < min_sigma_z:
        raise EntanglementResidual(f"<sigma_z>={sigma_z:.4f} after squeezing gadget alpha={alpha:.4g}")
    state, p_g = postselect(state, 0, QubitLevel.g)
    new_delta = extract_delta(state, cfg, extraction)
    _logger.debug(f"squeezing gadget alpha={alpha:.5f}: delta {delta:.5f} -> {new_delta:.5f}, p_e={1 - p_g:.2e}")
    return state, new_delta, 1 - p_g, PulseSequence((entangler, correction))


def _closest_squeezed_vacuum(oscillator: np.ndarray, delta: float, cfg: FockBasisConfig) -> float:
    def infidelity(d: float) -> float:
        return 1 - abs(np.vdot(squeezed_vacuum(d, cfg), oscillator)) ** 2

    res = optimize.minimize_scalar(infidelity, bounds=(0.5 * delta, 2 * delta), method='bounded')
    return float(max(0.0, res.fun))


def run_squeezing(schedule: SqueezeSchedule, cfg: FockBasisConfig | None = None) -> SqueezeReport:
    """Applies gadgets until the momentum squeezing reaches schedule.target_db.

    :raises NoConvergence: if the target is not reached within schedule.max_steps gadgets
    """
    cfg = cfg or FockBasisConfig(100, leakage_tol=1e-6, strict=False)
    state = HybridState.product([squeezed_vacuum(schedule.initial_delta, cfg)], [KET_G])
    delta = schedule.initial_delta
    deltas = [delta]
    seq = PulseSequence()
    survival = 1.0
    durations = DurationModel(min_cd_time=0.0)
    entangling = 0.0
    _, var_p = _quadrature_variances(state, cfg)
    while squeezing_db(var_p) < schedule.target_db:
        if len(deltas) - 1 >= schedule.max_steps:
            raise NoConvergence(f"{squeezing_db(var_p):.2f} dB after {schedule.max_steps} squeezing gadgets, "
                                f"target {schedule.target_db} dB")
        alpha = schedule.step_amplitude(delta, len(deltas) - 1)
        state, delta, p_e, gadget = squeezing_gadget(state, alpha, delta, cfg, schedule.accelerated_fit,
                                                     schedule.delta_extraction, schedule.min_sigma_z)
        survival *= 1 - p_e
        seq = seq + gadget
        entangling += gadget.instructions[0].duration(durations)
        deltas.append(delta)
        _, var_p = _quadrature_variances(state, cfg)

    var_x, var_p = _quadrature_variances(state, cfg)
    oscillator = state.branch(QubitLevel.g)
    report = SqueezeReport(
        steps=len(deltas) - 1,
        deltas=tuple(deltas),
        db_x=squeezing_db(var_x),
        db_p=squeezing_db(var_p),
        fisher=1 / var_p,
        infidelity=_closest_squeezed_vacuum(oscillator, delta, cfg),
        duration_us=entangling / MICROSECOND,
        p_e=1 - survival,
        sequence=seq,
        state=state,
        total_duration_us=seq.duration(durations) / MICROSECOND,
    )
    _logger.info(f"squeezing: {report.steps} gadgets, {report.db_p:.2f} dB, {report.duration_us:.2f} us")
    return report


def position_squeezing_sequence(delta: float, schedule: SqueezeSchedule | None = None,
                                cfg: FockBasisConfig | None = None) -> PulseSequence:
    """Gadget train taking vacuum to the position-squeezed input of width delta < 1.

    The momentum protocol runs to width 1/delta and every displacement is turned by a
    quarter period, which maps the momentum-squeezed output of vacuum onto x.
    """
    if not 0 < delta < 1:
        raise ValueError(f"Invalid position width: {delta}")
    schedule = replace(schedule or SqueezeSchedule(), target_db=-20 * math.log10(delta))
    report = run_squeezing(schedule, cfg)
    return PulseSequence(tuple(
        replace(inst, beta=1j * inst.beta) if isinstance(inst, ConditionalDisplacement) else inst
        for inst in report.sequence
    ))


# Cats

@dataclass(frozen=True)
class CatSpec:
    alpha: complex
    delta: float = 1.0 # width of the input squeezed vacuum
    parity: CatParity = 'even'

    def __post_init__(self):
        object.__setattr__(self, 'alpha', complex(self.alpha))
        if self.alpha == 0:
            raise ValueError("Invalid cat amplitude: 0")
        if not self.delta > 0:
            raise ValueError(f"Invalid cat width: {self.delta}")
        if self.parity not in ('even', 'odd'):
            raise ValueError(f"Invalid cat parity: {self.parity}")

    @property
    def sign(self) -> int:
        return 1 if self.parity == 'even' else -1


def small_cat_weights(alpha: complex) -> tuple[float, float]:
    """Norms ((1 + e^{-2|alpha|^2})/2, (1 - e^{-2|alpha|^2})/2) of the even and odd branches."""
    overlap = math.exp(-2 * abs(alpha) ** 2)
    return (1 + overlap) / 2, (1 - overlap) / 2


def cat_unentangler(alpha: complex, delta: float, corrector: Corrector) -> PulseSequence:
    """Returns the qubit to g from the +/- branches displaced by +/- alpha."""
    alpha = complex(alpha)
    mag = abs(alpha)
    angle = cmath.phase(alpha)
    if corrector == 'none':
        return PulseSequence((quadrature_rotation(math.pi / (4 * mag), Y_AXIS, angle),))
    if mag < 1:
        raise ValueError(f"Invalid cat amplitude for the {corrector} corrector: |alpha|={mag:.3g} < 1")
    if corrector == 'gcr':
        width = math.sqrt(math.cos(angle) ** 2 * delta ** 2 + math.sin(angle) ** 2 / delta ** 2)
        return gcr_gadget(math.pi / (4 * mag), width, Y_AXIS, Z_AXIS, angle, correction_first=False)
    if corrector == 'bb1':
        return build_bb1(Bb1Spec(math.pi / 2, mag, 3 * math.pi / 2), quadrature_angle=angle)
    raise ValueError(f"Invalid corrector: {corrector}")


def cat_target(spec: CatSpec, cfg: FockBasisConfig) -> np.ndarray:
    v = gaussian_state(spec.delta, spec.alpha, cfg) + spec.sign * gaussian_state(spec.delta, -spec.alpha, cfg)
    return v / np.linalg.norm(v)


def prepare_cat(spec: CatSpec, corrector: Corrector = 'gcr',
                cfg: FockBasisConfig | None = None) -> tuple[HybridState, PulseMetrics]:
    """CD(alpha, sigma_x) entangler followed by the unentangling gadget; odd cats start from e."""
    cfg = cfg or FockBasisConfig(auto_fock_dim(abs(spec.alpha) * max(1.0, spec.delta, 1 / spec.delta)))
    qubit = KET_G if spec.parity == 'even' else KET_E
    initial = HybridState.product([squeezed_vacuum(spec.delta, cfg)], [qubit])
    seq = PulseSequence((ConditionalDisplacement(spec.alpha, 0.0),)) + cat_unentangler(spec.alpha, spec.delta, corrector)
    metrics = measure_metrics(seq, initial, cat_target(spec, cfg), KET_G, cfg)
    _logger.debug(f"{spec.parity} cat alpha={spec.alpha:.3g} ({corrector}): 1-F_H={metrics.infidelity_hybrid:.3g}")
    return apply(initial, seq, cfg), metrics


def _four_cat_sequence(alpha: float, beta: float, corrector: Corrector) -> PulseSequence:
    if corrector == 'gcr':
        ratio = alpha / beta
        if abs(ratio / 2 - round(ratio / 2)) > 1e-9 or round(ratio) == 0:
            raise AspectRatioError(f"GCR four-legged cat needs alpha/beta in 2Z, got {ratio:.6g}")
    return PulseSequence((ConditionalDisplacement(alpha, 0.0),)) + cat_unentangler(alpha, 1.0, corrector)


def four_legged_cat_target(alpha: float, beta: float, seq: PulseSequence, cfg: FockBasisConfig) -> np.ndarray:
    """Legs D(s alpha)|+/- i beta> weighted by the ideal qubit response at each leg's center."""
    # branches of CD(alpha, sigma_x) on g: s = +1 carries |+>, s = -1 carries |->
    branch_qubits = {+1: np.array([1, 1]) / math.sqrt(2), -1: np.array([1, -1]) / math.sqrt(2)}
    unentangler = PulseSequence(seq.instructions[1:])
    out = np.zeros(cfg.dim, dtype=complex)
    for s, q in branch_qubits.items():
        for sign in (+1, -1):
            amplitude = (classical_qubit_unitary(unentangler, s * alpha, sign * beta) @ q)[0]
            leg = displacement_operator(s * alpha, cfg) @ gaussian_state(1.0, 1j * sign * beta, cfg)
            out += amplitude * leg / math.sqrt(2)
    return out / np.linalg.norm(out)


def prepare_four_legged_cat(alpha: float, beta: float, corrector: Corrector = 'gcr',
                            cfg: FockBasisConfig | None = None) -> tuple[HybridState, PulseMetrics]:
    """Splits an even momentum cat |C_{i beta}> along x into a rectangular four-legged cat.

    :raises AspectRatioError: for the GCR corrector when alpha/beta is not an even integer
    """
    if not (alpha > 0 and beta > 0):
        raise ValueError(f"Invalid four-legged cat sizes: alpha={alpha}, beta={beta}")
    seq = _four_cat_sequence(alpha, beta, corrector)
    cfg = cfg or FockBasisConfig(auto_fock_dim(abs(complex(alpha, beta))))
    momentum_cat = gaussian_state(1.0, 1j * beta, cfg) + gaussian_state(1.0, -1j * beta, cfg)
    initial = HybridState.product([momentum_cat / np.linalg.norm(momentum_cat)], [KET_G])
    metrics = measure_metrics(seq, initial, four_legged_cat_target(alpha, beta, seq, cfg), KET_G, cfg)
    return apply(initial, seq, cfg), metrics


# GKP codewords

def gkp_depth(delta: float) -> int:
    """Number of large displacements N for a target width delta, from N delta^2 = 0.32."""
    if not delta > 0:
        raise ValueError(f"Invalid GKP envelope width: {delta}")
    return max(1, math.ceil(0.32 / delta ** 2 - 1e-9) - 1)


def gkp_depth_exact(delta: float, peak_fraction: float = 0.45) -> float:
    """Continuous N at which the binomial peak weights match the Gaussian envelope at m/N = peak_fraction.

    Solves x^-x (1-x)^-(1-x) / 2 = exp(-2 pi N delta^2 (x - 1/2)^2) with brentq.
    """
    x = peak_fraction
    if not 0 < x < 1 or x == 0.5:
        raise ValueError(f"Invalid peak fraction: {x}")
    lhs = -x * math.log(x) - (1 - x) * math.log(1 - x) - math.log(2)

    def mismatch(n: float) -> float:
        return lhs + 2 * math.pi * n * delta ** 2 * (x - 0.5) ** 2

    return float(optimize.brentq(mismatch, 1e-9, 1e3 / delta ** 2))


def _peak_model(k: int, x0: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    # peaks after the k-th split: positions, Bloch polar angles of their qubit states, weights
    def comb(n: int, i: int) -> int:
        return math.comb(n, i) if 0 <= i <= n else 0

    positions = np.array([(2 * i - k) * x0 for i in range(k + 1)])
    polar = np.array([2 * math.atan2(math.sqrt(comb(k - 1, i)), math.sqrt(comb(k - 1, i - 1))) for i in range(k + 1)])
    weights = np.array([math.comb(k, i) / 2 ** k for i in range(k + 1)])
    return positions, polar, weights


def optimal_unentangling_coefficient(k: int, x0: float = SQUARE_GKP_SPACING / 2) -> float:
    """Coefficient s of exp(-i s x sigma_y) closing the k-th split.

    pi/(4 k x0) for k <= 3; beyond, the weighted overlap of every peak's qubit with |+> is
    maximized over (0, pi/(4 k x0)].
    """
    if k < 1:
        raise ValueError(f"Invalid preparation step: {k}")
    upper = math.pi / (4 * k * x0)
    if k <= 3:
        return upper
    positions, polar, weights = _peak_model(k, x0)

    def infidelity(s: float) -> float:
        return 1 - float(np.sum(weights * np.cos((polar + 2 * s * positions - math.pi / 2) / 2) ** 2))

    res = optimize.minimize_scalar(infidelity, bounds=(upper * 1e-3, upper), method='bounded')
    _logger.debug(f"C_{k}: unentangling coefficient {res.x:.6g} (peak-model infidelity {res.fun:.3g})")
    return float(res.x)


@dataclass(frozen=True)
class GkpPrepPlan:
    delta: float
    lattice_spacing: float = SQUARE_GKP_SPACING
    depth: int | None = None # defaults to gkp_depth(delta); depth + 1 circuits are run
    append_sbs: bool = False
    min_sigma_z: float = 0.9
    coefficients: tuple[float, ...] = field(init=False)

    def __post_init__(self):
        if not 0 < self.delta < 1:
            raise ValueError(f"Invalid GKP envelope width: {self.delta}")
        if not self.lattice_spacing > 0:
            raise ValueError(f"Invalid lattice spacing: {self.lattice_spacing}")
        depth = gkp_depth(self.delta) if self.depth is None else int(self.depth)
        if depth < 1:
            raise ValueError(f"Invalid GKP circuit depth: {depth}")
        object.__setattr__(self, 'depth', depth)
        x0 = self.lattice_spacing / 2
        object.__setattr__(self, 'coefficients',
                           tuple(optimal_unentangling_coefficient(k, x0) for k in range(1, depth + 2)))

    @property
    def n_circuits(self) -> int:
        return self.depth + 1

    @property
    def logical_frame(self) -> tuple[complex, complex]:
        """Logical (a, b) of the prepared state: peaks sit at (2i - K) x0, so an odd K gives |1>."""
        return (0j, 1 + 0j) if self.n_circuits % 2 else (1 + 0j, 0j)


@dataclass(frozen=True)
class GkpStepMetrics:
    step: str
    p_g: float
    sigma_z: float
    f_h: float
    root_fidelity: float
    s_x: float
    s_p: float


def gkp_stage(k: int, plan: GkpPrepPlan, mode: int = 0, qubit: int = 0) -> PulseSequence:
    """C_k: R_y(pi/2), CD(x0, sigma_z), GCR-corrected exp(-i s_k x sigma_y), R_y(-pi/2)."""
    x0 = plan.lattice_spacing / 2
    s = plan.coefficients[k - 1]
    return (PulseSequence((QubitRotation(math.pi / 2, math.pi / 2, qubit),
                           ConditionalDisplacement(x0, 0.0, mode, qubit, polar=0.0)))
            + gcr_gadget(-s, plan.delta, Y_AXIS, X_AXIS, 0.0, False, mode, qubit)
            + QubitRotation(math.pi / 2, -math.pi / 2, qubit))


def _gkp_metrics(label: str, state: HybridState, target: np.ndarray, code: GkpCode) -> GkpStepMetrics:
    _, _, sigma_z = partial_qubit_bloch(state)
    f_h = abs(np.vdot(target, state.branch(QubitLevel.g))) ** 2
    s_x, s_p = code.stabilizer_expectations(state.reduced_oscillator())
    return GkpStepMetrics(label, state.qubit_probability(QubitLevel.g), sigma_z, f_h, math.sqrt(f_h), s_x, s_p)


def prepare_gkp(plan: GkpPrepPlan, cfg: FockBasisConfig | None = None,
                initial: np.ndarray | None = None) -> tuple[HybridState, list[GkpStepMetrics]]:
    """Runs C_1 ... C_{depth+1} coherently from a squeezed input (ideal injection by default).

    Step k is scored against the binomial target with k + 1 peaks; with plan.append_sbs the
    ancilla is projected on g and one SBS round follows, scored against the binomial codeword
    carrying the tracked logical frame.

    :raises EntanglementResidual: if <sigma_z> after a stage drops below plan.min_sigma_z
    """
    cfg = cfg or FockBasisConfig(100, leakage_tol=1e-6, strict=False)
    code = GkpCode(plan.delta, plan.lattice_spacing, cfg)
    oscillator = squeezed_vacuum(plan.delta, cfg) if initial is None else np.asarray(initial, dtype=complex)
    state = HybridState.product([oscillator], [KET_G])
    history = []
    for k in range(1, plan.n_circuits + 1):
        state = apply(state, gkp_stage(k, plan), cfg)
        metrics = _gkp_metrics(f"C{k}", state, code.binomial_target(k), code)
        _logger.debug(f"{metrics.step}: F_H={metrics.f_h:.5f} <sigma_z>={metrics.sigma_z:.4f} "
                      f"<S_x>={metrics.s_x:.4f} <S_p>={metrics.s_p:.4f}")
        if metrics.sigma_z < plan.min_sigma_z:
            raise EntanglementResidual(f"<sigma_z>={metrics.sigma_z:.4f} after C_{k}")
        history.append(metrics)
    if plan.append_sbs:
        state, _ = postselect(state, 0, QubitLevel.g)
        state = apply(state, sbs_sequence(code, 'x'), cfg)
        frame = track_pauli(plan.logical_frame, sbs_pauli('x'))
        history.append(_gkp_metrics("SBS", state, code.binomial_logical(plan.n_circuits, frame), code))
    _logger.info(f"GKP preparation delta={plan.delta}: final F_H={history[-1].f_h:.5f}")
    return state, history


# Fock states

FOCK1_AMPLITUDES = (math.pi / 4, 0.5, math.atan(math.sinh(math.pi / 2)) / math.pi)


def fock1_sequence(depth: int) -> PulseSequence:
    """CD(pi/4, sigma_y), then CD(i/2, sigma_x), then CD(atan(sinh(pi/2))/pi, sigma_y)."""
    if depth not in (1, 2, 3):
        raise ValueError(f"Invalid Fock-state circuit depth: {depth}")
    a1, b1, a2 = FOCK1_AMPLITUDES
    gates = [ConditionalDisplacement(a1, math.pi / 2), ConditionalDisplacement(1j * b1, 0.0),
             ConditionalDisplacement(a2, math.pi / 2)]
    return PulseSequence(tuple(gates[:depth]))


def prepare_fock1(depth: int = 3, cfg: FockBasisConfig | None = None) -> tuple[HybridState, float]:
    """Single-photon state from vacuum.

    F_H is the root fidelity to |1>, sqrt of the weight of |1> with the best ancilla state.
    """
    cfg = cfg or FockBasisConfig(32)
    state = apply(HybridState.vacuum(cfg), fock1_sequence(depth), cfg)
    weight = float(np.sum(np.abs(state.tensor()[:, 1]) ** 2))
    return state, math.sqrt(weight)


def law_eberly_sequence(n_target: int, trotter_steps: int) -> PulseSequence:
    seq = PulseSequence()
    for level in range(n_target):
        alpha = math.pi / (4 * math.sqrt(level + 1))
        piece = 2 * alpha / trotter_steps
        for _ in range(trotter_steps):
            seq = seq + p_rotation(-piece, math.pi / 2) + x_rotation(piece, 0.0)
        seq = seq + QubitRotation(0.0, math.pi)
    return seq


def law_eberly_fock(n_target: int, trotter_steps: int = 8,
                    cfg: FockBasisConfig | None = None) -> tuple[HybridState, float]:
    """Climbs |j, g> -> |j+1, e> with a Trotterized exp(2i alpha_j (a^dag sigma_+ + a sigma_-)) then flips the ancilla.

    x sigma_x - p sigma_y = a^dag sigma_+ + a sigma_-, and alpha_j = pi / (4 sqrt(j + 1)) makes each
    ladder step a full transfer.
    """
    if n_target < 1:
        raise ValueError(f"Invalid Fock target: {n_target}")
    if trotter_steps < 1:
        raise ValueError(f"Invalid number of Trotter steps: {trotter_steps}")
    cfg = cfg or FockBasisConfig(max(32, 4 * n_target + 16))
    state = apply(HybridState.vacuum(cfg), law_eberly_sequence(n_target, trotter_steps), cfg)
    target = HybridState.product([fock_state(n_target, cfg)], [KET_G])
    return state, abs(np.vdot(target.amplitudes, state.amplitudes)) ** 2
