from __future__ import annotations
import math
import logging
from dataclasses import dataclass, replace, fields
from typing import Sequence

import numpy as np

from .definitions import NoiseMethod, QubitLevel, RateTooLarge, ZeroProbability, DimensionMismatch, MICROSECOND
from .hilbert import (
    FockBasisConfig, HybridState, LocalTerm, SIGMA_MINUS, SIGMA_Z, PROJECT_G, PROJECT_E,
    apply_local, check_leakage, ladder_operators, local_terms_to_matrix,
)
from .instructions import DurationModel, Instruction, PulseSequence, Reset, apply, measure

_logger = logging.getLogger(__name__)

# first-order Kraus expansion is trusted while dt * 2pi * rate stays below this bound
SUBSTEP_VALIDITY = 0.1


@dataclass(frozen=True)
class NoiseModel:
    kappa_over_2pi: float = 0.0 # photon loss, 1/us
    gamma_over_2pi: float = 0.0 # ancilla decay, 1/us
    gamma_phi_over_2pi: float = 0.0 # ancilla dephasing, 1/us
    substep_dt: float = 0.01 # integration step, us

    def __post_init__(self):
        for f in fields(self):
            if getattr(self, f.name) < 0:
                raise ValueError(f"Invalid noise model: {f.name}={getattr(self, f.name)} is negative")
        if self.substep_dt <= 0:
            raise ValueError(f"Invalid noise model: substep_dt={self.substep_dt}")
        worst = self.substep_dt * 2 * math.pi * self.max_rate
        if worst >= SUBSTEP_VALIDITY:
            raise RateTooLarge(f"substep {self.substep_dt} us with rate {self.max_rate}/us gives dt*2pi*rate={worst:.3g}")

    @property
    def max_rate(self) -> float:
        return max(self.kappa_over_2pi, self.gamma_over_2pi, self.gamma_phi_over_2pi)

    @property
    def noiseless(self) -> bool:
        return self.max_rate == 0

    @staticmethod
    def from_dict(values: dict) -> NoiseModel:
        return NoiseModel(**{k: float(v) for k, v in values.items()})

    def collapse_terms(self, cfg: FockBasisConfig, num_qubits: int, num_modes: int) -> list[LocalTerm]:
        """Lindblad operators {sqrt(2pi kappa) a, sqrt(2pi gamma) sigma_-, sqrt(2pi gamma_phi / 2) sigma_z}."""
        a, _ = ladder_operators(cfg)
        ops: list[LocalTerm] = []
        if self.kappa_over_2pi > 0:
            ops += [{num_qubits + m: math.sqrt(2 * math.pi * self.kappa_over_2pi) * a} for m in range(num_modes)]
        if self.gamma_over_2pi > 0:
            ops += [{q: math.sqrt(2 * math.pi * self.gamma_over_2pi) * SIGMA_MINUS} for q in range(num_qubits)]
        if self.gamma_phi_over_2pi > 0:
            ops += [{q: math.sqrt(math.pi * self.gamma_phi_over_2pi) * SIGMA_Z} for q in range(num_qubits)]
        return ops

    def no_jump_diagonal(self, dims: tuple[int, ...], num_qubits: int, dt: float) -> np.ndarray:
        """Diagonal of K0 = I - dt/2 sum_j L_j^dag L_j as a tensor of shape dims."""
        rate = np.zeros(dims)
        for axis, dim in enumerate(dims):
            shape = [1] * len(dims)
            shape[axis] = dim
            if axis < num_qubits:
                excited = np.array([0.0, 1.0]) * 2 * math.pi * self.gamma_over_2pi
                rate = rate + (excited + math.pi * self.gamma_phi_over_2pi).reshape(shape)
            else:
                rate = rate + (2 * math.pi * self.kappa_over_2pi * np.arange(dim)).reshape(shape)
        return 1 - 0.5 * dt * rate


@dataclass(frozen=True)
class DensityState:
    matrix: np.ndarray
    fock_dim: int
    num_qubits: int = 1
    num_modes: int = 1

    def __post_init__(self):
        n = 2 ** self.num_qubits * self.fock_dim ** self.num_modes
        if np.shape(self.matrix) != (n, n):
            raise DimensionMismatch(f"expected a {n}x{n} density matrix, got {np.shape(self.matrix)}")

    @property
    def dims(self) -> tuple[int, ...]:
        return (2,) * self.num_qubits + (self.fock_dim,) * self.num_modes

    @staticmethod
    def from_pure(state: HybridState) -> DensityState:
        v = state.amplitudes
        return DensityState(np.outer(v, v.conj()), state.fock_dim, state.num_qubits, state.num_modes)

    def trace(self) -> float:
        return float(np.trace(self.matrix).real)

    def normalized(self) -> DensityState:
        return replace(self, matrix=self.matrix / self.trace())

    def with_matrix(self, matrix: np.ndarray) -> DensityState:
        return replace(self, matrix=matrix)

    def tensor(self) -> np.ndarray:
        return self.matrix.reshape(self.dims + self.dims)

    def reduced_qubit(self, qubit: int = 0) -> np.ndarray:
        if not 0 <= qubit < self.num_qubits:
            raise IndexError(f"qubit index {qubit} out of range")
        k = len(self.dims)
        rest = int(np.prod(self.dims)) // 2
        t = np.moveaxis(self.tensor(), [qubit, k + qubit], [0, 1]).reshape(2, 2, rest, rest)
        return np.einsum('abii->ab', t)

    def reduced_oscillator(self, mode: int = 0) -> np.ndarray:
        k = len(self.dims)
        axis = self.num_qubits + mode
        t = np.moveaxis(self.tensor(), [axis, k + axis], [0, 1])
        rest = int(np.prod(self.dims)) // self.fock_dim
        return np.einsum('abii->ab', t.reshape(self.fock_dim, self.fock_dim, rest, rest))

    def fidelity(self, target: HybridState) -> float:
        """<t|rho|t> for a pure target."""
        v = target.amplitudes
        return float(np.vdot(v, self.matrix @ v).real)

    def is_physical(self, tol: float = 1e-8) -> bool:
        herm = np.max(np.abs(self.matrix - self.matrix.conj().T)) < 1e2 * tol
        eig = np.linalg.eigvalsh((self.matrix + self.matrix.conj().T) / 2)
        return bool(herm and abs(self.trace() - 1) < tol and eig.min() > -tol)


def _unitary_matrix(inst: Instruction, cfg: FockBasisConfig, dims: tuple[int, ...], num_qubits: int,
                    frames: Sequence[complex]) -> np.ndarray:
    return local_terms_to_matrix(inst.local_terms(cfg, num_qubits, frames), dims)


def _kraus_step(state: DensityState, dt: float, jumps: list[np.ndarray], k0: np.ndarray) -> np.ndarray:
    rho = state.matrix
    out = k0[:, None] * rho * k0.conj()[None, :]
    for jump in jumps:
        out = out + dt * (jump @ rho @ jump.conj().T)
    return out


def _jump_matrices(noise: NoiseModel, cfg: FockBasisConfig, dims: tuple[int, ...], num_qubits: int) -> list[np.ndarray]:
    num_modes = len(dims) - num_qubits
    return [local_terms_to_matrix([term], dims) for term in noise.collapse_terms(cfg, num_qubits, num_modes)]


def _non_unitary(state: DensityState, inst: Instruction) -> DensityState:
    dims = state.dims
    k = len(dims)
    t = state.tensor()
    if isinstance(inst, Reset):
        kept = apply_local(apply_local(t, [{inst.qubit: PROJECT_G}]), [{inst.qubit: PROJECT_G}], axis_offset=k, conjugate=True)
        lowered = apply_local(apply_local(t, [{inst.qubit: SIGMA_MINUS}]), [{inst.qubit: SIGMA_MINUS}], axis_offset=k, conjugate=True)
        out = kept + lowered
    else:
        # unread measurement: dephase in the measured basis
        obs = inst.observable
        out = None
        for proj in ((np.eye(2) + obs) / 2, (np.eye(2) - obs) / 2):
            branch = apply_local(apply_local(t, [{inst.qubit: proj}]), [{inst.qubit: proj}], axis_offset=k, conjugate=True)
            out = branch if out is None else out + branch
    n = state.matrix.shape[0]
    return state.with_matrix(out.reshape(n, n))


def apply_noisy(state: DensityState, inst: Instruction | PulseSequence, noise: NoiseModel,
                durations: DurationModel, cfg: FockBasisConfig | None = None,
                frames: Sequence[complex] = ()) -> DensityState:
    """Gate interleaved with continuous noise.

    The gate is split into n = ceil(T / substep_dt) equal roots, each followed by a
    first-order Kraus channel of the Lindblad operators; the trace is renormalized
    after every substep.
    """
    cfg = cfg or FockBasisConfig(state.fock_dim)
    if isinstance(inst, PulseSequence):
        for elt in inst:
            state = apply_noisy(state, elt, noise, durations, cfg, frames)
        return state

    if not inst.unitary:
        return _non_unitary(state, inst)

    dims = state.dims
    t_us = inst.duration(durations) / MICROSECOND
    if noise.noiseless or t_us == 0:
        u = _unitary_matrix(inst, cfg, dims, state.num_qubits, frames)
        return state.with_matrix(u @ state.matrix @ u.conj().T)

    n = max(1, math.ceil(t_us / noise.substep_dt - 1e-9))
    dt = t_us / n
    u = _unitary_matrix(inst.scaled(1.0 / n), cfg, dims, state.num_qubits, frames)
    jumps = _jump_matrices(noise, cfg, dims, state.num_qubits)
    k0 = noise.no_jump_diagonal(dims, state.num_qubits, dt).reshape(-1)
    _logger.debug(f"{inst.op_name}: {t_us:.4g} us in {n} substeps")
    rho = state
    for _ in range(n):
        rho = rho.with_matrix(u @ rho.matrix @ u.conj().T)
        rho = rho.with_matrix(_kraus_step(rho, dt, jumps, k0))
        rho = rho.normalized()
    return rho


def idle(state: DensityState, time_us: float, noise: NoiseModel, cfg: FockBasisConfig | None = None) -> DensityState:
    """Free decay for time_us with no gate."""
    cfg = cfg or FockBasisConfig(state.fock_dim)
    if time_us <= 0 or noise.noiseless:
        return state
    n = max(1, math.ceil(time_us / noise.substep_dt - 1e-9))
    dt = time_us / n
    jumps = _jump_matrices(noise, cfg, state.dims, state.num_qubits)
    k0 = noise.no_jump_diagonal(state.dims, state.num_qubits, dt).reshape(-1)
    for _ in range(n):
        state = state.with_matrix(_kraus_step(state, dt, jumps, k0)).normalized()
    return state


def postselect(state: DensityState | HybridState, qubit: int, outcome: QubitLevel | int) -> tuple[DensityState | HybridState, float]:
    """Projects one ancilla on |g> or |e>, returning the renormalized state and the outcome probability."""
    proj = PROJECT_G if int(outcome) == QubitLevel.g else PROJECT_E
    if isinstance(state, HybridState):
        t = apply_local(state.tensor(), [{state.qubit_axis(qubit): proj}])
        prob = float(np.sum(np.abs(t) ** 2))
        if prob < 1e-12:
            raise ZeroProbability(f"outcome {QubitLevel(int(outcome)).name} on qubit {qubit} has probability {prob:.3g}")
        return state.with_tensor(t / math.sqrt(prob)), prob
    if not 0 <= qubit < state.num_qubits:
        raise IndexError(f"qubit index {qubit} out of range")
    k = len(state.dims)
    t = apply_local(apply_local(state.tensor(), [{qubit: proj}]), [{qubit: proj}], axis_offset=k, conjugate=True)
    n = state.matrix.shape[0]
    projected = t.reshape(n, n)
    prob = float(np.trace(projected).real)
    if prob < 1e-12:
        raise ZeroProbability(f"outcome {QubitLevel(int(outcome)).name} on qubit {qubit} has probability {prob:.3g}")
    return state.with_matrix(projected / prob), prob


def apply_noisy_trajectory(state: HybridState, inst: Instruction | PulseSequence, noise: NoiseModel,
                           durations: DurationModel, cfg: FockBasisConfig, rng: np.random.Generator,
                           frames: Sequence[complex] = ()) -> HybridState:
    """Single quantum-jump trajectory with the same substep splitting as apply_noisy."""
    if isinstance(inst, PulseSequence):
        for elt in inst:
            state = apply_noisy_trajectory(state, elt, noise, durations, cfg, rng, frames)
        return state

    if not inst.unitary:
        return apply(state, inst, cfg, frames, rng)

    t_us = inst.duration(durations) / MICROSECOND
    if noise.noiseless or t_us == 0:
        terms = inst.local_terms(cfg, state.num_qubits, frames)
        return check_leakage(state.with_tensor(apply_local(state.tensor(), terms)), cfg, inst.op_name)

    n = max(1, math.ceil(t_us / noise.substep_dt - 1e-9))
    dt = t_us / n
    terms = inst.scaled(1.0 / n).local_terms(cfg, state.num_qubits, frames)
    collapse = noise.collapse_terms(cfg, state.num_qubits, state.num_modes)
    k0 = noise.no_jump_diagonal(state.dims, state.num_qubits, dt)
    t = state.tensor()
    for _ in range(n):
        t = apply_local(t, terms)
        candidates = [apply_local(t, [c]) for c in collapse]
        weights = np.array([dt * float(np.sum(np.abs(c) ** 2)) for c in candidates])
        r = rng.random()
        if weights.size and r < weights.sum():
            j = int(np.searchsorted(np.cumsum(weights), r, side='right'))
            t = candidates[min(j, len(candidates) - 1)]
        else:
            t = k0 * t
        t = t / np.linalg.norm(t)
    return check_leakage(state.with_tensor(t), cfg, inst.op_name)


class NoisySimulator(object):
    """Runs sequences under a noise model either on density matrices or on seeded trajectories."""

    def __init__(self, cfg: FockBasisConfig, noise: NoiseModel, durations: DurationModel,
                 method: NoiseMethod = 'density', seed: int | None = None, name: str = "sim") -> None:
        self.cfg = cfg
        self.noise = noise
        self.durations = durations
        self.method = method
        self.rng = np.random.default_rng(seed)
        self.logger = logging.getLogger(f"{self.__class__.__name__}-{name}")
        if method not in ('density', 'trajectory'):
            raise ValueError(f"Invalid noise method: {method}")

    def prepare(self, state: HybridState) -> DensityState | HybridState:
        return DensityState.from_pure(state) if self.method == 'density' else state

    def run(self, state: DensityState | HybridState, seq: PulseSequence | Instruction,
            frames: Sequence[complex] = ()) -> DensityState | HybridState:
        if self.method == 'density':
            return apply_noisy(state, seq, self.noise, self.durations, self.cfg, frames)
        return apply_noisy_trajectory(state, seq, self.noise, self.durations, self.cfg, self.rng, frames)

    def detect(self, state: DensityState | HybridState, qubit: int = 0) -> tuple[DensityState | HybridState, float, bool]:
        """Mid-circuit Z check: (post state on g, probability of g, passed).

        Density matrices are post-selected exactly; trajectories sample the outcome.
        """
        if self.method == 'density':
            post, prob = postselect(state, qubit, QubitLevel.g)
            self.logger.debug(f"post-selection on g: p={prob:.6f}")
            return post, prob, True
        outcome, post, prob = measure(state, qubit, self.rng)
        p_g = prob if outcome == +1 else 1 - prob
        return post, p_g, outcome == +1

    def fidelity(self, state: DensityState | HybridState, target: HybridState) -> float:
        if isinstance(state, DensityState):
            return state.fidelity(target)
        return abs(np.vdot(target.amplitudes, state.amplitudes)) ** 2
