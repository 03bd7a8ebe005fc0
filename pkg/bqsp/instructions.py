from __future__ import annotations
import json
import math
import logging
from abc import ABCMeta, abstractmethod
from dataclasses import dataclass, field, asdict, fields
from pathlib import Path
from typing import ClassVar, Iterator, Sequence

import numpy as np

from .definitions import ZeroProbability
from .hilbert import (
    FockBasisConfig, HybridState, LocalTerm, IDENTITY_2, SIGMA_X, SIGMA_Y, SIGMA_Z, PROJECT_G, PROJECT_E,
    apply_local, check_leakage, displacement_operator, eigenprojectors, qubit_rotation_matrix, sigma_axis,
)

_logger = logging.getLogger(__name__)

TWO_PI = 2 * math.pi


def _complex_to_json(z: complex) -> list[float]:
    return [float(z.real), float(z.imag)]


def _complex_from_json(v) -> complex:
    if isinstance(v, (list, tuple)):
        return complex(v[0], v[1])
    return complex(v)


@dataclass(frozen=True)
class DurationModel:
    tau_per_unit_amplitude: float = 1e-6 # seconds per unit |beta| of conditional displacement
    rotation_time: float = 0.0 # seconds per qubit rotation, 24e-9 on typical hardware
    min_cd_time: float = 48e-9 # floor on the duration of any conditional displacement

    def __post_init__(self):
        for f in fields(self):
            if getattr(self, f.name) < 0:
                raise ValueError(f"Invalid duration model: {f.name}={getattr(self, f.name)} is negative")

    @staticmethod
    def from_dict(values: dict) -> DurationModel:
        return DurationModel(**{k: float(v) for k, v in values.items()})


class Instruction(metaclass=ABCMeta):
    """Element of the phase-space instruction set."""

    op_name: ClassVar[str]
    unitary: ClassVar[bool] = True

    @abstractmethod
    def local_terms(self, cfg: FockBasisConfig, num_qubits: int, frames: Sequence[complex] = ()) -> list[LocalTerm]:
        raise NotImplementedError

    def duration(self, model: DurationModel) -> float:
        return 0.0

    def scaled(self, fraction: float) -> Instruction:
        """Instruction whose unitary is this unitary raised to `fraction`."""
        raise NotImplementedError(f"{self.op_name} cannot be split")

    def inverse(self) -> Instruction:
        return self.scaled(-1.0)

    def to_dict(self) -> dict:
        out = {'op': self.op_name}
        for k, v in asdict(self).items():
            out[k] = _complex_to_json(v) if isinstance(v, complex) else v
        return out

    @staticmethod
    def from_dict(values: dict) -> Instruction:
        values = dict(values)
        op = values.pop('op')
        cls = _INSTRUCTIONS.get(op)
        if cls is None:
            raise ValueError(f"Invalid instruction: {op}")
        for f in fields(cls):
            if f.type in ('complex', complex) and f.name in values:
                values[f.name] = _complex_from_json(values[f.name])
        return cls(**values)


def _normalized_phi(phi: float) -> float:
    return float(phi) % TWO_PI


@dataclass(frozen=True)
class QubitRotation(Instruction):
    phi: float
    theta: float
    qubit: int = 0

    op_name: ClassVar[str] = 'rotation'

    def __post_init__(self):
        object.__setattr__(self, 'phi', _normalized_phi(self.phi))

    def matrix(self) -> np.ndarray:
        return qubit_rotation_matrix(self.phi, self.theta)

    def local_terms(self, cfg, num_qubits, frames=()):
        return [{self.qubit: self.matrix()}]

    def duration(self, model: DurationModel) -> float:
        return model.rotation_time

    def scaled(self, fraction: float) -> QubitRotation:
        return QubitRotation(self.phi, self.theta * fraction, self.qubit)


@dataclass(frozen=True)
class RotationZ(Instruction):
    theta: float
    qubit: int = 0

    op_name: ClassVar[str] = 'rz'

    def matrix(self) -> np.ndarray:
        return qubit_rotation_matrix(0.0, self.theta, polar=0.0)

    def local_terms(self, cfg, num_qubits, frames=()):
        return [{self.qubit: self.matrix()}]

    def duration(self, model: DurationModel) -> float:
        return model.rotation_time

    def scaled(self, fraction: float) -> RotationZ:
        return RotationZ(self.theta * fraction, self.qubit)


@dataclass(frozen=True)
class ConditionalDisplacement(Instruction):
    """CD(beta, sigma) = exp((beta a^dag - beta^* a) sigma) = exp(2i v sigma), v = Im(beta) x - Re(beta) p.

    sigma is the Pauli operator along the Bloch axis (polar, phi); the default polar angle
    keeps it on the equator.
    """
    beta: complex
    phi: float = 0.0
    mode: int = 0
    qubit: int = 0
    polar: float = math.pi / 2

    op_name: ClassVar[str] = 'cd'

    def __post_init__(self):
        object.__setattr__(self, 'beta', complex(self.beta))
        object.__setattr__(self, 'phi', _normalized_phi(self.phi))

    @property
    def sigma(self) -> np.ndarray:
        return sigma_axis(self.phi, self.polar)

    def local_terms(self, cfg, num_qubits, frames=()):
        plus, minus = eigenprojectors(self.sigma)
        mu = complex(frames[self.mode]) if self.mode < len(frames) else 0j
        # in a frame displaced by mu the gate picks up exp(2i Im(beta mu^*) sigma)
        kick = np.exp(2j * (self.beta * mu.conjugate()).imag)
        axis = num_qubits + self.mode
        return [
            {axis: displacement_operator(self.beta, cfg) * kick, self.qubit: plus},
            {axis: displacement_operator(-self.beta, cfg) / kick, self.qubit: minus},
        ]

    def qubit_angle(self, x: float, p: float) -> float:
        """2v at the classical phase-space point (x, p)."""
        return 2 * (self.beta.imag * x - self.beta.real * p)

    def duration(self, model: DurationModel) -> float:
        return max(abs(self.beta) * model.tau_per_unit_amplitude, model.min_cd_time)

    def scaled(self, fraction: float) -> ConditionalDisplacement:
        return ConditionalDisplacement(self.beta * fraction, self.phi, self.mode, self.qubit, self.polar)


@dataclass(frozen=True)
class UnconditionalDisplacement(Instruction):
    alpha: complex
    mode: int = 0

    op_name: ClassVar[str] = 'displace'

    def __post_init__(self):
        object.__setattr__(self, 'alpha', complex(self.alpha))

    def local_terms(self, cfg, num_qubits, frames=()):
        # in a displaced frame this only adds a global phase
        return [{num_qubits + self.mode: displacement_operator(self.alpha, cfg)}]

    def scaled(self, fraction: float) -> UnconditionalDisplacement:
        return UnconditionalDisplacement(self.alpha * fraction, self.mode)


@dataclass(frozen=True)
class ControlledPhase(Instruction):
    """diag(1, 1, 1, e^{i theta}) between two ancillae."""
    theta: float
    qubit_a: int = 0
    qubit_b: int = 1

    op_name: ClassVar[str] = 'cphase'

    def local_terms(self, cfg, num_qubits, frames=()):
        return [
            {self.qubit_a: PROJECT_G},
            {self.qubit_a: PROJECT_E, self.qubit_b: np.diag([1, np.exp(1j * self.theta)])},
        ]

    def duration(self, model: DurationModel) -> float:
        return model.rotation_time

    def scaled(self, fraction: float) -> ControlledPhase:
        return ControlledPhase(self.theta * fraction, self.qubit_a, self.qubit_b)


@dataclass(frozen=True)
class Reset(Instruction):
    qubit: int = 0

    op_name: ClassVar[str] = 'reset'
    unitary: ClassVar[bool] = False

    def local_terms(self, cfg, num_qubits, frames=()):
        raise NotImplementedError("reset is not unitary")


@dataclass(frozen=True)
class MeasureZ(Instruction):
    qubit: int = 0

    op_name: ClassVar[str] = 'measure_z'
    unitary: ClassVar[bool] = False
    observable: ClassVar[np.ndarray] = SIGMA_Z

    def local_terms(self, cfg, num_qubits, frames=()):
        raise NotImplementedError("measurement is not unitary")


@dataclass(frozen=True)
class MeasureY(Instruction):
    qubit: int = 0

    op_name: ClassVar[str] = 'measure_y'
    unitary: ClassVar[bool] = False
    observable: ClassVar[np.ndarray] = SIGMA_Y

    def local_terms(self, cfg, num_qubits, frames=()):
        raise NotImplementedError("measurement is not unitary")


_INSTRUCTIONS: dict[str, type[Instruction]] = {
    cls.op_name: cls for cls in (
        QubitRotation, RotationZ, ConditionalDisplacement, UnconditionalDisplacement,
        ControlledPhase, Reset, MeasureZ, MeasureY,
    )
}


@dataclass(frozen=True)
class PulseSequence:
    """Immutable list of instructions, applied left to right."""
    instructions: tuple[Instruction, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, 'instructions', tuple(self.instructions))

    def __iter__(self) -> Iterator[Instruction]:
        return iter(self.instructions)

    def __len__(self) -> int:
        return len(self.instructions)

    def __getitem__(self, item):
        return self.instructions[item]

    def __add__(self, other: PulseSequence | Instruction) -> PulseSequence:
        if isinstance(other, Instruction):
            return PulseSequence(self.instructions + (other,))
        return PulseSequence(self.instructions + tuple(other.instructions))

    def inverse(self) -> PulseSequence:
        return PulseSequence(tuple(inst.inverse() for inst in reversed(self.instructions)))

    def duration(self, model: DurationModel | None = None) -> float:
        return duration(self, model or DurationModel())

    def total_cd_amplitude(self) -> float:
        return sum(abs(i.beta) for i in self.instructions if isinstance(i, ConditionalDisplacement))

    def to_json(self) -> str:
        return json.dumps([inst.to_dict() for inst in self.instructions])

    @staticmethod
    def from_json(text: str) -> PulseSequence:
        return PulseSequence(tuple(Instruction.from_dict(d) for d in json.loads(text)))

    def save(self, path: Path):
        with path.open('w') as f:
            f.write(self.to_json())

    @staticmethod
    def load(path: Path) -> PulseSequence:
        with path.open('r') as f:
            return PulseSequence.from_json(f.read())


def duration(seq: PulseSequence | Sequence[Instruction], model: DurationModel) -> float:
    """Total duration in seconds: CDs scale with |beta| (floored), rotations cost rotation_time."""
    return float(sum(inst.duration(model) for inst in seq))


def conditional_rotation_from_vector(beta: complex, phi: float = 0.0, mode: int = 0, qubit: int = 0) -> ConditionalDisplacement:
    """CD whose generator is i 2 v sigma_phi for the phase-space vector beta."""
    if beta == 0:
        raise ValueError("a phase-space vector must be non zero")
    return ConditionalDisplacement(complex(beta), phi, mode, qubit)


def x_rotation(coefficient: float, phi: float = 0.0, polar: float = math.pi / 2, mode: int = 0, qubit: int = 0) -> ConditionalDisplacement:
    """exp(i c x sigma) as a conditional momentum boost."""
    return ConditionalDisplacement(0.5j * coefficient, phi, mode, qubit, polar)


def p_rotation(coefficient: float, phi: float = 0.0, polar: float = math.pi / 2, mode: int = 0, qubit: int = 0) -> ConditionalDisplacement:
    """exp(i c p sigma) as a conditional position displacement."""
    return ConditionalDisplacement(complex(-0.5 * coefficient), phi, mode, qubit, polar)


def measurement_projectors(observable: np.ndarray) -> dict[int, np.ndarray]:
    plus, minus = eigenprojectors(observable)
    return {+1: plus, -1: minus}


def measure(state: HybridState, qubit: int, rng: np.random.Generator, observable: np.ndarray = SIGMA_Z,
            forced: int | None = None) -> tuple[int, HybridState, float]:
    """Projective measurement of one ancilla: (outcome +/-1, normalized post state, probability).

    `forced` selects the outcome instead of sampling it (post-selection).
    """
    axis = state.qubit_axis(qubit)
    branches = {}
    for outcome, proj in measurement_projectors(observable).items():
        t = apply_local(state.tensor(), [{axis: proj}])
        branches[outcome] = (float(np.sum(np.abs(t) ** 2)), t)
    p_plus = branches[+1][0]
    if forced is None:
        outcome = +1 if rng.random() < p_plus else -1
    else:
        outcome = forced
    prob, t = branches[outcome]
    if prob <= 0:
        raise ZeroProbability(f"measurement outcome {outcome} has zero probability")
    return outcome, state.with_tensor(t / math.sqrt(prob)), prob


def apply(state: HybridState, inst: Instruction | PulseSequence, cfg: FockBasisConfig,
          frames: Sequence[complex] = (), rng: np.random.Generator | None = None) -> HybridState:
    """Exact action of an instruction (or a whole sequence) on a pure state.

    Measurements and resets sample their outcome from rng.
    """
    if isinstance(inst, PulseSequence):
        for elt in inst:
            state = apply(state, elt, cfg, frames, rng)
        return state

    if inst.unitary:
        t = apply_local(state.tensor(), inst.local_terms(cfg, state.num_qubits, frames))
        return check_leakage(state.with_tensor(t), cfg, inst.op_name)

    if rng is None:
        raise ValueError(f"{inst.op_name} needs a random generator")
    if isinstance(inst, Reset):
        outcome, post, _ = measure(state, inst.qubit, rng)
        if outcome == -1:
            post = post.with_tensor(apply_local(post.tensor(), [{inst.qubit: SIGMA_X}]))
        return post
    _, post, _ = measure(state, inst.qubit, rng, inst.observable)
    return post


def sequence_unitary(seq: PulseSequence | Sequence[Instruction], cfg: FockBasisConfig, num_qubits: int = 1,
                     num_modes: int = 1, frames: Sequence[complex] = ()) -> np.ndarray:
    """Dense matrix of a unitary sequence on the register (qubits first, then modes)."""
    dims = (2,) * num_qubits + (cfg.dim,) * num_modes
    n = int(np.prod(dims))
    u = np.eye(n, dtype=complex)
    for inst in seq:
        if not inst.unitary:
            raise ValueError(f"{inst.op_name} has no unitary matrix")
        t = apply_local(u.reshape(dims + (n,)), inst.local_terms(cfg, num_qubits, frames))
        u = t.reshape(n, n)
    return u


def classical_qubit_unitary(seq: PulseSequence | Sequence[Instruction], x: float, p: float = 0.0) -> np.ndarray:
    """Ideal single-ancilla unitary of a sequence when the oscillator sits at the classical point (x, p)."""
    u = IDENTITY_2.copy()
    for inst in seq:
        if isinstance(inst, ConditionalDisplacement):
            angle = inst.qubit_angle(x, p)
            u = (math.cos(angle) * IDENTITY_2 + 1j * math.sin(angle) * inst.sigma) @ u
        elif isinstance(inst, (QubitRotation, RotationZ)):
            u = inst.matrix() @ u
        elif isinstance(inst, UnconditionalDisplacement):
            x += inst.alpha.real
            p += inst.alpha.imag
    return u
