from __future__ import annotations
import math
import logging
from dataclasses import dataclass, replace
from functools import lru_cache
from typing import Sequence

import numpy as np
from scipy import linalg

from .definitions import TruncationError, DimensionMismatch

_logger = logging.getLogger(__name__)

type OperatorMatrix = np.ndarray
# one tensor-product term of an operator: axis index -> matrix acting on that axis
type LocalTerm = dict[int, np.ndarray]

IDENTITY_2 = np.eye(2, dtype=complex)
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
SIGMA_MINUS = np.array([[0, 1], [0, 0]], dtype=complex)  # |g><e|, decay e -> g
PROJECT_G = np.array([[1, 0], [0, 0]], dtype=complex)
PROJECT_E = np.array([[0, 0], [0, 1]], dtype=complex)

KET_G = np.array([1, 0], dtype=complex)
KET_E = np.array([0, 1], dtype=complex)
KET_PLUS = np.array([1, 1], dtype=complex) / math.sqrt(2)
KET_MINUS = np.array([1, -1], dtype=complex) / math.sqrt(2)


def sigma_axis(azimuth: float, polar: float = math.pi / 2) -> np.ndarray:
    """Pauli operator along the Bloch axis (polar, azimuth); polar=pi/2 gives the equatorial sigma_phi."""
    return (math.cos(polar) * SIGMA_Z
            + math.sin(polar) * (math.cos(azimuth) * SIGMA_X + math.sin(azimuth) * SIGMA_Y))


def eigenprojectors(sigma: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    return (IDENTITY_2 + sigma) / 2, (IDENTITY_2 - sigma) / 2


def qubit_rotation_matrix(phi: float, theta: float, polar: float = math.pi / 2) -> np.ndarray:
    """R_phi(theta) = exp(-i theta sigma_phi / 2)."""
    return math.cos(theta / 2) * IDENTITY_2 - 1j * math.sin(theta / 2) * sigma_axis(phi, polar)


def bloch_vector_of(ket: np.ndarray) -> np.ndarray:
    ket = np.asarray(ket, dtype=complex)
    rho = np.outer(ket, ket.conj()) / np.vdot(ket, ket).real
    return np.array([np.trace(rho @ s).real for s in (SIGMA_X, SIGMA_Y, SIGMA_Z)])


@dataclass(frozen=True)
class FockBasisConfig:
    dim: int = 64 # Fock truncation D
    leakage_tol: float = 1e-8 # max population admitted on the top Fock level
    strict: bool = True # raise TruncationError on leakage, otherwise log a warning and continue

    def __post_init__(self):
        if int(self.dim) != self.dim or self.dim < 2:
            raise ValueError(f"Invalid Fock dimension: {self.dim}")
        if not self.leakage_tol > 0:
            raise ValueError(f"Invalid leakage tolerance: {self.leakage_tol}")

    def with_dim(self, dim: int) -> FockBasisConfig:
        return replace(self, dim=int(dim))


def auto_fock_dim(max_displacement: float) -> int:
    """Truncation large enough for coherent tails around the largest cumulative displacement."""
    d = abs(max_displacement)
    return max(32, math.ceil(d ** 2 + 8 * d + 16))


@lru_cache(maxsize=None)
def _annihilation(dim: int) -> np.ndarray:
    a = np.diag(np.sqrt(np.arange(1, dim, dtype=float)), k=1).astype(complex)
    a.flags.writeable = False
    return a


def ladder_operators(cfg: FockBasisConfig) -> tuple[OperatorMatrix, OperatorMatrix]:
    a = _annihilation(cfg.dim)
    return a, a.conj().T


def position_operator(cfg: FockBasisConfig) -> OperatorMatrix:
    a, a_dag = ladder_operators(cfg)
    return (a + a_dag) / 2


def momentum_operator(cfg: FockBasisConfig) -> OperatorMatrix:
    a, a_dag = ladder_operators(cfg)
    return (a - a_dag) / 2j


def number_operator(cfg: FockBasisConfig) -> OperatorMatrix:
    return np.diag(np.arange(cfg.dim, dtype=float)).astype(complex)


def parity_operator(cfg: FockBasisConfig) -> OperatorMatrix:
    return np.diag((-1.0) ** np.arange(cfg.dim)).astype(complex)


def phase_rotation(theta: float, dim: int) -> np.ndarray:
    """Diagonal exp(i theta n)."""
    return np.exp(1j * theta * np.arange(dim))


@lru_cache(maxsize=32)
def _position_eigensystem(dim: int) -> tuple[np.ndarray, np.ndarray]:
    x = (_annihilation(dim) + _annihilation(dim).conj().T) / 2
    xi, vecs = linalg.eigh(x)
    xi.flags.writeable = False
    vecs.flags.writeable = False
    return xi, vecs


@lru_cache(maxsize=8192)
def _displacement(re: float, im: float, dim: int) -> np.ndarray:
    beta = complex(re, im)
    xi, vecs = _position_eigensystem(dim)
    # exp(beta a^dag - beta^* a) = exp(2i |beta| x_theta), x_theta the quadrature rotated by arg(beta) - pi/2
    core = (vecs * np.exp(2j * abs(beta) * xi)) @ vecs.conj().T
    frame = phase_rotation(np.angle(beta) - math.pi / 2, dim)
    d = frame[:, None] * core * frame.conj()[None, :]
    d.flags.writeable = False
    return d


def displacement_operator(alpha: complex, cfg: FockBasisConfig) -> OperatorMatrix:
    """Unitary displacement D(alpha) on the truncated Fock space.

    The exponential is taken from the eigendecomposition of the truncated position
    quadrature, rotated onto the direction of alpha, so it is unitary to machine precision.

    :param alpha: complex displacement, in Wigner units
    :param cfg: truncation
    :raises TruncationError: if the coherent tail of alpha does not fit in cfg.dim
    """
    alpha = complex(alpha)
    if alpha == 0:
        return np.eye(cfg.dim, dtype=complex)
    mag = abs(alpha)
    if mag ** 2 + 6 * mag >= cfg.dim:
        raise TruncationError(f"displacement |alpha|={mag:.4g} does not fit in Fock dimension {cfg.dim}")
    d = _displacement(alpha.real, alpha.imag, cfg.dim)
    leak = abs(d[-1, 0]) ** 2
    if leak >= cfg.leakage_tol:
        _flag_leakage(leak, cfg, f"D({alpha:.4g}) on vacuum")
    return d


def _flag_leakage(population: float, cfg: FockBasisConfig, context: str):
    message = f"{context}: population {population:.3g} on Fock level {cfg.dim - 1} exceeds {cfg.leakage_tol:.1g}"
    if cfg.strict:
        raise TruncationError(message)
    _logger.warning(message)


def squeezed_vacuum(delta: float, cfg: FockBasisConfig) -> np.ndarray:
    """Gaussian |0_Delta> with position wavefunction proportional to exp(-x^2/Delta^2).

    Delta < 1 squeezes position, Delta > 1 squeezes momentum.
    """
    if delta <= 0:
        raise ValueError(f"Invalid envelope width: {delta}")
    r = -math.log(delta)
    t = -math.tanh(r)
    amps = np.zeros(cfg.dim, dtype=complex)
    c = 1 / math.sqrt(math.cosh(r))
    amps[0] = c
    for m in range(1, (cfg.dim + 1) // 2):
        c *= t * math.sqrt((2 * m - 1) / (2 * m))
        amps[2 * m] = c
    # renormalize the truncated tail away
    return amps / np.linalg.norm(amps)


def fock_state(n: int, cfg: FockBasisConfig) -> np.ndarray:
    if not 0 <= n < cfg.dim:
        raise IndexError(f"Fock level {n} outside truncation {cfg.dim}")
    v = np.zeros(cfg.dim, dtype=complex)
    v[n] = 1
    return v


def coherent_state(alpha: complex, cfg: FockBasisConfig) -> np.ndarray:
    return displacement_operator(alpha, cfg)[:, 0].copy()


def gaussian_state(delta: float, center: complex, cfg: FockBasisConfig) -> np.ndarray:
    """Squeezed Gaussian |center_Delta>, i.e. D(center)|0_Delta>."""
    return displacement_operator(center, cfg) @ squeezed_vacuum(delta, cfg)


def _apply_on_axis(tensor: np.ndarray, matrix: np.ndarray, axis: int) -> np.ndarray:
    return np.moveaxis(np.tensordot(matrix, tensor, axes=([1], [axis])), 0, axis)


def apply_local(tensor: np.ndarray, terms: Sequence[LocalTerm], axis_offset: int = 0, conjugate: bool = False) -> np.ndarray:
    """Applies sum_k (prod_axis M_k,axis) to a tensor.

    axis_offset shifts every axis index (bra axes of a density tensor), conjugate applies M^*.
    """
    result = None
    for term in terms:
        out = tensor
        for axis, matrix in term.items():
            out = _apply_on_axis(out, matrix.conj() if conjugate else matrix, axis + axis_offset)
        result = out.copy() if result is None else result + out
    if result is None:
        raise ValueError("empty operator")
    return result


def local_terms_to_matrix(terms: Sequence[LocalTerm], dims: Sequence[int]) -> OperatorMatrix:
    total = None
    for term in terms:
        mat = np.ones((1, 1), dtype=complex)
        for axis, dim in enumerate(dims):
            mat = np.kron(mat, term.get(axis, np.eye(dim, dtype=complex)))
        total = mat if total is None else total + mat
    return total


@dataclass(frozen=True)
class HybridState:
    """Pure state of num_qubits ancillae and num_modes oscillators.

    Amplitudes are stored flat, qubit indices first then Fock indices (C order).
    """
    amplitudes: np.ndarray
    fock_dim: int
    num_qubits: int = 1
    num_modes: int = 1

    def __post_init__(self):
        if self.num_modes not in (1, 2):
            raise ValueError(f"Invalid number of modes: {self.num_modes}")
        expected = 2 ** self.num_qubits * self.fock_dim ** self.num_modes
        if np.shape(self.amplitudes) != (expected,):
            raise DimensionMismatch(f"expected {expected} amplitudes, got shape {np.shape(self.amplitudes)}")

    @property
    def dims(self) -> tuple[int, ...]:
        return (2,) * self.num_qubits + (self.fock_dim,) * self.num_modes

    @property
    def size(self) -> int:
        return self.amplitudes.shape[0]

    def mode_axis(self, mode: int) -> int:
        if not 0 <= mode < self.num_modes:
            raise IndexError(f"mode index {mode} out of range")
        return self.num_qubits + mode

    def qubit_axis(self, qubit: int) -> int:
        if not 0 <= qubit < self.num_qubits:
            raise IndexError(f"qubit index {qubit} out of range")
        return qubit

    def tensor(self) -> np.ndarray:
        return self.amplitudes.reshape(self.dims)

    def with_tensor(self, tensor: np.ndarray) -> HybridState:
        return replace(self, amplitudes=np.ascontiguousarray(tensor).reshape(-1))

    @staticmethod
    def product(oscillators: Sequence[np.ndarray], qubits: Sequence[np.ndarray]) -> HybridState:
        tensor = np.ones((), dtype=complex)
        for q in qubits:
            tensor = np.multiply.outer(tensor, np.asarray(q, dtype=complex))
        for osc in oscillators:
            tensor = np.multiply.outer(tensor, np.asarray(osc, dtype=complex))
        return HybridState(tensor.reshape(-1), len(oscillators[0]), len(qubits), len(oscillators))

    @staticmethod
    def vacuum(cfg: FockBasisConfig, num_qubits: int = 1, num_modes: int = 1) -> HybridState:
        return HybridState.product([fock_state(0, cfg)] * num_modes, [KET_G] * num_qubits)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def normalized(self) -> HybridState:
        n = self.norm()
        if n == 0:
            raise ValueError("cannot normalize a null state")
        return replace(self, amplitudes=self.amplitudes / n)

    def branch(self, level: int, qubit: int = 0) -> np.ndarray:
        """Unnormalized oscillator amplitude conditioned on the ancilla level."""
        return np.take(self.tensor(), level, axis=self.qubit_axis(qubit))

    def qubit_probability(self, level: int, qubit: int = 0) -> float:
        return float(np.sum(np.abs(self.branch(level, qubit)) ** 2))

    def reduced_oscillator(self, mode: int = 0) -> np.ndarray:
        t = np.moveaxis(self.tensor(), self.mode_axis(mode), 0).reshape(self.fock_dim, -1)
        return t @ t.conj().T

    def top_level_population(self) -> float:
        t = self.tensor()
        return max(
            float(np.sum(np.abs(np.take(t, self.fock_dim - 1, axis=self.mode_axis(m))) ** 2))
            for m in range(self.num_modes)
        )


def check_leakage(state: HybridState, cfg: FockBasisConfig, context: str = "state") -> HybridState:
    leak = state.top_level_population()
    if leak >= cfg.leakage_tol:
        _flag_leakage(leak, cfg, context)
    return state


def _state_matrix(state) -> tuple[np.ndarray, bool]:
    # HybridState -> (vector, True), DensityState-like -> (matrix, False)
    if isinstance(state, HybridState):
        return state.amplitudes, True
    if hasattr(state, 'matrix'):
        return state.matrix, False
    arr = np.asarray(state)
    return arr, arr.ndim == 1


def expectation(state, operator: OperatorMatrix) -> complex:
    data, pure = _state_matrix(state)
    n = data.shape[0]
    op = np.asarray(operator)
    if op.shape != (n, n):
        dims = getattr(state, 'dims', None)
        if dims is not None and len(dims) == 2 and op.shape == (dims[1], dims[1]):
            op = np.kron(np.eye(dims[0]), op) # oscillator operator on a single qubit, single mode register
        else:
            raise DimensionMismatch(f"operator of shape {op.shape} on a state of dimension {n}")
    if pure:
        return complex(np.vdot(data, op @ data))
    return complex(np.trace(data @ op))


def overlap(s1, s2) -> complex:
    v1, _ = _state_matrix(s1)
    v2, _ = _state_matrix(s2)
    if v1.shape != v2.shape:
        raise DimensionMismatch(f"overlap of states with shapes {v1.shape} and {v2.shape}")
    return complex(np.vdot(v1, v2))


def fidelity(s1, s2) -> float:
    return abs(overlap(s1, s2)) ** 2


def partial_qubit_bloch(state, qubit_index: int = 0) -> tuple[float, float, float]:
    """Bloch vector of the reduced density matrix of one ancilla."""
    if isinstance(state, HybridState):
        t = np.moveaxis(state.tensor(), state.qubit_axis(qubit_index), 0).reshape(2, -1)
        rho = t @ t.conj().T
    elif hasattr(state, 'reduced_qubit'):
        rho = state.reduced_qubit(qubit_index)
    else:
        raise DimensionMismatch(f"cannot take a qubit marginal of {type(state).__name__}")
    bloch = [np.trace(rho @ s).real for s in (SIGMA_X, SIGMA_Y, SIGMA_Z)]
    return bloch[0], bloch[1], bloch[2]


def hermite_functions(dim: int, grid: np.ndarray) -> np.ndarray:
    """Fock-state position wavefunctions <x|n> in Wigner units, shape (dim, len(grid))."""
    s = math.sqrt(2) * np.asarray(grid, dtype=float)
    out = np.zeros((dim, s.size))
    out[0] = math.pi ** -0.25 * np.exp(-s ** 2 / 2)
    if dim > 1:
        out[1] = math.sqrt(2) * s * out[0]
    for n in range(1, dim - 1):
        out[n + 1] = math.sqrt(2 / (n + 1)) * s * out[n] - math.sqrt(n / (n + 1)) * out[n - 1]
    # <x|n> normalized with respect to dx rather than ds = sqrt(2) dx
    return out * 2 ** 0.25


def _fock_amplitudes(state) -> tuple[np.ndarray, int]:
    if isinstance(state, HybridState):
        if state.num_modes != 1:
            raise NotImplementedError("wavefunctions are only sampled for single-mode states")
        return state.tensor(), state.fock_dim
    v = np.asarray(state, dtype=complex)
    return v, v.shape[-1]


def position_wavefunction(state, grid: np.ndarray) -> np.ndarray:
    """psi(x) on the grid; for a HybridState the leading axes are the ancilla levels."""
    amps, dim = _fock_amplitudes(state)
    return amps @ hermite_functions(dim, grid)


def momentum_wavefunction(state, grid: np.ndarray) -> np.ndarray:
    amps, dim = _fock_amplitudes(state)
    return (amps * (-1j) ** np.arange(dim)) @ hermite_functions(dim, grid)


def _oscillator_density(state) -> np.ndarray:
    if isinstance(state, HybridState):
        return state.reduced_oscillator()
    if hasattr(state, 'reduced_oscillator'):
        return state.reduced_oscillator()
    arr = np.asarray(state, dtype=complex)
    if arr.ndim == 1:
        return np.outer(arr, arr.conj())
    return arr


def wigner(state, x_grid: np.ndarray, p_grid: np.ndarray | None = None) -> np.ndarray:
    """Wigner function W[i, j] at (x_grid[i], p_grid[j]), normalized to 1 over dx dp.

    Iterative Laguerre recursion over the Fock density matrix of the oscillator
    (the qubit, if any, is traced out).
    """
    rho = _oscillator_density(state)
    p_grid = x_grid if p_grid is None else p_grid
    grid = np.asarray(x_grid, dtype=float)[:, None] + 1j * np.asarray(p_grid, dtype=float)[None, :]
    cutoff = rho.shape[0]
    w_prev = np.zeros((cutoff,) + grid.shape, dtype=complex)
    w_cur = np.zeros_like(w_prev)

    w_prev[0] = np.exp(-2.0 * np.abs(grid) ** 2) / np.pi
    w = np.real(rho[0, 0]) * np.real(w_prev[0])
    for n in range(1, cutoff):
        w_prev[n] = 2.0 * grid * w_prev[n - 1] / math.sqrt(n)
        w += 2 * np.real(rho[0, n] * w_prev[n])

    for m in range(1, cutoff):
        w_cur[m] = (2 * np.conj(grid) * w_prev[m] - math.sqrt(m) * w_prev[m - 1]) / math.sqrt(m)
        w += np.real(rho[m, m] * w_cur[m])
        for n in range(m + 1, cutoff):
            w_cur[n] = (2 * grid * w_cur[n - 1] - math.sqrt(m) * w_prev[n - 1]) / math.sqrt(n)
            w += 2 * np.real(rho[m, n] * w_cur[n])
        w_prev, w_cur = w_cur, w_prev
    # the recursion integrates to 1/2 over the plane alpha = x + ip
    return 2 * w


@dataclass(frozen=True)
class BlockDecomposition:
    """Oscillator blocks W_ij = <i| U |j> of a hybrid unitary."""
    W_gg: OperatorMatrix
    W_ge: OperatorMatrix
    W_eg: OperatorMatrix
    W_ee: OperatorMatrix

    def reassemble(self) -> OperatorMatrix:
        return np.block([[self.W_gg, self.W_ge], [self.W_eg, self.W_ee]])

    def failure_probability(self, oscillator: np.ndarray) -> float:
        """P_e for input oscillator state with the ancilla in |g>."""
        return float(np.linalg.norm(self.W_eg @ oscillator) ** 2)


def block_decompose(hybrid_unitary: OperatorMatrix, qubit_index: int = 0, num_qubits: int = 1) -> BlockDecomposition:
    """Blocks of a register operator on ancilla `qubit_index`, qubits leading the modes as in HybridState.

    Each block acts on the remaining qubits and the modes, in register order.
    """
    u = np.asarray(hybrid_unitary)
    if num_qubits < 1 or u.ndim != 2 or u.shape[0] != u.shape[1] or u.shape[0] % 2 ** num_qubits:
        raise DimensionMismatch(f"cannot split an operator of shape {u.shape} into ancilla blocks "
                                f"over {num_qubits} qubits")
    if not 0 <= qubit_index < num_qubits:
        raise IndexError(f"qubit index {qubit_index} out of range for {num_qubits} qubits")
    n = num_qubits + 1
    rest = u.shape[0] // 2 ** num_qubits
    t = u.reshape(((2,) * num_qubits + (rest,)) * 2)
    d = u.shape[0] // 2
    t = np.moveaxis(t, (qubit_index, n + qubit_index), (0, n)).reshape(2, d, 2, d)
    return BlockDecomposition(t[0, :, 0], t[0, :, 1], t[1, :, 0], t[1, :, 1])
