"""Finite-energy square GKP code and its entangling/unentangling gadgets.

Codewords are built as the Gaussian envelope e^{-delta^2 n} applied to an ideal comb of
position eigenstates, evaluated directly in the Fock basis. The entangling gadget E and the
unentangling gadget U are GCR gadgets along one quadrature; E followed by U is one round of
small-big-small stabilization.
"""
from __future__ import annotations
import math
import logging
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy import linalg

from .definitions import LogicalBasis, Quadrature, SQUARE_GKP_SPACING, BASIS_QUADRATURE
from .hilbert import (
    FockBasisConfig, displacement_operator, gaussian_state, hermite_functions, ladder_operators, number_operator,
)
from .instructions import PulseSequence
from .composite_pulses import gcr_gadget

_logger = logging.getLogger(__name__)

X_AXIS = np.array([1.0, 0.0, 0.0])
Z_AXIS = np.array([0.0, 0.0, 1.0])

# (quadrature angle, length factor) of v = cos(angle) x + sin(angle) p for each readout quadrature
QUADRATURE_GEOMETRY: dict[str, tuple[float, float]] = {
    'x': (0.0, 1.0),
    'p': (math.pi / 2, 1.0),
    'x+p': (math.pi / 4, math.sqrt(2)),
}


def quadrature_geometry(quadrature: Quadrature) -> tuple[float, float]:
    geometry = QUADRATURE_GEOMETRY.get(quadrature)
    if geometry is None:
        raise ValueError(f"Invalid quadrature: {quadrature}")
    return geometry


@dataclass(frozen=True)
class GkpCode:
    delta: float # envelope width, e^{-delta^2 n}
    lattice_spacing: float = SQUARE_GKP_SPACING # sqrt(2 pi) for the square code (Wigner units)
    cfg: FockBasisConfig = field(default_factory=lambda: FockBasisConfig(100))

    def __post_init__(self):
        if not 0 < self.delta < 1:
            raise ValueError(f"Invalid GKP envelope width: {self.delta}")
        if not self.lattice_spacing > 0:
            raise ValueError(f"Invalid lattice spacing: {self.lattice_spacing}")

    @property
    def half_spacing(self) -> float:
        """Distance x0 between neighbouring |0> and |1> peaks."""
        return self.lattice_spacing / 2

    @property
    def envelope(self) -> np.ndarray:
        """Diagonal of E = e^{-delta^2 n}."""
        return np.exp(-self.delta ** 2 * np.arange(self.cfg.dim))

    def _comb(self, parity: int) -> np.ndarray:
        # Fock amplitudes of sum_n |x = (2n + parity) x0>, cut where the Hermite functions vanish
        x0 = self.half_spacing
        reach = math.sqrt(2 * self.cfg.dim) + 3
        n_max = int(reach / (2 * x0)) + 1
        points = np.array([(2 * n + parity) * x0 for n in range(-n_max, n_max + 1)])
        points = points[np.abs(points) <= reach]
        return hermite_functions(self.cfg.dim, points).sum(axis=1).astype(complex)

    @cached_property
    def _combs(self) -> tuple[np.ndarray, np.ndarray]:
        return self._comb(0), self._comb(1)

    def _enveloped(self, amplitudes: np.ndarray) -> np.ndarray:
        v = self.envelope * amplitudes
        return v / np.linalg.norm(v)

    def codeword(self, label: str) -> np.ndarray:
        """Normalized finite-energy codeword for label in {'0', '1', '+', '-', '+i', '-i'}."""
        zero, one = self._combs
        combos = {
            '0': (1, 0), '1': (0, 1),
            '+': (1, 1), '-': (1, -1),
            '+i': (1, 1j), '-i': (1, -1j),
        }
        if label not in combos:
            raise ValueError(f"Invalid codeword label: {label}")
        a, b = combos[label]
        return self._enveloped(a * zero + b * one)

    def encode(self, a: complex, b: complex) -> np.ndarray:
        """Normalized finite-energy a|0> + b|1>."""
        zero, one = self._combs
        return self._enveloped(a * zero + b * one)

    def logical_eigenstates(self, basis: LogicalBasis) -> tuple[np.ndarray, np.ndarray]:
        """(codeword read out as g, codeword read out as e) for a readout in the given basis.

        exp(i sqrt(2 pi)(x + p)) acts as -Y on the code, so the Y pair is (|-i>, |+i>).
        """
        pairs = {'Z': ('0', '1'), 'X': ('+', '-'), 'Y': ('-i', '+i')}
        if basis not in pairs:
            raise ValueError(f"Invalid logical basis: {basis}")
        first, second = pairs[basis]
        return self.codeword(first), self.codeword(second)

    def helstrom_error(self) -> float:
        """Minimum error of discriminating |0> from |1>, (1 - sqrt(1 - |<0|1>|^2)) / 2."""
        s = abs(np.vdot(self.codeword('0'), self.codeword('1'))) ** 2
        return (1 - math.sqrt(max(0.0, 1 - s))) / 2

    def _conjugated_displacement(self, alpha: complex) -> np.ndarray:
        # E D(alpha) E^{-1} = exp(alpha e^{-delta^2} a^dag - alpha^* e^{delta^2} a)
        a, a_dag = ladder_operators(self.cfg)
        d2 = self.delta ** 2
        return linalg.expm(alpha * math.exp(-d2) * a_dag - alpha.conjugate() * math.exp(d2) * a)

    @cached_property
    def stabilizers(self) -> tuple[np.ndarray, np.ndarray]:
        """Finite-energy stabilizers (S_x, S_p) = E D(l) E^-1 and E D(il) E^-1."""
        l = self.lattice_spacing
        return self._conjugated_displacement(complex(l)), self._conjugated_displacement(1j * l)

    def stabilizer_expectations(self, oscillator: np.ndarray) -> tuple[float, float]:
        """Real parts of <S_x> and <S_p> for a pure oscillator state (or a density matrix)."""
        rho = np.asarray(oscillator, dtype=complex)
        out = []
        for s in self.stabilizers:
            if rho.ndim == 1:
                out.append(float(np.vdot(rho, s @ rho).real / np.vdot(rho, rho).real))
            else:
                out.append(float(np.trace(rho @ s).real / np.trace(rho).real))
        return out[0], out[1]

    def logical_operators(self) -> dict[str, complex]:
        """Displacements implementing the logical Paulis of the ideal code."""
        half = self.lattice_spacing / 2
        return {'X': complex(half), 'Z': 1j * half, 'Y': complex(half, half)}

    def binomial_target(self, peaks: int) -> np.ndarray:
        """sum_i sqrt(C(K, i) / 2^K) |(2i - K) x0>_delta, the state reached after K preparation circuits."""
        if peaks < 0:
            raise ValueError(f"Invalid number of preparation circuits: {peaks}")
        x0 = self.half_spacing
        out = np.zeros(self.cfg.dim, dtype=complex)
        for i in range(peaks + 1):
            w = math.sqrt(math.comb(peaks, i) / 2 ** peaks)
            out += w * gaussian_state(self.delta, (2 * i - peaks) * x0, self.cfg)
        return out / np.linalg.norm(out)

    def binomial_logical(self, peaks: int, frame: tuple[complex, complex]) -> np.ndarray:
        """a|0> + b|1> on the binomial envelope of `peaks` circuits.

        The parity of `peaks` fixes which codeword the binomial target is; its partner is the
        same envelope moved by x0.
        """
        base = self.binomial_target(peaks)
        shifted = displacement_operator(self.half_spacing, self.cfg) @ base
        zero, one = (base, shifted) if peaks % 2 == 0 else (shifted, base)
        out = frame[0] * zero + frame[1] * one
        return out / np.linalg.norm(out)

    def mean_photon_number(self, label: str = '0') -> float:
        v = self.codeword(label)
        return float(np.vdot(v, number_operator(self.cfg) @ v).real)


def _gadget_coefficient(code: GkpCode, quadrature: Quadrature) -> tuple[float, float]:
    angle, scale = quadrature_geometry(quadrature)
    return scale * code.half_spacing, angle


def entangling_gadget(code: GkpCode, quadrature: Quadrature = 'x', mode: int = 0, qubit: int = 0) -> PulseSequence:
    """E_v: maps the two codewords of the basis along v onto |g> and |e>, correction first."""
    c, angle = _gadget_coefficient(code, quadrature)
    return gcr_gadget(c, code.delta, X_AXIS, Z_AXIS, angle, True, mode, qubit)


def unentangling_gadget(code: GkpCode, quadrature: Quadrature = 'x', mode: int = 0, qubit: int = 0) -> PulseSequence:
    """U_v: the big rotation followed by the correction referenced to the output |g>."""
    c, angle = _gadget_coefficient(code, quadrature)
    return gcr_gadget(c, code.delta, X_AXIS, Z_AXIS, angle, False, mode, qubit)


def sbs_sequence(code: GkpCode, quadrature: Quadrature = 'x', mode: int = 0, qubit: int = 0) -> PulseSequence:
    """One small-big-small round, E_v then U_v; on the code it applies the logical Pauli along v."""
    return entangling_gadget(code, quadrature, mode, qubit) + unentangling_gadget(code, quadrature, mode, qubit)


def readout_quadrature(basis: LogicalBasis) -> Quadrature:
    return BASIS_QUADRATURE[basis]


def sbs_pauli(quadrature: Quadrature) -> LogicalBasis:
    """Logical Pauli applied by an SBS round along the quadrature (x: Z, p: X, x+p: Y)."""
    for basis, q in BASIS_QUADRATURE.items():
        if q == quadrature:
            return basis
    raise ValueError(f"Invalid quadrature: {quadrature}")


def track_pauli(frame: tuple[complex, complex], pauli: LogicalBasis) -> tuple[complex, complex]:
    """Logical coefficients (a, b) after the Pauli; global phases are dropped."""
    a, b = frame
    if pauli == 'Z':
        return a, -b
    if pauli == 'X':
        return b, a
    if pauli == 'Y':
        return -1j * b, 1j * a
    raise ValueError(f"Invalid logical Pauli: {pauli}")
