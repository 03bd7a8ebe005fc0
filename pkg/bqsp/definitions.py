from __future__ import annotations
import math
from typing import Literal
from enum import IntEnum

LogicalBasis = Literal['X', 'Y', 'Z']

Quadrature = Literal['x', 'p', 'x+p']

Corrector = Literal['none', 'gcr', 'bb1']

CatParity = Literal['even', 'odd']

ReadoutVariant = Literal[
    'infinite_energy',
    'gcr_finite',
    'bb1',
    'gcr_bb1',
    'bb1_of_gcr'
]

TeleportMode = Literal['error_corrected', 'trivial']

NoiseMethod = Literal['density', 'trajectory']

DeltaExtraction = Literal['variance', 'fit']


# computational basis of the ancilla, sigma_z|g> = +|g>
class QubitLevel(IntEnum):
    g = 0
    e = 1


# quadrature attached to each logical basis of the square GKP code
BASIS_QUADRATURE: dict[str, Quadrature] = {
    'X': 'p',
    'Y': 'x+p',
    'Z': 'x',
}

SQRT_PI = math.sqrt(math.pi)
SQRT_HALF_PI = math.sqrt(math.pi / 2)  # half the square GKP lattice spacing (Wigner units)
SQUARE_GKP_SPACING = math.sqrt(2 * math.pi)

MICROSECOND = 1e-6


class SimulationError(Exception):
    """Base class of every error raised while simulating a protocol."""


class TruncationError(SimulationError):
    """The Fock truncation is too small for the requested operation."""


class DimensionMismatch(SimulationError):
    pass


class RateTooLarge(SimulationError):
    """A noise substep is too long for the first-order Kraus expansion."""


class ZeroProbability(SimulationError):
    pass


class EntanglementResidual(SimulationError):
    """The ancilla did not come back to a pure computational state."""


class NoConvergence(SimulationError):
    pass


class AspectRatioError(SimulationError):
    pass
