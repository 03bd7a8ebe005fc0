from .definitions import *
from .hilbert import *
from .instructions import *
from .noise import *
from .composite_pulses import *
from .state_prep import *
from .gkp_code import *
from .gkp import *
from .phase_estimation import *
from .session_context import *
from .results import *
from .experiments import *
