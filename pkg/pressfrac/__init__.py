"""Phase-field fracture with crack-face pressure loads."""

from .exceptions import PressFracException
from .mesh import Mesh, MeshSpec, generate
from .models import Formulation, Material
from .solver import LoadProgram, PhaseFieldModel, SolveState, SolverConfig, run_load_program

__version__ = "2026.10.0"
