from .enums import (
    Benchmark,
    Degradation,
    Dissipation,
    ElementKind,
    Indicator,
    LinearSolver,
    MeshVariant,
    Plane,
    RunStatus,
    Split,
    VirtualCrack,
)
from .material import Formulation, Material
