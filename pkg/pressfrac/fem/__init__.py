from .assembly import (
    AssembledSystem,
    Discretization,
    EnergyTerms,
    apply_dirichlet,
    assemble_damage,
    assemble_momentum,
    dirichlet_values,
    energy_terms,
    external_forces,
    potential_energy,
)
from .elements import QuadratureRule, ShapeValues, element_shape, quadrature, reference_shape
