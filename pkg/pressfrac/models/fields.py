from collections.abc import Callable
from dataclasses import dataclass, field
from typing import TYPE_CHECKING

import numpy as np

from pressfrac.exceptions import AssemblyError

if TYPE_CHECKING:
    from numpy.typing import ArrayLike, NDArray

    from pressfrac.mesh import Mesh

# value(x, y, t) evaluated on arrays of node coordinates
ValueFunction = Callable[["NDArray[np.float64]", "NDArray[np.float64]", float], "ArrayLike"]


@dataclass(eq=False)
class NodalField:
    mesh: "Mesh"
    components: int
    values: "NDArray[np.float64]"

    def __post_init__(self) -> None:
        self.values = np.asarray(self.values, dtype=np.float64)
        expected = self.mesh.n_nodes * self.components
        if self.values.shape != (expected,):
            msg = (
                f"Field of {self.components} component(s) on {self.mesh.n_nodes} nodes "
                f"needs {expected} values, got shape {self.values.shape}."
            )
            raise AssemblyError(msg)

    @classmethod
    def zeros(cls, mesh: "Mesh", components: int) -> "NodalField":
        return cls(mesh, components, np.zeros(mesh.n_nodes * components))

    @classmethod
    def from_nodal(cls, mesh: "Mesh", values: "ArrayLike") -> "NodalField":
        values = np.asarray(values, dtype=np.float64)
        components = 1 if values.ndim == 1 else values.shape[1]
        return cls(mesh, components, values.reshape(-1).copy())

    @property
    def nodal(self) -> "NDArray[np.float64]":
        """Values as ``(nodes,)`` for scalars or ``(nodes, components)``."""
        if self.components == 1:
            return self.values
        return self.values.reshape(-1, self.components)

    def copy(self) -> "NodalField":
        return NodalField(self.mesh, self.components, self.values.copy())


@dataclass(frozen=True)
class DirichletBC:
    node_set: str
    component: int
    value: ValueFunction

    def dofs(self, mesh: "Mesh", components: int = 2) -> "NDArray[np.int64]":
        return mesh.nodes_of(self.node_set) * components + self.component

    def evaluate(self, mesh: "Mesh", t: float) -> "NDArray[np.float64]":
        nodes = mesh.nodes[mesh.nodes_of(self.node_set)]
        value = np.asarray(self.value(nodes[:, 0], nodes[:, 1], t), dtype=np.float64)
        return np.broadcast_to(value, (len(nodes),)).copy()


def fixed(node_set: str, component: int, value: float = 0.0) -> DirichletBC:
    return DirichletBC(node_set, component, lambda x, y, t: np.full_like(x, value))


@dataclass(frozen=True)
class TractionBC:
    """Surface load on a boundary set.

    ``value(x, y, t)`` returns tractions of shape ``(..., 2)``; ``pressure(t)``
    adds a normal pressure -p n acting against the outward normal.
    """

    boundary_set: str
    value: "Callable[[NDArray[np.float64], NDArray[np.float64], float], ArrayLike] | None" = None
    pressure: "Callable[[float], float] | None" = None


@dataclass
class Loads:
    time: float = 0.0
    pressure: float = 0.0
    dirichlet: list[DirichletBC] = field(default_factory=list)
    tractions: list[TractionBC] = field(default_factory=list)
