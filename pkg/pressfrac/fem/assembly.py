"""Global assembly of the momentum and damage residuals with their Jacobians.

Element loops are vectorised per element kind. Nodal sums use ``np.bincount``
and sparse matrices are summed through COO -> CSR conversion, both of which
accumulate in a fixed order, so results are bitwise reproducible.
"""

from dataclasses import dataclass
from functools import cached_property
from typing import TYPE_CHECKING, NamedTuple, Optional

import numpy as np
import scipy.sparse as sp

from pressfrac.constitutive import (
    alpha,
    alpha_curvature,
    alpha_prime,
    c0,
    degradation,
    degradation_curvature,
    indicator,
    split_voigt,
)
from pressfrac.exceptions import AssemblyError
from pressfrac.fem.elements import element_shape, quadrature, reference_shape

if TYPE_CHECKING:
    from numpy.typing import NDArray

    from pressfrac.mesh import Mesh
    from pressfrac.models.enums import ElementKind
    from pressfrac.models.fields import Loads, NodalField
    from pressfrac.models.material import Formulation, Material

# 2-point Gauss rule on the reference edge [0, 1]
_EDGE_POINTS = 0.5 + 0.5 * np.array([-1.0, 1.0]) / np.sqrt(3.0)
_EDGE_WEIGHTS = np.array([0.5, 0.5])
# edge shape functions at the edge points, (points, 2)
_EDGE_N = np.column_stack([1.0 - _EDGE_POINTS, _EDGE_POINTS])


class AssembledSystem(NamedTuple):
    residual: "NDArray[np.float64]"
    jacobian: "sp.csr_matrix"


@dataclass(frozen=True, eq=False)
class ElementBlock:
    kind: "ElementKind"
    ids: "NDArray[np.int64]"
    conn: "NDArray[np.int64]"
    # (quad points, nodes)
    N: "NDArray[np.float64]"
    # (elements, quad points, nodes, 2)
    dN: "NDArray[np.float64]"
    # det J times rule weight, (elements, quad points)
    weights: "NDArray[np.float64]"

    @cached_property
    def B(self) -> "NDArray[np.float64]":
        """Strain-displacement operator (elements, quad points, 3, 2*nodes)."""
        ne, nq, nn, _ = self.dN.shape
        B = np.zeros((ne, nq, 3, 2 * nn))
        B[..., 0, 0::2] = self.dN[..., 0]
        B[..., 1, 1::2] = self.dN[..., 1]
        B[..., 2, 0::2] = self.dN[..., 1]
        B[..., 2, 1::2] = self.dN[..., 0]
        return B

    @cached_property
    def vector_dofs(self) -> "NDArray[np.int64]":
        dofs = np.empty((self.conn.shape[0], 2 * self.conn.shape[1]), dtype=np.int64)
        dofs[:, 0::2] = 2 * self.conn
        dofs[:, 1::2] = 2 * self.conn + 1
        return dofs


class EdgeQuadrature(NamedTuple):
    nodes: "NDArray[np.int64]"
    # physical points (edges, 2, 2)
    points: "NDArray[np.float64]"
    # length times rule weight (edges, 2)
    weights: "NDArray[np.float64]"
    # outward unit normals (edges, 2)
    normals: "NDArray[np.float64]"


class PointFields(NamedTuple):
    """Fields interpolated to the quadrature points of one element block."""

    d: "NDArray[np.float64]"
    grad_d: "NDArray[np.float64]"
    u: "NDArray[np.float64]"
    # grad_u[..., i, a] = d u_i / d x_a
    grad_u: "NDArray[np.float64]"

    @property
    def strain(self) -> "NDArray[np.float64]":
        g = self.grad_u
        return np.stack([g[..., 0, 0], g[..., 1, 1], g[..., 0, 1] + g[..., 1, 0]], axis=-1)


class Discretization:
    """Quadrature geometry and sparsity patterns of a mesh, computed once."""

    def __init__(self, mesh: "Mesh") -> None:
        self.mesh = mesh
        self.blocks: list[ElementBlock] = []
        for kind, ids, conn in mesh.groups:
            rule = quadrature(kind)
            shape = element_shape(kind, rule.points[None], mesh.nodes[conn][:, None])
            N, _ = reference_shape(kind, rule.points)
            self.blocks.append(
                ElementBlock(
                    kind=kind,
                    ids=ids,
                    conn=conn,
                    N=N,
                    dN=shape.dN,
                    weights=shape.det_j * rule.weights,
                )
            )
        self._edges: dict[str, EdgeQuadrature] = {}

    @property
    def n_nodes(self) -> int:
        return self.mesh.n_nodes

    def check(self, *fields: "NodalField") -> None:
        for f in fields:
            if f.mesh is not self.mesh:
                msg = "Field lives on a different mesh than the discretization."
                raise AssemblyError(msg)

    def point_fields(
        self, block: ElementBlock, u: "NDArray[np.float64]", d: "NDArray[np.float64]"
    ) -> PointFields:
        de = d[block.conn]
        ue = u.reshape(-1, 2)[block.conn]
        return PointFields(
            d=de @ block.N.T,
            grad_d=np.einsum("eqna,en->eqa", block.dN, de),
            u=np.einsum("qn,eni->eqi", block.N, ue),
            grad_u=np.einsum("eqna,eni->eqia", block.dN, ue),
        )

    def scatter(self, indices: "NDArray[np.int64]", values: "NDArray[np.float64]", size: int) -> "NDArray[np.float64]":
        return np.bincount(indices.ravel(), weights=values.ravel(), minlength=size)

    def sparse(
        self, indices: "list[NDArray[np.int64]]", matrices: "list[NDArray[np.float64]]", size: int
    ) -> "sp.csr_matrix":
        rows = np.concatenate([np.repeat(idx, idx.shape[1], axis=1).ravel() for idx in indices])
        cols = np.concatenate([np.tile(idx, (1, idx.shape[1])).ravel() for idx in indices])
        data = np.concatenate([m.ravel() for m in matrices])
        return sp.coo_matrix((data, (rows, cols)), shape=(size, size)).tocsr()

    def edge_quadrature(self, name: str) -> EdgeQuadrature:
        """Edge rule on a boundary set, or on every exterior edge for ``"*"``."""
        if name not in self._edges:
            edges = self._exterior_edges() if name == "*" else self.mesh.boundary_edges(name)
            a, b = self.mesh.nodes[edges[:, 0]], self.mesh.nodes[edges[:, 1]]
            tangent = b - a
            length = np.linalg.norm(tangent, axis=1)
            # counter-clockwise elements have the domain on the left of a -> b
            normals = np.column_stack([tangent[:, 1], -tangent[:, 0]]) / length[:, None]
            points = a[:, None, :] + _EDGE_POINTS[None, :, None] * tangent[:, None, :]
            self._edges[name] = EdgeQuadrature(
                nodes=edges,
                points=points,
                weights=length[:, None] * _EDGE_WEIGHTS[None, :],
                normals=normals,
            )
        return self._edges[name]

    def _exterior_edges(self) -> "NDArray[np.int64]":
        pairs = np.concatenate(
            [block.conn[:, np.array(block.kind.edges())].reshape(-1, 2) for block in self.blocks]
        )
        keys = np.minimum(pairs[:, 0], pairs[:, 1]) * self.n_nodes + np.maximum(pairs[:, 0], pairs[:, 1])
        _, first, counts = np.unique(keys, return_index=True, return_counts=True)
        return pairs[np.sort(first[counts == 1])]

    @cached_property
    def lumped_mass(self) -> "NDArray[np.float64]":
        return self.scatter(
            np.concatenate([b.conn.ravel() for b in self.blocks]),
            np.concatenate([np.einsum("eq,qn->en", b.weights, b.N).ravel() for b in self.blocks]),
            self.n_nodes,
        )


def external_forces(disc: Discretization, loads: "Optional[Loads]") -> "NDArray[np.float64]":
    f_ext = np.zeros(2 * disc.n_nodes)
    if loads is None:
        return f_ext

    for bc in loads.tractions:
        edges = disc.edge_quadrature(bc.boundary_set)
        traction = np.zeros_like(edges.points)
        if bc.value is not None:
            traction += np.asarray(bc.value(edges.points[..., 0], edges.points[..., 1], loads.time))
        if bc.pressure is not None:
            traction -= bc.pressure(loads.time) * edges.normals[:, None, :]

        # nodal[e, a, i] = sum_q w N_a t_i
        nodal = np.einsum("eq,qa,eqi->eai", edges.weights, _EDGE_N, traction)
        for i in range(2):
            f_ext += disc.scatter(2 * edges.nodes + i, nodal[..., i], 2 * disc.n_nodes)
    return f_ext


def dirichlet_values(
    disc: Discretization, loads: "Optional[Loads]"
) -> tuple["NDArray[np.int64]", "NDArray[np.float64]"]:
    if loads is None or not loads.dirichlet:
        return np.empty(0, dtype=np.int64), np.empty(0)

    dofs = np.concatenate([bc.dofs(disc.mesh) for bc in loads.dirichlet])
    values = np.concatenate([bc.evaluate(disc.mesh, loads.time) for bc in loads.dirichlet])
    return dofs, values


def apply_dirichlet(system: AssembledSystem, dofs: "NDArray[np.int64]") -> AssembledSystem:
    """Symmetric elimination: rows and columns of ``dofs`` zeroed, unit diagonal.

    The Newton increment vanishes on constrained dofs because the iterate already
    carries the prescribed values, so no right-hand-side lift remains.
    """
    if dofs.size == 0:
        return system

    n = system.residual.shape[0]
    keep = np.ones(n)
    keep[dofs] = 0.0
    D = sp.diags(keep)
    jacobian = (D @ system.jacobian @ D + sp.diags(1.0 - keep)).tocsr()
    jacobian.eliminate_zeros()
    residual = system.residual * keep
    return AssembledSystem(residual, jacobian)


def assemble_momentum(
    disc: Discretization,
    u: "NodalField",
    d: "NodalField",
    p: float,
    material: "Material",
    formulation: "Formulation",
    loads: "Optional[Loads]" = None,
    *,
    constrain: bool = True,
) -> AssembledSystem:
    """Residual (grad w, sigma) + (w, p I'(d) grad d) - <w, t> and its exact
    Jacobian with respect to u. Identical for both virtual-crack formulations."""
    disc.check(u, d)
    lam, mu = material.lame
    size = 2 * disc.n_nodes

    residual = -external_forces(disc, loads)
    indices, matrices = [], []
    for block in disc.blocks:
        pf = disc.point_fields(block, u.values, d.values)
        split = split_voigt(pf.strain, lam, mu, formulation.split)
        g, _ = degradation(pf.d, material, formulation)
        stress = split.stress(g)
        tangent = split.tangent(g)

        f_int = np.einsum("eqkj,eqk,eq->ej", block.B, stress, block.weights)
        if p != 0.0:
            _, di, _ = indicator(pf.d, formulation.indicator)
            load = np.einsum("eq,qn,eqi->eni", block.weights * p * di, block.N, pf.grad_d)
            f_int += load.reshape(f_int.shape)
        residual += disc.scatter(block.vector_dofs, f_int, size)

        indices.append(block.vector_dofs)
        matrices.append(
            np.einsum("eqki,eqkl,eqlj,eq->eij", block.B, tangent, block.B, block.weights, optimize=True)
        )

    system = AssembledSystem(residual, disc.sparse(indices, matrices, size))
    if constrain and loads is not None:
        dofs, _ = dirichlet_values(disc, loads)
        system = apply_dirichlet(system, dofs)
    return system


def assemble_damage(
    disc: Discretization,
    u: "NodalField",
    d: "NodalField",
    d_prev: "NodalField",
    dt: float,
    material: "Material",
    formulation: "Formulation",
    p: float = 0.0,
) -> AssembledSystem:
    """Damage residual and its exact Jacobian with respect to d at fixed u.

    UVC: (2 ell Gc / c0)(grad c, grad d) + (Gc / (c0 ell))(c, alpha') + (c, g' psi+)
    plus the viscous term (c, eta (d - d_prev) / dt). LVC adds
    (grad c, p u I'(d)) + (c, p (grad d . u) I''(d)).
    """
    disc.check(u, d, d_prev)
    if material.eta > 0 and dt <= 0:
        msg = f"Viscous damage needs a positive time increment, got {dt!r}."
        raise AssemblyError(msg)

    lam, mu = material.lame
    k0 = c0(formulation.dissipation)
    k_grad = 2.0 * material.ell * material.Gc / k0
    k_local = material.Gc / (k0 * material.ell)
    viscosity = material.eta / dt if material.eta > 0 else 0.0
    lvc = formulation.is_lvc and p != 0.0
    n = disc.n_nodes

    residual = np.zeros(n)
    indices, matrices = [], []
    for block in disc.blocks:
        pf = disc.point_fields(block, u.values, d.values)
        psi_plus = split_voigt(pf.strain, lam, mu, formulation.split).psi_plus
        _, dg = degradation(pf.d, material, formulation)
        d2g = degradation_curvature(pf.d, material, formulation)

        source = k_local * alpha_prime(pf.d, formulation.dissipation) + dg * psi_plus
        curvature = k_local * alpha_curvature(pf.d, formulation.dissipation) + d2g * psi_plus
        if viscosity:
            d_prev_q = d_prev.values[block.conn] @ block.N.T
            source += viscosity * (pf.d - d_prev_q)
            curvature += viscosity

        w = block.weights
        r_e = k_grad * np.einsum("eqna,eqa,eq->en", block.dN, pf.grad_d, w)
        r_e += np.einsum("qn,eq->en", block.N, w * source)
        k_e = k_grad * np.einsum("eqna,eqma,eq->enm", block.dN, block.dN, w)
        k_e += np.einsum("qn,qm,eq->enm", block.N, block.N, w * curvature)

        if lvc:
            _, di, d2i = indicator(pf.d, formulation.indicator)
            # u . grad N_n at every point
            u_dn = np.einsum("eqi,eqni->eqn", pf.u, block.dN)
            flux = np.einsum("eq,eqi->eq", d2i, pf.u * pf.grad_d)
            r_e += p * np.einsum("eq,eqn->en", w * di, u_dn)
            r_e += p * np.einsum("qn,eq->en", block.N, w * flux)
            cross = p * np.einsum("eq,eqn,qm->enm", w * d2i, u_dn, block.N)
            k_e += cross + cross.transpose(0, 2, 1)

        residual += disc.scatter(block.conn, r_e, n)
        indices.append(block.conn)
        matrices.append(k_e)

    jacobian = disc.sparse(indices, matrices, n)
    if lvc and not formulation.lvc_boundary_term:
        boundary_r, boundary_k = _lvc_boundary_flux(disc, u, d, p, formulation)
        residual -= boundary_r
        jacobian = (jacobian - boundary_k).tocsr()

    return AssembledSystem(residual, jacobian)


def _lvc_boundary_flux(
    disc: Discretization,
    u: "NodalField",
    d: "NodalField",
    p: float,
    formulation: "Formulation",
) -> tuple["NDArray[np.float64]", "sp.csr_matrix"]:
    """<c, p I'(d) u.n> over all exterior edges and its d-Jacobian."""
    edges = disc.edge_quadrature("*")
    n = disc.n_nodes
    d_q = d.values[edges.nodes] @ _EDGE_N.T
    u_q = np.einsum("qa,eai->eqi", _EDGE_N, u.nodal[edges.nodes])
    u_n = np.einsum("eqi,ei->eq", u_q, edges.normals)
    _, di, d2i = indicator(d_q, formulation.indicator)

    r_e = p * np.einsum("eq,qa->ea", edges.weights * di * u_n, _EDGE_N)
    k_e = p * np.einsum("eq,qa,qb->eab", edges.weights * d2i * u_n, _EDGE_N, _EDGE_N)
    return disc.scatter(edges.nodes, r_e, n), disc.sparse([edges.nodes], [k_e], n)


@dataclass(frozen=True)
class EnergyTerms:
    elastic: float
    fracture: float
    # int p grad d . u I'(d), the negative of the regularized pressure work
    pressure: float
    external: float

    @property
    def total(self) -> float:
        return self.elastic + self.fracture + self.pressure - self.external


def energy_terms(
    disc: Discretization,
    u: "NodalField",
    d: "NodalField",
    p: float,
    material: "Material",
    formulation: "Formulation",
    loads: "Optional[Loads]" = None,
) -> EnergyTerms:
    disc.check(u, d)
    lam, mu = material.lame
    k_local = material.Gc / (c0(formulation.dissipation) * material.ell)

    elastic = fracture = pressure = 0.0
    for block in disc.blocks:
        pf = disc.point_fields(block, u.values, d.values)
        split = split_voigt(pf.strain, lam, mu, formulation.split)
        g, _ = degradation(pf.d, material, formulation)
        w = block.weights

        elastic += float(np.sum(w * split.energy(g)))
        dissipated = alpha(pf.d, formulation.dissipation) + material.ell**2 * np.sum(pf.grad_d**2, axis=-1)
        fracture += k_local * float(np.sum(w * dissipated))
        if p != 0.0:
            _, di, _ = indicator(pf.d, formulation.indicator)
            pressure += p * float(np.sum(w * di * np.sum(pf.grad_d * pf.u, axis=-1)))

    external = float(external_forces(disc, loads) @ u.values)
    return EnergyTerms(elastic=elastic, fracture=fracture, pressure=pressure, external=external)


def potential_energy(
    disc: Discretization,
    u: "NodalField",
    d: "NodalField",
    p: float,
    material: "Material",
    formulation: "Formulation",
    loads: "Optional[Loads]" = None,
) -> float:
    return energy_terms(disc, u, d, p, material, formulation, loads).total
