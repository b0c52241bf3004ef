"""Quantities of interest extracted from converged fields."""

import logging
from typing import TYPE_CHECKING, Optional

import msgspec
import numpy as np

from pressfrac.constitutive import c0, degradation, indicator, split_voigt
from pressfrac.exceptions import PostProcessingError
from pressfrac.fem.assembly import assemble_momentum
from pressfrac.models.enums import Dissipation
from pressfrac.models.fields import NodalField

if TYPE_CHECKING:
    from collections.abc import Sequence

    from numpy.typing import NDArray

    from pressfrac.fem.assembly import Discretization
    from pressfrac.mesh import Mesh
    from pressfrac.models.material import Formulation, Material

logger = logging.getLogger("pressfrac.post")

# Coordinate tolerance relative to the mesh diagonal.
_COORD_TOL = 1e-9


class JDomainSpec(msgspec.Struct, frozen=True, kw_only=True):
    """Axis-aligned rectangle centred on a crack tip, with the crack direction."""

    center: tuple[float, float]
    width: float
    height: float
    direction: tuple[float, float] = (1.0, 0.0)

    def __post_init__(self) -> None:
        if self.width <= 0 or self.height <= 0:
            msg = f"J domain needs positive dimensions, got {self.width!r} x {self.height!r}."
            raise PostProcessingError(msg)
        if abs(np.hypot(*self.direction) - 1.0) > 1e-12:
            msg = f"Crack direction must be a unit vector, got {self.direction!r}."
            raise PostProcessingError(msg)

    @property
    def bounds(self) -> tuple[float, float, float, float]:
        cx, cy = self.center
        return cx - self.width / 2, cy - self.height / 2, cx + self.width / 2, cy + self.height / 2


def build_q(mesh: "Mesh", spec: JDomainSpec) -> NodalField:
    """Nodal indicator of the J rectangle, boundary inclusive.

    Interpolated in the elements this is a plateau function whose gradient lives
    only on elements cut by the rectangle.
    """
    x0, y0, x1, y1 = spec.bounds
    mx0, my0, mx1, my1 = mesh.bounding_box()
    if x0 > mx1 or x1 < mx0 or y0 > my1 or y1 < my0:
        msg = f"J domain {spec.bounds} lies outside the mesh {mesh.bounding_box()}."
        raise PostProcessingError(msg)

    tol = _COORD_TOL * mesh.diagonal
    x, y = mesh.nodes[:, 0], mesh.nodes[:, 1]
    inside = (x >= x0 - tol) & (x <= x1 + tol) & (y >= y0 - tol) & (y <= y1 + tol)
    if not np.any(inside):
        msg = f"No mesh node lies inside the J domain {spec.bounds}."
        raise PostProcessingError(msg)

    return NodalField(mesh, 1, inside.astype(np.float64))


def j_integral(
    disc: "Discretization",
    u: NodalField,
    d: NodalField,
    p: float,
    q: NodalField,
    spec: JDomainSpec,
    material: "Material",
    formulation: "Formulation",
    *,
    symmetric: bool = False,
) -> float:
    """Domain J-integral for a diffuse crack loaded by a uniform pressure.

    J = -r . int (psi_e I - p (grad d . u) I'(d) I - grad(u)^T sigma) . grad q dA

    with psi_e the degraded energy density. ``symmetric`` doubles the value for
    a half model cut along the crack plane.
    """
    disc.check(u, d, q)
    if not np.all((q.values == 0.0) | (q.values == 1.0)):
        msg = "q must be a nodal indicator field with values 0 or 1."
        raise PostProcessingError(msg)

    lam, mu = material.lame
    r = np.asarray(spec.direction, dtype=np.float64)
    total = 0.0
    for block in disc.blocks:
        pf = disc.point_fields(block, u.values, d.values)
        grad_q = np.einsum("eqna,en->eqa", block.dN, q.values[block.conn])
        if not np.any(grad_q):
            continue

        split = split_voigt(pf.strain, lam, mu, formulation.split)
        g, _ = degradation(pf.d, material, formulation)
        s = split.stress(g)
        sigma = np.stack([np.stack([s[..., 0], s[..., 2]], -1), np.stack([s[..., 2], s[..., 1]], -1)], -2)

        scalar = split.energy(g)
        if p != 0.0:
            _, di, _ = indicator(pf.d, formulation.indicator)
            scalar = scalar - p * di * np.sum(pf.grad_d * pf.u, axis=-1)

        # T[i, j] = scalar delta_ij - du_k/dx_i sigma_kj
        tensor = scalar[..., None, None] * np.eye(2) - np.einsum("eqki,eqkj->eqij", pf.grad_u, sigma)
        total -= float(np.einsum("i,eqij,eqj,eq->", r, tensor, grad_q, block.weights))

    return 2.0 * total if symmetric else total


def _line_nodes(mesh: "Mesh", axis: int, position: float) -> "NDArray[np.int64]":
    """Nodes on the mesh line nearest ``position`` along ``axis``, sorted along the line."""
    coords = mesh.nodes[:, axis]
    lo, hi = coords.min(), coords.max()
    tol = _COORD_TOL * mesh.diagonal
    if position < lo - tol or position > hi + tol:
        name = "xy"[axis]
        msg = f"Line {name} = {position!r} lies outside the mesh range [{lo!r}, {hi!r}]."
        raise PostProcessingError(msg)

    nearest = coords[np.argmin(np.abs(coords - position))]
    nodes = np.flatnonzero(np.abs(coords - nearest) <= tol)
    order = np.argsort(mesh.nodes[nodes, 1 - axis], kind="stable")
    return nodes[order]


def aperture(
    u: NodalField,
    d: NodalField,
    formulation: "Formulation",
    *,
    x: Optional[float] = None,
    y: Optional[float] = None,
    symmetric: bool = True,
) -> float:
    """Diffuse crack opening s = -int u . grad I(d) along one mesh line.

    Give ``x`` to integrate over the column of nodes nearest that abscissa
    (crack along x) or ``y`` for the row nearest that ordinate (crack along
    y). A nodal trapezoid rule is used: -sum of the mean displacement times the
    jump of I over each segment. ``symmetric`` doubles the half-opening of a
    model cut along the crack plane.
    """
    if (x is None) == (y is None):
        msg = "Give exactly one of x or y for the aperture line."
        raise PostProcessingError(msg)

    mesh = u.mesh
    axis, position = (0, x) if x is not None else (1, y)
    nodes = _line_nodes(mesh, axis, float(position))  # pyright: ignore[reportArgumentType]
    if len(nodes) < 2:
        return 0.0

    # integrate across the line: the displacement component along it
    component = 1 - axis
    ind, _, _ = indicator(d.values[nodes], formulation.indicator)
    disp = u.nodal[nodes, component]
    s = -float(np.sum(0.5 * (disp[1:] + disp[:-1]) * np.diff(ind)))
    return 2.0 * s if symmetric else s


def effective_gc(material: "Material", h: float, dissipation: Dissipation = Dissipation.AT1) -> float:
    """Toughness corrected for the extra dissipation of a crack resolved with elements of size h."""
    if h <= 0:
        msg = f"Element size must be positive, got {h!r}."
        raise PostProcessingError(msg)

    return (1.0 + 2.0 * h / (c0(dissipation) * material.ell)) * material.Gc


def bar_traction(
    disc: "Discretization",
    u: NodalField,
    d: NodalField,
    material: "Material",
    formulation: "Formulation",
    *,
    boundary: str = "left",
    width: float = 1.0,
) -> float:
    """Axial stress resultant across the bar's mid cross-section per unit width.

    The mid-section is the symmetry edge ``boundary`` of the quarter model; the
    internal forces exclude the crack pressure term.
    """
    mesh = disc.mesh
    if boundary not in mesh.boundary_sets:
        msg = f"Bar traction needs a boundary set named {boundary!r}."
        raise PostProcessingError(msg)
    nodes = mesh.nodes_of(boundary)
    if np.ptp(mesh.nodes[nodes, 0]) > _COORD_TOL * mesh.diagonal:
        msg = f"Boundary set {boundary!r} is not a vertical cross-section."
        raise PostProcessingError(msg)

    f_int = assemble_momentum(disc, u, d, 0.0, material, formulation, constrain=False).residual
    return -float(np.sum(f_int[2 * nodes])) / width


def crack_tip(d: NodalField, *, y: float = 0.0, threshold: float = 0.9) -> Optional[float]:
    """Largest x on the mesh row nearest ``y`` where damage exceeds ``threshold``."""
    nodes = _line_nodes(d.mesh, 1, y)
    broken = nodes[d.values[nodes] > threshold]
    if broken.size == 0:
        return None
    return float(d.mesh.nodes[broken, 0].max())


def steady_state_error(
    times: "Sequence[float] | NDArray[np.float64]",
    ratios: "Sequence[float] | NDArray[np.float64]",
    window: tuple[float, float] = (1.1, 1.4),
) -> float:
    """Mean of |J/Gc_eff - 1| over the samples with scaled time inside ``window``."""
    t = np.asarray(times, dtype=np.float64)
    ratio = np.asarray(ratios, dtype=np.float64)
    selected = (t >= window[0]) & (t <= window[1]) & np.isfinite(ratio)
    if not np.any(selected):
        msg = f"No J samples inside the steady-state window {window!r}."
        raise PostProcessingError(msg)

    return float(np.mean(np.abs(ratio[selected] - 1.0)))


def element_stresses(
    disc: "Discretization",
    u: NodalField,
    d: NodalField,
    material: "Material",
    formulation: "Formulation",
) -> "NDArray[np.float64]":
    """Area-averaged Voigt stress [sxx, syy, sxy] of every element."""
    disc.check(u, d)
    lam, mu = material.lame
    out = np.empty((disc.mesh.n_elements, 3))
    for block in disc.blocks:
        pf = disc.point_fields(block, u.values, d.values)
        g, _ = degradation(pf.d, material, formulation)
        stress = split_voigt(pf.strain, lam, mu, formulation.split).stress(g)
        area = block.weights.sum(axis=1)
        out[block.ids] = np.einsum("eq,eqk->ek", block.weights, stress) / area[:, None]
    return out
