import logging
import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import TYPE_CHECKING, Optional

import msgspec
import numpy as np
from scipy.spatial import cKDTree

from pressfrac.exceptions import MeshError, MeshFormatError, MeshSpecError, MeshValidationError
from pressfrac.fem.elements import element_shape, quadrature
from pressfrac.models.enums import ElementKind, MeshVariant

if TYPE_CHECKING:
    from collections.abc import Iterator

    from numpy.typing import NDArray

logger = logging.getLogger("pressfrac.mesh")

FORMAT_HEADER = "pfmesh 1"

# Duplicate-node tolerance relative to the bounding-box diagonal.
MERGE_TOLERANCE = 1e-9


class MeshSpec(msgspec.Struct, frozen=True, kw_only=True, forbid_unknown_fields=True):
    variant: MeshVariant
    width: float = 0.0
    height: float = 0.0
    radius: float = 0.0
    # edge length of the full square plate for the hole variant
    length: float = 0.0
    h_coarse: float = 1.0
    h_fine: float = 1.0
    band: float = 0.0
    path: Optional[str] = None

    def __post_init__(self) -> None:
        for name in ("h_fine", "h_coarse"):
            if getattr(self, name) <= 0:
                msg = f"Element size {name} must be positive, got {getattr(self, name)!r}."
                raise MeshSpecError(name, msg)
        if self.h_fine > self.h_coarse:
            msg = f"h_fine ({self.h_fine!r}) must not exceed h_coarse ({self.h_coarse!r})."
            raise MeshSpecError("h_fine", msg)
        for name in ("width", "height", "radius", "length", "band"):
            if getattr(self, name) < 0:
                msg = f"{name} must not be negative, got {getattr(self, name)!r}."
                raise MeshSpecError(name, msg)

        match self.variant:
            case MeshVariant.RECT_UNIFORM | MeshVariant.RECT_BAND_REFINED:
                self._require_positive("width", "height")
                if self.variant is MeshVariant.RECT_BAND_REFINED:
                    self._require_positive("band")
                    if self.band > self.height * (1 + 1e-12):
                        msg = f"Refinement band ({self.band!r}) is wider than the domain ({self.height!r})."
                        raise MeshSpecError("band", msg)
            case MeshVariant.QUARTER_HOLE_MAPPED:
                self._require_positive("radius", "length")
                if self.radius >= self.length / 2:
                    msg = f"Hole radius {self.radius!r} must be smaller than L/2 = {self.length / 2!r}."
                    raise MeshSpecError("radius", msg)
            case MeshVariant.EXTERNAL_FILE:
                if not self.path:
                    msg = "External mesh variant needs a file path."
                    raise MeshSpecError("path", msg)

    def _require_positive(self, *names: str) -> None:
        for name in names:
            if getattr(self, name) <= 0:
                msg = f"{self.variant.value} mesh needs a positive {name}, got {getattr(self, name)!r}."
                raise MeshSpecError(name, msg)


@dataclass(frozen=True, eq=False)
class Mesh:
    nodes: "NDArray[np.float64]"
    kinds: tuple[ElementKind, ...]
    # (elements, 4) node indices, -1 padded for tri3
    connectivity: "NDArray[np.int64]"
    boundary_sets: dict[str, "NDArray[np.int64]"] = field(default_factory=dict)
    node_sets: dict[str, "NDArray[np.int64]"] = field(default_factory=dict)

    def __post_init__(self) -> None:
        for arr in (self.nodes, self.connectivity, *self.boundary_sets.values(), *self.node_sets.values()):
            arr.flags.writeable = False

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Mesh):
            return NotImplemented
        return (
            self.kinds == other.kinds
            and np.array_equal(self.nodes, other.nodes)
            and np.array_equal(self.connectivity, other.connectivity)
            and _sets_equal(self.boundary_sets, other.boundary_sets)
            and _sets_equal(self.node_sets, other.node_sets)
        )

    __hash__ = object.__hash__

    @property
    def n_nodes(self) -> int:
        return self.nodes.shape[0]

    @property
    def n_elements(self) -> int:
        return self.connectivity.shape[0]

    def element_nodes(self, element: int) -> "NDArray[np.int64]":
        return self.connectivity[element, : self.kinds[element].node_count]

    @cached_property
    def groups(self) -> list[tuple[ElementKind, "NDArray[np.int64]", "NDArray[np.int64]"]]:
        """(kind, element ids, connectivity) for each element kind present."""
        kinds = np.array([k.value for k in self.kinds])
        out = []
        for kind in ElementKind:
            ids = np.flatnonzero(kinds == kind.value)
            if ids.size:
                out.append((kind, ids, self.connectivity[ids, : kind.node_count]))
        return out

    def bounding_box(self) -> tuple[float, float, float, float]:
        lo = self.nodes.min(axis=0)
        hi = self.nodes.max(axis=0)
        return float(lo[0]), float(lo[1]), float(hi[0]), float(hi[1])

    @property
    def diagonal(self) -> float:
        x0, y0, x1, y1 = self.bounding_box()
        return math.hypot(x1 - x0, y1 - y0)

    def boundary_edges(self, name: str) -> "NDArray[np.int64]":
        """Node pairs ``(K, 2)`` of a boundary set, oriented as in their element."""
        if name not in self.boundary_sets:
            msg = f"Mesh has no boundary set named {name!r}."
            raise MeshError(msg)

        pairs = self.boundary_sets[name]
        out = np.empty((len(pairs), 2), dtype=np.int64)
        for k, (element, edge) in enumerate(pairs):
            a, b = self.kinds[element].edges()[edge]
            out[k] = self.connectivity[element, [a, b]]
        return out

    def nodes_of(self, name: str) -> "NDArray[np.int64]":
        """Sorted node indices of a node set, or of the edges of a boundary set."""
        if name in self.node_sets:
            return np.unique(self.node_sets[name])
        if name in self.boundary_sets:
            return np.unique(self.boundary_edges(name))

        msg = f"Mesh has no node or boundary set named {name!r}."
        raise MeshError(msg)

    def element_areas(self) -> "NDArray[np.float64]":
        areas = np.empty(self.n_elements)
        for kind, ids, conn in self.groups:
            rule = quadrature(kind)
            shape = element_shape(kind, rule.points[None], self.nodes[conn][:, None])
            areas[ids] = (shape.det_j * rule.weights).sum(axis=1)
        return areas

    def centroids(self) -> "NDArray[np.float64]":
        out = np.empty((self.n_elements, 2))
        for _, ids, conn in self.groups:
            out[ids] = self.nodes[conn].mean(axis=1)
        return out

    def validate(self) -> None:
        n_nodes = self.n_nodes
        if len(self.kinds) != self.n_elements:
            msg = "Element kind list and connectivity disagree in length."
            raise MeshValidationError(msg)

        for _, ids, conn in self.groups:
            bad = ((conn < 0) | (conn >= n_nodes)).any(axis=1)
            if bad.any():
                row = int(np.flatnonzero(bad)[0])
                node = conn[row][(conn[row] < 0) | (conn[row] >= n_nodes)][0]
                msg = f"Element {int(ids[row])} references node {int(node)} but the mesh has {n_nodes} nodes."
                raise MeshValidationError(msg)

        for kind, ids, conn in self.groups:
            rule = quadrature(kind)
            det_j = element_shape(kind, rule.points[None], self.nodes[conn][:, None]).det_j
            flipped = np.flatnonzero((det_j <= 0).any(axis=1))
            if flipped.size:
                msg = f"Element {int(ids[flipped[0]])} is not counter-clockwise (non-positive Jacobian)."
                raise MeshValidationError(msg)

        keys, counts = np.unique(
            np.concatenate(
                [
                    self._edge_keys(conn[:, [a for a, _ in kind.edges()]], conn[:, [b for _, b in kind.edges()]])
                    for kind, _, conn in self.groups
                ]
            ),
            return_counts=True,
        )
        for name, pairs in self.boundary_sets.items():
            element, edge = pairs[:, 0], pairs[:, 1]
            sizes = np.array([self.kinds[e].node_count if 0 <= e < self.n_elements else 0 for e in element])
            invalid = (edge < 0) | (edge >= sizes)
            if invalid.any():
                k = int(np.flatnonzero(invalid)[0])
                msg = f"Boundary set {name!r} references invalid edge ({int(element[k])}, {int(edge[k])})."
                raise MeshValidationError(msg)

            edges = self.boundary_edges(name)
            shared = counts[np.searchsorted(keys, self._edge_keys(edges[:, 0], edges[:, 1]))]
            if (shared != 1).any():
                k = int(np.flatnonzero(shared != 1)[0])
                msg = f"Boundary set {name!r} edge ({int(element[k])}, {int(edge[k])}) is shared by {int(shared[k])} elements."
                raise MeshValidationError(msg)

        for name, idx in self.node_sets.items():
            if idx.size and (idx.min() < 0 or idx.max() >= n_nodes):
                msg = f"Node set {name!r} references nodes outside the mesh."
                raise MeshValidationError(msg)

        pairs = cKDTree(self.nodes).query_pairs(MERGE_TOLERANCE * self.diagonal)
        if pairs:
            i, j = min(pairs)
            msg = f"Nodes {i} and {j} coincide within the merge tolerance."
            raise MeshValidationError(msg)

    def _edge_keys(self, a: "NDArray[np.int64]", b: "NDArray[np.int64]") -> "NDArray[np.int64]":
        lo, hi = np.minimum(a, b), np.maximum(a, b)
        return (lo * self.n_nodes + hi).ravel()


def _sets_equal(left: dict, right: dict) -> bool:
    return left.keys() == right.keys() and all(
        np.array_equal(left[k], right[k]) for k in left
    )


def _local_edge(kind: ElementKind, conn: "NDArray[np.int64]", a: int, b: int) -> int:
    for k, (i, j) in enumerate(kind.edges()):
        if {int(conn[i]), int(conn[j])} == {a, b}:
            return k

    msg = f"Nodes {a} and {b} do not form an edge of element {conn.tolist()}."
    raise MeshError(msg)


def _boundary_set(
    conn: "NDArray[np.int64]", elements: "NDArray[np.int64]", pairs: "Iterator[tuple[int, int]]"
) -> "NDArray[np.int64]":
    rows = [
        (int(e), _local_edge(ElementKind.QUAD4, conn[e], a, b))
        for e, (a, b) in zip(elements, pairs, strict=True)
    ]
    return np.array(rows, dtype=np.int64).reshape(-1, 2)


def _orient_ccw(nodes: "NDArray[np.float64]", conn: "NDArray[np.int64]") -> "NDArray[np.int64]":
    x, y = nodes[conn, 0], nodes[conn, 1]
    area = 0.5 * (x * np.roll(y, -1, axis=1) - np.roll(x, -1, axis=1) * y).sum(axis=1)
    conn = conn.copy()
    conn[area < 0] = conn[area < 0][:, ::-1]
    return conn


def graded_sizes(length: float, h_fine: float, h_coarse: float, band: float) -> "NDArray[np.float64]":
    """Cell sizes covering ``[0, length]``: ``h_fine`` up to ``band``, then
    growing by at most a factor 2 per cell up to ``h_coarse``."""
    if band > length * (1 + 1e-12):
        msg = f"Refinement band ({band!r}) is wider than the domain ({length!r})."
        raise MeshError(msg)

    n_fine = max(math.ceil(band / h_fine - 1e-9), 0)
    if n_fine * h_fine > length:
        n_fine = math.floor(length / h_fine + 1e-9)
    rest = length - n_fine * h_fine

    graded: list[float] = []
    size, total = h_fine, 0.0
    while total < rest - 1e-9 * length:
        size = min(2 * size, h_coarse)
        graded.append(size)
        total += size

    sizes = np.full(n_fine, h_fine)
    if graded:
        tail = np.array(graded)
        shrink = rest / total
        if len(graded) > 1:
            grow = rest / (total - graded[-1])
            # stretch one cell fewer when that distorts less than squeezing them all
            if abs(math.log(grow)) < abs(math.log(shrink)):
                tail, shrink = tail[:-1], grow
        sizes = np.concatenate([sizes, tail * shrink])
    return sizes


def _axis(length: float, h: float) -> "NDArray[np.float64]":
    n = max(round(length / h), 1)
    return np.linspace(0.0, length, n + 1)


def generate_rect(spec: MeshSpec) -> Mesh:
    if spec.variant not in (MeshVariant.RECT_UNIFORM, MeshVariant.RECT_BAND_REFINED):
        msg = f"generate_rect cannot build a {spec.variant.value} mesh."
        raise MeshError(msg)

    if spec.variant is MeshVariant.RECT_UNIFORM:
        xs = _axis(spec.width, spec.h_coarse)
        ys = _axis(spec.height, spec.h_coarse)
    else:
        xs = _axis(spec.width, spec.h_fine)
        sizes = graded_sizes(spec.height, spec.h_fine, spec.h_coarse, spec.band)
        ys = np.concatenate([[0.0], np.cumsum(sizes)])
        ys[-1] = spec.height

    nx, ny = len(xs) - 1, len(ys) - 1
    gx, gy = np.meshgrid(xs, ys)
    nodes = np.column_stack([gx.ravel(), gy.ravel()])

    j, i = np.divmod(np.arange(nx * ny), nx)
    n0 = j * (nx + 1) + i
    conn = np.column_stack([n0, n0 + 1, n0 + nx + 2, n0 + nx + 1]).astype(np.int64)

    def edge_set(elements, edge):
        return np.column_stack([elements, np.full(len(elements), edge)]).astype(np.int64)

    cols = np.arange(nx)
    rows = np.arange(ny)
    mesh = Mesh(
        nodes=nodes,
        kinds=(ElementKind.QUAD4,) * (nx * ny),
        connectivity=conn,
        boundary_sets={
            "bottom": edge_set(cols, 0),
            "right": edge_set(rows * nx + nx - 1, 1),
            "top": edge_set((ny - 1) * nx + cols, 2),
            "left": edge_set(rows * nx, 3),
        },
    )
    mesh.validate()
    logger.debug("Generated %d x %d rectangle mesh (%d nodes).", nx, ny, mesh.n_nodes)
    return mesh


def _coons(
    bottom: "NDArray[np.float64]",
    top: "NDArray[np.float64]",
    left: "NDArray[np.float64]",
    right: "NDArray[np.float64]",
    u: "NDArray[np.float64]",
    v: "NDArray[np.float64]",
) -> "NDArray[np.float64]":
    """Transfinite interpolation of four boundary curves sampled on ``u`` (bottom
    and top) and ``v`` (left and right). Returns points of shape (len(v), len(u), 2)."""
    uu = u[None, :, None]
    vv = v[:, None, None]
    ruled = (
        (1 - vv) * bottom[None, :, :]
        + vv * top[None, :, :]
        + (1 - uu) * left[:, None, :]
        + uu * right[:, None, :]
    )
    corners = (
        (1 - uu) * (1 - vv) * bottom[0]
        + uu * (1 - vv) * bottom[-1]
        + (1 - uu) * vv * top[0]
        + uu * vv * top[-1]
    )
    return ruled - corners


def generate_quarter_hole(spec: MeshSpec) -> Mesh:
    """Top-left quarter of a square plate of edge ``length`` with a central hole of
    ``radius``, built from two blended patches split along the diagonal and graded
    toward the negative x-axis."""
    if spec.variant is not MeshVariant.QUARTER_HOLE_MAPPED:
        msg = f"generate_quarter_hole cannot build a {spec.variant.value} mesh."
        raise MeshError(msg)

    radius, half = spec.radius, spec.length / 2

    n_radial = max(math.ceil((half - radius) / spec.h_fine - 1e-9), 2)
    u = np.linspace(0.0, 1.0, n_radial + 1)
    band = min(spec.band, half) if spec.band > 0 else 0.0
    v_low = np.concatenate([[0.0], np.cumsum(graded_sizes(half, spec.h_fine, spec.h_coarse, band))]) / half
    v_low[-1] = 1.0
    v_high = np.linspace(0.0, 1.0, max(math.ceil(half / spec.h_coarse - 1e-9), 2) + 1)

    s2 = math.sqrt(0.5)
    inner_diag = np.array([-radius * s2, radius * s2])
    outer_diag = np.array([-half, half])
    diagonal = inner_diag + u[:, None] * (outer_diag - inner_diag)

    # x-axis side: v runs from the x-axis (theta = pi) to the diagonal
    theta = math.pi - v_low * math.pi / 4
    low = _coons(
        bottom=np.column_stack([-radius - u * (half - radius), np.zeros_like(u)]),
        top=diagonal,
        left=radius * np.column_stack([np.cos(theta), np.sin(theta)]),
        right=np.column_stack([np.full_like(v_low, -half), v_low * half]),
        u=u,
        v=v_low,
    )
    # y-axis side: v runs from the diagonal to the y-axis (theta = pi/2)
    theta = 3 * math.pi / 4 - v_high * math.pi / 4
    high = _coons(
        bottom=diagonal,
        top=np.column_stack([np.zeros_like(u), radius + u * (half - radius)]),
        left=radius * np.column_stack([np.cos(theta), np.sin(theta)]),
        right=np.column_stack([-half + v_high * half, np.full_like(v_high, half)]),
        u=u,
        v=v_high,
    )
    grid = np.concatenate([low, high[1:]], axis=0)
    # exact values on the symmetry lines and the arc
    grid[0, :, 1] = 0.0
    grid[-1, :, 0] = 0.0
    n_rows = grid.shape[0] - 1
    n_low = len(v_low) - 1
    nodes = grid.reshape(-1, 2)

    def node(i, j):
        return j * (n_radial + 1) + i

    j, i = np.divmod(np.arange(n_radial * n_rows), n_radial)
    conn = np.column_stack([node(i, j), node(i + 1, j), node(i + 1, j + 1), node(i, j + 1)])
    conn = _orient_ccw(nodes, conn.astype(np.int64))

    def element(i, j):
        return j * n_radial + i

    rows = np.arange(n_rows)
    cols = np.arange(n_radial)
    sets = {
        "hole": (element(0, rows), zip(node(0, rows), node(0, rows + 1), strict=True)),
        "outer_left": (
            element(n_radial - 1, rows[:n_low]),
            zip(node(n_radial, rows[:n_low]), node(n_radial, rows[:n_low] + 1), strict=True),
        ),
        "outer_top": (
            element(n_radial - 1, rows[n_low:]),
            zip(node(n_radial, rows[n_low:]), node(n_radial, rows[n_low:] + 1), strict=True),
        ),
        "symmetry_x": (element(cols, 0), zip(node(cols, 0), node(cols + 1, 0), strict=True)),
        "symmetry_y": (
            element(cols, n_rows - 1),
            zip(node(cols, n_rows), node(cols + 1, n_rows), strict=True),
        ),
    }

    mesh = Mesh(
        nodes=nodes,
        kinds=(ElementKind.QUAD4,) * len(conn),
        connectivity=conn,
        boundary_sets={
            name: _boundary_set(conn, elements, pairs)
            for name, (elements, pairs) in sets.items()
        },
        node_sets={"hole_corner": np.array([node(0, 0)], dtype=np.int64)},
    )
    mesh.validate()
    logger.debug(
        "Generated quarter-hole mesh: %d radial x %d tangential cells (%d nodes).",
        n_radial,
        n_rows,
        mesh.n_nodes,
    )
    return mesh


def generate(spec: MeshSpec) -> Mesh:
    match spec.variant:
        case MeshVariant.RECT_UNIFORM | MeshVariant.RECT_BAND_REFINED:
            return generate_rect(spec)
        case MeshVariant.QUARTER_HOLE_MAPPED:
            return generate_quarter_hole(spec)
        case MeshVariant.EXTERNAL_FILE:
            assert spec.path is not None
            return read_mesh_file(spec.path)


def write_mesh_file(mesh: Mesh, path: "str | Path") -> None:
    lines = [FORMAT_HEADER, f"nodes {mesh.n_nodes}"]
    lines.extend(f"{x!r} {y!r}" for x, y in mesh.nodes.tolist())
    lines.append(f"elements {mesh.n_elements}")
    for e, kind in enumerate(mesh.kinds):
        idx = " ".join(str(i) for i in mesh.element_nodes(e).tolist())
        lines.append(f"{kind} {idx}")
    for name, idx in mesh.node_sets.items():
        lines.append(f"nodeset {name} {len(idx)}")
        lines.extend(str(i) for i in idx.tolist())
    for name, pairs in mesh.boundary_sets.items():
        lines.append(f"boundaryset {name} {len(pairs)}")
        lines.extend(f"{e} {k}" for e, k in pairs.tolist())

    Path(path).write_text("\n".join(lines) + "\n", encoding="ascii")


class _Lines:
    def __init__(self, text: str) -> None:
        self._lines = [
            (number, line.split())
            for number, line in enumerate(text.splitlines(), start=1)
            if line.strip() and not line.lstrip().startswith("#")
        ]
        self._pos = 0
        self.last = 0

    @property
    def eof(self) -> bool:
        return self._pos >= len(self._lines)

    def next(self, what: str) -> list[str]:
        if self.eof:
            msg = f"unexpected end of file while reading {what}"
            raise MeshFormatError(self.last + 1, msg)
        self.last, tokens = self._lines[self._pos]
        self._pos += 1
        return tokens

    def block(self, keyword: str, tokens: list[str], arity: int = 2) -> int:
        if len(tokens) != arity or tokens[0] != keyword:
            msg = f"expected '{keyword} <count>', got {' '.join(tokens)!r}"
            raise MeshFormatError(self.last, msg)
        return self.integer(tokens[-1])

    def integer(self, token: str) -> int:
        try:
            return int(token)
        except ValueError:
            msg = f"expected an integer, got {token!r}"
            raise MeshFormatError(self.last, msg) from None

    def real(self, token: str) -> float:
        try:
            return float(token)
        except ValueError:
            msg = f"expected a number, got {token!r}"
            raise MeshFormatError(self.last, msg) from None


def read_mesh_file(path: "str | Path") -> Mesh:
    reader = _Lines(Path(path).read_text(encoding="ascii"))

    if " ".join(reader.next("header")) != FORMAT_HEADER:
        msg = f"missing '{FORMAT_HEADER}' header"
        raise MeshFormatError(reader.last, msg)

    n_nodes = reader.block("nodes", reader.next("node count"))
    nodes = np.empty((n_nodes, 2))
    for k in range(n_nodes):
        tokens = reader.next("nodes")
        if len(tokens) != 2:
            msg = f"node line needs 2 coordinates, got {len(tokens)}"
            raise MeshFormatError(reader.last, msg)
        nodes[k] = [reader.real(t) for t in tokens]

    n_elements = reader.block("elements", reader.next("element count"))
    kinds: list[ElementKind] = []
    conn = np.full((n_elements, 4), -1, dtype=np.int64)
    for e in range(n_elements):
        tokens = reader.next("elements")
        try:
            kind = ElementKind(tokens[0])
        except ValueError:
            msg = f"unknown element kind {tokens[0]!r}"
            raise MeshFormatError(reader.last, msg) from None
        if len(tokens) != kind.node_count + 1:
            msg = f"{kind} element needs {kind.node_count} node indices"
            raise MeshFormatError(reader.last, msg)
        kinds.append(kind)
        conn[e, : kind.node_count] = [reader.integer(t) for t in tokens[1:]]

    node_sets: dict[str, NDArray[np.int64]] = {}
    boundary_sets: dict[str, NDArray[np.int64]] = {}
    while not reader.eof:
        tokens = reader.next("sets")
        if tokens[0] == "nodeset":
            count = reader.block("nodeset", tokens, arity=3)
            node_sets[tokens[1]] = np.array(
                [reader.integer(reader.next("nodeset")[0]) for _ in range(count)],
                dtype=np.int64,
            )
        elif tokens[0] == "boundaryset":
            count = reader.block("boundaryset", tokens, arity=3)
            rows = []
            for _ in range(count):
                pair = reader.next("boundaryset")
                if len(pair) != 2:
                    msg = "boundary set line needs 'element edge'"
                    raise MeshFormatError(reader.last, msg)
                rows.append([reader.integer(t) for t in pair])
            boundary_sets[tokens[1]] = np.array(rows, dtype=np.int64).reshape(-1, 2)
        else:
            msg = f"unexpected block {tokens[0]!r}"
            raise MeshFormatError(reader.last, msg)

    mesh = Mesh(
        nodes=nodes,
        kinds=tuple(kinds),
        connectivity=conn,
        boundary_sets=boundary_sets,
        node_sets=node_sets,
    )
    mesh.validate()
    return mesh
