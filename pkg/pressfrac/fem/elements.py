from typing import TYPE_CHECKING, NamedTuple

import numpy as np

from pressfrac.exceptions import AssemblyError
from pressfrac.models.enums import ElementKind

if TYPE_CHECKING:
    from numpy.typing import ArrayLike, NDArray


_GAUSS = 1.0 / np.sqrt(3.0)


class QuadratureRule(NamedTuple):
    points: "NDArray[np.float64]"
    weights: "NDArray[np.float64]"


class ShapeValues(NamedTuple):
    N: "NDArray[np.float64]"
    # physical gradients, shape (..., nodes, 2)
    dN: "NDArray[np.float64]"
    det_j: "NDArray[np.float64]"


def quadrature(kind: ElementKind) -> QuadratureRule:
    match kind:
        case ElementKind.QUAD4:
            points = np.array(
                [
                    [-_GAUSS, -_GAUSS],
                    [_GAUSS, -_GAUSS],
                    [_GAUSS, _GAUSS],
                    [-_GAUSS, _GAUSS],
                ]
            )
            return QuadratureRule(points, np.ones(4))
        case ElementKind.TRI3:
            return QuadratureRule(np.array([[1.0 / 3.0, 1.0 / 3.0]]), np.array([0.5]))
        case _:
            msg = f"Unknown element kind {kind!r}."
            raise AssemblyError(msg)


def reference_shape(
    kind: ElementKind, local: "ArrayLike"
) -> tuple["NDArray[np.float64]", "NDArray[np.float64]"]:
    """Shape functions and reference gradients at local points ``(..., 2)``.

    Returns N of shape ``(..., nodes)`` and dN/dxi of shape ``(..., nodes, 2)``.
    """
    local = np.asarray(local, dtype=np.float64)
    xi, eta = local[..., 0], local[..., 1]

    match kind:
        case ElementKind.QUAD4:
            N = 0.25 * np.stack(
                [
                    (1 - xi) * (1 - eta),
                    (1 + xi) * (1 - eta),
                    (1 + xi) * (1 + eta),
                    (1 - xi) * (1 + eta),
                ],
                axis=-1,
            )
            dxi = 0.25 * np.stack([-(1 - eta), 1 - eta, 1 + eta, -(1 + eta)], axis=-1)
            deta = 0.25 * np.stack([-(1 - xi), -(1 + xi), 1 + xi, 1 - xi], axis=-1)
        case ElementKind.TRI3:
            N = np.stack([1 - xi - eta, xi, eta], axis=-1)
            dxi = np.broadcast_to(np.array([-1.0, 1.0, 0.0]), N.shape)
            deta = np.broadcast_to(np.array([-1.0, 0.0, 1.0]), N.shape)
        case _:
            msg = f"Unknown element kind {kind!r}."
            raise AssemblyError(msg)

    return N, np.stack([dxi, deta], axis=-1)


def element_shape(
    kind: ElementKind, local: "ArrayLike", coords: "ArrayLike"
) -> ShapeValues:
    """Shape values with physical gradients.

    ``coords`` holds element node coordinates with shape ``(..., nodes, 2)``;
    leading axes broadcast against those of ``local``.
    """
    N, dN_ref = reference_shape(kind, local)
    coords = np.asarray(coords, dtype=np.float64)

    # J[a, b] = d x_a / d xi_b
    jac = np.einsum("...na,...nb->...ab", coords, dN_ref)
    det_j = jac[..., 0, 0] * jac[..., 1, 1] - jac[..., 0, 1] * jac[..., 1, 0]
    inv = np.empty_like(jac)
    with np.errstate(divide="ignore", invalid="ignore"):
        inv[..., 0, 0] = jac[..., 1, 1] / det_j
        inv[..., 1, 1] = jac[..., 0, 0] / det_j
        inv[..., 0, 1] = -jac[..., 0, 1] / det_j
        inv[..., 1, 0] = -jac[..., 1, 0] / det_j

    # dN/dx_a = dN/dxi_b * dxi_b/dx_a
    dN = np.einsum("...nb,...ba->...na", dN_ref, inv)
    return ShapeValues(N, dN, det_j)
