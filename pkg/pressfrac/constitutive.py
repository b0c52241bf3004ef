"""Pointwise material laws of the phase-field model.

Every function accepts scalars or numpy arrays of damage values and evaluates
elementwise. Damage values outside [0, 1] are rejected instead of clipped.
"""

from dataclasses import dataclass
from typing import TYPE_CHECKING, Union

import numpy as np

from pressfrac.exceptions import DamageOutOfRange, MaterialError
from pressfrac.models.enums import Degradation, Dissipation, Indicator, Split

if TYPE_CHECKING:
    from numpy.typing import ArrayLike, NDArray

    from pressfrac.models.material import Formulation, Material

Value = Union[float, "NDArray[np.float64]"]

# Round-off allowance on the damage bounds. Values inside it are evaluated as is.
_BOUND_TOL = 1e-12

# Relative eigenvalue gap below which the strain is treated as isotropic.
_EIG_TOL = 1e-12

# Voigt helpers: [xx, yy, xy] with engineering shear strain.
_ONE = np.array([1.0, 1.0, 0.0])
_ISYM = np.diag([1.0, 1.0, 0.5])


def _damage(d: "ArrayLike") -> "NDArray[np.float64]":
    arr = np.asarray(d, dtype=np.float64)
    bad = ~np.isfinite(arr) | (arr < -_BOUND_TOL) | (arr > 1 + _BOUND_TOL)
    if np.any(bad):
        raise DamageOutOfRange(float(arr[bad].flat[0]))
    return arr


def alpha(d: "ArrayLike", dissipation: Dissipation) -> Value:
    d = _damage(d)
    match dissipation:
        case Dissipation.AT1:
            return d * 1.0
        case Dissipation.AT2:
            return d * d


def alpha_prime(d: "ArrayLike", dissipation: Dissipation) -> Value:
    d = _damage(d)
    match dissipation:
        case Dissipation.AT1:
            return np.ones_like(d)
        case Dissipation.AT2:
            return 2.0 * d


def alpha_curvature(d: "ArrayLike", dissipation: Dissipation) -> Value:
    d = _damage(d)
    match dissipation:
        case Dissipation.AT1:
            return np.zeros_like(d)
        case Dissipation.AT2:
            return np.full_like(d, 2.0)


def c0(dissipation: Dissipation) -> float:
    """Normalization constant 4 * int_0^1 sqrt(alpha(s)) ds."""
    match dissipation:
        case Dissipation.AT1:
            return 8.0 / 3.0
        case Dissipation.AT2:
            return 2.0


def indicator(d: "ArrayLike", kind: Indicator) -> tuple[Value, Value, Value]:
    """Returns (I, I', I'')."""
    d = _damage(d)
    match kind:
        case Indicator.LINEAR:
            return d * 1.0, np.ones_like(d), np.zeros_like(d)
        case Indicator.QUADRATIC:
            return d * d, 2.0 * d, np.full_like(d, 2.0)
        case Indicator.TWO_D_MINUS_D2:
            return 2.0 * d - d * d, 2.0 - 2.0 * d, np.full_like(d, -2.0)


def m_param(material: "Material", dissipation: Dissipation) -> float:
    if material.psi_c <= 0:
        msg = f"psi_c must be positive to define the cohesive parameter, got {material.psi_c!r}."
        raise MaterialError(msg)

    return material.Gc / (c0(dissipation) * material.ell * material.psi_c)


def sigma_c(material: "Material") -> float:
    """Plane-strain cohesive strength in MPa."""
    if material.psi_c <= 0:
        msg = f"psi_c must be positive to define the cohesive strength, got {material.psi_c!r}."
        raise MaterialError(msg)

    return float(np.sqrt(2 * material.E * material.psi_c / (1 - material.nu**2)))


def _cohesive_ratio(
    d: "NDArray[np.float64]", m: float, p: float
) -> tuple["NDArray[np.float64]", ...]:
    # q = N / D with N = (1-d)^2, D = (1-d)^2 + m d (1 + p d)
    n, dn, d2n = (1 - d) ** 2, -2 * (1 - d), 2.0
    den = n + m * d * (1 + p * d)
    dden = dn + m + 2 * m * p * d
    d2den = d2n + 2 * m * p

    q = n / den
    dq = (dn * den - n * dden) / den**2
    d2q = (d2n * den - n * d2den) / den**2 - 2 * dden * (dn * den - n * dden) / den**3
    return q, dq, d2q


def _degradation_terms(
    d: "ArrayLike", material: "Material", formulation: "Formulation"
) -> tuple["NDArray[np.float64]", ...]:
    d = _damage(d)
    xi = material.xi

    match formulation.degradation:
        case Degradation.QUADRATIC:
            q, dq, d2q = (1 - d) ** 2, -2 * (1 - d), np.full_like(d, 2.0)
        case Degradation.COHESIVE:
            m = m_param(material, formulation.dissipation)
            q, dq, d2q = _cohesive_ratio(d, m, material.p_shape)

    return xi + (1 - xi) * q, (1 - xi) * dq, (1 - xi) * d2q


def degradation(
    d: "ArrayLike", material: "Material", formulation: "Formulation"
) -> tuple[Value, Value]:
    """Returns (g, g')."""
    g, dg, _ = _degradation_terms(d, material, formulation)
    return g, dg


def degradation_curvature(
    d: "ArrayLike", material: "Material", formulation: "Formulation"
) -> Value:
    return _degradation_terms(d, material, formulation)[2]


@dataclass(kw_only=True)
class VoigtSplit:
    """Split evaluated at a batch of points, strains and stresses in Voigt form."""

    psi_plus: "NDArray[np.float64]"
    psi_minus: "NDArray[np.float64]"
    strain_plus: "NDArray[np.float64]"
    strain_minus: "NDArray[np.float64]"
    stress_plus: "NDArray[np.float64]"
    stress_minus: "NDArray[np.float64]"
    tangent_plus: "NDArray[np.float64]"
    tangent_minus: "NDArray[np.float64]"

    def stress(self, g: "ArrayLike") -> "NDArray[np.float64]":
        return np.asarray(g)[..., None] * self.stress_plus + self.stress_minus

    def tangent(self, g: "ArrayLike") -> "NDArray[np.float64]":
        return np.asarray(g)[..., None, None] * self.tangent_plus + self.tangent_minus

    def energy(self, g: "ArrayLike") -> "NDArray[np.float64]":
        return np.asarray(g) * self.psi_plus + self.psi_minus


def split_voigt(
    strain: "NDArray[np.float64]", lam: float, mu: float, split: Split
) -> VoigtSplit:
    """Split a batch of strains ``(..., 3)`` given as [exx, eyy, gamma_xy].

    Plane strain with zero out-of-plane strain: the 3D trace equals the in-plane
    trace and the third principal strain is zero, so it contributes nothing to
    either part.
    """
    strain = np.asarray(strain, dtype=np.float64)
    exx, eyy, exy = strain[..., 0], strain[..., 1], 0.5 * strain[..., 2]
    tr = exx + eyy

    if split is Split.NONE:
        zeros = np.zeros_like(strain)
        elastic = lam * np.outer(_ONE, _ONE) + 2 * mu * _ISYM
        tangent = np.broadcast_to(elastic, (*strain.shape[:-1], 3, 3)).copy()
        stress = strain @ elastic
        psi = 0.5 * lam * tr**2 + mu * (exx**2 + eyy**2 + 2 * exy**2)
        return VoigtSplit(
            psi_plus=psi,
            psi_minus=np.zeros_like(psi),
            strain_plus=np.stack([exx, eyy, exy], axis=-1),
            strain_minus=zeros,
            stress_plus=stress,
            stress_minus=zeros,
            tangent_plus=tangent,
            tangent_minus=np.zeros_like(tangent),
        )

    mean = 0.5 * tr
    radius = np.sqrt((0.5 * (exx - eyy)) ** 2 + exy**2)
    e1, e2 = mean + radius, mean - radius

    scale = np.abs(exx) + np.abs(eyy) + np.abs(exy)
    isotropic = radius <= _EIG_TOL * scale
    safe = np.where(isotropic, 1.0, 2.0 * radius)

    # Eigenprojection of the larger eigenvalue as tensor components [xx, yy, xy]
    m1 = np.stack(
        [
            np.where(isotropic, 1.0, (exx - e2) / safe),
            np.where(isotropic, 0.0, (eyy - e2) / safe),
            np.where(isotropic, 0.0, exy / safe),
        ],
        axis=-1,
    )
    m2 = np.stack([1.0 - m1[..., 0], 1.0 - m1[..., 1], -m1[..., 2]], axis=-1)
    m1m1 = m1[..., :, None] * m1[..., None, :]
    m2m2 = m2[..., :, None] * m2[..., None, :]
    mixed = _ISYM - m1m1 - m2m2

    def part(ramp, step):
        r1, r2, rtr = ramp(e1), ramp(e2), ramp(tr)
        s1, s2, str_ = step(e1), step(e2), step(tr)
        # Divided difference of the ramp; its limit at e1 == e2 is the step
        theta = np.where(isotropic, s1, (r1 - r2) / np.where(isotropic, 1.0, e1 - e2))

        eps = r1[..., None] * m1 + r2[..., None] * m2
        psi = 0.5 * lam * rtr**2 + mu * (r1**2 + r2**2)
        stress = lam * rtr[..., None] * _ONE + 2 * mu * eps
        proj = s1[..., None, None] * m1m1 + s2[..., None, None] * m2m2
        proj += theta[..., None, None] * mixed
        tangent = lam * str_[..., None, None] * np.outer(_ONE, _ONE) + 2 * mu * proj
        return psi, eps, stress, tangent

    psi_p, eps_p, sig_p, tan_p = part(
        lambda x: np.maximum(x, 0.0), lambda x: (x > 0).astype(np.float64)
    )
    psi_m, eps_m, sig_m, tan_m = part(
        lambda x: np.minimum(x, 0.0), lambda x: (x <= 0).astype(np.float64)
    )
    return VoigtSplit(
        psi_plus=psi_p,
        psi_minus=psi_m,
        strain_plus=eps_p,
        strain_minus=eps_m,
        stress_plus=sig_p,
        stress_minus=sig_m,
        tangent_plus=tan_p,
        tangent_minus=tan_m,
    )


@dataclass(kw_only=True)
class SplitResult:
    psi_plus: Value
    psi_minus: Value
    # symmetric 2x2 tensors
    sigma: "NDArray[np.float64]"
    strain_plus: "NDArray[np.float64]"
    strain_minus: "NDArray[np.float64]"
    # 3x3 Voigt, engineering shear strain
    tangent: "NDArray[np.float64]"


def _to_matrix(voigt: "NDArray[np.float64]") -> "NDArray[np.float64]":
    out = np.empty((*voigt.shape[:-1], 2, 2))
    out[..., 0, 0] = voigt[..., 0]
    out[..., 1, 1] = voigt[..., 1]
    out[..., 0, 1] = out[..., 1, 0] = voigt[..., 2]
    return out


def split_energy(
    strain: "ArrayLike",
    d: "ArrayLike",
    material: "Material",
    formulation: "Formulation",
) -> SplitResult:
    """Energy split, stress and consistent tangent for symmetric 2x2 strain
    tensor(s) of shape ``(..., 2, 2)`` at damage ``d``."""
    eps = np.asarray(strain, dtype=np.float64)
    if eps.shape[-2:] != (2, 2):
        msg = f"Expected strain tensors of shape (..., 2, 2), got {eps.shape}."
        raise MaterialError(msg)

    asym = np.abs(eps[..., 0, 1] - eps[..., 1, 0])
    if np.any(asym > 1e-12 * np.maximum(np.abs(eps).max(), 1e-300)):
        msg = "Strain tensor is not symmetric."
        raise MaterialError(msg)

    voigt = np.stack([eps[..., 0, 0], eps[..., 1, 1], 2 * eps[..., 0, 1]], axis=-1)
    lam, mu = material.lame
    result = split_voigt(voigt, lam, mu, formulation.split)
    g, _ = degradation(d, material, formulation)

    return SplitResult(
        psi_plus=result.psi_plus,
        psi_minus=result.psi_minus,
        sigma=_to_matrix(result.stress(g)),
        strain_plus=_to_matrix(result.strain_plus),
        strain_minus=_to_matrix(result.strain_minus),
        tangent=result.tangent(g),
    )
