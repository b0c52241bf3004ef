import msgspec

from pressfrac.exceptions import MaterialError

from .enums import Degradation, Dissipation, Indicator, Plane, Split, VirtualCrack


class Material(msgspec.Struct, frozen=True, kw_only=True, forbid_unknown_fields=True):
    """Elastic and fracture constants in the N/mm/s unit system (MPa, mJ/mm², mm)."""

    E: float
    nu: float
    Gc: float
    ell: float
    psi_c: float = 0.0
    xi: float = 1e-8
    p_shape: float = 1.0
    eta: float = 0.0

    def __post_init__(self) -> None:
        if self.E <= 0:
            msg = f"Young's modulus must be positive, got {self.E!r}."
            raise MaterialError(msg)
        if not 0 <= self.nu < 0.5:
            msg = f"Poisson's ratio must lie in [0, 0.5), got {self.nu!r}."
            raise MaterialError(msg)
        if self.Gc <= 0:
            msg = f"Gc must be positive, got {self.Gc!r}."
            raise MaterialError(msg)
        if self.ell <= 0:
            msg = f"Regularization length must be positive, got {self.ell!r}."
            raise MaterialError(msg)
        if self.xi < 0:
            msg = f"Residual stiffness must be non-negative, got {self.xi!r}."
            raise MaterialError(msg)
        if self.eta < 0:
            msg = f"Viscosity must be non-negative, got {self.eta!r}."
            raise MaterialError(msg)

    @property
    def e_prime(self) -> float:
        return self.E / (1 - self.nu**2)

    @property
    def lame(self) -> tuple[float, float]:
        lam = self.E * self.nu / ((1 + self.nu) * (1 - 2 * self.nu))
        mu = self.E / (2 * (1 + self.nu))
        return lam, mu


class Formulation(msgspec.Struct, frozen=True, kw_only=True, forbid_unknown_fields=True):
    virtual_crack: VirtualCrack = VirtualCrack.UVC
    indicator: Indicator = Indicator.LINEAR
    dissipation: Dissipation = Dissipation.AT1
    degradation: Degradation = Degradation.QUADRATIC
    split: Split = Split.NONE
    plane: Plane = Plane.STRAIN
    # Keep the natural boundary flux of the LVC damage equation. False
    # subtracts <c, p I'(d) u.n> on every boundary edge.
    lvc_boundary_term: bool = True

    def __post_init__(self) -> None:
        if (
            self.degradation is Degradation.COHESIVE
            and self.dissipation is not Dissipation.AT1
        ):
            msg = "Cohesive degradation is only defined together with AT1 dissipation."
            raise MaterialError(msg)

    def check_material(self, material: Material) -> None:
        if self.degradation is Degradation.COHESIVE and material.psi_c <= 0:
            msg = f"Cohesive degradation needs psi_c > 0, got {material.psi_c!r}."
            raise MaterialError(msg)

    @property
    def is_lvc(self) -> bool:
        return self.virtual_crack is VirtualCrack.LVC
