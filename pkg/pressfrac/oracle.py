"""Closed-form and quadrature references for a pressurized straight crack of
half-length ``a`` in an infinite plane-strain plate.

Pressure profiles are functions of the normalized coordinate s = x / a on
[-1, 1] and must be even.
"""

import math
from collections.abc import Callable, Sequence
from dataclasses import dataclass
from typing import TYPE_CHECKING, NamedTuple

import msgspec
import numpy as np
from scipy import integrate

from pressfrac.exceptions import OracleError, ProfileError

if TYPE_CHECKING:
    from numpy.typing import ArrayLike, NDArray

_QUAD_TOL = 1e-12
_QUAD_LIMIT = 200

# Normalized abscissae where evenness and finiteness are checked.
_PROBES = np.linspace(0.0, 0.999, 11)


class PlaneStrainConstants(msgspec.Struct, frozen=True, kw_only=True):
    E: float
    nu: float

    def __post_init__(self) -> None:
        if self.E <= 0 or not 0 <= self.nu < 0.5:
            msg = f"Need E > 0 and 0 <= nu < 0.5, got E={self.E!r}, nu={self.nu!r}."
            raise OracleError(msg)

    @property
    def e_prime(self) -> float:
        return self.E / (1 - self.nu**2)

    @property
    def mu(self) -> float:
        return self.E / (2 + 2 * self.nu)

    @property
    def kappa(self) -> float:
        return 3 - 4 * self.nu


@dataclass(frozen=True)
class PressureProfile:
    """Even pressure distribution p(s), s = x / a."""

    function: Callable[[float], float]
    # "smooth" profiles are polynomial in s; "kinked" ones have a slope jump at s = 0
    smoothness: str = "smooth"
    description: str = ""

    def __post_init__(self) -> None:
        values = np.array([self.function(s) for s in _PROBES])
        mirrored = np.array([self.function(-s) for s in _PROBES])
        if not np.all(np.isfinite(values)):
            msg = f"Pressure profile {self.description or self.function!r} is not finite on (-a, a)."
            raise ProfileError(msg)
        if not np.allclose(values, mirrored, rtol=1e-12, atol=1e-12):
            msg = f"Pressure profile {self.description or self.function!r} is not symmetric about x = 0."
            raise ProfileError(msg)

    def __call__(self, s: float) -> float:
        return float(self.function(s))

    def at(self, x: float, a: float) -> float:
        return self(x / a)

    def __str__(self) -> str:
        return self.description


def uniform(p: float) -> PressureProfile:
    return PressureProfile(lambda s: p, "smooth", f"uniform:{p!r}")


def even_polynomial(coefficients: Sequence[float]) -> PressureProfile:
    """p(s) = sum_k c_k s^(2k)."""
    coeffs = [float(c) for c in coefficients]
    if not coeffs:
        msg = "An even polynomial profile needs at least one coefficient."
        raise ProfileError(msg)

    # np.polyval wants the highest power first
    powers = coeffs[::-1]
    return PressureProfile(
        lambda s: float(np.polyval(powers, s * s)),
        "smooth",
        "poly:" + ",".join(repr(c) for c in coeffs),
    )


def wedge(c: float) -> PressureProfile:
    """p(x) = c (1 - |x| / a)."""
    return PressureProfile(lambda s: c * (1.0 - abs(s)), "kinked", f"wedge:{c!r}")


def parse_profile(text: str) -> PressureProfile:
    """Build a profile from ``uniform:P``, ``poly:c0,c1,...`` or ``wedge:C``."""
    kind, sep, args = text.strip().partition(":")
    if not sep or not args:
        msg = f"Profile {text!r} must look like uniform:P, poly:c0,c1,... or wedge:C."
        raise ProfileError(msg)

    try:
        values = [float(v) for v in args.split(",")]
    except ValueError:
        msg = f"Profile {text!r} has a non-numeric parameter."
        raise ProfileError(msg) from None

    match kind.lower():
        case "uniform" if len(values) == 1:
            return uniform(values[0])
        case "wedge" if len(values) == 1:
            return wedge(values[0])
        case "poly":
            return even_polynomial(values)
        case "uniform" | "wedge":
            msg = f"Profile {kind!r} takes exactly one parameter, got {len(values)}."
            raise ProfileError(msg)
        case _:
            msg = f"Unknown profile kind {kind!r}; expected uniform, poly or wedge."
            raise ProfileError(msg)


def _check_length(a: float) -> None:
    if a <= 0:
        msg = f"Crack half-length must be positive, got {a!r}."
        raise OracleError(msg)


def kernel_Z(r: float, s: float) -> float:
    """log |(sqrt(1-r^2) + sqrt(1-s^2)) / (sqrt(1-r^2) - sqrt(1-s^2))|, singular at r = s."""
    if not (0 <= r <= 1 and 0 <= s <= 1):
        msg = f"Kernel arguments must lie in [0, 1], got r={r!r}, s={s!r}."
        raise OracleError(msg)
    if r == s:
        msg = f"Kernel is singular at r = s = {r!r}."
        raise OracleError(msg)

    cr, cs = math.sqrt(1 - r * r), math.sqrt(1 - s * s)
    return math.log(abs((cr + cs) / (cr - cs)))


def _quad(function: Callable[[float], float], lo: float, hi: float, **kwargs) -> float:
    value, _ = integrate.quad(
        function, lo, hi, epsabs=_QUAD_TOL, epsrel=_QUAD_TOL, limit=_QUAD_LIMIT, **kwargs
    )
    if not math.isfinite(value):
        msg = "Quadrature diverged; the pressure profile is not integrable."
        raise ProfileError(msg)
    return value


def aperture_sneddon(profile: PressureProfile, a: float, constants: PlaneStrainConstants, x: float) -> float:
    """Crack opening w(x) = (4a / (pi E')) int_0^1 p(sa) Z(x/a, s) ds."""
    _check_length(a)
    if abs(x) >= a:
        msg = f"Aperture is defined for |x| < a, got x={x!r} with a={a!r}."
        raise OracleError(msg)

    r = abs(x) / a

    def integrand(s: float) -> float:
        return 0.0 if s == r else profile(s) * kernel_Z(r, s)

    # split at the logarithmic singularity
    points = [r] if 0 < r < 1 else None
    value = _quad(integrand, 0.0, 1.0, points=points)
    return 4 * a / (math.pi * constants.e_prime) * value


def _weighted_mean(profile: PressureProfile) -> float:
    # int_0^1 p(s) / sqrt(1 - s^2) ds with s = sin(theta)
    return _quad(lambda theta: profile(math.sin(theta)), 0.0, math.pi / 2)


def sif(profile: PressureProfile, a: float) -> float:
    """Mode-I stress intensity factor K = 2 sqrt(a / pi) int_0^1 p(as) / sqrt(1 - s^2) ds."""
    _check_length(a)
    return 2 * math.sqrt(a / math.pi) * _weighted_mean(profile)


def energy_release_rate(profile: PressureProfile, a: float, constants: PlaneStrainConstants) -> float:
    """Energy release rate of a single tip.

    Derived from the potential -1/2 int p w dx with traction-free increments,
    whose a-derivative is shared by both tips. Evaluated as the double integral

        G = (4a / (pi E')) int int p(a sin t) p(a sin f) dt df  over [0, pi/2]^2

    which equals K^2 / E' in exact arithmetic.
    """
    _check_length(a)
    half_pi = math.pi / 2
    value, _ = integrate.dblquad(
        lambda phi, theta: profile(math.sin(theta)) * profile(math.sin(phi)),
        0.0,
        half_pi,
        0.0,
        half_pi,
        epsabs=_QUAD_TOL,
        epsrel=_QUAD_TOL,
    )
    if not math.isfinite(value):
        msg = "Quadrature diverged; the pressure profile is not integrable."
        raise ProfileError(msg)
    return 4 * a / (math.pi * constants.e_prime) * value


class CriticalPressure(NamedTuple):
    critical: float
    # half the critical value, the constant load of the steady-growth benchmark
    surfing: float


def critical_pressure_uniform(a: float, constants: PlaneStrainConstants, Gc: float) -> CriticalPressure:
    """Uniform pressure at which G = Gc: p_c = sqrt(Gc E' / (pi a))."""
    _check_length(a)
    if Gc < 0:
        msg = f"Gc must be non-negative, got {Gc!r}."
        raise OracleError(msg)

    critical = math.sqrt(Gc * constants.e_prime / (math.pi * a))
    return CriticalPressure(critical, 0.5 * critical)


def surfing_displacement(
    x: "ArrayLike",
    y: "ArrayLike",
    t: float,
    V: float,
    constants: PlaneStrainConstants,
    Gc: float,
    *,
    williams: bool = False,
) -> tuple["NDArray[np.float64]", "NDArray[np.float64]"]:
    """Mode-I near-tip displacement at K = sqrt(Gc E') about the moving origin (V t, 0).

    Returns (U_x, U_y). U_x is zero unless ``williams`` selects the full field.
    """
    dx = np.asarray(x, dtype=np.float64) - V * t
    dy = np.asarray(y, dtype=np.float64)
    r = np.hypot(dx, dy)
    if np.any(r == 0):
        msg = f"Surfing displacement is singular at the crack tip ({V * t!r}, 0)."
        raise OracleError(msg)

    theta = np.arctan2(dy, dx)
    amplitude = math.sqrt(Gc * constants.e_prime) / (2 * constants.mu) * np.sqrt(r / (2 * math.pi))
    shape = constants.kappa - np.cos(theta)
    uy = amplitude * shape * np.sin(theta / 2)
    ux = amplitude * shape * np.cos(theta / 2) if williams else np.zeros_like(uy)
    return ux, uy


class OracleRow(NamedTuple):
    a: float
    sif: float
    G: float
    G_from_sif: float
    critical_pressure: float
    center_aperture: float


def crack_length_table(
    profile: PressureProfile, lengths: Sequence[float], constants: PlaneStrainConstants, Gc: float
) -> list[OracleRow]:
    rows = []
    for a in lengths:
        k = sif(profile, a)
        rows.append(
            OracleRow(
                a=a,
                sif=k,
                G=energy_release_rate(profile, a, constants),
                G_from_sif=k * k / constants.e_prime,
                critical_pressure=critical_pressure_uniform(a, constants, Gc).critical,
                center_aperture=aperture_sneddon(profile, a, constants, 0.0),
            )
        )
    return rows
