from enum import Enum


class VirtualCrack(Enum):
    UVC = "uvc"
    LVC = "lvc"

    def __str__(self):
        return self.name


class Indicator(Enum):
    LINEAR = "linear"
    QUADRATIC = "quadratic"
    TWO_D_MINUS_D2 = "two_d_minus_d2"

    def __str__(self):
        return self.short_form()

    def short_form(self):
        match self.value:
            case "linear":
                return "d"
            case "quadratic":
                return "d2"
            case "two_d_minus_d2":
                return "2d-d2"

    @classmethod
    def from_short_form(cls, short_form: str):
        for member in cls:
            if short_form in (member.short_form(), member.value):
                return member

        msg = f"Unknown indicator {short_form!r}, expected one of d, d2, 2d-d2."
        raise ValueError(msg)


class Dissipation(Enum):
    AT1 = "at1"
    AT2 = "at2"

    def __str__(self):
        return self.name


class Degradation(Enum):
    QUADRATIC = "quadratic"
    COHESIVE = "cohesive"


class Split(Enum):
    NONE = "none"
    SPECTRAL = "spectral"


class Plane(Enum):
    STRAIN = "strain"


class ElementKind(Enum):
    QUAD4 = "quad4"
    TRI3 = "tri3"

    def __str__(self):
        return self.value

    @property
    def node_count(self) -> int:
        return 4 if self is ElementKind.QUAD4 else 3

    @property
    def vtk_cell_type(self) -> int:
        match self:
            case ElementKind.QUAD4:
                return 9
            case ElementKind.TRI3:
                return 5

    def edges(self) -> tuple[tuple[int, int], ...]:
        """Local edges in counter-clockwise order; edge k starts at local node k."""
        n = self.node_count
        return tuple((k, (k + 1) % n) for k in range(n))


class Benchmark(Enum):
    BAR = "bar"
    HOLE = "hole"
    SURFING = "surfing"
    ORACLE = "oracle"


class LinearSolver(Enum):
    DIRECT = "direct"
    CG = "cg"


class RunStatus(Enum):
    COMPLETED = "completed"
    ABORTED = "aborted"


class MeshVariant(Enum):
    RECT_UNIFORM = "rect_uniform"
    RECT_BAND_REFINED = "rect_band_refined"
    QUARTER_HOLE_MAPPED = "quarter_hole_mapped"
    EXTERNAL_FILE = "external_file"
