"""INI run configuration.

Every section maps onto a frozen msgspec Struct. Values arrive as strings and
are converted with ``msgspec.convert(..., strict=False)``; list-valued keys are
comma separated.
"""

import configparser
import re
from pathlib import Path
from typing import Any, Optional

import msgspec

from pressfrac.consts import HOLE_PLATE_LENGTH, HOLE_RADIUS, HOLE_REDUCTION
from pressfrac.exceptions import PressFracException
from pressfrac.mesh import MeshSpec
from pressfrac.models import Benchmark, Formulation, Indicator, Material, VirtualCrack
from pressfrac.solver import SolverConfig
from utils import closest_match
from utils.types.errors import (
    ConfigParseError,
    InvalidConfigValue,
    MissingConfigBlock,
    UnknownConfigKey,
)

_SECTION_RE = re.compile(r"^\s*\[([^\]]+)\]")
_KEY_RE = re.compile(r"^\s*([^\s=:;#\[][^=:]*?)\s*[=:]")


class ProblemBlock(msgspec.Struct, frozen=True, kw_only=True, forbid_unknown_fields=True):
    benchmark: Benchmark
    name: str = ""


class OutputBlock(msgspec.Struct, frozen=True, kw_only=True, forbid_unknown_fields=True):
    directory: str = "out"
    # write a VTK snapshot every N accepted steps, 0 disables
    snapshot_stride: int = 10

    def __post_init__(self) -> None:
        if self.snapshot_stride < 0:
            msg = f"snapshot_stride must be non-negative, got {self.snapshot_stride!r}."
            raise ValueError(msg)


class BarBlock(msgspec.Struct, frozen=True, kw_only=True, forbid_unknown_fields=True):
    # chamber pressure (MPa)
    pressure: float = 0.0
    # quarter model dimensions (mm)
    length: float = 200.0
    width: float = 1.0
    # end displacement rate (mm/s) and final pseudo-time (s)
    rate: float = 1.0
    t_end: float = 0.05
    defect: float = 1e-3

    def __post_init__(self) -> None:
        if self.pressure < 0:
            msg = f"Bar pressure must be non-negative, got {self.pressure!r}."
            raise ValueError(msg)
        if self.length <= 0 or self.width <= 0 or self.rate <= 0 or self.t_end <= 0:
            msg = "Bar length, width, rate and t_end must be positive."
            raise ValueError(msg)
        if not 0 <= self.defect < 1:
            msg = f"Defect damage must lie in [0, 1), got {self.defect!r}."
            raise ValueError(msg)


class HoleBlock(msgspec.Struct, frozen=True, kw_only=True, forbid_unknown_fields=True):
    # far-field compressive stresses (MPa)
    sigma_h: float = 5.0
    sigma_v: float = 2.5
    # hole radius and plate edge (mm); None selects the reduced or full scale
    radius: Optional[float] = None
    length: Optional[float] = None
    full_scale: bool = False
    # pressure ramp (MPa/s) and final pseudo-time (s)
    pressure_rate: float = 1.0
    t_end: float = 10.0

    @property
    def geometry(self) -> tuple[float, float]:
        scale = 1.0 if self.full_scale else 1.0 / HOLE_REDUCTION
        radius, length = HOLE_RADIUS * scale, HOLE_PLATE_LENGTH * scale
        return (self.radius or radius, self.length or length)


class SurfingBlock(msgspec.Struct, frozen=True, kw_only=True, forbid_unknown_fields=True):
    # initial crack length, strip width and height (mm), crack speed (mm/s)
    a: float = 1600.0
    width: float = 8000.0
    height: float = 4000.0
    speed: float = 400.0
    # regularization lengths to run (mm); empty uses material.ell
    ell: list[float] = []
    # crack-face pressure (MPa); None applies half the critical pressure
    pressure: Optional[float] = None
    williams_x: bool = False
    # times in units of a / speed
    t_end: float = 1.5
    window_start: float = 1.1
    window_end: float = 1.4
    # J rectangle widths in units of a
    j_widths: list[float] = msgspec.field(default_factory=lambda: [1.0, 1.5])

    @property
    def tau(self) -> float:
        return self.a / self.speed


class OracleBlock(msgspec.Struct, frozen=True, kw_only=True, forbid_unknown_fields=True):
    E: float = 3e4
    nu: float = 0.2
    Gc: float = 0.12
    lengths: list[float] = msgspec.field(default_factory=lambda: [1600.0])
    profile: str = "uniform:1.0"


class ProblemConfig(msgspec.Struct, frozen=True, kw_only=True, forbid_unknown_fields=True):
    problem: ProblemBlock
    material: Optional[Material] = None
    formulation: Formulation = msgspec.field(default_factory=Formulation)
    mesh: Optional[MeshSpec] = None
    solver: Optional[SolverConfig] = None
    output: OutputBlock = msgspec.field(default_factory=OutputBlock)
    bar: Optional[BarBlock] = None
    hole: Optional[HoleBlock] = None
    surfing: Optional[SurfingBlock] = None
    oracle: Optional[OracleBlock] = None

    @property
    def benchmark(self) -> Benchmark:
        return self.problem.benchmark

    @classmethod
    def from_file(cls, path: "str | Path") -> "ProblemConfig":
        path = Path(path)
        try:
            text = path.read_text(encoding="utf-8")
        except OSError as e:
            msg = f"Cannot read configuration file {str(path)!r}: {e.strerror}"
            raise ConfigParseError(None, msg) from e
        return parse_config(text, source=str(path))

    def to_ini(self) -> str:
        lines = []
        for name in BLOCKS:
            block = getattr(self, name)
            if block is None:
                continue

            lines.append(f"[{name}]")
            for key, value in msgspec.to_builtins(block).items():
                if value is None:
                    continue
                lines.append(f"{key} = {_render(value)}")
            lines.append("")
        return "\n".join(lines)

    def with_overrides(
        self,
        *,
        virtual_crack: Optional[VirtualCrack] = None,
        indicator: Optional[Indicator] = None,
        ell: Optional[float] = None,
        directory: Optional[str] = None,
    ) -> "ProblemConfig":
        config = self
        changes: dict[str, Any] = {}
        if virtual_crack is not None:
            changes["virtual_crack"] = virtual_crack
        if indicator is not None:
            changes["indicator"] = indicator
        if changes:
            config = msgspec.structs.replace(config, formulation=msgspec.structs.replace(config.formulation, **changes))
        if ell is not None:
            if config.material is None:
                raise MissingConfigBlock("material")
            config = msgspec.structs.replace(config, material=msgspec.structs.replace(config.material, ell=ell))
        if directory is not None:
            config = msgspec.structs.replace(config, output=msgspec.structs.replace(config.output, directory=directory))
        return config


BLOCKS: dict[str, type[msgspec.Struct]] = {
    "problem": ProblemBlock,
    "material": Material,
    "formulation": Formulation,
    "mesh": MeshSpec,
    "solver": SolverConfig,
    "output": OutputBlock,
    "bar": BarBlock,
    "hole": HoleBlock,
    "surfing": SurfingBlock,
    "oracle": OracleBlock,
}

# Blocks every non-oracle run needs in its file.
REQUIRED_BLOCKS = ("problem", "material", "formulation")


def _render(value: Any) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, list):
        return ", ".join(_render(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _line_index(text: str) -> dict[tuple[str, Optional[str]], int]:
    """1-based line of every section header and key."""
    index: dict[tuple[str, Optional[str]], int] = {}
    section = None
    for number, line in enumerate(text.splitlines(), start=1):
        if line.lstrip().startswith(("#", ";")):
            continue
        if match := _SECTION_RE.match(line):
            section = match.group(1).strip()
            index.setdefault((section, None), number)
        elif section is not None and (match := _KEY_RE.match(line)):
            index.setdefault((section, match.group(1)), number)
    return index


def _list_fields(block: type[msgspec.Struct]) -> set[str]:
    def is_list(t: Any) -> bool:
        if isinstance(t, msgspec.inspect.ListType):
            return True
        if isinstance(t, msgspec.inspect.UnionType):
            return any(is_list(x) for x in t.types)
        return False

    info = msgspec.inspect.type_info(block)
    return {f.name for f in info.fields if is_list(f.type)}  # pyright: ignore[reportAttributeAccessIssue]


def _read(text: str, source: str) -> configparser.ConfigParser:
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str  # pyright: ignore[reportAttributeAccessIssue]
    try:
        parser.read_string(text, source=source)
    except configparser.MissingSectionHeaderError as e:
        raise ConfigParseError(e.lineno, "Expected a [section] header before the first key.") from e
    except configparser.ParsingError as e:
        line, content = e.errors[0]
        raise ConfigParseError(line, f"Cannot parse {content!r}.") from e
    except (configparser.DuplicateSectionError, configparser.DuplicateOptionError) as e:
        raise ConfigParseError(e.lineno, e.message) from e
    return parser


def _convert_block(
    name: str,
    section: "configparser.SectionProxy",
    lines: dict[tuple[str, Optional[str]], int],
) -> msgspec.Struct:
    def invalid(key: Optional[str], message: str) -> InvalidConfigValue:
        line = lines.get((name, key)) if key is not None else None
        return InvalidConfigValue(name, key, message, line or lines.get((name, None)))

    block = BLOCKS[name]
    fields = [f.name for f in msgspec.structs.fields(block)]
    lists = _list_fields(block)

    data: dict[str, Any] = {}
    for key, raw in section.items():
        if key not in fields:
            raise UnknownConfigKey(name, key, lines.get((name, key)), closest_match(key, fields))

        value: Any = raw.strip()
        if key in lists:
            value = [v.strip() for v in value.split(",") if v.strip()]
        elif name == "formulation" and key == "indicator":
            try:
                value = Indicator.from_short_form(value).value
            except ValueError as e:
                raise invalid(key, str(e)) from None
        elif name == "formulation" and key == "plane" and value.lower() == "stress":
            msg = "plane stress is not supported; the model is plane strain."
            raise invalid(key, msg)
        data[key] = value

    try:
        return msgspec.convert(data, block, strict=False)
    except msgspec.ValidationError as e:
        # messages end with "- at `$.key`"
        match = re.search(r"at `\$\.(\w+)", str(e))
        key = match.group(1) if match else None
        raise invalid(key, str(e).split(" - at ")[0]) from None
    except PressFracException as e:
        raise invalid(getattr(e, "field", None), str(e)) from None


def parse_config(text: str, *, source: str = "<string>") -> ProblemConfig:
    parser = _read(text, source)
    lines = _line_index(text)

    for section in parser.sections():
        if section not in BLOCKS:
            raise UnknownConfigKey(section, None, lines.get((section, None)), closest_match(section, BLOCKS))

    if not parser.has_section("problem"):
        raise MissingConfigBlock("problem")
    problem = _convert_block("problem", parser["problem"], lines)
    assert isinstance(problem, ProblemBlock)

    required = ("problem", "oracle") if problem.benchmark is Benchmark.ORACLE else REQUIRED_BLOCKS
    for block in required:
        if not parser.has_section(block):
            raise MissingConfigBlock(block)

    blocks = {name: _convert_block(name, parser[name], lines) for name in parser.sections()}
    config = ProblemConfig(**blocks)  # pyright: ignore[reportArgumentType]

    if config.material is not None:
        try:
            config.formulation.check_material(config.material)
        except PressFracException as e:
            line = lines.get(("material", "psi_c")) or lines.get(("material", None))
            raise InvalidConfigValue("material", "psi_c", str(e), line) from None
    return config
