import textwrap

import pytest

from pressfrac.models import Benchmark, Degradation, Indicator, LinearSolver, VirtualCrack
from tests.conftest import CONFIG_DIR
from utils import closest_match
from utils.config import ProblemConfig, parse_config
from utils.types.errors import ConfigParseError, InvalidConfigValue, MissingConfigBlock, UnknownConfigKey

MINIMAL = """\
[problem]
benchmark = bar

[material]
E = 4e5
nu = 0.2
Gc = 0.12
ell = 10.0

[formulation]
virtual_crack = lvc
"""


def config_with(extra: str) -> str:
    return MINIMAL + "\n" + textwrap.dedent(extra)


def test_minimal():
    config = parse_config(MINIMAL)

    assert config.benchmark is Benchmark.BAR
    assert config.material is not None
    assert config.material.E == 4e5
    assert config.formulation.virtual_crack is VirtualCrack.LVC
    assert config.formulation.indicator is Indicator.LINEAR
    assert config.output.directory == "out"
    assert config.solver is None
    assert config.bar is None


@pytest.mark.parametrize("path", sorted(CONFIG_DIR.glob("*.example.ini")), ids=lambda p: p.name)
def test_example_configs_parse(path):
    config = ProblemConfig.from_file(path)

    assert config.benchmark.value == path.name.split(".")[0]


def test_to_ini_round_trip():
    config = parse_config(
        config_with(
            """
            [solver]
            linear_solver = cg
            dt = 5e-4

            [surfing]
            ell = 40, 20
            williams_x = true
            """
        )
    )

    again = parse_config(config.to_ini())

    assert again == config
    assert again.solver is not None
    assert again.solver.linear_solver is LinearSolver.CG
    assert again.surfing is not None
    assert again.surfing.ell == [40.0, 20.0]
    assert again.surfing.williams_x is True


@pytest.mark.parametrize(
    ("short", "indicator"),
    [("d", Indicator.LINEAR), ("d2", Indicator.QUADRATIC), ("2d-d2", Indicator.TWO_D_MINUS_D2)],
)
def test_indicator_short_forms(short, indicator):
    config = parse_config(MINIMAL + f"indicator = {short}\n")

    assert config.formulation.indicator is indicator


def test_missing_problem_block():
    with pytest.raises(MissingConfigBlock) as excinfo:
        parse_config("[material]\nE = 1\n")
    assert excinfo.value.block == "problem"


def test_missing_material_block():
    with pytest.raises(MissingConfigBlock, match=r"\[material\]"):
        parse_config("[problem]\nbenchmark = hole\n\n[formulation]\n")


def test_oracle_needs_only_its_block():
    config = parse_config("[problem]\nbenchmark = oracle\n\n[oracle]\nlengths = 400, 800\nprofile = wedge:2\n")

    assert config.oracle is not None
    assert config.oracle.lengths == [400.0, 800.0]
    assert config.material is None


def test_unknown_key_suggests_and_locates():
    text = config_with(
        """
        [bar]
        presure = 0.1
        """
    )

    with pytest.raises(UnknownConfigKey) as excinfo:
        parse_config(text)

    error = excinfo.value
    assert (error.section, error.key, error.suggestion) == ("bar", "presure", "pressure")
    assert error.line == text.splitlines().index("presure = 0.1") + 1
    assert str(error).startswith(f"line {error.line}: Unknown key 'presure' in [bar].")


def test_unknown_section():
    with pytest.raises(UnknownConfigKey, match=r"Unknown section \[solvr\]. Did you mean 'solver'\?"):
        parse_config(config_with("[solvr]\ndt = 1\n"))


def test_plane_stress_rejected():
    with pytest.raises(InvalidConfigValue, match="plane stress is not supported"):
        parse_config(MINIMAL + "plane = stress\n")


def test_bad_indicator():
    with pytest.raises(InvalidConfigValue) as excinfo:
        parse_config(MINIMAL + "indicator = d3\n")
    assert (excinfo.value.section, excinfo.value.key) == ("formulation", "indicator")


def test_bad_number_names_key():
    with pytest.raises(InvalidConfigValue) as excinfo:
        parse_config(MINIMAL.replace("ell = 10.0", "ell = ten"))
    assert (excinfo.value.section, excinfo.value.key) == ("material", "ell")


def test_validation_error_from_block():
    with pytest.raises(InvalidConfigValue, match=r"\[solver\].*cutback"):
        parse_config(config_with("[solver]\ncutback = 2.0\n"))


def test_cohesive_needs_nucleation_energy():
    with pytest.raises(InvalidConfigValue) as excinfo:
        parse_config(MINIMAL + "degradation = cohesive\n")
    assert (excinfo.value.section, excinfo.value.key) == ("material", "psi_c")


def test_bad_mesh_length_names_key_and_line():
    text = config_with(
        """
        [mesh]
        variant = rect_uniform
        width = -4
        height = 1
        """
    )

    with pytest.raises(InvalidConfigValue) as excinfo:
        parse_config(text)

    error = excinfo.value
    assert (error.section, error.key) == ("mesh", "width")
    assert error.line == text.splitlines().index("width = -4") + 1
    assert str(error).startswith(f"line {error.line}: Invalid value for [mesh] width:")


def test_missing_mesh_length_points_at_section():
    text = config_with("[mesh]\nvariant = quarter_hole_mapped\nradius = 1\n")

    with pytest.raises(InvalidConfigValue) as excinfo:
        parse_config(text)

    assert excinfo.value.key == "length"
    assert excinfo.value.line == text.splitlines().index("[mesh]") + 1


def test_key_before_section():
    with pytest.raises(ConfigParseError) as excinfo:
        parse_config("benchmark = bar\n")
    assert excinfo.value.line == 1


def test_duplicate_key():
    with pytest.raises(ConfigParseError, match="line 3"):
        parse_config("[problem]\nbenchmark = bar\nbenchmark = hole\n")


def test_unreadable_file(tmp_path):
    with pytest.raises(ConfigParseError, match="Cannot read configuration file"):
        ProblemConfig.from_file(tmp_path / "missing.ini")


def test_overrides():
    config = parse_config(MINIMAL).with_overrides(
        virtual_crack=VirtualCrack.UVC, indicator=Indicator.QUADRATIC, ell=5.0, directory="elsewhere"
    )

    assert config.formulation.virtual_crack is VirtualCrack.UVC
    assert config.formulation.indicator is Indicator.QUADRATIC
    assert config.formulation.degradation is Degradation.QUADRATIC
    assert config.material is not None
    assert config.material.ell == 5.0
    assert config.output.directory == "elsewhere"


@pytest.mark.parametrize(
    ("extra", "geometry"),
    [("", (100.0, 1250.0)), ("full_scale = true\n", (400.0, 5000.0)), ("radius = 50\n", (50.0, 1250.0))],
)
def test_hole_geometry(extra, geometry):
    config = parse_config("[problem]\nbenchmark = oracle\n\n[oracle]\n\n[hole]\n" + extra)

    assert config.hole is not None
    assert config.hole.geometry == geometry


@pytest.mark.parametrize(
    ("query", "expected"),
    [("presure", "pressure"), ("ELL", "ell"), ("zzzzzz", None)],
)
def test_closest_match(query, expected):
    assert closest_match(query, ["pressure", "ell", "rate", "t_end"]) == expected
