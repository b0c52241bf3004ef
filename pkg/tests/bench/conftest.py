import textwrap
from pathlib import Path

import pytest

from utils.config import ProblemConfig, parse_config

# Ten-element bar loaded slowly enough to stay elastic.
TINY_BAR = """\
[problem]
benchmark = bar

[material]
E = 4e5
nu = 0.2
Gc = 0.12
ell = 10.0
psi_c = 5.6e-5

[formulation]
degradation = cohesive

[mesh]
variant = rect_uniform
width = 10.0
height = 1.0

[solver]
dt = 1e-5

[output]
snapshot_stride = 2

[bar]
length = 10.0
t_end = 3e-5
defect = 0.0
"""

TINY_HOLE = """\
[problem]
benchmark = hole

[material]
E = 1.9e4
nu = 0.2
Gc = 7.7e-2
ell = 0.5
psi_c = 7.96e-4
eta = 1e-3

[formulation]
degradation = cohesive
split = spectral

[mesh]
variant = quarter_hole_mapped
radius = 1.0
length = 6.0
h_fine = 0.5
h_coarse = 1.0
band = 1.0

[solver]
dt = 0.5

[output]
snapshot_stride = 0

[hole]
radius = 1.0
length = 6.0
t_end = 1.0
"""

TINY_SURFING = """\
[problem]
benchmark = surfing

[material]
E = 3e4
nu = 0.2
Gc = 0.12
ell = 1.0

[formulation]

[mesh]
variant = rect_band_refined
width = 16.0
height = 4.0
h_fine = 0.5
h_coarse = 1.0
band = 2.0

[solver]
dt = 0.05

[output]
snapshot_stride = 0

[surfing]
a = 4.0
width = 16.0
height = 8.0
speed = 4.0
t_end = 0.1
"""


def write_config(tmp_path: Path, text: str, name: str = "run.ini") -> Path:
    path = tmp_path / name
    path.write_text(textwrap.dedent(text), encoding="utf-8")
    return path


def tiny(text: str, out: Path) -> ProblemConfig:
    return parse_config(text).with_overrides(directory=str(out))


@pytest.fixture
def tiny_bar(tmp_path) -> ProblemConfig:
    return tiny(TINY_BAR, tmp_path / "bar")


@pytest.fixture
def tiny_hole(tmp_path) -> ProblemConfig:
    return tiny(TINY_HOLE, tmp_path / "hole")


@pytest.fixture
def tiny_surfing(tmp_path) -> ProblemConfig:
    return tiny(TINY_SURFING, tmp_path / "surfing")
