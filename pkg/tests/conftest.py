from pathlib import Path

import numpy as np
import pytest

from pressfrac.consts import BAR_MATERIAL, HOLE_MATERIAL, SURFING_MATERIAL
from pressfrac.mesh import MeshSpec, generate_rect
from pressfrac.models import Formulation, Material, MeshVariant

CONFIG_DIR = Path(__file__).parent.parent / "configs"


def pytest_addoption(parser):
    parser.addoption(
        "--run-slow",
        action="store_true",
        default=False,
        help="Run benchmark acceptance tests that take minutes to hours",
    )


def pytest_collection_modifyitems(config, items):
    if config.getoption("--run-slow"):
        return

    skip = pytest.mark.skip(reason="needs --run-slow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip)


def rect(width: float, height: float, h: float = 1.0):
    return generate_rect(MeshSpec(variant=MeshVariant.RECT_UNIFORM, width=width, height=height, h_coarse=h, h_fine=h))


@pytest.fixture
def square_mesh():
    """4 x 4 unit square."""
    return rect(4.0, 4.0)


@pytest.fixture
def bar_material() -> Material:
    return BAR_MATERIAL


@pytest.fixture
def hole_material() -> Material:
    return HOLE_MATERIAL


@pytest.fixture
def surfing_material() -> Material:
    return SURFING_MATERIAL


@pytest.fixture
def plain_material() -> Material:
    """Round numbers with a nucleation energy, usable with every formulation."""
    return Material(E=100.0, nu=0.25, Gc=1.0, ell=1.0, psi_c=0.5, xi=1e-6, eta=0.0)


@pytest.fixture
def formulation() -> Formulation:
    return Formulation()


@pytest.fixture
def rng():
    return np.random.default_rng(20240917)
