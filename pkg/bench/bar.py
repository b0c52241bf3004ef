"""Cohesive bar pulled apart inside a pressurized chamber.

Top-right quarter of the bar: the left edge is the mid cross-section where the
crack forms, the bottom edge the axial symmetry line. The right end is pulled
at a constant rate and the chamber pressure enters only through the
phase-field pressure terms.
"""

import logging
from pathlib import Path
from typing import TYPE_CHECKING, Any

import numpy as np

from pressfrac.consts import BAR_ELEMENT_SIZE, BAR_INCREMENT
from pressfrac.constitutive import sigma_c
from pressfrac.mesh import MeshSpec
from pressfrac.models.enums import MeshVariant
from pressfrac.models.fields import DirichletBC, Loads, fixed
from pressfrac.post import aperture, bar_traction
from pressfrac.solver import SolverConfig
from utils.config import BarBlock
from utils.types.errors import InvalidConfigValue

from .output import write_tsv
from .problem import BenchmarkProblem, RunResult

if TYPE_CHECKING:
    from pressfrac.solver import LoadHistory, SolveState, StepRecord
    from utils.config import ProblemConfig

logger = logging.getLogger("bench.bar")

# consecutive-step aperture ratio that counts as a jump
JUMP_RATIO = 2.0
# jumps only count while the bar still carries this fraction of sigma_c
JUMP_TRACTION = 0.1

TRACTION_HEADER = (
    "step",
    "t",
    "end_displacement",
    "traction",
    "traction/sigma_c",
    "aperture",
    "center_damage",
    "jump",
)


class BarProblem(BenchmarkProblem):
    name = "bar"

    def __init__(self, config: "ProblemConfig", output_dir: "str | Path") -> None:
        self.block = config.bar or BarBlock()
        super().__init__(config, output_dir)

        self.sigma_c = sigma_c(self.material)
        if self.block.pressure > self.sigma_c / 3 * (1 + 1e-9):
            msg = f"chamber pressure must not exceed sigma_c / 3 = {self.sigma_c / 3:.6g} MPa."
            raise InvalidConfigValue("bar", "pressure", msg)

        self.t_end = self.block.t_end
        self.center = int(np.argmin(np.hypot(*self.model.mesh.nodes.T)))
        self.traction_rows: list[list[Any]] = []

    def default_mesh(self) -> MeshSpec:
        return MeshSpec(
            variant=MeshVariant.RECT_UNIFORM,
            width=self.block.length,
            height=self.block.width,
            h_coarse=BAR_ELEMENT_SIZE,
            h_fine=BAR_ELEMENT_SIZE,
        )

    def solver_config(self) -> SolverConfig:
        return self.config.solver or SolverConfig(dt=BAR_INCREMENT / self.block.rate)

    def loads(self, t: float) -> Loads:
        rate = self.block.rate
        return Loads(
            time=t,
            pressure=self.block.pressure,
            dirichlet=[
                fixed("left", 0),
                fixed("bottom", 1),
                DirichletBC("right", 0, lambda x, y, t: np.full_like(x, rate * t)),
            ],
        )

    def damage_initial_conditions(self) -> dict[str, float]:
        return {"left": self.block.defect} if self.block.defect > 0 else {}

    def scalars(self, state: "SolveState", loads: Loads) -> dict[str, float]:
        traction = bar_traction(
            self.model.disc, state.u, state.d, self.material, self.formulation, width=self.block.width
        )
        opening = aperture(state.u, state.d, self.formulation, y=0.0)
        return {
            **super().scalars(state, loads),
            "traction": traction,
            "aperture": opening,
        }

    def accept(self, state: "SolveState", record: "StepRecord") -> None:
        super().accept(state, record)
        traction = record.scalars["traction"]
        opening = record.scalars["aperture"]

        previous = self.traction_rows[-1][5] if self.traction_rows else 0.0
        jump = previous > 0 and opening / previous > JUMP_RATIO and traction > JUMP_TRACTION * self.sigma_c
        if jump:
            logger.warning(
                "Aperture jumped from %.4g to %.4g mm at t=%.6g (traction %.4g MPa).",
                previous,
                opening,
                record.time,
                traction,
            )

        self.traction_rows.append([
            record.step,
            record.time,
            self.block.rate * record.time,
            traction,
            traction / self.sigma_c,
            opening,
            float(state.d.values[self.center]),
            jump,
        ])

    def write_tables(self, history: "LoadHistory") -> dict[str, Path]:
        return {
            "traction_separation": write_tsv(
                self.output_dir / "traction_separation.tsv", TRACTION_HEADER, self.traction_rows
            )
        }

    def summarize(self, history: "LoadHistory") -> dict[str, Any]:
        if not self.traction_rows:
            return {}

        tractions = np.array([row[3] for row in self.traction_rows])
        return {
            "sigma_c": self.sigma_c,
            "peak_traction": float(tractions.max()),
            "peak_traction/sigma_c": float(tractions.max()) / self.sigma_c,
            "aperture_jumps": sum(bool(row[-1]) for row in self.traction_rows),
        }


def run_bar(config: "ProblemConfig", output_dir: "str | Path") -> RunResult:
    return BarProblem(config, output_dir).run()
