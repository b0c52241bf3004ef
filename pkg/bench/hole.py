"""Crack nucleation from a pressurized circular hole in a plate under
compressive far-field stresses.

The top-left quarter of the plate is modelled; the hole centre sits at the
origin and the negative x-axis is the midplane along which a crack is
expected for sigma_h > sigma_v.
"""

import logging
from pathlib import Path
from typing import TYPE_CHECKING, Any, Optional

import numpy as np

from pressfrac.consts import HOLE_ELEMENT_SIZE, HOLE_REDUCTION
from pressfrac.constitutive import sigma_c
from pressfrac.mesh import MeshSpec
from pressfrac.models.enums import MeshVariant
from pressfrac.models.fields import Loads, TractionBC, fixed
from pressfrac.post import element_stresses
from utils.config import HoleBlock

from .output import write_tsv
from .problem import BenchmarkProblem, RunResult

if TYPE_CHECKING:
    from pressfrac.solver import LoadHistory, SolveState, StepRecord
    from utils.config import ProblemConfig

logger = logging.getLogger("bench.hole")

# damage level of a localized crack
LOCALIZED = 0.9

HOOP_HEADER = (
    "step",
    "t",
    "pressure",
    "hoop_stress",
    "hoop/sigma_c",
    "max_hole_damage",
    "max_midplane_damage",
)


class HoleProblem(BenchmarkProblem):
    name = "hole"

    def __init__(self, config: "ProblemConfig", output_dir: "str | Path") -> None:
        self.block = config.hole or HoleBlock()
        self.radius, self.length = self.block.geometry
        super().__init__(config, output_dir)

        self.t_end = self.block.t_end
        self.sigma_c = sigma_c(self.material)

        mesh = self.model.mesh
        corner = mesh.nodes[mesh.nodes_of("hole_corner")[0]]
        self.hoop_element = int(np.argmin(np.hypot(*(mesh.centroids() - corner).T)))
        self.hole_nodes = mesh.nodes_of("hole")
        midplane = mesh.nodes_of("symmetry_x")
        # skip the band next to the hole so boundary damage does not count as a crack
        distance = np.hypot(*mesh.nodes[midplane].T)
        self.midplane_nodes = midplane[distance >= self.radius + self.material.ell]

        self.hoop_rows: list[list[float]] = []
        self.localized_step: Optional[int] = None

    def default_mesh(self) -> MeshSpec:
        scale = 1.0 if self.block.full_scale else 1.0 / HOLE_REDUCTION
        h = HOLE_ELEMENT_SIZE * scale
        return MeshSpec(
            variant=MeshVariant.QUARTER_HOLE_MAPPED,
            radius=self.radius,
            length=self.length,
            h_fine=h,
            h_coarse=8 * h,
            band=self.radius,
        )

    def pressure(self, t: float) -> float:
        return self.block.pressure_rate * t

    def loads(self, t: float) -> Loads:
        sigma_h, sigma_v = self.block.sigma_h, self.block.sigma_v
        return Loads(
            time=t,
            pressure=self.pressure(t),
            dirichlet=[fixed("symmetry_x", 1), fixed("symmetry_y", 0)],
            tractions=[
                TractionBC("hole", pressure=self.pressure),
                # compressive far field pushing inward on the outer edges
                TractionBC("outer_left", value=lambda x, y, t: np.stack([np.full_like(x, sigma_h), np.zeros_like(x)], -1)),
                TractionBC("outer_top", value=lambda x, y, t: np.stack([np.zeros_like(x), np.full_like(x, -sigma_v)], -1)),
            ],
        )

    def scalars(self, state: "SolveState", loads: Loads) -> dict[str, float]:
        stress = element_stresses(self.model.disc, state.u, state.d, self.material, self.formulation)
        d = state.d.values
        return {
            **super().scalars(state, loads),
            "pressure": loads.pressure,
            "hoop_stress": float(stress[self.hoop_element, 1]),
            "max_hole_damage": float(d[self.hole_nodes].max()),
            "max_midplane_damage": float(d[self.midplane_nodes].max()) if self.midplane_nodes.size else 0.0,
        }

    def accept(self, state: "SolveState", record: "StepRecord") -> None:
        super().accept(state, record)
        s = record.scalars
        self.hoop_rows.append([
            record.step,
            record.time,
            s["pressure"],
            s["hoop_stress"],
            s["hoop_stress"] / self.sigma_c,
            s["max_hole_damage"],
            s["max_midplane_damage"],
        ])
        if self.localized_step is None and s["max_midplane_damage"] > LOCALIZED:
            self.localized_step = record.step
            logger.info("Crack localized on the midplane at step %d (p=%.4g MPa).", record.step, s["pressure"])

    def write_tables(self, history: "LoadHistory") -> dict[str, Path]:
        return {"hoop_history": write_tsv(self.output_dir / "hoop_history.tsv", HOOP_HEADER, self.hoop_rows)}

    def onset_hoop_stress(self) -> Optional[float]:
        """Peak hoop stress reached before the crack localizes on the midplane."""
        if self.localized_step is None:
            return None
        return max(row[3] for row in self.hoop_rows if row[0] <= self.localized_step)

    def summarize(self, history: "LoadHistory") -> dict[str, Any]:
        summary: dict[str, Any] = {
            "sigma_c": self.sigma_c,
            "radius": self.radius,
            "length": self.length,
            "localized_step": self.localized_step,
        }
        onset = self.onset_hoop_stress()
        if onset is not None:
            summary["onset_hoop_stress"] = onset
            summary["onset_hoop/sigma_c"] = onset / self.sigma_c
        return summary


def run_hole(config: "ProblemConfig", output_dir: "str | Path") -> RunResult:
    return HoleProblem(config, output_dir).run()
