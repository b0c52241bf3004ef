"""Steady propagation of a pressurized crack driven by a translating
near-tip displacement field.

The top half of the strip is modelled. The initial crack occupies the
centreline from x = 0 to x = a and is seeded as fully broken nodes; the
loading tip reaches x = a at t = a / V.
"""

import logging
from pathlib import Path
from typing import TYPE_CHECKING, Any, Optional

import numpy as np

from pressfrac.consts import SURFING_BAND_OVER_ELL, SURFING_H_OVER_ELL
from pressfrac.exceptions import PostProcessingError
from pressfrac.mesh import MeshSpec
from pressfrac.models.enums import MeshVariant
from pressfrac.models.fields import DirichletBC, Loads, fixed
from pressfrac.oracle import PlaneStrainConstants, critical_pressure_uniform, surfing_displacement
from pressfrac.post import JDomainSpec, build_q, crack_tip, effective_gc, j_integral, steady_state_error
from pressfrac.solver import SolverConfig
from utils.config import SurfingBlock

from .output import write_tsv
from .problem import BenchmarkProblem, RunResult

if TYPE_CHECKING:
    from pressfrac.solver import LoadHistory, SolveState, StepRecord
    from utils.config import ProblemConfig

logger = logging.getLogger("bench.surfing")

# number of coarse cells across the half height
_COARSE_CELLS = 16
# pseudo-time increments per characteristic time
_STEPS_PER_TAU = 20


class SurfingProblem(BenchmarkProblem):
    name = "surfing"

    def __init__(self, config: "ProblemConfig", output_dir: "str | Path") -> None:
        self.block = config.surfing or SurfingBlock()
        super().__init__(config, output_dir)

        block, material = self.block, self.material
        self.tau = block.tau
        self.t_end = block.t_end * self.tau
        self.constants = PlaneStrainConstants(E=material.E, nu=material.nu)
        self.p = (
            block.pressure
            if block.pressure is not None
            else critical_pressure_uniform(block.a, self.constants, material.Gc).surfing
        )
        self.h = self.config.mesh.h_fine if self.config.mesh is not None else self.default_mesh().h_fine
        self.gc_eff = effective_gc(material, self.h, self.formulation.dissipation)

        mesh = self.model.mesh
        self.domains = [
            JDomainSpec(center=(block.a, 0.0), width=w * block.a, height=block.height / 2) for w in block.j_widths
        ]
        self.q = [build_q(mesh, spec) for spec in self.domains]

        x, y = mesh.nodes.T
        tol = 1e-9 * mesh.diagonal
        self.crack_nodes = np.flatnonzero((np.abs(y) <= tol) & (x <= block.a + tol))
        self.j_rows: list[list[Any]] = []
        self.last_tip: Optional[float] = None

        logger.info(
            "Surfing: p=%.6g MPa, h=%.4g mm, Gc_eff=%.6g, tau=%.4g s, J widths %s",
            self.p,
            self.h,
            self.gc_eff,
            self.tau,
            ", ".join(f"{w:g}a" for w in block.j_widths),
        )

    def default_mesh(self) -> MeshSpec:
        ell = self.config.material.ell  # pyright: ignore[reportOptionalMemberAccess]
        half = self.block.height / 2
        h = SURFING_H_OVER_ELL * ell
        return MeshSpec(
            variant=MeshVariant.RECT_BAND_REFINED,
            width=self.block.width,
            height=half,
            h_fine=h,
            h_coarse=max(half / _COARSE_CELLS, h),
            band=min(SURFING_BAND_OVER_ELL * ell, half),
        )

    def solver_config(self) -> SolverConfig:
        return self.config.solver or SolverConfig(dt=self.block.tau / _STEPS_PER_TAU)

    def boundary_displacement(self, component: int):
        block, constants, Gc = self.block, self.constants, self.material.Gc

        def value(x, y, t):
            return surfing_displacement(x, y, t, block.speed, constants, Gc, williams=block.williams_x)[component]

        return value

    def loads(self, t: float) -> Loads:
        return Loads(
            time=t,
            pressure=self.p,
            dirichlet=[
                fixed("bottom", 1),
                DirichletBC("top", 0, self.boundary_displacement(0)),
                DirichletBC("top", 1, self.boundary_displacement(1)),
            ],
        )

    def initial_state(self) -> "SolveState":
        state = super().initial_state()
        state.seed(self.crack_nodes, 1.0)
        return state

    def scalars(self, state: "SolveState", loads: Loads) -> dict[str, float]:
        out = super().scalars(state, loads)
        for w, spec, q in zip(self.block.j_widths, self.domains, self.q, strict=True):
            J = j_integral(
                self.model.disc, state.u, state.d, loads.pressure, q, spec, self.material, self.formulation, symmetric=True
            )
            out[f"J/Gc_eff@{w:g}a"] = J / self.gc_eff
        tip = crack_tip(state.d)
        out["crack_tip"] = tip if tip is not None else float("nan")
        return out

    def accept(self, state: "SolveState", record: "StepRecord") -> None:
        super().accept(state, record)
        s = record.scalars
        tip = s["crack_tip"]
        if self.last_tip is not None and tip < self.last_tip - 1e-9 * self.block.width:
            logger.warning("Crack tip moved back from %.6g to %.6g mm at t=%.6g.", self.last_tip, tip, record.time)
        self.last_tip = tip if np.isfinite(tip) else self.last_tip

        ratios = [s[f"J/Gc_eff@{w:g}a"] for w in self.block.j_widths]
        self.j_rows.append([record.step, record.time, record.time / self.tau, *ratios, tip])

    def j_header(self) -> list[str]:
        return ["step", "t", "t/tau", *(f"J/Gc_eff@{w:g}a" for w in self.block.j_widths), "crack_tip"]

    def write_tables(self, history: "LoadHistory") -> dict[str, Path]:
        return {"j_history": write_tsv(self.output_dir / "j_history.tsv", self.j_header(), self.j_rows)}

    def steady_errors(self) -> dict[float, float]:
        """Steady-window mean of |J/Gc_eff - 1| for every J rectangle width."""
        window = (self.block.window_start, self.block.window_end)
        scaled = [row[2] for row in self.j_rows]
        errors = {}
        for k, w in enumerate(self.block.j_widths):
            try:
                errors[w] = steady_state_error(scaled, [row[3 + k] for row in self.j_rows], window)
            except PostProcessingError as e:
                logger.warning("%s", e)
        return errors

    def summarize(self, history: "LoadHistory") -> dict[str, Any]:
        summary: dict[str, Any] = {
            "ell": self.material.ell,
            "ell/a": self.material.ell / self.block.a,
            "h": self.h,
            "pressure": self.p,
            "Gc_eff": self.gc_eff,
        }
        for w, error in self.steady_errors().items():
            summary[f"steady_error@{w:g}a"] = error
        return summary


def run_surfing(config: "ProblemConfig", output_dir: "str | Path") -> RunResult:
    return SurfingProblem(config, output_dir).run()


CONVERGENCE_HEADER = ("ell", "ell/a", "h", "steady_error", "ratio")


def write_convergence(path: "str | Path", results: "list[tuple[float, RunResult]]", a: float) -> Path:
    """Steady-state error per regularization length with the ratio of successive errors."""
    rows = []
    previous = None
    for ell, result in results:
        errors = [v for k, v in result.summary.items() if k.startswith("steady_error@")]
        error = errors[0] if errors else float("nan")
        ratio = error / previous if previous else float("nan")
        rows.append([ell, ell / a, result.summary.get("h", float("nan")), error, ratio])
        previous = error
    return write_tsv(path, CONVERGENCE_HEADER, rows)
