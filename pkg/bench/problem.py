import logging
import time
from abc import abstractmethod
from dataclasses import dataclass, field
from pathlib import Path
from typing import TYPE_CHECKING, Any, ClassVar

import numpy as np

from pressfrac.mesh import generate
from pressfrac.models.enums import RunStatus
from pressfrac.solver import LoadProgram, PhaseFieldModel, SolverConfig, StepRecord, run_load_program
from utils.types.errors import MissingConfigBlock

from .output import write_run_meta, write_tsv, write_vtk

if TYPE_CHECKING:
    from pressfrac.mesh import Mesh, MeshSpec
    from pressfrac.models.fields import Loads
    from pressfrac.solver import LoadHistory, SolveState
    from utils.config import ProblemConfig

logger = logging.getLogger("bench.problem")

SNAPSHOT_DIR = "snapshots"


@dataclass(eq=False)
class RunResult:
    history: "LoadHistory"
    header: list[str]
    rows: list[list[float]]
    wall_time: float
    summary: dict[str, Any] = field(default_factory=dict)
    files: dict[str, Path] = field(default_factory=dict)

    @property
    def status(self) -> RunStatus:
        return self.history.status

    @property
    def state(self) -> "SolveState":
        return self.history.state

    def column(self, name: str) -> "np.ndarray":
        return np.array([row[self.header.index(name)] for row in self.rows], dtype=np.float64)


class BenchmarkProblem(LoadProgram):
    """A load program built from a run configuration that writes its own
    result files into ``output_dir``."""

    name: ClassVar[str]

    def __init__(self, config: "ProblemConfig", output_dir: "str | Path") -> None:
        if config.material is None:
            raise MissingConfigBlock("material")

        self.config = config
        self.output_dir = Path(output_dir)
        self.snapshot_stride = config.output.snapshot_stride
        self.model = PhaseFieldModel.on(self.build_mesh(), config.material, config.formulation)
        logger.info(
            "%s: %d nodes, %d elements, %s",
            self.name,
            self.model.mesh.n_nodes,
            self.model.mesh.n_elements,
            config.formulation.virtual_crack,
        )

    @property
    def material(self):
        return self.model.material

    @property
    def formulation(self):
        return self.model.formulation

    @abstractmethod
    def default_mesh(self) -> "MeshSpec": ...

    def build_mesh(self) -> "Mesh":
        return generate(self.config.mesh or self.default_mesh())

    def solver_config(self) -> SolverConfig:
        return self.config.solver or SolverConfig()

    def scalars(self, state: "SolveState", loads: "Loads") -> dict[str, float]:
        energy = self.model.energies(state, loads)
        return {
            "elastic_energy": energy.elastic,
            "fracture_energy": energy.fracture,
            "pressure_work": -energy.pressure,
            "max_damage": float(state.d.values.max()),
        }

    def accept(self, state: "SolveState", record: StepRecord) -> None:
        if self.snapshot_stride and record.step % self.snapshot_stride == 0:
            path = self.output_dir / SNAPSHOT_DIR / f"step_{record.step:04d}.vtk"
            write_vtk(path, state.u, state.d, title=f"{self.name} step {record.step} t={record.time:.6g}")

    def summarize(self, history: "LoadHistory") -> dict[str, Any]:
        return {}

    def write_tables(self, history: "LoadHistory") -> dict[str, Path]:
        return {}

    def run(self) -> RunResult:
        self.output_dir.mkdir(parents=True, exist_ok=True)
        start = time.perf_counter()
        history = run_load_program(self, self.solver_config())
        wall_time = time.perf_counter() - start

        header = history.records[0].header() if history.records else list(StepRecord.HEADER)
        rows = [record.row() for record in history.records]
        files = {"history": write_tsv(self.output_dir / "history.tsv", header, rows)}
        files |= self.write_tables(history)
        files["final"] = write_vtk(self.output_dir / "final.vtk", history.state.u, history.state.d, title=self.name)

        summary: dict[str, Any] = {
            "benchmark": self.name,
            "status": history.status.value,
            "steps": len(history.records),
            "cutbacks": history.cutbacks,
            "wall_time": wall_time,
        }
        if history.message:
            summary["message"] = history.message
        summary |= self.summarize(history)
        files["meta"] = write_run_meta(self.output_dir / "run_meta.txt", self.config, summary)

        log = logger.info if history.status is RunStatus.COMPLETED else logger.error
        log("%s %s after %d steps in %.1f s.", self.name, history.status.value, len(rows), wall_time)
        return RunResult(history, header, rows, wall_time, summary, files)
