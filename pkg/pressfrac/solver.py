"""Staggered solution of the displacement and damage subproblems.

Each load step runs alternating minimization: a Newton solve for u at fixed d,
then a bound-constrained Newton solve for d at fixed u, repeated until the
momentum residual evaluated with the updated damage is small. The damage
bounds ``d_prev <= d <= 1`` are enforced with a reduced-space active set.
"""

import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from functools import cached_property
from typing import TYPE_CHECKING, NamedTuple, Optional

import msgspec
import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from pressfrac.constitutive import c0
from pressfrac.exceptions import (
    CGBreakdownError,
    ConvergenceFailure,
    LinearSolverError,
    SingularSystemError,
    SolverConfigError,
)
from pressfrac.fem.assembly import (
    AssembledSystem,
    Discretization,
    apply_dirichlet,
    assemble_damage,
    assemble_momentum,
    dirichlet_values,
    energy_terms,
    external_forces,
)
from pressfrac.models.enums import LinearSolver, RunStatus, VirtualCrack
from pressfrac.models.fields import NodalField

if TYPE_CHECKING:
    from numpy.typing import NDArray

    from pressfrac.fem.assembly import EnergyTerms
    from pressfrac.mesh import Mesh
    from pressfrac.models.fields import Loads
    from pressfrac.models.material import Formulation, Material

logger = logging.getLogger("pressfrac.solver")
step_logger = logging.getLogger("pressfrac.steps")

# Distance to a bound below which a node counts as sitting on it.
_BOUND_TOL = 1e-12

_MAX_BACKTRACKS = 6


class SolverConfig(msgspec.Struct, frozen=True, kw_only=True, forbid_unknown_fields=True):
    newton_tol: float = 1e-8
    newton_max_iter: int = 25
    am_tol: float = 1e-6
    am_max_iter: int = 200
    active_set_max_cycles: int = 50
    linear_solver: LinearSolver = LinearSolver.DIRECT
    cg_tol: float = 1e-10

    # Load stepping in pseudo-time (s)
    dt: float = 1.0
    dt_min: float = 1e-6
    growth: float = 1.2
    cutback: float = 0.5

    def __post_init__(self) -> None:
        for name in ("newton_tol", "am_tol", "cg_tol", "dt", "dt_min"):
            if getattr(self, name) <= 0:
                msg = f"{name} must be positive, got {getattr(self, name)!r}."
                raise SolverConfigError(msg)
        for name in ("newton_max_iter", "am_max_iter", "active_set_max_cycles"):
            if getattr(self, name) < 1:
                msg = f"{name} must be at least 1, got {getattr(self, name)!r}."
                raise SolverConfigError(msg)
        if not 0 < self.cutback < 1 < self.growth:
            msg = (
                "Step controls need 0 < cutback < 1 < growth, "
                f"got cutback={self.cutback!r}, growth={self.growth!r}."
            )
            raise SolverConfigError(msg)
        if self.dt_min > self.dt:
            msg = f"dt_min ({self.dt_min!r}) exceeds the nominal increment dt ({self.dt!r})."
            raise SolverConfigError(msg)


@dataclass(eq=False)
class SolveState:
    u: NodalField
    d: NodalField
    d_prev: NodalField
    step_index: int = 0
    time: float = 0.0
    active_lower: "NDArray[np.bool_]" = field(default=None)  # pyright: ignore[reportAssignmentType]
    active_upper: "NDArray[np.bool_]" = field(default=None)  # pyright: ignore[reportAssignmentType]

    def __post_init__(self) -> None:
        n = self.d.mesh.n_nodes
        if self.active_lower is None:
            self.active_lower = np.zeros(n, dtype=bool)
        if self.active_upper is None:
            self.active_upper = np.zeros(n, dtype=bool)

    @classmethod
    def initial(cls, mesh: "Mesh", damage: "Optional[dict[str, float]]" = None) -> "SolveState":
        """Zero displacement; damage set to the given value on each named node set.

        The values also become the irreversibility bound, so nodes seeded with
        d = 1 stay fully broken.
        """
        state = cls(NodalField.zeros(mesh, 2), NodalField.zeros(mesh, 1), NodalField.zeros(mesh, 1))
        for name, value in (damage or {}).items():
            state.seed(mesh.nodes_of(name), value)
        return state

    def seed(self, nodes: "NDArray[np.int64]", value: float) -> None:
        """Set damage and its lower bound on ``nodes``."""
        self.d.values[nodes] = value
        self.d_prev.values[nodes] = value
        self.active_upper = self.d.values >= 1.0 - _BOUND_TOL

    @property
    def active_mask(self) -> "NDArray[np.bool_]":
        return self.active_lower | self.active_upper

    def copy(self) -> "SolveState":
        return SolveState(
            self.u.copy(),
            self.d.copy(),
            self.d_prev.copy(),
            self.step_index,
            self.time,
            self.active_lower.copy(),
            self.active_upper.copy(),
        )


@dataclass(eq=False)
class PhaseFieldModel:
    disc: Discretization
    material: "Material"
    formulation: "Formulation"

    def __post_init__(self) -> None:
        self.formulation.check_material(self.material)

    @classmethod
    def on(cls, mesh: "Mesh", material: "Material", formulation: "Formulation") -> "PhaseFieldModel":
        return cls(Discretization(mesh), material, formulation)

    @property
    def mesh(self) -> "Mesh":
        return self.disc.mesh

    @cached_property
    def damage_scale(self) -> "NDArray[np.float64]":
        """Nodal magnitude of the local dissipation term, used to scale damage residuals."""
        k_local = self.material.Gc / (c0(self.formulation.dissipation) * self.material.ell)
        return k_local * self.disc.lumped_mass

    def momentum(self, state: SolveState, loads: "Loads") -> AssembledSystem:
        return assemble_momentum(
            self.disc, state.u, state.d, loads.pressure, self.material, self.formulation, loads, constrain=False
        )

    def damage(self, state: SolveState, d: NodalField, p: float, dt: float) -> AssembledSystem:
        return assemble_damage(self.disc, state.u, d, state.d_prev, dt, self.material, self.formulation, p)

    def energies(self, state: SolveState, loads: "Loads") -> "EnergyTerms":
        return energy_terms(self.disc, state.u, state.d, loads.pressure, self.material, self.formulation, loads)


# Linear solves


def sparse_solve(
    matrix: "sp.spmatrix",
    rhs: "NDArray[np.float64]",
    *,
    tol: float = 1e-10,
    max_iter: Optional[int] = None,
) -> "NDArray[np.float64]":
    """Jacobi-preconditioned conjugate gradient for symmetric positive definite systems.

    Stops once ``|r| <= tol * |b|``. Raises :class:`CGBreakdownError` on
    non-positive curvature or when the iteration limit is reached.
    """
    A = sp.csr_matrix(matrix)
    b = np.asarray(rhs, dtype=np.float64)
    n = b.shape[0]
    max_iter = 10 * n if max_iter is None else max_iter

    b_norm = np.linalg.norm(b)
    x = np.zeros(n)
    if b_norm == 0.0:
        return x

    diag = A.diagonal()
    if np.any(diag <= 0):
        msg = f"needs a positive diagonal, found {diag[diag <= 0][0]!r} at row {int(np.argmax(diag <= 0))}"
        raise CGBreakdownError(msg, 1.0)
    inv_diag = 1.0 / diag

    r = b.copy()
    z = inv_diag * r
    p = z.copy()
    rz = r @ z
    for _ in range(max_iter):
        if np.linalg.norm(r) <= tol * b_norm:
            return x

        Ap = A @ p
        curvature = p @ Ap
        if curvature <= 0:
            msg = "encountered non-positive curvature"
            raise CGBreakdownError(msg, float(np.linalg.norm(r) / b_norm))

        step = rz / curvature
        x += step * p
        r -= step * Ap

        z = inv_diag * r
        rz_next = r @ z
        p = z + (rz_next / rz) * p
        rz = rz_next

    residual = float(np.linalg.norm(r) / b_norm)
    if residual <= tol:
        return x

    msg = f"did not converge in {max_iter} iterations"
    raise CGBreakdownError(msg, residual)


def direct_solve(
    matrix: "sp.spmatrix", rhs: "NDArray[np.float64]", *, components: int = 1
) -> "NDArray[np.float64]":
    """Sparse LU solve. A singular matrix is reported with the dof whose
    diagonal is smallest in magnitude, converted to (node, component)."""
    A = sp.csc_matrix(matrix)
    diag = np.abs(A.diagonal())
    try:
        x = spla.splu(A).solve(np.asarray(rhs, dtype=np.float64))
    except RuntimeError:
        raise SingularSystemError(int(np.argmin(diag)), components) from None

    if not np.all(np.isfinite(x)):
        raise SingularSystemError(int(np.argmin(diag)), components)
    return x


def linear_solve(
    matrix: "sp.spmatrix",
    rhs: "NDArray[np.float64]",
    config: SolverConfig,
    *,
    components: int = 1,
) -> "NDArray[np.float64]":
    match config.linear_solver:
        case LinearSolver.DIRECT:
            return direct_solve(matrix, rhs, components=components)
        case LinearSolver.CG:
            return sparse_solve(matrix, rhs, tol=config.cg_tol)


# Displacement subproblem


def _momentum_norms(
    model: PhaseFieldModel, state: SolveState, loads: "Loads", system: AssembledSystem, dofs: "NDArray[np.int64]"
) -> tuple[float, float]:
    """Free-dof residual norm and the load scale it is measured against.

    The load scale is the larger of the applied forces and the internal forces
    over all dofs, the latter including reactions on constrained dofs.
    """
    f_ext = external_forces(model.disc, loads)
    free = system.residual.copy()
    free[dofs] = 0.0
    load = max(np.linalg.norm(f_ext), np.linalg.norm(system.residual + f_ext))
    return float(np.linalg.norm(free)), float(load)


def newton_solve_displacement(
    model: PhaseFieldModel, state: SolveState, loads: "Loads", config: SolverConfig
) -> int:
    """Newton iteration for u at fixed damage. Updates ``state.u`` in place and
    returns the number of linear solves performed."""
    dofs, values = dirichlet_values(model.disc, loads)
    state.u.values[dofs] = values

    system = model.momentum(state, loads)
    residual, load = _momentum_norms(model, state, loads, system, dofs)
    reference = max(residual, load)
    if reference == 0.0:
        return 0

    for iteration in range(config.newton_max_iter + 1):
        logger.debug("u-Newton %d: |r| = %.3e", iteration, residual / reference)
        if residual <= config.newton_tol * reference:
            return iteration
        if iteration == config.newton_max_iter:
            break

        constrained = apply_dirichlet(system, dofs)
        state.u.values += linear_solve(constrained.jacobian, -constrained.residual, config, components=2)
        system = model.momentum(state, loads)
        residual, _ = _momentum_norms(model, state, loads, system, dofs)

    raise ConvergenceFailure("displacement Newton", config.newton_max_iter, residual / reference)


def momentum_residual(model: PhaseFieldModel, state: SolveState, loads: "Loads") -> float:
    """Relative free-dof momentum residual at the current state."""
    dofs, _ = dirichlet_values(model.disc, loads)
    system = model.momentum(state, loads)
    residual, load = _momentum_norms(model, state, loads, system, dofs)
    return residual / load if load > 0 else residual


# Damage subproblem


def kkt_error(
    d: "NDArray[np.float64]",
    lower: "NDArray[np.float64]",
    residual: "NDArray[np.float64]",
    scale: "NDArray[np.float64]",
) -> float:
    """Largest nodal violation of the box complementarity conditions.

    Per node this is mid(d - lower, r / scale, d - 1), which vanishes exactly
    when the node is free with zero residual, on the lower bound with r >= 0,
    or on the upper bound with r <= 0.
    """
    scaled = residual / scale
    violation = np.maximum(d - 1.0, np.minimum(d - lower, scaled))
    return float(np.max(np.abs(violation), initial=0.0))


def _natural_residual(
    d: "NDArray[np.float64]",
    lower: "NDArray[np.float64]",
    residual: "NDArray[np.float64]",
    scale: "NDArray[np.float64]",
) -> float:
    violation = np.maximum(d - 1.0, np.minimum(d - lower, residual / scale))
    return float(np.linalg.norm(violation))


class DamageSolve(NamedTuple):
    iterations: int
    cycles: int
    kkt: float


def active_set_solve_damage(
    model: PhaseFieldModel,
    state: SolveState,
    config: SolverConfig,
    *,
    p: float = 0.0,
    dt: float = 1.0,
) -> DamageSolve:
    """Solve the damage subproblem at fixed u subject to ``d_prev <= d <= 1``.

    Nodes are split into lower-active, upper-active and free sets from the
    sign of the residual against a diagonal-scaled distance to each bound. A
    Newton step is taken on the free set with active nodes moved onto their
    bounds, then projected and backtracked on the natural residual. Updates
    ``state.d`` and the active masks in place.
    """
    mesh = model.mesh
    scale = model.damage_scale
    lower = state.d_prev.values
    pinned = lower >= 1.0 - _BOUND_TOL

    d = np.clip(state.d.values, lower, 1.0)
    d_field = NodalField(mesh, 1, d)
    system = model.damage(state, d_field, p, dt)

    prev_lower, prev_upper = state.active_lower, state.active_upper
    iterations = cycles = same_mask = 0
    while True:
        R = system.residual
        error = kkt_error(d, lower, R, scale)
        logger.debug("damage iteration %d: kkt = %.3e", iterations, error)
        if error <= config.newton_tol:
            break

        diag = np.abs(system.jacobian.diagonal())
        act_lower = ~pinned & (R > diag * (d - lower))
        act_upper = pinned | (~act_lower & (R < diag * (d - 1.0)))
        free = ~(act_lower | act_upper)

        if np.array_equal(act_lower, prev_lower) and np.array_equal(act_upper, prev_upper):
            same_mask += 1
        else:
            cycles += 1
            same_mask = 0
        prev_lower, prev_upper = act_lower, act_upper

        if cycles > config.active_set_max_cycles:
            raise ConvergenceFailure("active-set damage", cycles, error)
        if same_mask >= config.newton_max_iter:
            raise ConvergenceFailure("damage Newton", same_mask, error)

        step = np.zeros_like(d)
        step[act_lower] = lower[act_lower] - d[act_lower]
        step[act_upper] = 1.0 - d[act_upper]
        if np.any(free):
            K = sp.csr_matrix(system.jacobian)
            active = ~free
            K_free = K[free]
            rhs = -(R[free] + K_free[:, active] @ step[active])
            step[free] = linear_solve(K_free[:, free], rhs, config)

        merit = _natural_residual(d, lower, R, scale)
        length = 1.0
        for _ in range(_MAX_BACKTRACKS):
            trial = np.clip(d + length * step, lower, 1.0)
            trial_field = NodalField(mesh, 1, trial)
            trial_system = model.damage(state, trial_field, p, dt)
            if _natural_residual(trial, lower, trial_system.residual, scale) < merit:
                break
            length *= 0.5
        else:
            logger.warning(
                "Damage line search stalled after %d halvings at iteration %d (kkt = %.3e).",
                _MAX_BACKTRACKS,
                iterations,
                error,
            )
            raise ConvergenceFailure("damage line search", iterations, error)

        d, d_field, system = trial, trial_field, trial_system
        iterations += 1

    state.d.values[:] = d
    state.active_upper = d >= 1.0 - _BOUND_TOL
    state.active_lower = ~state.active_upper & (d - lower <= _BOUND_TOL)
    return DamageSolve(iterations, cycles, error)


# Staggered scheme


class StaggeredSolve(NamedTuple):
    converged: bool
    iterations: int
    newton_u: int
    newton_d: int
    residual_u: float
    residual_d: float


def alternate_minimize(
    model: PhaseFieldModel,
    state: SolveState,
    loads: "Loads",
    config: SolverConfig,
    dt: float = 1.0,
) -> StaggeredSolve:
    """Alternate displacement and damage solves until the momentum residual
    evaluated with the updated damage drops below ``am_tol``.

    Returns a result with ``converged=False`` when ``am_max_iter`` is reached;
    :class:`ConvergenceFailure` from a subproblem propagates.
    """
    watch_energy = (
        model.formulation.virtual_crack is VirtualCrack.UVC and model.material.eta == 0
    )
    previous = model.energies(state, loads).total if watch_energy else 0.0

    newton_u = newton_d = 0
    residual_u = residual_d = np.inf
    for iteration in range(1, config.am_max_iter + 1):
        newton_u += newton_solve_displacement(model, state, loads, config)
        damage = active_set_solve_damage(model, state, config, p=loads.pressure, dt=dt)
        newton_d += damage.iterations

        residual_u = momentum_residual(model, state, loads)
        residual_d = damage.kkt
        logger.debug("AM %d: |r_u| = %.3e, kkt = %.3e", iteration, residual_u, residual_d)

        if watch_energy:
            energy = model.energies(state, loads).total
            if energy > previous + 1e-10 * max(abs(previous), 1e-30):
                logger.warning(
                    "Potential energy rose from %.9e to %.9e at AM iteration %d.", previous, energy, iteration
                )
            previous = energy

        if max(residual_u, residual_d) <= config.am_tol:
            return StaggeredSolve(True, iteration, newton_u, newton_d, residual_u, residual_d)

    return StaggeredSolve(False, config.am_max_iter, newton_u, newton_d, residual_u, residual_d)


# Load stepping


class LoadProgram(ABC):
    """A benchmark as seen by the load stepper: a model, a load schedule and
    the per-step quantities to record."""

    model: PhaseFieldModel
    t_end: float

    @abstractmethod
    def loads(self, t: float) -> "Loads": ...

    def damage_initial_conditions(self) -> dict[str, float]:
        return {}

    def initial_state(self) -> SolveState:
        return SolveState.initial(self.model.mesh, self.damage_initial_conditions())

    def scalars(self, state: SolveState, loads: "Loads") -> dict[str, float]:
        return {}

    def accept(self, state: SolveState, record: "StepRecord") -> None:
        """Called after every accepted step."""


@dataclass(kw_only=True)
class StepRecord:
    step: int
    time: float
    dt: float
    am_iterations: int
    newton_u: int
    newton_d: int
    residual_u: float
    residual_d: float
    scalars: dict[str, float] = field(default_factory=dict)

    HEADER = ("step", "t", "dt", "am_iters", "newton_iters_u", "newton_iters_d", "|r_u|", "|r_d|")

    def header(self) -> list[str]:
        return [*self.HEADER, *self.scalars]

    def row(self) -> list[float]:
        return [
            self.step,
            self.time,
            self.dt,
            self.am_iterations,
            self.newton_u,
            self.newton_d,
            self.residual_u,
            self.residual_d,
            *self.scalars.values(),
        ]


@dataclass(eq=False)
class LoadHistory:
    records: list[StepRecord]
    state: SolveState
    status: RunStatus = RunStatus.COMPLETED
    message: str = ""
    cutbacks: int = 0

    @property
    def times(self) -> "NDArray[np.float64]":
        return np.array([r.time for r in self.records])

    def column(self, name: str) -> "NDArray[np.float64]":
        return np.array([r.scalars[name] for r in self.records])


def _format(value: float) -> str:
    return str(value) if isinstance(value, int) else f"{value:.10g}"


def run_load_program(program: LoadProgram, config: SolverConfig) -> LoadHistory:
    """Advance ``program`` from t = 0 to ``program.t_end``.

    A failed step is retried with the increment multiplied by ``cutback``;
    an accepted step lets it grow by ``growth`` up to the nominal ``dt``. The
    run aborts with the history so far when a step fails at ``dt_min``;
    cutbacks never go below it.
    """
    model = program.model
    state = program.initial_state()
    history = LoadHistory([], state)

    t = 0.0
    dt = config.dt
    span = max(program.t_end, 1.0)
    while program.t_end - t > 1e-12 * span:
        dt_try = min(dt, program.t_end - t)
        trial = state.copy()
        loads = program.loads(t + dt_try)

        try:
            result = alternate_minimize(model, trial, loads, config, dt_try)
            failure = "" if result.converged else f"alternating minimization hit {config.am_max_iter} iterations"
        except ConvergenceFailure as e:
            result = None
            failure = str(e)
        except LinearSolverError as e:
            logger.error("Step %d at t=%.6g aborted: %s", state.step_index + 1, t + dt_try, e)
            history.status, history.message = RunStatus.ABORTED, str(e)
            return history

        if result is None or failure:
            if dt_try <= config.dt_min * (1 + 1e-12):
                msg = f"Step failed at the minimum increment {config.dt_min:.3e} at t={t:.6g}: {failure}"
                logger.error(msg)
                history.status, history.message = RunStatus.ABORTED, msg
                return history

            dt = max(dt_try * config.cutback, config.dt_min)
            history.cutbacks += 1
            logger.warning("Cutting back to dt=%.3e at t=%.6g: %s", dt, t, failure)
            continue

        t += dt_try
        trial.d_prev = trial.d.copy()
        trial.step_index = state.step_index + 1
        trial.time = t
        state = history.state = trial

        record = StepRecord(
            step=state.step_index,
            time=t,
            dt=dt_try,
            am_iterations=result.iterations,
            newton_u=result.newton_u,
            newton_d=result.newton_d,
            residual_u=result.residual_u,
            residual_d=result.residual_d,
            scalars=program.scalars(state, loads),
        )
        if not history.records:
            step_logger.info("\t".join(record.header()))
        history.records.append(record)
        step_logger.info("\t".join(_format(v) for v in record.row()))
        program.accept(state, record)

        dt = min(dt_try * config.growth, config.dt)

    return history
