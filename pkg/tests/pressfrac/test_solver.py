import numpy as np
import pytest
import scipy.sparse as sp

import pressfrac.solver as solver
from pressfrac.exceptions import CGBreakdownError, ConvergenceFailure, SingularSystemError, SolverConfigError
from pressfrac.fem.assembly import AssembledSystem
from pressfrac.models import Dissipation, Formulation, LinearSolver, RunStatus
from pressfrac.models.fields import DirichletBC, Loads, NodalField, fixed
from pressfrac.solver import (
    LoadProgram,
    PhaseFieldModel,
    SolverConfig,
    SolveState,
    StepRecord,
    active_set_solve_damage,
    direct_solve,
    kkt_error,
    linear_solve,
    newton_solve_displacement,
    run_load_program,
    sparse_solve,
)

STRAIN = 1e-3


def laplacian(n: int) -> sp.csr_matrix:
    line = sp.diags([-np.ones(n - 1), 2 * np.ones(n), -np.ones(n - 1)], [-1, 0, 1])
    eye = sp.identity(n)
    return (sp.kron(eye, line) + sp.kron(line, eye)).tocsr()


def stretch(t: float = 1.0) -> Loads:
    """Uniaxial stretch of the 4 x 4 square by STRAIN * t, free to contract."""
    return Loads(
        time=t,
        dirichlet=[
            fixed("left", 0),
            fixed("bottom", 1),
            DirichletBC("right", 0, lambda x, y, t: np.full_like(x, 4.0 * STRAIN * t)),
        ],
    )


class TestLinearSolvers:
    def test_identity(self, rng):
        rhs = rng.normal(size=7)

        np.testing.assert_allclose(sparse_solve(sp.identity(7), rhs), rhs)

    def test_zero_rhs(self):
        np.testing.assert_array_equal(sparse_solve(laplacian(3), np.zeros(9)), 0.0)

    def test_laplacian_matches_dense(self, rng):
        A = laplacian(10)
        rhs = rng.normal(size=100)

        x = sparse_solve(A, rhs, tol=1e-12)

        np.testing.assert_allclose(x, np.linalg.solve(A.toarray(), rhs), rtol=1e-8, atol=1e-10)

    def test_indefinite_matrix_breaks_down(self):
        with pytest.raises(CGBreakdownError, match="non-positive curvature"):
            sparse_solve(sp.csr_matrix([[1.0, 2.0], [2.0, 1.0]]), np.array([1.0, -1.0]))

    def test_iteration_limit(self, rng):
        with pytest.raises(CGBreakdownError, match="did not converge in 2 iterations") as excinfo:
            sparse_solve(laplacian(10), rng.normal(size=100), max_iter=2)
        assert excinfo.value.residual > 0

    def test_direct_matches_cg(self, rng):
        A = laplacian(6)
        rhs = rng.normal(size=36)
        config = SolverConfig(linear_solver=LinearSolver.CG, cg_tol=1e-12)

        np.testing.assert_allclose(direct_solve(A, rhs), linear_solve(A, rhs, config), rtol=1e-8)

    def test_direct_singular(self):
        A = sp.csr_matrix(np.diag([1.0, 2.0, 0.0, 3.0]))

        with pytest.raises(SingularSystemError) as excinfo:
            direct_solve(A, np.ones(4), components=2)
        assert (excinfo.value.node, excinfo.value.component) == (1, 0)


class TestSolverConfig:
    @pytest.mark.parametrize(
        ("kwargs", "message"),
        [
            ({"dt": 0.0}, "dt must be positive"),
            ({"newton_tol": -1.0}, "newton_tol must be positive"),
            ({"am_max_iter": 0}, "am_max_iter must be at least 1"),
            ({"cutback": 1.5}, "0 < cutback < 1 < growth"),
            ({"growth": 1.0}, "0 < cutback < 1 < growth"),
            ({"dt": 0.1, "dt_min": 0.2}, "exceeds the nominal increment"),
        ],
    )
    def test_invalid(self, kwargs, message):
        with pytest.raises(SolverConfigError, match=message):
            SolverConfig(**kwargs)


class TestDisplacement:
    def test_linear_problem_converges_in_one_iteration(self, square_mesh, plain_material, formulation):
        model = PhaseFieldModel.on(square_mesh, plain_material, formulation)
        state = SolveState.initial(square_mesh)

        iterations = newton_solve_displacement(model, state, stretch(), SolverConfig())

        assert iterations == 1
        x, y = square_mesh.nodes.T
        contraction = plain_material.nu / (1 - plain_material.nu)
        np.testing.assert_allclose(state.u.nodal[:, 0], STRAIN * x, atol=1e-12)
        np.testing.assert_allclose(state.u.nodal[:, 1], -contraction * STRAIN * y, atol=1e-12)

    def test_unloaded_problem_needs_no_iterations(self, square_mesh, plain_material, formulation):
        model = PhaseFieldModel.on(square_mesh, plain_material, formulation)
        state = SolveState.initial(square_mesh)
        loads = Loads(dirichlet=[fixed("left", 0), fixed("left", 1)])

        assert newton_solve_displacement(model, state, loads, SolverConfig()) == 0
        np.testing.assert_array_equal(state.u.values, 0.0)


class TestDamage:
    def test_kkt_error(self):
        lower = np.zeros(4)
        d = np.array([0.0, 0.5, 1.0, 0.0])
        scale = np.ones(4)

        assert kkt_error(d, lower, np.array([3.0, 0.0, -2.0, 0.0]), scale) == 0.0
        assert kkt_error(d, lower, np.array([3.0, 0.25, -2.0, 0.0]), scale) == 0.25
        assert kkt_error(d, lower, np.array([-0.5, 0.0, -2.0, 0.0]), scale) == 0.5

    def test_at1_stays_on_lower_bound_below_threshold(self, square_mesh, plain_material):
        model = PhaseFieldModel.on(square_mesh, plain_material, Formulation(dissipation=Dissipation.AT1))
        state = SolveState.initial(square_mesh)

        result = active_set_solve_damage(model, state, SolverConfig())

        assert result.iterations == 0
        assert result.kkt == 0.0
        np.testing.assert_array_equal(state.d.values, 0.0)
        assert state.active_lower.all()
        assert not state.active_upper.any()

    def test_at2_damages_under_stretch(self, square_mesh, plain_material):
        model = PhaseFieldModel.on(square_mesh, plain_material, Formulation(dissipation=Dissipation.AT2))
        state = SolveState.initial(square_mesh)
        x = square_mesh.nodes[:, 0]
        state.u = NodalField.from_nodal(square_mesh, np.column_stack([0.1 * x, np.zeros_like(x)]))
        config = SolverConfig()

        result = active_set_solve_damage(model, state, config)

        assert result.kkt <= config.newton_tol
        assert np.all(state.d.values > 0)
        assert np.all(state.d.values <= 1)

    def test_irreversibility(self, square_mesh, plain_material):
        model = PhaseFieldModel.on(square_mesh, plain_material, Formulation(dissipation=Dissipation.AT2))
        state = SolveState.initial(square_mesh, {"left": 0.5})
        left = square_mesh.nodes_of("left")

        active_set_solve_damage(model, state, SolverConfig())

        assert np.all(state.d.values >= state.d_prev.values - 1e-12)
        np.testing.assert_allclose(state.d.values[left], 0.5)
        assert state.active_lower[left].all()

    def test_broken_nodes_stay_broken(self, square_mesh, plain_material):
        model = PhaseFieldModel.on(square_mesh, plain_material, Formulation(dissipation=Dissipation.AT2))
        state = SolveState.initial(square_mesh, {"bottom": 1.0})
        bottom = square_mesh.nodes_of("bottom")

        active_set_solve_damage(model, state, SolverConfig())

        np.testing.assert_array_equal(state.d.values[bottom], 1.0)
        assert state.active_upper[bottom].all()

    def test_stalled_line_search_keeps_iterate(self, square_mesh, plain_material, monkeypatch, caplog):
        model = PhaseFieldModel.on(square_mesh, plain_material, Formulation(dissipation=Dissipation.AT2))
        state = SolveState.initial(square_mesh)
        scale = model.damage_scale

        # residual pushes d up but grows the further d moves from zero
        def damage(current, d, p, dt):
            return AssembledSystem(-scale * (0.5 + 10.0 * d.values), sp.diags(scale).tocsr())

        monkeypatch.setattr(model, "damage", damage)

        with pytest.raises(ConvergenceFailure, match="damage line search"):
            active_set_solve_damage(model, state, SolverConfig())

        np.testing.assert_array_equal(state.d.values, 0.0)
        assert "line search stalled" in caplog.text


class Stretched(LoadProgram):
    def __init__(self, mesh, material, formulation, t_end: float = 1.0) -> None:
        self.model = PhaseFieldModel.on(mesh, material, formulation)
        self.t_end = t_end
        self.accepted: list[StepRecord] = []

    def loads(self, t: float) -> Loads:
        return stretch(t)

    def scalars(self, state: SolveState, loads: Loads) -> dict[str, float]:
        return {"end_displacement": float(state.u.nodal[:, 0].max())}

    def accept(self, state: SolveState, record: StepRecord) -> None:
        self.accepted.append(record)


class TestLoadProgram:
    def test_elastic_steps(self, square_mesh, plain_material, formulation):
        program = Stretched(square_mesh, plain_material, formulation)

        history = run_load_program(program, SolverConfig(dt=0.25))

        assert history.status is RunStatus.COMPLETED
        assert history.cutbacks == 0
        np.testing.assert_allclose(history.times, [0.25, 0.5, 0.75, 1.0])
        np.testing.assert_allclose(history.column("end_displacement"), 4 * STRAIN * history.times)
        assert [r.am_iterations for r in history.records] == [1, 1, 1, 1]
        assert all(r.newton_d == 0 for r in history.records)
        assert program.accepted == history.records
        np.testing.assert_array_equal(history.state.d.values, 0.0)

    def test_record_rows_follow_header(self, square_mesh, plain_material, formulation):
        history = run_load_program(Stretched(square_mesh, plain_material, formulation, 0.5), SolverConfig(dt=0.5))
        record = history.records[0]

        assert record.header() == [*StepRecord.HEADER, "end_displacement"]
        assert len(record.row()) == len(record.header())
        assert record.row()[:2] == [1, 0.5]

    def test_cutback_then_growth(self, square_mesh, plain_material, formulation, monkeypatch):
        real = solver.alternate_minimize
        calls = []

        def flaky(*args, **kwargs):
            calls.append(args[4])
            if len(calls) == 1:
                raise ConvergenceFailure("damage Newton", 25, 1.0)
            return real(*args, **kwargs)

        monkeypatch.setattr(solver, "alternate_minimize", flaky)
        history = run_load_program(Stretched(square_mesh, plain_material, formulation), SolverConfig(dt=0.25))

        assert history.status is RunStatus.COMPLETED
        assert history.cutbacks == 1
        assert calls[:3] == pytest.approx([0.25, 0.125, 0.15])
        assert history.times[-1] == pytest.approx(1.0)

    def test_cutback_clamps_to_minimum_increment(self, square_mesh, plain_material, formulation, monkeypatch):
        real = solver.alternate_minimize
        calls = []

        def flaky(*args, **kwargs):
            calls.append(args[4])
            if len(calls) <= 2:
                raise ConvergenceFailure("damage Newton", 25, 1.0)
            return real(*args, **kwargs)

        monkeypatch.setattr(solver, "alternate_minimize", flaky)
        history = run_load_program(
            Stretched(square_mesh, plain_material, formulation), SolverConfig(dt=0.25, dt_min=0.1)
        )

        assert history.status is RunStatus.COMPLETED
        assert history.cutbacks == 2
        assert calls[:3] == pytest.approx([0.25, 0.125, 0.1])
        assert history.records[0].dt == pytest.approx(0.1)

    def test_abort_at_minimum_increment(self, square_mesh, plain_material, formulation, monkeypatch):
        calls = []

        def failing(*args, **kwargs):
            calls.append(args[4])
            raise ConvergenceFailure("displacement Newton", 25, 1.0)

        monkeypatch.setattr(solver, "alternate_minimize", failing)
        history = run_load_program(
            Stretched(square_mesh, plain_material, formulation), SolverConfig(dt=0.25, dt_min=0.1)
        )

        assert history.status is RunStatus.ABORTED
        assert calls == pytest.approx([0.25, 0.125, 0.1])
        assert history.cutbacks == 2
        assert history.records == []
        assert "failed at the minimum increment" in history.message

    def test_abort_on_linear_solver_error(self, square_mesh, plain_material, formulation, monkeypatch):
        def singular(*args, **kwargs):
            raise SingularSystemError(7, 2)

        monkeypatch.setattr(solver, "alternate_minimize", singular)
        history = run_load_program(Stretched(square_mesh, plain_material, formulation), SolverConfig(dt=0.25))

        assert history.status is RunStatus.ABORTED
        assert history.cutbacks == 0
        assert history.message == "Singular system: zero pivot at node 3 (component 1)."
