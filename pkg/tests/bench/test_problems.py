import numpy as np
import pytest

from bench.bar import TRACTION_HEADER, BarProblem
from bench.hole import HOOP_HEADER, HoleProblem
from bench.output import read_tsv
from bench.surfing import CONVERGENCE_HEADER, SurfingProblem, write_convergence
from pressfrac.constitutive import sigma_c
from pressfrac.models import RunStatus
from pressfrac.solver import StepRecord
from utils.types.errors import InvalidConfigValue, MissingConfigBlock

from .conftest import TINY_BAR, tiny


class TestBar:
    def test_elastic_run(self, tiny_bar):
        out = tiny_bar.output.directory

        result = BarProblem(tiny_bar, out).run()

        assert result.status is RunStatus.COMPLETED
        assert len(result.rows) == 3
        assert result.header == [
            *StepRecord.HEADER,
            "elastic_energy",
            "fracture_energy",
            "pressure_work",
            "max_damage",
            "traction",
            "aperture",
        ]
        material = tiny_bar.material
        assert material is not None
        # uniaxial stress sigma = E' * end displacement / length
        expected = material.e_prime * result.history.times / 10.0
        np.testing.assert_allclose(result.column("traction"), expected, rtol=1e-6)
        np.testing.assert_array_equal(result.column("max_damage"), 0.0)

        header, rows = read_tsv(result.files["traction_separation"])
        assert header == list(TRACTION_HEADER)
        assert [row[-1] for row in rows] == ["0", "0", "0"]
        assert result.summary["aperture_jumps"] == 0
        assert result.summary["sigma_c"] == pytest.approx(sigma_c(material))

        for name in ("history", "final", "meta"):
            assert result.files[name].is_file()
        snapshots = sorted(p.name for p in (result.files["final"].parent / "snapshots").iterdir())
        assert snapshots == ["step_0002.vtk"]

    def test_pressure_limit(self, tmp_path):
        text = TINY_BAR.replace("defect = 0.0", "defect = 0.0\npressure = 10.0")

        with pytest.raises(InvalidConfigValue, match="sigma_c / 3"):
            BarProblem(tiny(text, tmp_path), tmp_path)

    def test_needs_material(self, tmp_path):
        config = tiny("[problem]\nbenchmark = oracle\n\n[oracle]\n", tmp_path)

        with pytest.raises(MissingConfigBlock, match=r"\[material\]"):
            BarProblem(config, tmp_path)


class TestHole:
    def test_elastic_run(self, tiny_hole):
        problem = HoleProblem(tiny_hole, tiny_hole.output.directory)

        result = problem.run()

        assert result.status is RunStatus.COMPLETED
        np.testing.assert_allclose(result.column("pressure"), [0.5, 1.0])
        hoop = result.column("hoop_stress")
        # internal pressure raises the hoop stress at the midplane
        assert hoop[1] > hoop[0]
        assert problem.localized_step is None
        assert problem.onset_hoop_stress() is None
        assert "onset_hoop_stress" not in result.summary

        header, rows = read_tsv(result.files["hoop_history"])
        assert header == list(HOOP_HEADER)
        assert len(rows) == 2

    def test_midplane_skips_hole_band(self, tiny_hole):
        problem = HoleProblem(tiny_hole, tiny_hole.output.directory)
        mesh = problem.model.mesh

        distance = np.hypot(*mesh.nodes[problem.midplane_nodes].T)
        assert distance.min() >= 1.0 + 0.5
        np.testing.assert_allclose(mesh.nodes[problem.midplane_nodes, 1], 0.0, atol=1e-12)


class TestSurfing:
    def test_setup(self, tiny_surfing):
        problem = SurfingProblem(tiny_surfing, tiny_surfing.output.directory)

        assert problem.tau == 1.0
        assert problem.h == 0.5
        # half the critical pressure of a 4 mm crack
        assert problem.p == pytest.approx(0.5 * np.sqrt(0.12 * 31250.0 / (np.pi * 4.0)))
        assert problem.gc_eff == pytest.approx(0.12 * (1 + 2 * 0.5 / (8 / 3)))
        x = problem.model.mesh.nodes[problem.crack_nodes, 0]
        assert x.max() == pytest.approx(4.0)
        assert len(problem.crack_nodes) == 9

    def test_short_run(self, tiny_surfing):
        problem = SurfingProblem(tiny_surfing, tiny_surfing.output.directory)

        result = problem.run()

        header, rows = read_tsv(result.files["j_history"])
        assert header == ["step", "t", "t/tau", "J/Gc_eff@1a", "J/Gc_eff@1.5a", "crack_tip"]
        assert len(rows) == len(result.rows)
        # the seeded crack stays broken
        np.testing.assert_array_equal(result.state.d.values[problem.crack_nodes], 1.0)
        if result.rows:
            assert result.column("crack_tip")[0] >= 4.0


def test_convergence_table(tmp_path):
    class Fake:
        def __init__(self, error, h):
            self.summary = {"h": h, "steady_error@1a": error}

    path = write_convergence(tmp_path / "convergence.tsv", [(40.0, Fake(0.067, 10.0)), (20.0, Fake(0.052, 5.0))], 1600.0)  # pyright: ignore[reportArgumentType]

    header, rows = read_tsv(path)
    assert header == list(CONVERGENCE_HEADER)
    assert rows[0][:4] == ["40", "0.025", "10", "0.067"]
    assert rows[0][4] == "nan"
    assert float(rows[1][4]) == pytest.approx(0.052 / 0.067)
