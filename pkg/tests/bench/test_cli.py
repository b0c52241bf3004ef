import math

import pytest

from bench.__main__ import ORACLE_HEADER, build_parser, main
from bench.output import read_tsv
from pressfrac.models import Indicator, VirtualCrack
from tests.conftest import CONFIG_DIR

from .conftest import TINY_BAR, TINY_HOLE, write_config


def test_oracle_subcommand(tmp_path):
    code = main(
        ["oracle", "--lengths", "1", "4", "--profile", "uniform:1", "--E", "1", "--nu", "0", "--Gc", "1", "--out", str(tmp_path)]
    )

    assert code == 0
    header, rows = read_tsv(tmp_path / "oracle.tsv")
    assert header == list(ORACLE_HEADER)
    assert [float(row[0]) for row in rows] == [1.0, 4.0]
    assert float(rows[0][1]) == pytest.approx(math.sqrt(math.pi), rel=1e-9)
    assert float(rows[0][2]) == pytest.approx(math.pi, rel=1e-9)
    assert float(rows[1][5]) == pytest.approx(16.0, rel=1e-8)
    assert (tmp_path / "pressfrac.log").is_file()


def test_oracle_subcommand_reads_config(tmp_path):
    code = main(["oracle", "--config", str(CONFIG_DIR / "oracle.example.ini"), "--lengths", "800", "--out", str(tmp_path)])

    assert code == 0
    _, rows = read_tsv(tmp_path / "oracle.tsv")
    assert [row[0] for row in rows] == ["800"]


def test_run_oracle_config(tmp_path):
    code = main(["run", str(CONFIG_DIR / "oracle.example.ini"), "--out", str(tmp_path)])

    assert code == 0
    _, rows = read_tsv(tmp_path / "oracle.tsv")
    assert len(rows) == 3
    assert "# table: oracle.tsv" in (tmp_path / "run_meta.txt").read_text(encoding="utf-8")


def test_run_with_overrides(tmp_path):
    config = write_config(tmp_path, TINY_BAR)
    out = tmp_path / "out"

    code = main(["run", str(config), "--out", str(out), "--formulation", "lvc", "--indicator", "2d-d2"])

    assert code == 0
    meta = (out / "run_meta.txt").read_text(encoding="utf-8")
    assert "virtual_crack = lvc" in meta
    assert "indicator = two_d_minus_d2" in meta
    assert (out / "traction_separation.tsv").is_file()


def test_run_hole(tmp_path):
    config = write_config(tmp_path, TINY_HOLE)
    out = tmp_path / "out"

    code = main(["run", str(config), "--out", str(out)])

    assert code == 0
    header, rows = read_tsv(out / "hoop_history.tsv")
    assert header[:3] == ["step", "t", "pressure"]
    assert len(rows) == 2
    assert (out / "final.vtk").is_file()


def test_ell_sweep(tmp_path):
    config = write_config(tmp_path, TINY_BAR)

    code = main(["run", str(config), "--out", str(tmp_path / "sweep"), "--ell", "5", "10"])

    assert code == 0
    for name in ("ell_5", "ell_10"):
        assert (tmp_path / "sweep" / name / "history.tsv").is_file()
    assert "ell = 5.0" in (tmp_path / "sweep" / "ell_5" / "run_meta.txt").read_text(encoding="utf-8")


def test_config_error_exit_code(tmp_path):
    config = write_config(tmp_path, TINY_BAR.replace("[bar]", "[bar]\npresure = 1.0"))

    assert main(["run", str(config), "--out", str(tmp_path / "out")]) == 2


def test_missing_config_file(tmp_path):
    assert main(["run", str(tmp_path / "nope.ini")]) == 2


def test_pressure_limit_exit_code(tmp_path):
    config = write_config(tmp_path, TINY_BAR.replace("defect = 0.0", "defect = 0.0\npressure = 10.0"))

    assert main(["run", str(config), "--out", str(tmp_path / "out")]) == 2


def test_oracle_error_exit_code(tmp_path):
    assert main(["oracle", "--profile", "spline:1", "--out", str(tmp_path)]) == 1


def test_parser():
    args = build_parser().parse_args(["-v", "run", "x.ini", "--formulation", "uvc", "--indicator", "d2", "--ell", "1", "2"])

    assert args.verbose
    assert args.formulation is VirtualCrack.UVC
    assert args.indicator is Indicator.QUADRATIC
    assert args.ell == [1.0, 2.0]


def test_parser_rejects_unknown_indicator(capsys):
    with pytest.raises(SystemExit) as excinfo:
        build_parser().parse_args(["run", "x.ini", "--indicator", "d3"])

    assert excinfo.value.code == 2
    assert "Unknown indicator 'd3'" in capsys.readouterr().err
