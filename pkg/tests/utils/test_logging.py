import io
import logging

import pytest

from utils.logging import (
    LOG_FILENAME,
    ColorFormatter,
    setup_run_logging,
    stream_supports_colour,
    teardown_run_logging,
)


def test_run_log_file(tmp_path):
    handler = setup_run_logging(tmp_path)
    try:
        logging.getLogger("pressfrac.solver").info("hello from the solver")
        logging.getLogger("bench.bar").debug("not at INFO")
    finally:
        teardown_run_logging(handler)

    text = (tmp_path / LOG_FILENAME).read_text(encoding="utf-8")
    assert "pressfrac.solver: hello from the solver" in text
    assert "not at INFO" not in text


def test_verbose_logs_debug(tmp_path):
    handler = setup_run_logging(tmp_path, verbose=True)
    try:
        logging.getLogger("bench.bar").debug("iteration detail")
    finally:
        teardown_run_logging(handler)

    assert "iteration detail" in (tmp_path / LOG_FILENAME).read_text(encoding="utf-8")


def test_teardown_detaches(tmp_path):
    handler = setup_run_logging(tmp_path)
    teardown_run_logging(handler)

    assert handler not in logging.getLogger("pressfrac").handlers
    assert handler not in logging.getLogger("bench").handlers


@pytest.mark.parametrize(
    ("env", "expected"),
    [({"NO_COLOR": "1"}, False), ({"FORCE_COLOR": "1"}, True), ({}, False)],
)
def test_colour_detection(monkeypatch, env, expected):
    for key in ("NO_COLOR", "FORCE_COLOR", "PYCHARM_HOSTED", "TERM_PROGRAM"):
        monkeypatch.delenv(key, raising=False)
    for key, value in env.items():
        monkeypatch.setenv(key, value)

    # StringIO is not a tty
    assert stream_supports_colour(io.StringIO()) is expected


def test_color_formatter_marks_level():
    record = logging.LogRecord("pressfrac.steps", logging.WARNING, __file__, 1, "cut back", None, None)

    output = ColorFormatter().format(record)

    assert "\x1b[33;1mWARNING" in output
    assert output.endswith("cut back")
