"""Benchmark problems, result files and the ``pressfrac`` command line."""
