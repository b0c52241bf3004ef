import argparse
import logging
from pathlib import Path
from typing import TYPE_CHECKING, Optional

import msgspec

from pressfrac.exceptions import PressFracException
from pressfrac.models.enums import Benchmark, Indicator, RunStatus, VirtualCrack
from pressfrac.oracle import PlaneStrainConstants, crack_length_table, parse_profile
from utils.config import OracleBlock, ProblemConfig
from utils.logging import setup_run_logging, teardown_run_logging
from utils.types.errors import PressFracConfigError

from .bar import run_bar
from .hole import run_hole
from .output import write_run_meta, write_tsv
from .surfing import run_surfing, write_convergence

if TYPE_CHECKING:
    from collections.abc import Sequence

    from .problem import RunResult

logger = logging.getLogger("bench")

RUNNERS = {
    Benchmark.BAR: run_bar,
    Benchmark.HOLE: run_hole,
    Benchmark.SURFING: run_surfing,
}

ORACLE_HEADER = ("a", "K_I", "G", "K_I^2/E'", "p_c", "w(0)")


def _indicator(value: str) -> Indicator:
    try:
        return Indicator.from_short_form(value)
    except ValueError as e:
        raise argparse.ArgumentTypeError(str(e)) from None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pressfrac", description="Phase-field pressurized fracture benchmarks")
    parser.add_argument("-v", "--verbose", action="store_true", help="Log solver iterations at DEBUG level")
    subparsers = parser.add_subparsers(title="subcommands", dest="command", required=True)

    run = subparsers.add_parser("run", help="Run the benchmark described by a configuration file")
    run.add_argument("config", type=Path, help="INI configuration file")
    run.add_argument("--out", type=Path, help="Output directory, overriding [output] directory")
    run.add_argument(
        "--formulation",
        type=VirtualCrack,
        choices=list(VirtualCrack),
        help="Virtual crack formulation: uvc or lvc",
    )
    run.add_argument(
        "--indicator",
        type=_indicator,
        help="Indicator function: d, d2 or 2d-d2",
    )
    run.add_argument(
        "--ell",
        type=float,
        nargs="+",
        help="Regularization length(s). Several values run one after another, each in its own sub-directory.",
    )

    oracle = subparsers.add_parser("oracle", help="Tabulate LEFM reference values for a pressurized crack")
    oracle.add_argument("--config", type=Path, help="Configuration file with an [oracle] block")
    oracle.add_argument("--lengths", type=float, nargs="+", help="Crack half-lengths a (mm)")
    oracle.add_argument("--profile", help="Pressure profile: uniform:P, poly:c0,c1,... or wedge:C")
    oracle.add_argument("--E", type=float, dest="E", help="Young's modulus (MPa)")
    oracle.add_argument("--nu", type=float, help="Poisson's ratio")
    oracle.add_argument("--Gc", type=float, dest="Gc", help="Critical fracture energy (mJ/mm^2)")
    oracle.add_argument("--out", type=Path, help="Output directory")
    return parser


def run_oracle(block: OracleBlock, out: Path) -> Path:
    profile = parse_profile(block.profile)
    constants = PlaneStrainConstants(E=block.E, nu=block.nu)
    rows = crack_length_table(profile, block.lengths, constants, block.Gc)
    for row in rows:
        logger.info(
            "a=%g: K_I=%.10g, G=%.10g, K_I^2/E'=%.10g, p_c=%.10g, w(0)=%.10g",
            row.a,
            row.sif,
            row.G,
            row.G_from_sif,
            row.critical_pressure,
            row.center_aperture,
        )
    return write_tsv(out / "oracle.tsv", ORACLE_HEADER, rows)


def run_benchmark(config: ProblemConfig, ells: "Optional[Sequence[float]]" = None) -> "list[RunResult]":
    """Run ``config`` once, or once per regularization length in ``ells``."""
    out = Path(config.output.directory)
    runner = RUNNERS[config.benchmark]
    if not ells:
        return [runner(config, out)]

    results = []
    for ell in ells:
        logger.info("Running %s with ell=%g", config.benchmark.value, ell)
        results.append(runner(config.with_overrides(ell=ell), out / f"ell_{ell:g}"))

    if config.benchmark is Benchmark.SURFING and config.surfing is not None:
        write_convergence(out / "convergence.tsv", list(zip(ells, results, strict=True)), config.surfing.a)
    return results


def _oracle_block(args: argparse.Namespace) -> OracleBlock:
    block = OracleBlock()
    if args.config is not None:
        config = ProblemConfig.from_file(args.config)
        block = config.oracle or block

    overrides = {
        key: getattr(args, key) for key in ("lengths", "profile", "E", "nu", "Gc") if getattr(args, key) is not None
    }
    return msgspec.structs.replace(block, **overrides)


def main(argv: "Optional[Sequence[str]]" = None) -> int:
    args = build_parser().parse_args(argv)

    handler = None
    try:
        if args.command == "oracle":
            out = args.out or Path("out")
            handler = setup_run_logging(out, verbose=args.verbose)
            run_oracle(_oracle_block(args), out)
            return 0

        config = ProblemConfig.from_file(args.config)
        config = config.with_overrides(
            virtual_crack=args.formulation,
            indicator=args.indicator,
            directory=str(args.out) if args.out is not None else None,
        )
        out = Path(config.output.directory)
        handler = setup_run_logging(out, verbose=args.verbose)

        if config.benchmark is Benchmark.ORACLE:
            path = run_oracle(config.oracle or OracleBlock(), out)
            write_run_meta(out / "run_meta.txt", config, {"benchmark": "oracle", "table": path.name})
            return 0

        ells = args.ell
        if ells is None and config.surfing is not None and config.benchmark is Benchmark.SURFING:
            ells = config.surfing.ell
        results = run_benchmark(config, ells)
        return 0 if all(r.status is RunStatus.COMPLETED for r in results) else 1
    except PressFracConfigError as e:
        if handler is None:
            handler = setup_run_logging(verbose=args.verbose)
        logger.error("Configuration error: %s", e)  # noqa: TRY400
        return 2
    except PressFracException as e:
        if handler is None:
            handler = setup_run_logging(verbose=args.verbose)
        logger.error("%s", e)  # noqa: TRY400
        return 1
    finally:
        if handler is not None:
            teardown_run_logging(handler)


if __name__ == "__main__":
    raise SystemExit(main())
