"""CLI entrypoint: ``symtensor`` / ``python -m symtensor``."""

from __future__ import annotations

import argparse
import platform
import sys
from importlib import metadata
from typing import Any

from rich.logging import RichHandler

from symtensor import config
from symtensor._observability import LOG_LEVEL_DEBUG, LOG_LEVEL_INFO, LOG_LEVEL_WARN, counters, logger, set_log_level
from symtensor.charge_systems import SYSTEM_NAMES
from symtensor.cli.config import load_config
from symtensor.cli.report import (
    console,
    print_bench_table,
    print_ed_summary,
    print_info,
    print_mera_summary,
    print_verify_table,
    write_csv,
    write_json,
)
from symtensor.cli.runner import BENCH_OPS, run_bench, run_ed, run_mera
from symtensor.cli.verify import SUITES, run_suites, verify_report
from symtensor.exception import ConfigError, OracleSizeError
from symtensor.gamma_engine import configure_cache
from symtensor.su2_kernels import kernel_cache_info

EXIT_OK = 0
EXIT_VERIFY_FAILED = 1
EXIT_USAGE = 2

_PACKAGES = ("symtensor", "numpy", "scipy", "pydantic", "rich")

# ---------------------------------------------------------------------------
# Argument parsing
# ---------------------------------------------------------------------------


def parse_args(argv: list[str] | None = None) -> argparse.Namespace:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument(
        "--threads",
        type=int,
        default=config.DEFAULT_THREADS,
        help=f"Worker threads (default: {config.DEFAULT_THREADS}, env SYMTENSOR_THREADS)",
    )
    common.add_argument(
        "--gamma-cache",
        default=None,
        metavar="DIR",
        help=f"Directory persisting recoupling maps (default: ${config.CACHE_DIR_ENV})",
    )
    common.add_argument("--seed", type=int, default=None, help="Random seed")
    common.add_argument("--out", default=None, metavar="FILE", help="Output file (default: stdout)")
    common.add_argument("-v", "--verbose", action="count", default=0, help="More log output (-v info, -vv debug)")

    parser = argparse.ArgumentParser(
        prog="symtensor",
        description="SU(2)-symmetric tensor engine: verification, benchmarks and solvers",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    verify = sub.add_parser("verify", parents=[common], help="Run the property suites")
    verify.add_argument("--suite", choices=[*SUITES, "all"], default="all", help="Suite to run (default: all)")

    bench = sub.add_parser("bench", parents=[common], help="Time symmetric against dense operations")
    bench.add_argument("--op", choices=BENCH_OPS, required=True)
    bench.add_argument("--charges", type=int, default=3, help="Spins 0..q-1 per leg (default: 3)")
    bench.add_argument("--deg", type=int, default=4, help="Degeneracy per spin (default: 4)")
    bench.add_argument("--reps", type=int, default=5, help="Timed repetitions (default: 5)")
    bench.add_argument("--dense", action="store_true", help="Run the dense mode")
    bench.add_argument("--sym", action="store_true", help="Run the symmetric mode")

    solve = sub.add_parser("solve", parents=[common], help="Exact diagonalization or MERA")
    solve.add_argument("kind", choices=["ed", "mera"])
    solve.add_argument("--config", required=True, metavar="FILE", help="JSON run configuration")

    sub.add_parser("info", parents=[common], help="Versions, charge systems, cache and counters")
    return parser.parse_args(argv)


def _configure_logging(verbose: int) -> None:
    level = LOG_LEVEL_WARN if verbose == 0 else LOG_LEVEL_INFO if verbose == 1 else LOG_LEVEL_DEBUG
    if not any(isinstance(h, RichHandler) for h in logger.handlers):
        logger.addHandler(RichHandler(console=console, show_path=False))
    set_log_level(level)


def _version(package: str) -> str:
    try:
        return metadata.version(package)
    except metadata.PackageNotFoundError:
        return "unknown"


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


def _verify(args: argparse.Namespace) -> int:
    suites = list(SUITES) if args.suite == "all" else [args.suite]
    results = run_suites(suites, args.seed)
    print_verify_table(results)
    report = verify_report(results)
    write_json(report, args.out)
    return EXIT_OK if report["passed"] else EXIT_VERIFY_FAILED


def _bench(args: argparse.Namespace) -> int:
    modes = tuple(m for m, on in (("sym", args.sym), ("dense", args.dense)) if on) or ("sym", "dense")
    results = run_bench(args.op, args.charges, args.deg, args.reps, modes, args.seed)
    print_bench_table(results)
    write_csv(results, args.out)
    return EXIT_OK


def _solve(args: argparse.Namespace, cache: Any) -> int:
    cfg = load_config(args.config, args.kind)
    if args.kind == "ed":
        report = run_ed(cfg, cache, args.threads)  # type: ignore[arg-type]
        print_ed_summary(report)
    else:
        report = run_mera(cfg, args.seed, cache)  # type: ignore[arg-type]
        print_mera_summary(report)
    report["cache"] = cache.stats()
    write_json(report, args.out)
    return EXIT_OK


def _info(args: argparse.Namespace, cache: Any) -> int:
    info = {
        "format_version": config.REPORT_FORMAT_VERSION,
        "python": platform.python_version(),
        "versions": {p: _version(p) for p in _PACKAGES},
        "charge_systems": list(SYSTEM_NAMES),
        "cache_dir": str(cache.directory) if cache.directory else None,
        "gamma_cache": cache.stats(),
        "kernel_caches": kernel_cache_info(),
        "counters": counters(),
        "threads": args.threads,
        "oracle_max_entries": config.ORACLE_MAX_ENTRIES,
    }
    print_info(info)
    write_json(info, args.out)
    return EXIT_OK


# ---------------------------------------------------------------------------
# Main
# ---------------------------------------------------------------------------


def main(argv: list[str] | None = None) -> int:
    args = parse_args(argv)
    _configure_logging(args.verbose)
    if args.threads < 1:
        console.print("[bold red]error:[/bold red] --threads must be at least 1")
        return EXIT_USAGE
    cache = configure_cache(args.gamma_cache)
    try:
        if args.command == "verify":
            return _verify(args)
        if args.command == "bench":
            return _bench(args)
        if args.command == "solve":
            return _solve(args, cache)
        return _info(args, cache)
    except ConfigError as exc:
        where = f" (at {exc.location})" if exc.location else ""
        console.print(f"[bold red]config error{where}:[/bold red] {exc}")
        return EXIT_USAGE
    except (OracleSizeError, ValueError) as exc:
        console.print(f"[bold red]error:[/bold red] {exc}")
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
