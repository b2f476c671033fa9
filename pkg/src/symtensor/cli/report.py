"""Report output: rich console tables, CSV and JSON files."""

from __future__ import annotations

import csv
import json
import sys
from pathlib import Path
from typing import IO, TYPE_CHECKING, Any

from rich.console import Console
from rich.panel import Panel
from rich.table import Table
from rich.text import Text

if TYPE_CHECKING:
    from symtensor.cli.runner import BenchResult
    from symtensor.cli.verify import CheckResult

console = Console(stderr=True)

CSV_COLUMNS = [
    "format_version",
    "op",
    "mode",
    "q",
    "d",
    "reps",
    "seconds",
    "flops",
]


def _f(value: float, decimals: int = 6) -> str:
    return f"{value:.{decimals}f}"


# ---------------------------------------------------------------------------
# Files
# ---------------------------------------------------------------------------


def write_csv(results: list[BenchResult], out: str | Path | None = None) -> Path | None:
    """Write one CSV row per result to ``out`` (stdout when ``None``)."""
    if out is None:
        _write_rows(results, sys.stdout)
        return None
    path = Path(out)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        _write_rows(results, fh)
    return path


def _write_rows(results: list[BenchResult], fh: IO[str]) -> None:
    writer = csv.DictWriter(fh, fieldnames=CSV_COLUMNS)
    writer.writeheader()
    for r in results:
        writer.writerow(r.row())


def write_json(payload: dict[str, Any], out: str | Path | None = None) -> Path | None:
    """Write ``payload`` as UTF-8 JSON to ``out`` (stdout when ``None``)."""
    text = json.dumps(payload, indent=2, sort_keys=False, default=float)
    if out is None:
        sys.stdout.write(text + "\n")
        return None
    path = Path(out)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text + "\n", encoding="utf-8")
    return path


# ---------------------------------------------------------------------------
# Console
# ---------------------------------------------------------------------------


def print_bench_table(results: list[BenchResult]) -> None:
    tbl = Table(title="Benchmark", title_style="bold cyan", border_style="dim", pad_edge=False)
    tbl.add_column("op", style="bold")
    tbl.add_column("mode", style="cyan")
    tbl.add_column("q", justify="right")
    tbl.add_column("d", justify="right")
    tbl.add_column("mean s", justify="right")
    tbl.add_column("min s", justify="right")
    tbl.add_column("flops", justify="right", style="white")
    for r in results:
        tbl.add_row(r.op, r.mode, str(r.q), str(r.d), _f(r.mean_seconds), _f(r.min_seconds), f"{r.flops:,}")
    console.print(tbl)


def print_verify_table(results: list[CheckResult]) -> None:
    tbl = Table(title="Verification", title_style="bold cyan", border_style="dim", pad_edge=False)
    tbl.add_column("suite", style="cyan")
    tbl.add_column("property", style="bold")
    tbl.add_column("instances", justify="right")
    tbl.add_column("max residual", justify="right")
    tbl.add_column("result", justify="center")
    for r in results:
        verdict = Text("pass", style="bold green") if r.passed else Text("FAIL", style="bold red")
        tbl.add_row(r.suite, r.name, str(r.instances), f"{r.max_residual:.2e}", verdict)
    console.print(tbl)


def print_ed_summary(report: dict[str, Any]) -> None:
    lines = [
        f"L=[bold]{report['length']}[/bold]  periodic=[bold]{report['periodic']}[/bold]  "
        f"method=[bold]{report['method']}[/bold]"
    ]
    for sector in report["sectors"]:
        lowest = sector["energies"][0] if sector["energies"] else float("nan")
        lines.append(f"2J={sector['twice_j']:>2}  states={sector['count']:>5}  lowest={lowest:.10f}")
    ground = report["ground"]
    lines.append(f"[bold green]ground[/bold green] 2J={ground['twice_j']} E={ground['energy']:.10f}")
    console.print(Panel("\n".join(lines), title="[bold]Exact diagonalization[/bold]", border_style="cyan"))


def print_mera_summary(report: dict[str, Any]) -> None:
    energies = report["energies"]
    lines = [
        f"layers=[bold]{report['levels']}[/bold]  spins=[bold]{report['spins']}[/bold]  "
        f"χ={report['bond_dimensions']}  2J={report['top_charge']}  χ_top={report['chi_top']}",
        f"sweeps={len(energies)}  monotone={report['monotone']}",
    ]
    if energies:
        lines.append(f"final energy [bold]{energies[-1]:.10f}[/bold]")
    if "ed_reference" in report:
        style = "green" if report["target_met"] else "yellow"
        lines.append(
            f"exact {report['ed_reference']:.10f}  relative error [{style}]{report['relative_error']:.2e}[/{style}]"
            f"  variational={report['variational']}"
        )
    console.print(Panel("\n".join(lines), title="[bold]MERA[/bold]", border_style="cyan"))


def print_info(info: dict[str, Any]) -> None:
    tbl = Table(show_header=False, border_style="dim", pad_edge=False)
    tbl.add_column("key", style="bold cyan")
    tbl.add_column("value")
    for key, value in info.items():
        tbl.add_row(key, json.dumps(value) if isinstance(value, (dict, list)) else str(value))
    console.print(Panel(tbl, title="[bold]symtensor[/bold]", border_style="cyan"))
