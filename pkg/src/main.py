"""
╔══════════════════════════════════════════════════════════════╗
║  FIBERSIM — main.py                                          ║
║  Scenario runner and report emitter                          ║
╚══════════════════════════════════════════════════════════════╝

Run with:
    uv run python -m src.main characterize-phase --seed 1 --out output/
    uv run python -m src.main report output/report.txt
"""

import argparse
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from dotenv import load_dotenv
from rich.console import Console
from rich.panel import Panel

from src.cli.report import REPORT_NAME, emit_report, render_report, write_plot_data
from src.cli.scenario import Pipeline, Scenario, load_scenario, run_scenario
from src.config import SCENARIO_PATH
from src.errors import (ConfigError, EmptySeries, FiberSimError,
                        MissingCalibration, ParseError)

load_dotenv()
console = Console()
err_console = Console(stderr=True)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_NUMERIC = 4


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fibersim", description="Deployed-fiber testbed simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    for pipeline in Pipeline:
        p = sub.add_parser(str(pipeline), help=f"run the {pipeline} pipeline")
        p.add_argument("--config", default=SCENARIO_PATH, help="scenario YAML file")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--duration", type=float, default=None, help="simulated seconds")
        p.add_argument("--out", type=Path, default=None, help="output directory")
        p.add_argument("--repeat", type=int, default=1, help="run seeds seed … seed+K−1")
        p.add_argument("--jobs", type=int, default=1, help="parallel seeds")

    report = sub.add_parser("report", help="render existing report files")
    report.add_argument("paths", nargs="+", type=Path)
    return parser


def execute(scenario: Scenario) -> Path:
    """Run one scenario and write its report and plot data; returns the output directory."""
    result = run_scenario(scenario)
    out_dir = Path(scenario.output_dir)
    emit_report(result.records, out_dir / REPORT_NAME)
    write_plot_data(result.tables, out_dir)
    return out_dir


def _scenarios(args) -> list[Scenario]:
    # a scenario file for another pipeline still supplies paths and knobs
    base = load_scenario(args.config, pipeline=args.command, seed=args.seed, duration=args.duration, output_dir=args.out)
    if args.repeat <= 1:
        return [base]
    return [
        base.model_copy(update={"seed": base.seed + k, "output_dir": Path(base.output_dir) / f"seed-{base.seed + k}"})
        for k in range(args.repeat)
    ]


def _failure_class(exc: Exception) -> int:
    if isinstance(exc, (ConfigError, ParseError, EmptySeries, MissingCalibration)):
        return EXIT_CONFIG
    if isinstance(exc, OSError):
        return EXIT_IO
    return EXIT_NUMERIC


def run(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)

    if args.command == "report":
        for path in args.paths:
            if not path.exists():
                err_console.print(f"io error: report not found: {path}")
                return EXIT_IO
            render_report(path)
        return EXIT_OK

    try:
        scenarios = _scenarios(args)
        if args.jobs > 1 and len(scenarios) > 1:
            with ProcessPoolExecutor(max_workers=args.jobs) as pool:
                outputs = list(pool.map(execute, scenarios))
        else:
            outputs = [execute(s) for s in scenarios]
    except (FiberSimError, ValueError, ArithmeticError, OSError) as exc:
        code = _failure_class(exc)
        label = {EXIT_CONFIG: "config", EXIT_IO: "io", EXIT_NUMERIC: "numeric"}[code]
        err_console.print(f"{label} error: {exc}".splitlines()[0], markup=False, highlight=False)
        return code

    console.print(
        Panel(
            "\n".join(f"[green]{out / REPORT_NAME}[/]" for out in outputs),
            title=f"[bold cyan]{args.command}[/]",
            border_style="magenta",
        )
    )
    return EXIT_OK


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
