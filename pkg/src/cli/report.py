"""Line-oriented fit reports and plot-ready CSV files.

One record per line: ``record=<name>`` followed by ``key=value`` pairs in the
order the fit declares them. Floats use 12 significant digits so that the
same results always give byte-identical files.
"""

import math
import shlex
from pathlib import Path

import pandas as pd
from rich.console import Console
from rich.table import Table

console = Console()

FLOAT_FORMAT = ".12g"
CSV_FLOAT_FORMAT = "%.9e"
REPORT_NAME = "report.txt"


def _format_value(value) -> str:
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, float):
        if math.isnan(value):
            return "nan"
        return format(value, FLOAT_FORMAT)
    text = str(value)
    return shlex.quote(text) if any(c.isspace() for c in text) or not text else text


def format_record(record: dict) -> str:
    return " ".join(f"{key}={_format_value(value)}" for key, value in record.items())


def emit_report(records: list[dict], path: str | Path) -> Path:
    if not records:
        raise ValueError("nothing to report")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("".join(format_record(r) + "\n" for r in records))
    return path


def _parse_value(text: str):
    for cast in (int, float):
        try:
            return cast(text)
        except ValueError:
            pass
    return {"true": True, "false": False}.get(text, text)


def parse_report(path: str | Path) -> list[dict]:
    records = []
    for line in Path(path).read_text().splitlines():
        if not line.strip():
            continue
        fields = (token.split("=", 1) for token in shlex.split(line))
        records.append({key: _parse_value(value) for key, value in fields})
    return records


def write_plot_data(tables: dict[str, pd.DataFrame], out_dir: str | Path) -> list[Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for name in sorted(tables):
        path = out_dir / f"{name}.csv"
        tables[name].to_csv(path, index=False, float_format=CSV_FLOAT_FORMAT)
        written.append(path)
    return written


def render_report(path: str | Path) -> None:
    """Rich table per report file, one row per record."""
    records = parse_report(path)
    table = Table(title=str(path))
    table.add_column("Record", style="cyan", no_wrap=True)
    table.add_column("Kind", style="yellow")
    table.add_column("Values", style="white", overflow="fold")
    for record in records:
        rest = {k: v for k, v in record.items() if k not in ("record", "kind")}
        values = "  ".join(
            f"{k}={format(v, '.4g') if isinstance(v, float) else v}" for k, v in rest.items()
        )
        table.add_row(str(record.get("record", "")), str(record.get("kind", "")), values)
    console.print(table)
