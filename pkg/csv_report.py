#!/usr/bin/env python3
"""
CSV Report

Tabular experiment output: '#'-prefixed metadata lines (config echo, seed,
build identifier, overrides) followed by a header row and data rows. Floats
are written with 17 significant digits so re-running a config reproduces the
data rows byte for byte.
"""

import csv
import io
import platform
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Sequence, Tuple, Union

import numpy as np
import scipy

BUILD_ID = f"python-{platform.python_version()} numpy-{np.__version__} scipy-{scipy.__version__}"


def format_value(value: Any) -> str:
    """Render a cell: floats with 17 significant digits, None as empty."""
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    return str(value)


@dataclass
class CsvReport:
    """Columns, rows and metadata of one experiment run."""

    columns: Sequence[str]
    rows: List[Dict[str, Any]] = field(default_factory=list)
    metadata: List[Tuple[str, str]] = field(default_factory=list)

    def add_row(self, **values):
        unknown = set(values) - set(self.columns)
        if unknown:
            raise KeyError(f"unknown columns: {', '.join(sorted(unknown))}")
        self.rows.append(values)

    def add_metadata(self, key: str, value: Any):
        self.metadata.append((key, str(value)))

    def column(self, name: str) -> List[Any]:
        return [row.get(name) for row in self.rows]

    def render(self) -> str:
        buffer = io.StringIO()
        for key, value in self.metadata:
            buffer.write(f"# {key}: {value}\n")
        writer = csv.DictWriter(buffer, fieldnames=list(self.columns), extrasaction="ignore",
                                lineterminator="\n")
        writer.writeheader()
        for row in self.rows:
            writer.writerow({name: format_value(row.get(name)) for name in self.columns})
        return buffer.getvalue()

    def data_lines(self) -> List[str]:
        """Header and data rows without the metadata block."""
        return [line for line in self.render().splitlines() if not line.startswith("#")]


def write_csv(report: CsvReport, path: Union[str, Path]):
    """Write a report with '\\n' newlines."""
    path = Path(path)
    if path.parent and not path.parent.exists():
        path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as f:
        f.write(report.render())
