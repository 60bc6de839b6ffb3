"""Deterministic CSV/JSON/binary writers shared by the library and the CLI."""
from __future__ import annotations

import json
from pathlib import Path


def fmt(x) -> str:
    """Format a number with 17 significant digits so doubles round-trip exactly."""
    if isinstance(x, bool):
        return str(int(x))
    if isinstance(x, (int,)):
        return str(x)
    return format(float(x), ".17g")


def write_csv(path, header, rows) -> None:
    path = Path(path)
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(fmt(x) for x in row))
    path.write_text("\n".join(lines) + "\n", newline="\n")


def write_json(path, obj) -> None:
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n", newline="\n")


def read_json(path):
    return json.loads(Path(path).read_text())
