"""Deterministic file emission helpers (CSV, JSON, plot data).

All floating-point table output is formatted with 17 significant digits
so values round-trip exactly; newlines are always LF so reruns with the
same configuration and seed are byte-identical.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path


def format_value(x) -> str:
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, float):
        return format(x, ".17g")
    return str(x)


def write_csv(path, header, rows) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(format_value(v) for v in row) + "\n")
    return path


def write_json(path, obj) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="\n") as fh:
        json.dump(obj, fh, sort_keys=True, indent=2)
        fh.write("\n")
    return path


def write_plot_data(path, columns, rows) -> Path:
    """Two-or-more column whitespace-separated data, gnuplot-friendly."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="\n") as fh:
        fh.write("# " + " ".join(columns) + "\n")
        for row in rows:
            fh.write(" ".join(format_value(v) for v in row) + "\n")
    return path


def short_hash(obj) -> str:
    """Stable 8-hex digest of a JSON-serializable object."""
    text = json.dumps(obj, sort_keys=True, default=str)
    return hashlib.sha256(text.encode()).hexdigest()[:8]
