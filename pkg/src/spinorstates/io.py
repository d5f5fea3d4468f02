"""Deterministic CSV/JSON tables with a metadata header."""

from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Any, Dict, Iterable, List, Sequence

from . import __version__


def format_value(x: Any) -> str:
    if isinstance(x, float) or hasattr(x, "dtype"):
        x = float(x)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return repr(x)
    return str(x)


def _json_value(x: Any) -> Any:
    if hasattr(x, "dtype"):
        x = x.item()
    if isinstance(x, float) and not math.isfinite(x):
        return None
    return x


def write_table(
    path: Path,
    columns: Sequence[str],
    rows: Iterable[Sequence[Any]],
    metadata: Dict[str, Any],
    fmt: str = "csv",
) -> Path:
    """Write ``rows`` under ``columns``; returns the path actually written (suffix added)."""
    path = Path(path).with_suffix("." + fmt)
    meta = {"artifact_version": __version__, **metadata}
    rows = [list(r) for r in rows]
    path.parent.mkdir(parents=True, exist_ok=True)
    if fmt == "csv":
        lines = [f"# {k}: {format_value(meta[k])}" for k in sorted(meta)]
        lines.append(",".join(columns))
        lines.extend(",".join(format_value(v) for v in r) for r in rows)
        path.write_text("\n".join(lines) + "\n")
    elif fmt == "json":
        doc = {
            "metadata": {k: _json_value(v) for k, v in meta.items()},
            "columns": list(columns),
            "rows": [[_json_value(v) for v in r] for r in rows],
        }
        path.write_text(json.dumps(doc, sort_keys=True, indent=1) + "\n")
    else:
        raise ValueError(f"unknown format {fmt!r}")
    return path


def read_csv(path: Path) -> Dict[str, Any]:
    """Parse a table written by ``write_table`` (CSV only)."""
    meta: Dict[str, str] = {}
    data: List[List[float]] = []
    columns: List[str] = []
    for line in Path(path).read_text().splitlines():
        if line.startswith("# "):
            key, _, value = line[2:].partition(": ")
            meta[key] = value
        elif not columns:
            columns = line.split(",")
        elif line:
            data.append([float(v) for v in line.split(",")])
    return {"metadata": meta, "columns": columns, "rows": data}
