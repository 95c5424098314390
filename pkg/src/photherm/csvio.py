"""Plain-text tabular output: CSV with ``#``-prefixed metadata headers.

Every data file starts with ``# key: value`` lines (provenance: tool
version, parameter digest, producing manifest), then a column-name row,
then rows of values.  Floats are written with 17 significant digits so a
rerun of the same configuration reproduces files byte for byte; no
timestamps ever appear in data files.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

FLOAT_FORMAT = "{:.17g}"


def _format_cell(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return FLOAT_FORMAT.format(float(value))
    return str(value)


def write_csv(path: str | Path, columns: dict, metadata: dict | None = None) -> Path:
    """Write named columns (equal-length sequences) with metadata lines."""
    path = Path(path)
    names = list(columns)
    if not names:
        raise ValueError("need at least one column")
    arrays = [np.asarray(columns[name]) for name in names]
    length = arrays[0].shape[0]
    for name, arr in zip(names, arrays):
        if arr.ndim != 1 or arr.shape[0] != length:
            raise ValueError(f"column {name!r} is not a length-{length} vector")
    lines = []
    for key, value in (metadata or {}).items():
        lines.append(f"# {key}: {value}")
    lines.append(",".join(names))
    for i in range(length):
        lines.append(",".join(_format_cell(arr[i]) for arr in arrays))
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("\n".join(lines) + "\n")
    return path


def read_csv(path: str | Path) -> tuple[dict, dict]:
    """Read a metadata-headed CSV back into (metadata, column arrays).

    Columns parse as float arrays when every cell converts, otherwise as
    string arrays.
    """
    lines = Path(path).read_text().splitlines()
    metadata: dict[str, str] = {}
    i = 0
    while i < len(lines) and lines[i].startswith("#"):
        body = lines[i][1:].strip()
        if ":" in body:
            key, _, value = body.partition(":")
            metadata[key.strip()] = value.strip()
        i += 1
    if i >= len(lines):
        raise ValueError(f"{path}: no column header found")
    names = lines[i].split(",")
    rows = [line.split(",") for line in lines[i + 1 :] if line]
    for j, row in enumerate(rows):
        if len(row) != len(names):
            raise ValueError(f"{path}: row {j} has {len(row)} cells, expected {len(names)}")
    columns: dict[str, np.ndarray] = {}
    for ci, name in enumerate(names):
        cells = [row[ci] for row in rows]
        try:
            columns[name] = np.array([float(c) for c in cells])
        except ValueError:
            columns[name] = np.array(cells)
    return metadata, columns
