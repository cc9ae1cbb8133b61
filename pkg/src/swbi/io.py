"""Plain-text file formats: key-value blocks and delimiter-separated tables.

Every writer emits ``#``-prefixed provenance lines first and formats floats
with ``repr`` so that values survive a write/read round trip exactly.
"""
from __future__ import annotations

import csv
import math
from pathlib import Path

import numpy as np

from . import __version__
from .errors import ValidationError


def fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        v = float(value)
        return "nan" if math.isnan(v) else repr(v)
    return str(value)


def _header_lines(provenance: dict | None) -> list[str]:
    lines = [f"# swbi {__version__}"]
    for k, v in (provenance or {}).items():
        lines.append(f"# {k}: {fmt(v)}")
    return lines


def read_provenance(path) -> dict:
    out = {}
    with open(path) as fh:
        for line in fh:
            if not line.startswith("#"):
                break
            body = line[1:].strip()
            if ": " in body:
                k, v = body.split(": ", 1)
                out[k.strip()] = v.strip()
    return out


def write_kv(path, mapping: dict, provenance: dict | None = None) -> Path:
    path = Path(path)
    lines = _header_lines(provenance)
    lines += [f"{k} = {fmt(v)}" for k, v in mapping.items()]
    path.write_text("\n".join(lines) + "\n")
    return path


def read_kv(path) -> dict:
    path = Path(path)
    if not path.exists():
        raise ValidationError(f"{path}: no such file")
    out = {}
    for n, line in enumerate(path.read_text().splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValidationError(f"{path}:{n}: expected 'key = value'")
        k, v = line.split("=", 1)
        out[k.strip()] = v.strip()
    return out


def write_table(path, columns, rows, provenance: dict | None = None, delimiter: str = ",") -> Path:
    path = Path(path)
    with open(path, "w", newline="") as fh:
        for line in _header_lines(provenance):
            fh.write(line + "\n")
        w = csv.writer(fh, delimiter=delimiter, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([fmt(v) for v in row])
    return path


def read_rows(path, delimiter: str = ",") -> tuple[list[str], list[list[str]]]:
    path = Path(path)
    if not path.exists():
        raise ValidationError(f"{path}: no such file")
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader((l for l in fh if not l.startswith("#")), delimiter=delimiter) if r]
    if not rows:
        raise ValidationError(f"{path}: empty table")
    return [c.strip() for c in rows[0]], rows[1:]


def read_columns(path, delimiter: str = ",") -> dict[str, np.ndarray]:
    """Numeric table as a column-name -> float array mapping."""
    header, rows = read_rows(path, delimiter)
    try:
        data = np.array([[float(c) for c in r] for r in rows], dtype=float).reshape(len(rows), len(header))
    except ValueError as exc:
        raise ValidationError(f"{path}: non-numeric cell ({exc})") from None
    return {h: data[:, j] for j, h in enumerate(header)}


def write_values(path, values, provenance: dict | None = None) -> Path:
    """One value per line below the provenance header."""
    path = Path(path)
    lines = _header_lines(provenance) + [fmt(float(v)) for v in np.ravel(values)]
    path.write_text("\n".join(lines) + "\n")
    return path


def read_values(path) -> np.ndarray:
    path = Path(path)
    if not path.exists():
        raise ValidationError(f"{path}: no such file")
    vals = []
    for n, line in enumerate(path.read_text().splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        try:
            vals.append(float(line))
        except ValueError:
            raise ValidationError(f"{path}:{n}: non-numeric value {line!r}") from None
    return np.array(vals, dtype=float)


def parse_floats(text: str) -> list[float]:
    """Comma list; ``a..b`` expands to the integers a..b."""
    out = []
    for part in str(text).split(","):
        part = part.strip()
        if not part:
            continue
        if ".." in part:
            lo, hi = part.split("..", 1)
            out.extend(float(v) for v in range(int(lo), int(hi) + 1))
        else:
            try:
                out.append(float(part))
            except ValueError:
                raise ValidationError(f"not a number: {part!r}") from None
    return out
