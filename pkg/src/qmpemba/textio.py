"""Plain-text matrices, deterministic CSV and atomic file writes."""

from __future__ import annotations

import io
import json
import os
import tempfile
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

__all__ = ["atomic_write", "format_number", "write_matrix", "read_matrix", "csv_text", "write_csv", "read_csv", "write_json"]


def atomic_write(path, text: str) -> Path:
    """Write to a temporary sibling then rename over ``path``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def format_number(x) -> str:
    x = float(x)
    if x == 0:
        return "0"  # folds -0.0 so output does not depend on rounding signs
    return "%.17g" % x


def write_matrix(path, rho) -> Path:
    """Square complex matrix as a real block, a blank line, then an imaginary block."""
    rho = np.asarray(rho, dtype=complex)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {rho.shape}")
    lines = [" ".join(format_number(v) for v in row) for row in rho.real]
    lines.append("")
    lines += [" ".join(format_number(v) for v in row) for row in rho.imag]
    return atomic_write(path, "\n".join(lines) + "\n")


def read_matrix(path) -> np.ndarray:
    blocks, cur = [], []
    for line in Path(path).read_text().splitlines():
        line = line.split("#", 1)[0].strip()
        if not line:
            if cur:
                blocks.append(cur)
                cur = []
            continue
        cur.append([float(tok) for tok in line.split()])
    if cur:
        blocks.append(cur)
    if len(blocks) not in (1, 2):
        raise ValueError(f"{path}: expected a real block and an optional imaginary block, found {len(blocks)} blocks")
    re = np.array(blocks[0], dtype=float)
    im = np.array(blocks[1], dtype=float) if len(blocks) == 2 else np.zeros_like(re)
    if re.ndim != 2 or re.shape[0] != re.shape[1] or im.shape != re.shape:
        raise ValueError(f"{path}: blocks must be square and of equal size")
    return re + 1j * im


def csv_text(columns: Sequence[str], data, meta: Mapping[str, object] | None = None) -> str:
    data = np.asarray(data, dtype=float)
    if data.ndim != 2 or data.shape[1] != len(columns):
        raise ValueError("data must be 2-D with one column per header name")
    buf = io.StringIO()
    for key, value in (meta or {}).items():
        if isinstance(value, (float, int, np.floating)) and not isinstance(value, bool):
            value = format_number(value)
        buf.write(f"# {key} = {value}\n")
    buf.write(",".join(columns) + "\n")
    for row in data:
        buf.write(",".join(format_number(v) for v in row) + "\n")
    return buf.getvalue()


def write_csv(path, columns: Sequence[str], data, meta: Mapping[str, object] | None = None) -> Path:
    return atomic_write(path, csv_text(columns, data, meta))


def read_csv(path) -> tuple[dict[str, str], list[str], np.ndarray]:
    meta, header, rows = {}, None, []
    for line in Path(path).read_text().splitlines():
        if line.startswith("#"):
            key, _, value = line[1:].partition("=")
            meta[key.strip()] = value.strip()
        elif header is None:
            header = line.split(",")
        elif line:
            rows.append([float(v) for v in line.split(",")])
    return meta, header or [], np.array(rows, dtype=float).reshape(-1, len(header or []))


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (complex, np.complexfloating)):
        return {"re": float(obj.real), "im": float(obj.imag)} if obj.imag else float(obj.real)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if np.isfinite(x) else str(x)
    if isinstance(obj, Path):
        return str(obj)
    return obj


def write_json(path, obj) -> Path:
    return atomic_write(path, json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n")
