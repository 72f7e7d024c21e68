"""CSV and JSON readers/writers used by the command line tool.

Floats are written with ``repr`` so a write/read cycle is lossless.
"""
from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from .basis import DiscreteCurves
from .errors import InvalidInputError

CURVES_HEADER = ["sample_id", "coordinate", "time", "value"]
LABELS_HEADER = ["sample_id", "label"]


def fmt(x) -> str:
    return repr(float(x))


def _parse_float(text: str, what: str, line: int, path) -> float:
    try:
        x = float(text)
    except ValueError:
        raise InvalidInputError(f"{path}:{line}: {what} {text!r} is not a number") from None
    if not math.isfinite(x):
        raise InvalidInputError(f"{path}:{line}: {what} must be finite")
    return x


def read_curves(path) -> DiscreteCurves:
    """Read long-format curves; every sample must cover the same coordinate/time grid."""
    samples: dict[str, dict[int, dict[float, float]]] = {}
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != CURVES_HEADER:
            raise InvalidInputError(f"{path}:1: header must be {','.join(CURVES_HEADER)}, got {header}")
        for line, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 4:
                raise InvalidInputError(f"{path}:{line}: expected 4 fields, got {len(row)}")
            sid, coord, t, v = row
            try:
                k = int(coord)
            except ValueError:
                raise InvalidInputError(f"{path}:{line}: coordinate {coord!r} is not an integer") from None
            if k < 1:
                raise InvalidInputError(f"{path}:{line}: coordinate must be 1-based, got {k}")
            t = _parse_float(t, "time", line, path)
            v = _parse_float(v, "value", line, path)
            cell = samples.setdefault(sid, {}).setdefault(k, {})
            if t in cell:
                raise InvalidInputError(f"{path}:{line}: duplicate time {t} for sample {sid}, coordinate {k}")
            cell[t] = v
    if not samples:
        raise InvalidInputError(f"{path}: no data rows")
    ids = list(samples)
    first = samples[ids[0]]
    p = max(first)
    if sorted(first) != list(range(1, p + 1)):
        raise InvalidInputError(f"{path}: sample {ids[0]} must have coordinates 1..{p} without gaps")
    grid = sorted(first[1])
    for sid in ids:
        coords = samples[sid]
        if sorted(coords) != list(range(1, p + 1)):
            raise InvalidInputError(f"{path}: sample {sid} has coordinates {sorted(coords)}, expected 1..{p}")
        for k in range(1, p + 1):
            if sorted(coords[k]) != grid:
                raise InvalidInputError(f"{path}: sample {sid}, coordinate {k} does not share the common time grid")
    values = np.array([[[samples[s][k][t] for t in grid] for k in range(1, p + 1)] for s in ids])
    return DiscreteCurves(np.array(grid), values, ids)


def write_curves(curves: DiscreteCurves, path) -> None:
    grid = [fmt(t) for t in curves.grid]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CURVES_HEADER)
        for sid, block in zip(curves.ids, curves.values):
            for k, row in enumerate(block, start=1):
                for t, v in zip(grid, row):
                    w.writerow([sid, k, t, fmt(v)])


def write_labels(ids, labels, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(LABELS_HEADER)
        for sid, lab in zip(ids, labels):
            w.writerow([sid, int(bool(lab))])


def read_labels(path) -> dict[str, bool]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != LABELS_HEADER:
            raise InvalidInputError(f"{path}:1: header must be {','.join(LABELS_HEADER)}")
        out = {}
        for line, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 2 or row[1] not in ("0", "1"):
                raise InvalidInputError(f"{path}:{line}: expected sample_id and a 0/1 label")
            out[row[0]] = row[1] == "1"
    return out


def write_rows(path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(x) if isinstance(x, (float, np.floating)) else x for x in row])


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        if not math.isfinite(x):
            raise InvalidInputError("refusing to serialize a non-finite number")
        return x
    return obj


def write_json(obj, path) -> None:
    text = json.dumps(_plain(obj), indent=2, allow_nan=False) + "\n"
    if path is None or str(path) == "-":
        print(text, end="")
    else:
        Path(path).write_text(text)


def read_json(path) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise InvalidInputError(f"{path}: invalid JSON ({exc})") from None
