"""CSV/JSON writers.  Floats in CSV use 17 significant digits; JSON floats use
Python's shortest round-trip repr.  Nothing time-of-day dependent is written."""
from __future__ import annotations

import csv
import json
import math
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

TRAJECTORY_COLUMNS = ("t", "r-index", "r", "U", "u")
VIRIAL_COLUMNS = ("t", "m_p", "R_p", "rhs_identity", "rhs_inequality", "dmdt_fd")
SWEEP_COLUMNS = ("M", "outcome", "t_star", "max_u", "criterion_met", "time_bound")


def fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    return str(x)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else None
    return obj


def write_json(path: Path, payload: dict) -> None:
    text = json.dumps(_jsonable(payload), indent=2, sort_keys=True, allow_nan=False)
    Path(path).write_text(text + "\n", encoding="utf-8")


def write_rows(path: Path, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(x) for x in row])


def write_trajectory(path: Path, states) -> None:
    def rows():
        for st in states:
            for j, (r, U, u) in enumerate(zip(st.grid.nodes, st.U, st.u)):
                yield (float(st.t), j, r, U, u)

    write_rows(path, TRAJECTORY_COLUMNS, rows())


def write_virial(path: Path, samples) -> None:
    write_rows(
        path,
        VIRIAL_COLUMNS,
        ((v.t, v.m_p, v.R_p, v.rhs_identity, v.rhs_inequality, v.dmdt_fd) for v in samples),
    )
