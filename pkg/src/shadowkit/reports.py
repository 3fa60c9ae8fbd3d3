"""Deterministic serialization of reports: rationals as "p/q", no floats hidden in ints."""

from __future__ import annotations

import csv
import dataclasses
import io
import json
from fractions import Fraction

import numpy as np

from .blocks import BlockHierarchy
from .words import Coupling, EmpiricalMeasure, FiniteWord

CSV_SCHEMA = "shadowkit-csv/1"
JSON_SAFE_INT = 2**53


def rational(x: Fraction) -> str:
    return f"{x.numerator}/{x.denominator}"


def to_jsonable(obj):
    if isinstance(obj, bool) or obj is None or isinstance(obj, str):
        return obj
    if isinstance(obj, Fraction):
        return rational(obj)
    if isinstance(obj, (int, np.integer)):
        v = int(obj)
        return str(v) if abs(v) >= JSON_SAFE_INT else v
    if isinstance(obj, (float, np.floating)):
        return float(obj)
    if isinstance(obj, FiniteWord):
        return list(obj.as_tuple())
    if isinstance(obj, Coupling):
        return [list(p) for p in obj.pairs]
    if isinstance(obj, EmpiricalMeasure):
        return {"order": obj.order, "freq": {",".join(map(str, k)): rational(v) for k, v in sorted(obj.freq.items())}}
    if isinstance(obj, BlockHierarchy):
        return obj.to_dict()
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return {f.name: to_jsonable(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, set, frozenset)):
        items = sorted(obj) if isinstance(obj, (set, frozenset)) else obj
        return [to_jsonable(v) for v in items]
    if isinstance(obj, np.ndarray):
        return [to_jsonable(v) for v in obj.tolist()]
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dump_json(obj) -> str:
    return json.dumps(to_jsonable(obj), sort_keys=True, indent=2) + "\n"


def dump_csv(columns, rows, kind: str) -> str:
    buf = io.StringIO()
    buf.write(f"# {CSV_SCHEMA} {kind}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_cell(v) for v in row])
    return buf.getvalue()


def _cell(v):
    if isinstance(v, Fraction):
        return rational(v)
    if isinstance(v, float):
        return repr(v)
    return v
