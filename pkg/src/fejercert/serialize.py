"""Stable on-disk formats: deterministic JSON and CSV emitters, atomic
writes, and access to the shipped JSON schemas.

Identical inputs must produce byte-identical files: JSON is dumped with
sorted keys and repr-roundtrip floats, CSV uses repr floats, LF endings, and
a header row.  Non-finite floats are mapped to null (JSON has no inf).
"""

from __future__ import annotations

import json
import math
import os
import tempfile
from importlib import resources
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .instance import format_string, index_string

SCHEMA_NAMES = ("instance", "certificate", "feasibility_report", "rl_report")


def json_safe(value):
    """Recursively convert numpy scalars/arrays and non-finite floats into
    JSON-serializable values."""
    if isinstance(value, Mapping):
        return {str(k): json_safe(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [json_safe(v) for v in value]
    if isinstance(value, np.ndarray):
        return [json_safe(v) for v in value.tolist()]
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (np.floating,)):
        value = float(value)
    if isinstance(value, float) and not math.isfinite(value):
        return None
    return value


def dumps_json(obj) -> str:
    return json.dumps(json_safe(obj), indent=2, sort_keys=True, allow_nan=False) + "\n"


def atomic_write_text(path: str | Path, text: str) -> None:
    """Write a whole document atomically (temp file then rename)."""
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


def _fmt(value: float) -> str:
    return repr(float(value))


def csv_table(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_fmt(v) if isinstance(v, float) else str(v) for v in row))
    return "\n".join(lines) + "\n"


def envelope_csv(probs: np.ndarray, n: int, m: int) -> str:
    rows = (
        (format_string(index_string(i, n, m)), float(p)) for i, p in enumerate(probs)
    )
    return csv_table(("string", "probability"), rows)


def filtered_law_csv(
    probs: np.ndarray, theta: np.ndarray, weights: np.ndarray, n: int, m: int
) -> str:
    rows = (
        (format_string(index_string(i, n, m)), float(theta[i]), float(weights[i]), float(probs[i]))
        for i in range(probs.size)
    )
    return csv_table(("string", "phase", "fejer_weight", "probability"), rows)


def rl_law_csv(probs: np.ndarray, stderr: np.ndarray, n: int, m: int) -> str:
    rows = (
        (format_string(index_string(i, n, m)), float(probs[i]), float(stderr[i]))
        for i in range(probs.size)
    )
    return csv_table(("string", "probability", "stderr"), rows)


def curves_csv(rows: Iterable[Sequence[float]]) -> str:
    body = ((float(d), int(p), float(e), float(c)) for d, p, e, c in rows)
    return csv_table(("delta", "p", "epsilon", "c_min"), body)


def load_schema(name: str) -> dict:
    """Load one of the shipped JSON schemas by short name."""
    if name not in SCHEMA_NAMES:
        raise ValueError(f"unknown schema {name!r}; available: {SCHEMA_NAMES}")
    text = resources.files("fejercert.schemas").joinpath(f"{name}.schema.json").read_text("utf-8")
    return json.loads(text)
