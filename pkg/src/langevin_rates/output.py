"""Artifact writing: CSV dialect, JSON records, schemas and manifests."""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import os
import tempfile
from importlib import resources
from pathlib import Path
from typing import Any, Iterable, Sequence

import jsonschema

__all__ = [
    "format_real",
    "to_jsonable",
    "dumps",
    "csv_text",
    "atomic_write",
    "config_hash",
    "load_schema",
    "validate_record",
]


def format_real(x: float) -> str:
    """17 significant digits, always recognisable as a real (``1.0``, not ``1``)."""
    x = float(x) + 0.0  # folds -0.0 into 0.0
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    s = f"{x:.17g}"
    if not any(c in s for c in ".e"):
        s += ".0"
    return s


def _cell(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return format_real(value)
    if value is None:
        return ""
    return str(value)


def csv_text(header: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_cell(v) for v in row])
    return buf.getvalue()


def to_jsonable(obj):
    """Convert numpy scalars/arrays and non-finite floats (to ``None``)."""
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if hasattr(obj, "tolist"):
        return to_jsonable(obj.tolist())
    if isinstance(obj, bool) or obj is None or isinstance(obj, (int, str)):
        return obj
    if isinstance(obj, float):
        return obj if math.isfinite(obj) else None
    if isinstance(obj, complex):
        return [to_jsonable(obj.real), to_jsonable(obj.imag)]
    return str(obj)


def dumps(record) -> str:
    return json.dumps(to_jsonable(record), indent=2, sort_keys=True, allow_nan=False) + "\n"


def atomic_write(path: Path, text: str) -> None:
    """Write through a temporary file in the same directory, then rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def config_hash(resolved: dict) -> str:
    blob = json.dumps(to_jsonable(resolved), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()[:12]


def load_schema(name: str) -> dict:
    text = resources.files("langevin_rates").joinpath("schemas", f"{name}.schema.json").read_text()
    return json.loads(text)


def validate_record(record, schema_name: str) -> None:
    """Raise :class:`jsonschema.ValidationError` if ``record`` violates the schema."""
    jsonschema.validate(to_jsonable(record), load_schema(schema_name))
