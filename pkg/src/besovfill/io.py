"""JSON interchange for spaces, fillings, sequences and reports."""

import json
import math
from pathlib import Path

import numpy as np

from ._validation import ParseError

KINDS = ("sample", "vertex", "edge")


def jsonable(obj):
    """Convert numpy values and non-finite floats into plain JSON values."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    return obj


def dumps(obj):
    """Canonical JSON text: sorted keys, round-trip float precision."""
    return json.dumps(jsonable(obj), sort_keys=True, indent=1) + "\n"


def write_json(path, obj):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps(obj))
    return path


def read_json(path):
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"missing file: {path}")
    try:
        return json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: invalid JSON ({exc})") from exc


def save_sequence(path, kind, values):
    """Write a sample function, vertex sequence or edge sequence.

    Complex values are stored with a separate ``imag`` array.
    """
    if kind not in KINDS:
        raise ValueError(f"kind must be one of {KINDS}")
    values = np.asarray(values)
    data = {"kind": kind, "size": int(values.shape[0])}
    if np.iscomplexobj(values):
        data["values"] = values.real.tolist()
        data["imag"] = values.imag.tolist()
    else:
        data["values"] = values.astype(np.float64).tolist()
    return write_json(path, data)


def _dense(values, size, name):
    if isinstance(values, dict):
        out = np.zeros(size)
        for key, val in values.items():
            idx = int(key)
            if not 0 <= idx < size:
                raise ParseError(f"{name}: id {idx} out of range")
            out[idx] = float(val)
        return out
    return np.asarray(values, dtype=np.float64)


def load_sequence(path, kind=None, size=None):
    """Read a sequence file; values may be a list or a dict keyed by id."""
    data = read_json(path)
    if not isinstance(data, dict) or "values" not in data:
        raise ParseError(f"{path}: expected an object with 'values'")
    if kind is not None and data.get("kind", kind) != kind:
        raise ParseError(f"{path}: expected a {kind} sequence, got {data.get('kind')}")
    n = size if size is not None else data.get("size", len(data["values"]))
    try:
        values = _dense(data["values"], n, str(path))
        if "imag" in data:
            values = values + 1j * _dense(data["imag"], n, str(path))
    except (TypeError, ValueError) as exc:
        raise ParseError(f"{path}: {exc}") from exc
    if size is not None and values.shape != (size,):
        raise ParseError(f"{path}: expected {size} values, got {values.shape[0]}")
    return values
