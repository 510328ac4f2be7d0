"""Canonical float/JSON rendering so outputs are byte-stable across runs."""

from __future__ import annotations

import json
import math

import numpy as np


def fmt_float(x) -> str:
    """Render a float with 17 significant digits (round-trips exactly).

    NaN renders as the empty string; infinities as inf/-inf.
    """
    x = float(x)
    if math.isnan(x):
        return ""
    return format(x, ".17g")


def to_jsonable(obj):
    """Recursively convert numpy scalars/arrays to plain Python values and
    non-finite floats to None so the JSON encoder stays strict."""
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [to_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else None
    return obj


def dump_json(path, obj) -> None:
    """Write canonical JSON: sorted keys, two-space indent, trailing newline."""
    text = json.dumps(to_jsonable(obj), indent=2, sort_keys=True, allow_nan=False)
    with open(path, "w") as fh:
        fh.write(text + "\n")
