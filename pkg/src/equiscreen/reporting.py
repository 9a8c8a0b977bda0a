"""Deterministic report serialization.

Reports are plain dicts wrapped in a versioned envelope carrying the
scenario hash and tool version.  JSON is dumped with sorted keys and
shortest round-trip floats; CSV cells use the same float formatting and are
locale-independent.  All writes go through a temp file and an atomic
rename.
"""

from __future__ import annotations

import json
import math
import os
import tempfile

import numpy as np

SCHEMA_VERSION = 1


def _clean(obj):
    """Make a report JSON-ready: numpy scalars to python, inf to strings."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_clean(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, float)):
        f = float(obj)
        if math.isinf(f):
            return "inf" if f > 0 else "-inf"
        if math.isnan(f):
            return "nan"
        return f
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


def envelope(command: str, scenario, seed: int, payload: dict) -> dict:
    from . import __version__

    return {
        "schema": SCHEMA_VERSION,
        "tool": "equiscreen",
        "version": __version__,
        "command": command,
        "scenario": scenario.name,
        "scenario_sha256": scenario.sha256(),
        "seed": int(seed),
        **payload,
    }


def to_json(report: dict) -> str:
    return json.dumps(_clean(report), sort_keys=True, indent=2) + "\n"


def _cell(v) -> str:
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def to_csv(columns: list[str], rows) -> str:
    lines = [",".join(columns)]
    for row in rows:
        lines.append(",".join(_cell(v) for v in row))
    return "\n".join(lines) + "\n"


def write_atomic(path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", text=True)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
