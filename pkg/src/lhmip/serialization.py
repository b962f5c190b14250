"""JSON output: the stdlib encoder plus numpy scalars, with non-finite floats rejected."""

from __future__ import annotations

import json

import numpy as np


def _default(obj):
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(obj, indent: int | None = 2) -> str:
    """Deterministic text: floats use their shortest round-tripping repr, keys keep insertion order."""
    try:
        return json.dumps(obj, indent=indent, allow_nan=False, default=_default)
    except ValueError as exc:
        raise ValueError(f"non-finite number cannot be serialized: {exc}") from exc
