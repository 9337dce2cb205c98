"""Locale-free number formatting for files and the command line."""

from __future__ import annotations

import json
import math
from typing import Any

import numpy as np


def fmt(x: float) -> str:
    """17 significant digits; infinities as 'inf' / '-inf'."""
    x = float(x)
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    if math.isnan(x):
        return "nan"
    return format(x, ".17g")


def jsonable(obj: Any) -> Any:
    """Replace floats by 17-digit numbers and infinities by 'inf'."""
    if isinstance(obj, dict):
        return {k: jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isinf(x) or math.isnan(x):
            return fmt(x)
        return _Num(x)
    return obj


class _Num(float):
    """Float whose text carries 17 significant digits."""

    def __repr__(self) -> str:
        return fmt(self)

    __str__ = __repr__


def dumps(obj: Any) -> str:
    """JSON text with every float at 17 significant digits and insertion key order."""
    obj = jsonable(obj)
    if isinstance(obj, float):
        return fmt(obj)
    if isinstance(obj, dict):
        return "{" + ", ".join(f"{json.dumps(str(k))}: {dumps(v)}" for k, v in obj.items()) + "}"
    if isinstance(obj, list):
        return "[" + ", ".join(dumps(v) for v in obj) + "]"
    return json.dumps(obj)
