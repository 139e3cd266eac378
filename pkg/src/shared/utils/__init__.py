"""
Utility functions shared by the phmin modules.
"""

import json
import logging
import math
import sys
from typing import Any, Dict, Iterable, List, Optional

import numpy as np

from shared import __version__
from shared.config import Config

REPORT_SCHEMA = "phmin/1"

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"

VERIFY_POINTS = (0.1, 0.3, 0.5, 0.7, 0.9) + tuple(float(s) for s in range(1, 16))


def get_logger(name: str) -> logging.Logger:
    """
    Return a logger below the ``phmin`` root, configuring the root once.

    Args:
        name: Dotted module name

    Returns:
        Logger writing to stderr at the configured level
    """
    root = logging.getLogger("phmin")
    if not root.handlers:
        handler = logging.StreamHandler(sys.stderr)
        handler.setFormatter(logging.Formatter(LOG_FORMAT))
        root.addHandler(handler)
        root.setLevel(Config.LOG_LEVEL.upper())
        root.propagate = False
    if name == "phmin" or name.startswith("phmin."):
        return logging.getLogger(name)
    return root.getChild(name)


def set_log_level(verbosity: int) -> None:
    """Raise the phmin log level for -v / -vv."""
    if verbosity <= 0:
        return
    level = logging.INFO if verbosity == 1 else logging.DEBUG
    get_logger("phmin").setLevel(level)


def format_float(value: float) -> str:
    """Render a float with 17 significant digits; non-finite values become null."""
    if not math.isfinite(value):
        return "null"
    text = f"{value:.17g}"
    if text in ("-0", "0"):
        return "0"
    return text


def _render(value: Any, level: int, indent: Optional[int]) -> str:
    pad = "" if indent is None else "\n" + " " * (indent * (level + 1))
    close = "" if indent is None else "\n" + " " * (indent * level)
    sep = "," if indent is None else ","

    if isinstance(value, np.ndarray):
        value = value.tolist()
    if value is None:
        return "null"
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format_float(float(value))
    if isinstance(value, (complex, np.complexfloating)):
        return _render({"re": value.real, "im": value.imag}, level, indent)
    if isinstance(value, str):
        return json.dumps(value)
    if isinstance(value, dict):
        if not value:
            return "{}"
        colon = ": " if indent is not None else ":"
        items = [
            f"{pad}{json.dumps(str(key))}{colon}{_render(item, level + 1, indent)}"
            for key, item in value.items()
        ]
        return "{" + sep.join(items) + close + "}"
    if isinstance(value, (list, tuple)):
        if not value:
            return "[]"
        # numeric rows stay on one line
        if all(isinstance(v, (int, float, np.integer, np.floating)) for v in value):
            inner = ", " if indent is not None else ","
            return "[" + inner.join(_render(v, level + 1, None) for v in value) + "]"
        items = [f"{pad}{_render(item, level + 1, indent)}" for item in value]
        return "[" + sep.join(items) + close + "]"
    raise TypeError(f"Cannot serialize value of type {type(value).__name__}")


def to_json(value: Any, indent: Optional[int] = 2) -> str:
    """
    Serialize a report structure to JSON with 17 significant digits per float.

    Args:
        value: Nested dicts/lists of numbers, strings, numpy arrays
        indent: Indentation width, or None for compact output

    Returns:
        JSON text
    """
    return _render(value, 0, indent) + ("\n" if indent is not None else "")


def create_report(command: str, body: Dict[str, Any]) -> Dict[str, Any]:
    """
    Wrap a command result in the versioned report envelope.

    Args:
        command: CLI command that produced the report
        body: Report fields

    Returns:
        Report dictionary with schema and version keys first
    """
    report: Dict[str, Any] = {"schema": REPORT_SCHEMA, "version": __version__, "command": command}
    report.update(body)
    return report


def sample_points(
    count: int,
    poles: Iterable[complex] = (),
    start: float = 1.0,
    step: float = 1.0,
    skip_tol: float = 1e-6,
) -> List[float]:
    """
    Deterministic real sample points start, start+step, ... away from poles.

    Args:
        count: Number of points to return
        poles: Points to keep away from
        start: First candidate
        step: Spacing between candidates
        skip_tol: Relative distance below which a candidate is skipped

    Returns:
        List of ``count`` floats
    """
    pole_list = [complex(p) for p in poles]
    points: List[float] = []
    s = start
    while len(points) < count:
        if all(abs(s - p) > skip_tol * (1.0 + abs(s)) for p in pole_list):
            points.append(s)
        s += step
    return points


def verify_points(poles: Iterable[complex] = (), skip_tol: float = 1e-6) -> List[float]:
    """The fixed LST comparison grid minus points near poles."""
    pole_list = [complex(p) for p in poles]
    return [
        s
        for s in VERIFY_POINTS
        if all(abs(s - p) > skip_tol * (1.0 + abs(s)) for p in pole_list)
    ]
