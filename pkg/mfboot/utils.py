"""
Utilities for mfboot shared by CLI and MCP adapters
"""
import json
from pathlib import Path
from typing import Any, Dict, Union

import numpy as np

from .errors import InvalidInputError, NumericalError, ReportWriteError


def error_msg(exc: Exception) -> str:
    """Format a consistent user-facing error message.

    Numerical failures get a hint about the knobs that usually help.
    """
    if isinstance(exc, NumericalError):
        return f"✗ {exc}. Try a longer series, a larger B or an explicit taper bandwidth."
    return f"✗ {exc}"


def exit_code(exc: Exception) -> int:
    """0 success, 1 report I/O, 2 invalid input, 3 numerical failure"""
    if isinstance(exc, ReportWriteError):
        return 1
    if isinstance(exc, NumericalError):
        return 3
    return 2


def to_json(payload: Dict[str, Any]) -> str:
    return json.dumps(payload, sort_keys=True, indent=2)


def load_series_csv(path: Union[str, Path]) -> np.ndarray:
    """
    Read a single-column series: one observation per line, optional header.

    Blank lines are skipped; any other non-numeric line after the first is an error.
    """
    path = Path(path)
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except OSError as e:
        raise InvalidInputError(f"cannot read series file {path}: {e}") from e

    values = []
    header_allowed = True
    for lineno, raw in enumerate(lines, start=1):
        text = raw.strip()
        if not text:
            continue
        try:
            values.append(float(text))
        except ValueError:
            if header_allowed:
                header_allowed = False
                continue
            raise InvalidInputError(f"{path}:{lineno}: not a number: {text!r}") from None
        header_allowed = False
    return np.asarray(values, dtype=float)
