"""
ModelFreeBootstrap - Model-free bootstrap confidence and prediction intervals for time series
"""

import os
import runpy
from importlib.metadata import PackageNotFoundError
from importlib.metadata import version as _dist_version
from pathlib import Path
from typing import Optional

_DIST_NAME = "ModelFreeBootstrap"
_FALLBACK_VERSION = "0.0.0"
_SCM_FILE = Path(__file__).with_name("_version.py")


def _resolve_version(scm_file: Optional[Path] = None) -> str:
    """
    Version string, first hit wins: MFBOOT_VERSION, the setuptools_scm
    `_version.py` next to this file, installed distribution metadata, "0.0.0".
    """
    override = os.environ.get("MFBOOT_VERSION")
    if override:
        return override

    scm_file = _SCM_FILE if scm_file is None else Path(scm_file)
    if scm_file.is_file():
        try:
            namespace = runpy.run_path(str(scm_file))
        except (OSError, SyntaxError):
            return _FALLBACK_VERSION
        found = namespace.get("version") or namespace.get("__version__")
        return str(found) if found else _FALLBACK_VERSION

    try:
        return _dist_version(_DIST_NAME)
    except PackageNotFoundError:
        return _FALLBACK_VERSION


__version__ = _resolve_version()

from .engine import BootstrapConfig, ConfidenceInterval, RootSample, run_ci
from .errors import (
    DegenerateSampleError,
    InvalidInputError,
    MFBootError,
    NumericalError,
    ReplicateBudgetError,
)
from .prediction import PredictionInterval, PredictorKind, run_pi
from .simulation import PRESETS, ModelSpec, generate_series, true_parameter
from .statistics import StatisticSpec
from .transform import SeriesSample

__all__ = [
    "BootstrapConfig",
    "ConfidenceInterval",
    "DegenerateSampleError",
    "InvalidInputError",
    "MFBootError",
    "ModelSpec",
    "NumericalError",
    "PRESETS",
    "PredictionInterval",
    "PredictorKind",
    "ReplicateBudgetError",
    "RootSample",
    "SeriesSample",
    "StatisticSpec",
    "generate_series",
    "run_ci",
    "run_pi",
    "true_parameter",
    "__version__",
]
